#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ufpl/gains.hpp"
#include "ufpl/policies.hpp"

namespace ufpl {

// Expected gain of an arbitrary policy, step by step. For IFPL the step's
// gains are passed as the oracle input.
struct ExpectedStep {
  double prob1 = 0.0;
  double gain = 0.0;
  double cumulative = 0.0;
};

std::vector<ExpectedStep> expected_gains(const GainSequence& gains,
                                         const PolicySpec& policy);

// How FPL and IFPL are run on a zero-sum game: through the lift (adaptive-max
// rate on the lifted cumulatives) or directly with the zero-sum-remark rate.
// Ignored for nonnegative games.
enum class ZeroSumRate { kLifted, kRemark };

std::string_view to_string(ZeroSumRate rate);
ZeroSumRate parse_zero_sum_rate(std::string_view text);

struct TraceStep {
  double s1 = 0.0;
  double s2 = 0.0;
  double prob1_fpl = 0.0;
  double prob1_ifpl = 0.0;
  double l = 0.0;     // expected FPL gain at this step
  double r = 0.0;     // expected IFPL gain at this step
  double cuml = 0.0;  // l_{1:t}
  double cumr = 0.0;  // r_{1:t}
};

struct EvalTrace {
  GameMode mode = GameMode::kOneHot;
  double mu = 0.5;
  ZeroSumRate zero_sum_rate = ZeroSumRate::kLifted;
  std::vector<TraceStep> steps;  // steps[t-1] is step t

  std::size_t size() const noexcept { return steps.size(); }
  PolicySpec fpl_policy() const;
  PolicySpec ifpl_policy() const;
};

// Exact expected gains of FPL (rate from the state before each step) and
// IFPL (rate from the state after it). No sampling.
EvalTrace exact_trace(const GainSequence& gains, double mu,
                      ZeroSumRate zero_sum_rate = ZeroSumRate::kLifted);

// CSV with columns t,l,r,cuml,cumr,prob1_fpl,prob1_ifpl.
void write_trace_csv(std::ostream& out, const EvalTrace& trace);

// Reads a trace CSV written for `gains`. The gains supply s1/s2; every row
// is checked against l_t = s1 p + s2 (1 - p) and the running sums.
EvalTrace read_trace_csv(std::istream& in, const GainSequence& gains, double mu,
                         ZeroSumRate zero_sum_rate);

struct MonteCarloResult {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t replicas = 0;
};

// Replays sampled choices of `policy` on `gains`. Replica k draws from
// streams 2k and 2k+1 of `seed`; totals are merged in replica order, so the
// result does not depend on the thread count.
MonteCarloResult monte_carlo_trace(const GainSequence& gains,
                                   const PolicySpec& policy,
                                   std::size_t replicas, std::uint64_t seed,
                                   unsigned threads = 0);

struct BoundCheck {
  std::string name;
  std::size_t t = 0;  // witness: first violation, else the tightest step
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
  bool applicable = true;
  std::size_t from = 0;  // checked range of t (or T), inclusive
  std::size_t to = 0;
  std::size_t violations = 0;
  // First index from which the inequality holds through the end of the
  // game, over the whole game rather than the checked range.
  std::optional<std::size_t> transition;
  std::string note;
};

struct CheckOptions {
  std::optional<double> delta;
  double tolerance = 1e-9;
};

// lhs >= rhs - tolerance * max(1, |rhs|)
bool bound_holds(double lhs, double rhs, double tolerance);

// First index of the final quartile of a horizon of n steps (1-based).
std::size_t final_quartile_start(std::size_t n);

std::vector<BoundCheck> check_bounds(const EvalTrace& trace,
                                     const GainSequence& gains,
                                     const CheckOptions& options = {});

// True when every applicable check passed.
bool all_pass(const std::vector<BoundCheck>& checks);

const BoundCheck* find_check(const std::vector<BoundCheck>& checks,
                             std::string_view name);

nlohmann::json to_json(const BoundCheck& check);
nlohmann::json to_json(const std::vector<BoundCheck>& checks);

}  // namespace ufpl
