#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ufpl/gains.hpp"
#include "ufpl/policies.hpp"

namespace ufpl {

enum class Relation { kLessEqual, kGreaterEqual };

struct Checkpoint {
  std::size_t t = 0;
  std::string name;
  Relation relation = Relation::kLessEqual;
  double lhs = 0.0;
  double rhs = 0.0;
  bool ok = false;
  bool applicable = true;
};

struct AdversaryReport {
  std::string construction;
  std::string policy;
  GainSequence gains;
  std::vector<Checkpoint> checkpoints;
  std::vector<std::size_t> search_failures;  // steps where the boost search hit its cap
  bool truncated = false;                    // stopped before the magnitude cap
  std::size_t horizon = 0;

  // Completed the horizon without search failures or truncation.
  bool complete() const noexcept {
    return search_failures.empty() && !truncated && gains.size() == horizon;
  }
  // Every applicable checkpoint holds.
  bool all_ok() const noexcept;
};

// Relative tolerance used for checkpoint inequalities.
inline constexpr double kCheckpointTolerance = 1e-9;

// The six-step loss stream where follow-the-leader always picks the expert
// about to lose: s1 = (0,1,0,1,0,1), s2 = (1/2,0,1,0,1,0).
GainSequence kv_ftl_example();

// Plays `policy` on the stream as losses (the policy sees negated
// cumulative losses, so its leader is the lowest-loss expert). Checkpoints
// record the expected loss at steps 2..6 against the larger loss of that
// step, and the total over steps 2..6 against 5; they are marked applicable
// only for ftl.
AdversaryReport kv_ftl_report(const PolicySpec& policy);

struct SearchOptions {
  double cap = GainSequence::kMagnitudeCap;
  double relative_precision = 1e-9;
};

// Smallest tested x >= lower with prob(x) >= target, found by doubling from
// `lower` and then bisecting to the relative precision; nullopt when nothing
// up to `cap` qualifies. `strict` excludes x == lower itself.
std::optional<double> boost_search(const std::function<double(double)>& prob,
                                   double target, double lower, bool strict,
                                   const SearchOptions& options = {});

// Smallest s1 >= max(floor1, s2) with decide_prob(policy, (s1, s2)) >= target.
std::optional<double> lemma1_search(const PolicySpec& policy, double target_prob,
                                    double floor1, double s2, double cap);

// Diagonal variant for zero-sum play: smallest s1 > floor1 with
// decide_prob(policy, (s1, -s1)) >= target.
std::optional<double> lemma1_search_diagonal(const PolicySpec& policy,
                                             double target_prob, double floor1,
                                             double cap);

struct Thm1Options {
  // Probability the odd-step boosts must reach; defaults to 1 - delta.
  std::optional<double> odd_target;
  double cap = GainSequence::kMagnitudeCap;
};

// Odd steps boost Expert 1 until the policy follows it with the target
// probability; even steps give Expert 2 the spike M_t = E(s_{1:t-1}) /
// (delta' - delta). Checkpoints at even t: "byd-1" E <= delta' s2_{1:t} and
// "perf-3" E <= delta' max_i s^i_{1:t}.
AdversaryReport thm1_adversary(const PolicySpec& policy, double delta,
                               double delta_prime, std::size_t horizon,
                               const Thm1Options& options = {});

enum class SpikeDirection { kUpper, kLower };

// Spike M_t = E(s_{1:t-1}) / delta to the expert the policy disfavours
// (upper) or favours (lower). Checkpoints "fir-1" / "fir-2" at every t, marked
// applicable after `burn_in` steps.
AdversaryReport prop1_adversary(const PolicySpec& policy, double delta,
                                SpikeDirection direction, std::size_t horizon,
                                std::size_t burn_in = 2);

enum class SignTarget { kNonPositive, kNonNegative };

// Unit zero-sum steps against the policy's preference; checkpoint "prop2-sign"
// at every t.
AdversaryReport prop2_adversary(const PolicySpec& policy, SignTarget sign,
                                std::size_t horizon);

struct Thm5Options {
  std::optional<double> odd_target;  // defaults to 1 - delta
  double cap = GainSequence::kMagnitudeCap;
};

// Zero-sum: odd steps move s1_{1:t} along the diagonal until the policy
// follows Expert 1 with the target probability; even steps are
// (-M_t, M_t) with M_t = max{|E|/(2(delta - delta')), L_t, V_{t-1}/delta}.
// Checkpoints at even t: "perf-3a" and "volume-floor" (V_t >= L_t).
AdversaryReport thm5_adversary(const PolicySpec& policy, double delta,
                               double delta_prime,
                               const std::function<double(std::size_t)>& volume_floor,
                               std::size_t horizon, const Thm5Options& options = {});

// Builds a report from "kv_ftl", "thm1 delta=.. delta_prime=.. horizon=..",
// "prop1 delta=.. direction=upper|lower horizon=..", "prop2 sign=le|ge
// horizon=..", "thm5 delta=.. delta_prime=.. horizon=.. floor_scale=..
// floor_power=..".
AdversaryReport run_adversary(std::string_view descriptor,
                              const PolicySpec& policy);

nlohmann::json to_json(const AdversaryReport& report);

}  // namespace ufpl
