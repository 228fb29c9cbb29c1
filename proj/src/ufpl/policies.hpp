#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ufpl/gains.hpp"
#include "ufpl/perturbation.hpp"

namespace ufpl {

enum class Expert { kFirst = 1, kSecond = 2 };

enum class RateKind {
  kAdaptiveMax,    // 1 / (mu max{cum1, cum2, 1}) over the state before step t
  kInfeasible,     // same formula over the state after step t
  kZeroSumRemark,  // 1 / (mu max{max_{j<t} |cum1_j|, 1})
};

std::string_view to_string(RateKind kind);
RateKind parse_rate_kind(std::string_view text);

// Learning-rate rule. The max{., 1} floor stands in for starting both
// cumulatives at 1, so the rate is finite on the first step.
class RateSchedule {
 public:
  // Throws "mu must lie in (0,1)" for mu outside the open interval.
  RateSchedule(RateKind kind, double mu);

  RateKind kind() const noexcept { return kind_; }
  double mu() const noexcept { return mu_; }

  // epsilon computed from `state`; the caller picks the state (t-1 for FPL,
  // t for IFPL).
  double rate(const CumulativeState& state) const;

 private:
  RateKind kind_;
  double mu_;
};

enum class PolicyKind { kFtl, kUniform, kFpl, kIfpl, kThreshold };

// Which cumulatives a policy reads in a zero-sum game: the game's own, or
// the lifted game's (each shifted by the volume V_t).
enum class StateView { kDirect, kLifted };

class PolicySpec {
 public:
  static PolicySpec ftl();
  static PolicySpec uniform();
  // schedule must be adaptive-max or zero-sum-remark.
  static PolicySpec fpl(RateSchedule schedule, StateView view = StateView::kDirect);
  // schedule must be infeasible or zero-sum-remark.
  static PolicySpec ifpl(RateSchedule schedule, StateView view = StateView::kDirect);
  // Synthetic policy: follows the leader with probability 1 - delta.
  static PolicySpec threshold(double delta);

  PolicyKind kind() const noexcept { return kind_; }
  const RateSchedule& schedule() const;
  StateView view() const noexcept { return view_; }
  double delta() const noexcept { return delta_; }

  // IFPL reads the current step's gains; everyone else must not get them.
  bool needs_step_gains() const noexcept { return kind_ == PolicyKind::kIfpl; }
  bool is_perturbed() const noexcept {
    return kind_ == PolicyKind::kFpl || kind_ == PolicyKind::kIfpl;
  }

  // Canonical descriptor; parse_policy(describe()) reproduces the policy.
  std::string describe() const;

 private:
  PolicySpec(PolicyKind kind, std::optional<RateSchedule> schedule,
             StateView view, double delta)
      : kind_(kind), schedule_(schedule), view_(view), delta_(delta) {}

  PolicyKind kind_;
  std::optional<RateSchedule> schedule_;
  StateView view_;
  double delta_;
};

// "ftl", "uniform", "fpl mu=0.618 [schedule=...] [view=lifted]",
// "ifpl mu=0.5", "threshold delta=0.05".
PolicySpec parse_policy(std::string_view descriptor);

// Probability of following Expert 1 given the state after step t-1.
// step_gains carries the oracle input for IFPL and must be absent otherwise.
double decide_prob(const PolicySpec& policy, const CumulativeState& state,
                   std::optional<GainStep> step_gains = std::nullopt);

// Perturbed-leader choice for explicit perturbations: Expert 1 iff
// cum1 + xi1/eps > cum2 + xi2/eps, ties to Expert 2. FPL/IFPL only.
Expert perturbed_choice(const PolicySpec& policy, const CumulativeState& state,
                        std::optional<GainStep> step_gains, double xi1, double xi2);

// Draws one choice. FPL/IFPL take one Exp(1) draw from each stream; the other
// policies take a Bernoulli(decide_prob) from the first stream.
Expert sample_choice(const PolicySpec& policy, const CumulativeState& state,
                     std::optional<GainStep> step_gains, ExpertNoise& noise);

}  // namespace ufpl
