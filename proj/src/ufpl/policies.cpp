#include "ufpl/policies.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "ufpl/csv.hpp"
#include "ufpl/descriptor.hpp"
#include "ufpl/errors.hpp"

namespace ufpl {

std::string_view to_string(RateKind kind) {
  switch (kind) {
    case RateKind::kAdaptiveMax: return "adaptive-max";
    case RateKind::kInfeasible: return "infeasible";
    case RateKind::kZeroSumRemark: return "zero-sum-remark";
  }
  return "?";
}

RateKind parse_rate_kind(std::string_view text) {
  if (text == "adaptive-max") return RateKind::kAdaptiveMax;
  if (text == "infeasible") return RateKind::kInfeasible;
  if (text == "zero-sum-remark" || text == "remark")
    return RateKind::kZeroSumRemark;
  throw_invalid(fmt::format(
      "unknown schedule '{}' (expected adaptive-max, infeasible or "
      "zero-sum-remark)",
      text));
}

RateSchedule::RateSchedule(RateKind kind, double mu) : kind_(kind), mu_(mu) {
  if (!(mu > 0.0 && mu < 1.0)) throw_invalid("mu must lie in (0,1)");
}

double RateSchedule::rate(const CumulativeState& state) const {
  double scale = kind_ == RateKind::kZeroSumRemark
                     ? state.peak
                     : std::max(state.cum1, state.cum2);
  return 1.0 / (mu_ * std::max(scale, 1.0));
}

PolicySpec PolicySpec::ftl() {
  return PolicySpec(PolicyKind::kFtl, std::nullopt, StateView::kDirect, 0.0);
}

PolicySpec PolicySpec::uniform() {
  return PolicySpec(PolicyKind::kUniform, std::nullopt, StateView::kDirect, 0.0);
}

PolicySpec PolicySpec::fpl(RateSchedule schedule, StateView view) {
  if (schedule.kind() == RateKind::kInfeasible)
    throw_invalid("fpl needs the adaptive-max or zero-sum-remark schedule");
  return PolicySpec(PolicyKind::kFpl, schedule, view, 0.0);
}

PolicySpec PolicySpec::ifpl(RateSchedule schedule, StateView view) {
  if (schedule.kind() == RateKind::kAdaptiveMax)
    throw_invalid("ifpl needs the infeasible or zero-sum-remark schedule");
  return PolicySpec(PolicyKind::kIfpl, schedule, view, 0.0);
}

PolicySpec PolicySpec::threshold(double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw_invalid("threshold delta must lie in (0,1)");
  return PolicySpec(PolicyKind::kThreshold, std::nullopt, StateView::kDirect,
                    delta);
}

const RateSchedule& PolicySpec::schedule() const {
  if (!schedule_) throw_invalid("policy has no learning-rate schedule");
  return *schedule_;
}

std::string PolicySpec::describe() const {
  switch (kind_) {
    case PolicyKind::kFtl: return "ftl";
    case PolicyKind::kUniform: return "uniform";
    case PolicyKind::kThreshold:
      return "threshold delta=" + csv::format_number(delta_);
    case PolicyKind::kFpl:
    case PolicyKind::kIfpl: {
      bool fpl = kind_ == PolicyKind::kFpl;
      std::string out = fpl ? "fpl" : "ifpl";
      out += " mu=" + csv::format_number(schedule_->mu());
      auto default_kind = fpl ? RateKind::kAdaptiveMax : RateKind::kInfeasible;
      if (schedule_->kind() != default_kind) {
        out += " schedule=";
        out += to_string(schedule_->kind());
      }
      if (view_ == StateView::kLifted) out += " view=lifted";
      return out;
    }
  }
  return "?";
}

PolicySpec parse_policy(std::string_view descriptor) {
  auto d = Descriptor::parse(descriptor);
  if (d.words().size() != 1) {
    throw_invalid(fmt::format("policy '{}': expected one policy name",
                              descriptor));
  }
  const auto& name = d.words().front();
  auto finish = [&](PolicySpec spec) {
    d.reject_unknown(fmt::format("policy '{}'", name));
    return spec;
  };
  if (name == "ftl") return finish(PolicySpec::ftl());
  if (name == "uniform") return finish(PolicySpec::uniform());
  if (name == "threshold")
    return finish(PolicySpec::threshold(d.required_number("delta")));
  if (name == "fpl" || name == "ifpl") {
    bool fpl = name == "fpl";
    double mu = d.required_number("mu");
    auto kind = parse_rate_kind(
        d.text("schedule", fpl ? "adaptive-max" : "infeasible"));
    auto view_text = d.text("view", "direct");
    StateView view;
    if (view_text == "direct") {
      view = StateView::kDirect;
    } else if (view_text == "lifted") {
      view = StateView::kLifted;
    } else {
      throw_invalid(fmt::format("unknown view '{}' (expected direct or lifted)",
                                view_text));
    }
    RateSchedule schedule(kind, mu);
    return finish(fpl ? PolicySpec::fpl(schedule, view)
                      : PolicySpec::ifpl(schedule, view));
  }
  throw_invalid(fmt::format(
      "unknown policy '{}' (expected ftl, uniform, fpl, ifpl or threshold)",
      name));
}

namespace {

void check_oracle_input(const PolicySpec& policy,
                        const std::optional<GainStep>& step_gains) {
  if (policy.needs_step_gains() && !step_gains)
    throw_invalid("ifpl needs the current step's gains");
  if (!policy.needs_step_gains() && step_gains)
    throw_invalid(fmt::format("policy '{}' must not see the current step's gains",
                              policy.describe()));
}

// The state a perturbed policy compares, after view and oracle step.
CumulativeState perturbed_state(const PolicySpec& policy,
                                const CumulativeState& state,
                                const std::optional<GainStep>& step_gains) {
  CumulativeState seen = step_gains ? state.advanced(*step_gains) : state;
  return policy.view() == StateView::kLifted ? lifted(seen) : seen;
}

}  // namespace

double decide_prob(const PolicySpec& policy, const CumulativeState& state,
                   std::optional<GainStep> step_gains) {
  check_oracle_input(policy, step_gains);
  switch (policy.kind()) {
    case PolicyKind::kUniform: return 0.5;
    case PolicyKind::kFtl: return state.cum1 > state.cum2 ? 1.0 : 0.0;
    case PolicyKind::kThreshold:
      if (state.cum1 > state.cum2) return 1.0 - policy.delta();
      if (state.cum1 < state.cum2) return policy.delta();
      return 0.5;
    case PolicyKind::kFpl:
    case PolicyKind::kIfpl: {
      auto seen = perturbed_state(policy, state, step_gains);
      double eps = policy.schedule().rate(seen);
      return comparison_probability(eps * (seen.cum2 - seen.cum1));
    }
  }
  return 0.5;
}

Expert perturbed_choice(const PolicySpec& policy, const CumulativeState& state,
                        std::optional<GainStep> step_gains, double xi1,
                        double xi2) {
  if (!policy.is_perturbed())
    throw_invalid("perturbed_choice applies to fpl and ifpl only");
  check_oracle_input(policy, step_gains);
  auto seen = perturbed_state(policy, state, step_gains);
  double eps = policy.schedule().rate(seen);
  // Same event as in comparison_probability: xi1 - xi2 > eps (cum2 - cum1).
  return xi1 - xi2 > eps * (seen.cum2 - seen.cum1) ? Expert::kFirst
                                                    : Expert::kSecond;
}

Expert sample_choice(const PolicySpec& policy, const CumulativeState& state,
                     std::optional<GainStep> step_gains, ExpertNoise& noise) {
  if (policy.is_perturbed()) {
    double xi1 = noise.expert1.next();
    double xi2 = noise.expert2.next();
    return perturbed_choice(policy, state, step_gains, xi1, xi2);
  }
  double p = decide_prob(policy, state, step_gains);
  return noise.expert1.next_uniform() <= p ? Expert::kFirst : Expert::kSecond;
}

}  // namespace ufpl
