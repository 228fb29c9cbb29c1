#include "ufpl/adversaries.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ufpl/descriptor.hpp"
#include "ufpl/errors.hpp"

namespace ufpl {

namespace {

bool relation_holds(Relation relation, double lhs, double rhs) {
  // Purely relative: constructions can run at any scale, including tiny
  // first boosts.
  double slack = kCheckpointTolerance * std::max(std::abs(lhs), std::abs(rhs));
  return relation == Relation::kLessEqual ? lhs <= rhs + slack
                                          : lhs >= rhs - slack;
}

Checkpoint make_checkpoint(std::size_t t, std::string name, Relation relation,
                           double lhs, double rhs, bool applicable = true) {
  return {t,   std::move(name), relation, lhs, rhs, relation_holds(relation, lhs, rhs),
          applicable};
}

void require_query_policy(const PolicySpec& policy) {
  if (policy.needs_step_gains()) {
    throw_invalid(
        "adversaries query the policy before each step; ifpl needs the "
        "step's own gains");
  }
}

void require_probability(double p, std::string_view what) {
  if (!(p > 0.0 && p < 1.0))
    throw_invalid(fmt::format("{} must lie in (0,1)", what));
}

// Expected gain of the policy on the step about to be appended.
double expected_step(const PolicySpec& policy, const CumulativeState& before,
                     GainStep step) {
  double p = decide_prob(policy, before);
  return step.s1 * p + step.s2 * (1.0 - p);
}

}  // namespace

bool AdversaryReport::all_ok() const noexcept {
  return std::all_of(checkpoints.begin(), checkpoints.end(),
                     [](const Checkpoint& c) { return !c.applicable || c.ok; });
}

GainSequence kv_ftl_example() {
  static constexpr GainStep kSteps[] = {{0.0, 0.5}, {1.0, 0.0}, {0.0, 1.0},
                                        {1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};
  return GainSequence::from_steps(GameMode::kOneHot, kSteps);
}

AdversaryReport kv_ftl_report(const PolicySpec& policy) {
  require_query_policy(policy);
  AdversaryReport report;
  report.construction = "kv_ftl";
  report.policy = policy.describe();
  report.gains = kv_ftl_example();
  report.horizon = report.gains.size();
  const bool applicable = policy.kind() == PolicyKind::kFtl;

  // The policy maximises gain, so it is shown the negated losses.
  CumulativeState seen;
  seen.mode = GameMode::kGeneralNonnegative;
  double total = 0.0;
  for (std::size_t t = 1; t <= report.gains.size(); ++t) {
    const auto& loss = report.gains.step(t);
    GainStep negated{-loss.s1, -loss.s2};
    std::optional<GainStep> oracle;
    if (policy.needs_step_gains()) oracle = negated;
    double p = decide_prob(policy, seen, oracle);
    double expected_loss = loss.s1 * p + loss.s2 * (1.0 - p);
    if (t >= 2) {
      total += expected_loss;
      report.checkpoints.push_back(make_checkpoint(
          t, "kv-wrong-choice", Relation::kGreaterEqual, expected_loss,
          std::max(loss.s1, loss.s2), applicable));
    }
    seen = seen.advanced(negated);
  }
  report.checkpoints.push_back(make_checkpoint(
      report.gains.size(), "kv-total-loss-2-6", Relation::kGreaterEqual, total,
      5.0, applicable));
  return report;
}

std::optional<double> boost_search(const std::function<double(double)>& prob,
                                   double target, double lower, bool strict,
                                   const SearchOptions& options) {
  require_probability(target, "target probability");
  if (!(options.cap > lower))
    throw_invalid(fmt::format("search cap {} must exceed the floor {}",
                              options.cap, lower));
  if (!strict && prob(lower) >= target) return lower;

  double failing = lower;
  double step = std::max(std::abs(lower), 1.0);
  double hi = lower + step;
  while (true) {
    if (hi >= options.cap) {
      hi = options.cap;
      if (prob(hi) < target) return std::nullopt;
      break;
    }
    if (prob(hi) >= target) break;
    failing = hi;
    step *= 2.0;
    hi = lower + step;
  }
  while (hi - failing > options.relative_precision * std::max(std::abs(hi), 1.0)) {
    double mid = failing + 0.5 * (hi - failing);
    if (mid <= failing || mid >= hi) break;
    if (prob(mid) >= target) {
      hi = mid;
    } else {
      failing = mid;
    }
  }
  return hi;
}

std::optional<double> lemma1_search(const PolicySpec& policy, double target_prob,
                                    double floor1, double s2, double cap) {
  require_query_policy(policy);
  auto prob = [&](double s1) {
    CumulativeState state;
    state.mode = GameMode::kOneHot;
    state.cum1 = s1;
    state.cum2 = s2;
    state.v = state.peak = std::max(s1, s2);
    return decide_prob(policy, state);
  };
  return boost_search(prob, target_prob, std::max(floor1, s2), false,
                      {.cap = cap});
}

std::optional<double> lemma1_search_diagonal(const PolicySpec& policy,
                                             double target_prob, double floor1,
                                             double cap) {
  require_query_policy(policy);
  // State reached from the empty game by the single step (s1, -s1).
  auto prob = [&](double s1) {
    CumulativeState start;
    start.mode = GameMode::kZeroSum;
    return decide_prob(policy, start.advanced({s1, -s1}));
  };
  return boost_search(prob, target_prob, floor1, true, {.cap = cap});
}

AdversaryReport thm1_adversary(const PolicySpec& policy, double delta,
                               double delta_prime, std::size_t horizon,
                               const Thm1Options& options) {
  require_query_policy(policy);
  require_probability(delta, "delta");
  require_probability(delta_prime, "delta_prime");
  if (!(delta < delta_prime)) throw_invalid("thm1 needs delta < delta_prime");
  const double target = options.odd_target.value_or(1.0 - delta);

  AdversaryReport report;
  report.construction = "thm1";
  report.policy = policy.describe();
  report.gains = GainSequence(GameMode::kOneHot);
  report.horizon = horizon;
  auto& seq = report.gains;
  double expected = 0.0;

  for (std::size_t t = 1; t <= horizon; ++t) {
    const auto& before = seq.back();
    GainStep step;
    if (t % 2 == 1) {
      auto prob = [&](double s1) {
        return decide_prob(policy, before.advanced({s1 - before.cum1, 0.0}));
      };
      auto found = boost_search(prob, target, std::max(before.cum1, before.cum2),
                                false, {.cap = options.cap});
      if (!found) {
        report.search_failures.push_back(t);
        break;
      }
      step = {*found - before.cum1, 0.0};
    } else {
      double spike = expected > 0.0 ? expected / (delta_prime - delta) : 1.0;
      step = {0.0, spike};
    }
    if (!seq.fits(step)) {
      report.truncated = true;
      break;
    }
    expected += expected_step(policy, before, step);
    const auto& after = seq.append(step.s1, step.s2);
    if (t % 2 == 0) {
      report.checkpoints.push_back(make_checkpoint(
          t, "byd-1", Relation::kLessEqual, expected, delta_prime * after.cum2));
      report.checkpoints.push_back(make_checkpoint(
          t, "perf-3", Relation::kLessEqual, expected, delta_prime * after.v));
    }
  }
  return report;
}

AdversaryReport prop1_adversary(const PolicySpec& policy, double delta,
                                SpikeDirection direction, std::size_t horizon,
                                std::size_t burn_in) {
  require_query_policy(policy);
  require_probability(delta, "delta");

  AdversaryReport report;
  report.construction = direction == SpikeDirection::kUpper ? "prop1-upper"
                                                            : "prop1-lower";
  report.policy = policy.describe();
  report.gains = GainSequence(GameMode::kOneHot);
  report.horizon = horizon;
  auto& seq = report.gains;
  double expected = 0.0;

  for (std::size_t t = 1; t <= horizon; ++t) {
    const auto& before = seq.back();
    double p = decide_prob(policy, before);
    double spike = expected > 0.0 ? expected / delta : 1.0;
    bool to_first = (p > 0.5) == (direction == SpikeDirection::kLower);
    GainStep step = to_first ? GainStep{spike, 0.0} : GainStep{0.0, spike};
    if (!seq.fits(step)) {
      report.truncated = true;
      break;
    }
    expected += step.s1 * p + step.s2 * (1.0 - p);
    const auto& after = seq.append(step.s1, step.s2);
    bool applicable = t > burn_in;
    if (direction == SpikeDirection::kUpper) {
      report.checkpoints.push_back(
          make_checkpoint(t, "fir-1", Relation::kLessEqual, expected,
                          0.5 * (1.0 + delta) * after.v, applicable));
    } else {
      report.checkpoints.push_back(
          make_checkpoint(t, "fir-2", Relation::kGreaterEqual, expected,
                          0.5 * (1.0 - delta) * after.v, applicable));
    }
  }
  return report;
}

AdversaryReport prop2_adversary(const PolicySpec& policy, SignTarget sign,
                                std::size_t horizon) {
  require_query_policy(policy);
  AdversaryReport report;
  report.construction =
      sign == SignTarget::kNonPositive ? "prop2-le" : "prop2-ge";
  report.policy = policy.describe();
  report.gains = GainSequence(GameMode::kZeroSum);
  report.horizon = horizon;
  auto& seq = report.gains;
  double expected = 0.0;

  for (std::size_t t = 1; t <= horizon; ++t) {
    const auto& before = seq.back();
    double p = decide_prob(policy, before);
    // Reward the favoured expert for >= 0, punish it for <= 0.
    bool first_wins = (p > 0.5) == (sign == SignTarget::kNonNegative);
    GainStep step = first_wins ? GainStep{1.0, -1.0} : GainStep{-1.0, 1.0};
    expected += step.s1 * p + step.s2 * (1.0 - p);
    seq.append(step.s1, step.s2);
    report.checkpoints.push_back(make_checkpoint(
        t, "prop2-sign",
        sign == SignTarget::kNonPositive ? Relation::kLessEqual
                                         : Relation::kGreaterEqual,
        expected, 0.0));
  }
  return report;
}

AdversaryReport thm5_adversary(
    const PolicySpec& policy, double delta, double delta_prime,
    const std::function<double(std::size_t)>& volume_floor, std::size_t horizon,
    const Thm5Options& options) {
  require_query_policy(policy);
  require_probability(delta, "delta");
  require_probability(delta_prime, "delta_prime");
  if (!(delta_prime < delta)) throw_invalid("thm5 needs delta_prime < delta");
  const double target = options.odd_target.value_or(1.0 - delta);

  AdversaryReport report;
  report.construction = "thm5";
  report.policy = policy.describe();
  report.gains = GainSequence(GameMode::kZeroSum);
  report.horizon = horizon;
  auto& seq = report.gains;
  double expected = 0.0;

  for (std::size_t t = 1; t <= horizon; ++t) {
    const auto& before = seq.back();
    GainStep step;
    if (t % 2 == 1) {
      auto prob = [&](double s1) {
        double move = s1 - before.cum1;
        return decide_prob(policy, before.advanced({move, -move}));
      };
      auto found = boost_search(prob, target, std::abs(before.cum1), true,
                                {.cap = options.cap});
      if (!found) {
        report.search_failures.push_back(t);
        break;
      }
      double move = *found - before.cum1;
      step = {move, -move};
    } else {
      double floor = volume_floor(t);
      if (!(floor > 0.0) || !std::isfinite(floor))
        throw_invalid(fmt::format("volume floor L_{} = {} must be positive", t, floor));
      double spike = std::max({std::abs(expected) / (2.0 * (delta - delta_prime)),
                               floor, before.volume / delta});
      step = {-spike, spike};
    }
    if (!seq.fits(step)) {
      report.truncated = true;
      break;
    }
    expected += expected_step(policy, before, step);
    const auto& after = seq.append(step.s1, step.s2);
    if (t % 2 == 0) {
      report.checkpoints.push_back(make_checkpoint(
          t, "perf-3a", Relation::kLessEqual, expected,
          2.0 * delta_prime * std::abs(after.cum1) -
              (1.0 - 2.0 * delta_prime) * after.volume));
      report.checkpoints.push_back(make_checkpoint(
          t, "volume-floor", Relation::kGreaterEqual, after.volume,
          volume_floor(t)));
    }
  }
  return report;
}

AdversaryReport run_adversary(std::string_view descriptor,
                              const PolicySpec& policy) {
  auto d = Descriptor::parse(descriptor);
  if (d.words().size() != 1) {
    throw_invalid(fmt::format("adversary '{}': expected one construction name",
                              descriptor));
  }
  const auto& name = d.words().front();
  auto context = fmt::format("adversary '{}'", name);
  if (name == "kv_ftl") {
    d.reject_unknown(context);
    return kv_ftl_report(policy);
  }
  if (name == "thm1") {
    double delta = d.required_number("delta");
    double delta_prime = d.required_number("delta_prime");
    auto horizon = d.count("horizon", 20);
    Thm1Options options;
    options.odd_target = d.number("target");
    options.cap = d.number("cap", options.cap);
    d.reject_unknown(context);
    return thm1_adversary(policy, delta, delta_prime, horizon, options);
  }
  if (name == "prop1") {
    double delta = d.required_number("delta");
    auto direction_text = d.text("direction", "upper");
    SpikeDirection direction;
    if (direction_text == "upper") {
      direction = SpikeDirection::kUpper;
    } else if (direction_text == "lower") {
      direction = SpikeDirection::kLower;
    } else {
      throw_invalid(fmt::format("direction '{}' (expected upper or lower)",
                                direction_text));
    }
    auto horizon = d.count("horizon", 30);
    auto burn_in = d.count("burn_in", 2);
    d.reject_unknown(context);
    return prop1_adversary(policy, delta, direction, horizon, burn_in);
  }
  if (name == "prop2") {
    auto sign_text = d.text("sign", "le");
    SignTarget sign;
    if (sign_text == "le") {
      sign = SignTarget::kNonPositive;
    } else if (sign_text == "ge") {
      sign = SignTarget::kNonNegative;
    } else {
      throw_invalid(fmt::format("sign '{}' (expected le or ge)", sign_text));
    }
    auto horizon = d.count("horizon", 50);
    d.reject_unknown(context);
    return prop2_adversary(policy, sign, horizon);
  }
  if (name == "thm5") {
    double delta = d.required_number("delta");
    double delta_prime = d.required_number("delta_prime");
    auto horizon = d.count("horizon", 16);
    double scale = d.number("floor_scale", 1.0);
    double power = d.number("floor_power", 1.0);
    if (!(scale > 0.0)) throw_invalid("floor_scale must be positive");
    Thm5Options options;
    options.odd_target = d.number("target");
    options.cap = d.number("cap", options.cap);
    d.reject_unknown(context);
    auto floor = [scale, power](std::size_t t) {
      return scale * std::pow(static_cast<double>(t), power);
    };
    return thm5_adversary(policy, delta, delta_prime, floor, horizon, options);
  }
  throw_invalid(fmt::format(
      "unknown adversary '{}' (expected kv_ftl, thm1, prop1, prop2 or thm5)",
      name));
}

nlohmann::json to_json(const AdversaryReport& report) {
  nlohmann::json j;
  j["construction"] = report.construction;
  j["policy"] = report.policy;
  j["horizon"] = report.horizon;
  j["truncated"] = report.truncated;
  j["complete"] = report.complete();
  auto gains = nlohmann::json::array();
  for (const auto& step : report.gains.steps()) {
    gains.push_back({step.s1, step.s2});
  }
  j["gains"] = std::move(gains);
  auto checkpoints = nlohmann::json::array();
  for (const auto& c : report.checkpoints) {
    checkpoints.push_back({{"t", c.t},
                           {"name", c.name},
                           {"relation", c.relation == Relation::kLessEqual ? "<=" : ">="},
                           {"lhs", c.lhs},
                           {"rhs", c.rhs},
                           {"ok", c.ok},
                           {"applicable", c.applicable}});
  }
  j["checkpoints"] = std::move(checkpoints);
  j["search_failures"] = report.search_failures;
  return j;
}

}  // namespace ufpl
