#include "ufpl/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <thread>
#include <utility>

#include <fmt/format.h>

#include "ufpl/csv.hpp"
#include "ufpl/errors.hpp"

namespace ufpl {

std::vector<ExpectedStep> expected_gains(const GainSequence& gains,
                                         const PolicySpec& policy) {
  std::vector<ExpectedStep> out;
  out.reserve(gains.size());
  double cumulative = 0.0;
  for (std::size_t t = 1; t <= gains.size(); ++t) {
    const auto& step = gains.step(t);
    std::optional<GainStep> oracle;
    if (policy.needs_step_gains()) oracle = step;
    double p = decide_prob(policy, gains.state(t - 1), oracle);
    double gain = step.s1 * p + step.s2 * (1.0 - p);
    cumulative += gain;
    out.push_back({p, gain, cumulative});
  }
  return out;
}

std::string_view to_string(ZeroSumRate rate) {
  return rate == ZeroSumRate::kLifted ? "lifted" : "remark";
}

ZeroSumRate parse_zero_sum_rate(std::string_view text) {
  if (text == "lifted") return ZeroSumRate::kLifted;
  if (text == "remark" || text == "zero-sum-remark") return ZeroSumRate::kRemark;
  throw_invalid(fmt::format(
      "unknown zero-sum rate '{}' (expected lifted or remark)", text));
}

PolicySpec EvalTrace::fpl_policy() const {
  if (mode == GameMode::kZeroSum && zero_sum_rate == ZeroSumRate::kRemark)
    return PolicySpec::fpl(RateSchedule(RateKind::kZeroSumRemark, mu));
  auto view = mode == GameMode::kZeroSum ? StateView::kLifted : StateView::kDirect;
  return PolicySpec::fpl(RateSchedule(RateKind::kAdaptiveMax, mu), view);
}

PolicySpec EvalTrace::ifpl_policy() const {
  if (mode == GameMode::kZeroSum && zero_sum_rate == ZeroSumRate::kRemark)
    return PolicySpec::ifpl(RateSchedule(RateKind::kZeroSumRemark, mu));
  auto view = mode == GameMode::kZeroSum ? StateView::kLifted : StateView::kDirect;
  return PolicySpec::ifpl(RateSchedule(RateKind::kInfeasible, mu), view);
}

EvalTrace exact_trace(const GainSequence& gains, double mu,
                      ZeroSumRate zero_sum_rate) {
  EvalTrace trace;
  trace.mode = gains.mode();
  trace.mu = mu;
  trace.zero_sum_rate = zero_sum_rate;
  auto fpl = expected_gains(gains, trace.fpl_policy());
  auto ifpl = expected_gains(gains, trace.ifpl_policy());
  trace.steps.reserve(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const auto& step = gains.steps()[i];
    trace.steps.push_back({step.s1, step.s2, fpl[i].prob1, ifpl[i].prob1,
                           fpl[i].gain, ifpl[i].gain, fpl[i].cumulative,
                           ifpl[i].cumulative});
  }
  return trace;
}

void write_trace_csv(std::ostream& out, const EvalTrace& trace) {
  using csv::format_number;
  csv::write_row(out, {"t", "l", "r", "cuml", "cumr", "prob1_fpl", "prob1_ifpl"});
  for (std::size_t i = 0; i < trace.steps.size(); ++i) {
    const auto& s = trace.steps[i];
    csv::write_row(out, {std::to_string(i + 1), format_number(s.l),
                         format_number(s.r), format_number(s.cuml),
                         format_number(s.cumr), format_number(s.prob1_fpl),
                         format_number(s.prob1_ifpl)});
  }
}

EvalTrace read_trace_csv(std::istream& in, const GainSequence& gains, double mu,
                         ZeroSumRate zero_sum_rate) {
  auto table = csv::read(in);
  if (table.rows.size() != gains.size()) {
    throw Error(ErrorCode::kIo,
                fmt::format("trace has {} rows but the game has {} steps",
                            table.rows.size(), gains.size()));
  }
  const std::size_t cl = table.column("l"), cr = table.column("r"),
                    ccl = table.column("cuml"), ccr = table.column("cumr"),
                    cpf = table.column("prob1_fpl"),
                    cpi = table.column("prob1_ifpl");
  EvalTrace trace;
  trace.mode = gains.mode();
  trace.mu = mu;
  trace.zero_sum_rate = zero_sum_rate;
  double suml = 0.0, sumr = 0.0;
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    auto context = fmt::format("trace row {}", i + 1);
    TraceStep s;
    s.s1 = gains.steps()[i].s1;
    s.s2 = gains.steps()[i].s2;
    s.l = csv::parse_number(row[cl], context);
    s.r = csv::parse_number(row[cr], context);
    s.cuml = csv::parse_number(row[ccl], context);
    s.cumr = csv::parse_number(row[ccr], context);
    s.prob1_fpl = csv::parse_number(row[cpf], context);
    s.prob1_ifpl = csv::parse_number(row[cpi], context);
    suml += s.l;
    sumr += s.r;
    bool consistent =
        s.prob1_fpl >= 0.0 && s.prob1_fpl <= 1.0 && s.prob1_ifpl >= 0.0 &&
        s.prob1_ifpl <= 1.0 &&
        close(s.l, s.s1 * s.prob1_fpl + s.s2 * (1.0 - s.prob1_fpl)) &&
        close(s.r, s.s1 * s.prob1_ifpl + s.s2 * (1.0 - s.prob1_ifpl)) &&
        close(s.cuml, suml) && close(s.cumr, sumr);
    if (!consistent) {
      throw Error(ErrorCode::kIo,
                  fmt::format("{}: values inconsistent with the game's gains",
                              context));
    }
    trace.steps.push_back(s);
  }
  return trace;
}

MonteCarloResult monte_carlo_trace(const GainSequence& gains,
                                   const PolicySpec& policy,
                                   std::size_t replicas, std::uint64_t seed,
                                   unsigned threads) {
  if (replicas == 0) throw_invalid("monte_carlo_trace needs at least one replica");
  std::vector<double> totals(replicas);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      auto noise = ExpertNoise::for_replica(seed, k);
      double total = 0.0;
      for (std::size_t t = 1; t <= gains.size(); ++t) {
        const auto& step = gains.step(t);
        std::optional<GainStep> oracle;
        if (policy.needs_step_gains()) oracle = step;
        auto choice = sample_choice(policy, gains.state(t - 1), oracle, noise);
        total += choice == Expert::kFirst ? step.s1 : step.s2;
      }
      totals[k] = total;
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, replicas));
  if (threads <= 1) {
    run(0, replicas);
  } else {
    std::vector<std::jthread> workers;
    std::size_t chunk = (replicas + threads - 1) / threads;
    for (std::size_t begin = 0; begin < replicas; begin += chunk) {
      workers.emplace_back(run, begin, std::min(replicas, begin + chunk));
    }
  }
  // Deviations from the first total: identical totals give exactly zero spread.
  const double shift = totals.front();
  double sum = 0.0;
  for (double x : totals) sum += x - shift;
  double offset = sum / static_cast<double>(replicas);
  double mean = shift + offset;
  double ss = 0.0;
  for (double x : totals) ss += (x - shift - offset) * (x - shift - offset);
  MonteCarloResult result;
  result.mean = mean;
  result.replicas = replicas;
  if (replicas > 1) {
    double variance = ss / static_cast<double>(replicas - 1);
    result.standard_error = std::sqrt(variance / static_cast<double>(replicas));
  }
  return result;
}

bool bound_holds(double lhs, double rhs, double tolerance) {
  return lhs >= rhs - tolerance * std::max(1.0, std::abs(rhs));
}

std::size_t final_quartile_start(std::size_t n) {
  return n - (n + 3) / 4 + 1;
}

namespace {

using Inequality = std::function<std::pair<double, double>(std::size_t)>;
using Domain = std::function<bool(std::size_t)>;

BoundCheck not_applicable(std::string name, std::string note) {
  BoundCheck check;
  check.name = std::move(name);
  check.applicable = false;
  check.note = std::move(note);
  return check;
}

// Evaluates lhs(t) >= rhs(t) for every t in [from, to] inside `domain`.
BoundCheck run_check(std::string name, std::size_t n, std::size_t from,
                     std::size_t to, double tolerance, const Inequality& at,
                     const Domain& domain = {}) {
  auto in_domain = [&](std::size_t t) { return !domain || domain(t); };
  BoundCheck check;
  check.name = std::move(name);
  check.from = from;
  check.to = to;

  std::size_t last_failure = 0;
  for (std::size_t t = 1; t <= n; ++t) {
    if (!in_domain(t)) continue;
    auto [lhs, rhs] = at(t);
    if (!bound_holds(lhs, rhs, tolerance)) last_failure = t;
  }
  if (last_failure < n) check.transition = last_failure + 1;

  bool any = false;
  double tightest = 0.0;
  for (std::size_t t = from; t <= to && t >= 1; ++t) {
    if (!in_domain(t)) continue;
    auto [lhs, rhs] = at(t);
    bool ok = bound_holds(lhs, rhs, tolerance);
    double slack = (lhs - rhs) / std::max(1.0, std::abs(rhs));
    if (!ok) ++check.violations;
    bool witness = !any || (check.violations == 1 && !ok) ||
                   (check.violations == 0 && slack < tightest);
    if (witness) {
      check.t = t;
      check.lhs = lhs;
      check.rhs = rhs;
      tightest = slack;
    }
    any = true;
  }
  if (!any) {
    check.applicable = false;
    check.note = "no step in the checked range";
    return check;
  }
  check.ok = check.violations == 0;
  return check;
}

// First index from which every known ratio stays <= limit, or nullopt.
std::optional<std::size_t> settled_from(
    const std::vector<std::optional<double>>& ratios, double limit) {
  std::size_t t = ratios.size() + 1;
  while (t > 1) {
    const auto& r = ratios[t - 2];
    if (r && *r > limit) break;
    --t;
  }
  if (t > ratios.size()) return std::nullopt;
  return t;
}

double max_ratio(const std::vector<std::optional<double>>& ratios,
                 std::size_t from) {
  double out = 0.0;
  for (std::size_t t = from; t <= ratios.size(); ++t) {
    if (ratios[t - 1]) out = std::max(out, *ratios[t - 1]);
  }
  return out;
}

// First T with scale(T) >= 1: where the rate floor stops binding.
std::size_t first_unfloored(std::size_t n,
                            const std::function<double(std::size_t)>& scale) {
  std::size_t t = 1;
  while (t <= n && scale(t) < 1.0) ++t;
  return t;
}

// Checks of the nonnegative theory on a nonnegative game with its expected
// FPL/IFPL gains (indexed by step, [0] unused).
void check_nonnegative(const GainSequence& game, const std::vector<double>& l,
                       const std::vector<double>& r,
                       const std::vector<double>& cuml,
                       const std::vector<double>& cumr, double mu,
                       const CheckOptions& options,
                       std::vector<BoundCheck>& out) {
  const std::size_t n = game.size();
  const double tol = options.tolerance;
  const double c = std::exp(-2.0 / mu);
  auto v = [&](std::size_t t) { return game.state(t).v; };
  const std::size_t unfloored = first_unfloored(n, v);

  out.push_back(run_check("thm3-step", n, 1, n, tol, [&](std::size_t t) {
    return std::pair{l[t], c * r[t]};
  }));
  out.push_back(run_check("cor1", n, 1, n, tol, [&](std::size_t t) {
    return std::pair{cuml[t], c * cumr[t]};
  }));
  out.push_back(run_check("thm4", n, 1, n, tol, [&](std::size_t t) {
    // 1/eps_T with the infeasible rate, floored like the schedule.
    return std::pair{cumr[t], v(t) - mu * std::max(v(t), 1.0)};
  }));
  auto cor2 = run_check("cor2", n, unfloored, n, tol, [&](std::size_t t) {
    return std::pair{cumr[t], (1.0 - mu) * v(t)};
  });
  auto thm2 = run_check("thm2-general", n, unfloored, n, tol, [&](std::size_t t) {
    return std::pair{cuml[t], c * (1.0 - mu) * v(t)};
  });
  if (unfloored > 1) {
    cor2.note = thm2.note =
        fmt::format("steps before {} skipped: max cumulative below 1", unfloored);
  }
  out.push_back(std::move(cor2));
  out.push_back(std::move(thm2));
  out.push_back(run_check("triv1", n, 1, n, tol, [&](std::size_t t) {
    const auto& s = game.state(t);
    return std::pair{0.5 * s.cum1 + 0.5 * s.cum2, 0.5 * s.v};
  }));

  if (!options.delta) {
    out.push_back(not_applicable("thm3-step-lowdev", "no delta supplied"));
    out.push_back(not_applicable("thm2-lowdev", "no delta supplied"));
    return;
  }
  const double delta = *options.delta;
  const double limit = 0.5 * mu * delta;
  auto ratios = step_deviations(game);

  auto settled = settled_from(ratios, limit);
  if (!settled) {
    out.push_back(not_applicable(
        "thm3-step-lowdev",
        fmt::format("deviation at the last step exceeds mu*delta/2 = {}", limit)));
  } else {
    auto check = run_check(
        "thm3-step-lowdev", n, *settled, n, tol,
        [&](std::size_t t) { return std::pair{l[t], (1.0 - delta) * r[t]}; });
    check.note = fmt::format("deviation <= {} from step {}", limit, *settled);
    out.push_back(std::move(check));
  }

  const std::size_t q = final_quartile_start(n);
  double window_dev = max_ratio(ratios, q);
  if (n == 0 || window_dev > limit) {
    out.push_back(not_applicable(
        "thm2-lowdev",
        fmt::format("deviation {} over the final quartile exceeds mu*delta/2 = {}",
                    window_dev, limit)));
  } else {
    auto check = run_check("thm2-lowdev", n, std::max(q, unfloored), n, tol,
                           [&](std::size_t t) {
                             return std::pair{cuml[t],
                                              (1.0 - delta) * (1.0 - mu) * v(t)};
                           });
    check.note = fmt::format("final quartile from T = {}, deviation {}", q,
                             window_dev);
    out.push_back(std::move(check));
  }
}

void check_zero_sum_lifted(const GainSequence& gains, const EvalTrace& trace,
                           const CheckOptions& options,
                           std::vector<BoundCheck>& out) {
  const std::size_t n = gains.size();
  const double mu = trace.mu;
  const double tol = options.tolerance;
  const double c = std::exp(-2.0 / mu) * (1.0 - mu);
  auto abs_cum = [&](std::size_t t) { return std::abs(gains.state(t).cum1); };
  auto volume = [&](std::size_t t) { return gains.state(t).volume; };
  auto cuml = [&](std::size_t t) { return trace.steps[t - 1].cuml; };
  const std::size_t unfloored =
      first_unfloored(n, [&](std::size_t t) { return abs_cum(t) + volume(t); });

  out.push_back(run_check("thm6-general", n, unfloored, n, tol, [&](std::size_t t) {
    return std::pair{cuml(t), c * abs_cum(t) - volume(t) * (1.0 - c)};
  }));

  if (!options.delta) {
    out.push_back(not_applicable("thm6-lowdev", "no delta supplied"));
    return;
  }
  const double delta = *options.delta;
  const double limit = 0.5 * mu * delta;
  auto ratios = step_deviations(gains);
  const std::size_t q = final_quartile_start(n);
  double window_dev = max_ratio(ratios, q);
  if (n == 0 || window_dev > limit) {
    out.push_back(not_applicable(
        "thm6-lowdev",
        fmt::format("deviation {} over the final quartile exceeds mu*delta/2 = {}",
                    window_dev, limit)));
    return;
  }
  auto check = run_check(
      "thm6-lowdev", n, std::max(q, unfloored), n, tol, [&](std::size_t t) {
        return std::pair{cuml(t), (1.0 - delta) * (1.0 - mu) * abs_cum(t) -
                                      (delta + mu) * volume(t)};
      });
  check.note =
      fmt::format("final quartile from T = {}, deviation {}", q, window_dev);
  out.push_back(std::move(check));
}

void check_zero_sum_remark(const GainSequence& gains, const EvalTrace& trace,
                           const CheckOptions& options,
                           std::vector<BoundCheck>& out) {
  if (!options.delta) {
    out.push_back(not_applicable("remark", "no delta supplied"));
    return;
  }
  const std::size_t n = gains.size();
  const double mu = trace.mu;
  const double delta = *options.delta;
  const double limit = 0.25 * mu * delta;
  auto ratios = step_deviations(gains);
  const std::size_t q = final_quartile_start(n);
  double window_dev = max_ratio(ratios, q);
  if (n == 0 || window_dev > limit) {
    out.push_back(not_applicable(
        "remark",
        fmt::format("deviation {} over the final quartile exceeds mu*delta/4 = {}",
                    window_dev, limit)));
    return;
  }
  // Record times of |s1_{1:T}|.
  std::vector<bool> record(n + 1, false);
  double best = 0.0;
  for (std::size_t t = 1; t <= n; ++t) {
    double a = std::abs(gains.state(t).cum1);
    if (a > 0.0 && a >= best) record[t] = true;
    best = std::max(best, a);
  }
  auto check = run_check(
      "remark", n, q, n, options.tolerance,
      [&](std::size_t t) {
        return std::pair{trace.steps[t - 1].cuml,
                         (1.0 - delta) * (1.0 - mu) * std::abs(gains.state(t).cum1)};
      },
      [&](std::size_t t) { return record[t]; });
  if (check.applicable) {
    check.note = fmt::format("record times of |s1| in the final quartile from "
                             "T = {}, deviation {}",
                             q, window_dev);
  } else {
    check.note = "no record time of |s1| in the final quartile";
  }
  out.push_back(std::move(check));
}

}  // namespace

std::vector<BoundCheck> check_bounds(const EvalTrace& trace,
                                     const GainSequence& gains,
                                     const CheckOptions& options) {
  if (trace.size() != gains.size() || trace.mode != gains.mode())
    throw_invalid("check_bounds: trace was not produced from this game");
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (trace.steps[i].s1 != gains.steps()[i].s1 ||
        trace.steps[i].s2 != gains.steps()[i].s2) {
      throw_invalid(fmt::format(
          "check_bounds: trace step {} does not match the game", i + 1));
    }
  }
  if (options.delta && !(*options.delta > 0.0 && *options.delta < 1.0))
    throw_invalid("delta must lie in (0,1)");

  const std::size_t n = gains.size();
  std::vector<BoundCheck> out;
  std::vector<double> l(n + 1), r(n + 1), cuml(n + 1), cumr(n + 1);

  if (gains.mode() != GameMode::kZeroSum) {
    for (std::size_t t = 1; t <= n; ++t) {
      const auto& s = trace.steps[t - 1];
      l[t] = s.l;
      r[t] = s.r;
      cuml[t] = s.cuml;
      cumr[t] = s.cumr;
    }
    check_nonnegative(gains, l, r, cuml, cumr, trace.mu, options, out);
    return out;
  }

  if (trace.zero_sum_rate == ZeroSumRate::kRemark) {
    check_zero_sum_remark(gains, trace, options, out);
    return out;
  }

  // Lifted game: l~_t = l_t + |s1_t| and l~_{1:t} = l_{1:t} + V_t.
  auto lifted_game = zero_sum_lift(gains);
  for (std::size_t t = 1; t <= n; ++t) {
    const auto& s = trace.steps[t - 1];
    double shift = std::abs(s.s1);
    double volume = gains.state(t).volume;
    l[t] = s.l + shift;
    r[t] = s.r + shift;
    cuml[t] = s.cuml + volume;
    cumr[t] = s.cumr + volume;
  }
  check_nonnegative(lifted_game, l, r, cuml, cumr, trace.mu, options, out);
  check_zero_sum_lifted(gains, trace, options, out);
  return out;
}

bool all_pass(const std::vector<BoundCheck>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) {
    return !c.applicable || c.ok;
  });
}

const BoundCheck* find_check(const std::vector<BoundCheck>& checks,
                             std::string_view name) {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

nlohmann::json to_json(const BoundCheck& check) {
  nlohmann::json j;
  j["name"] = check.name;
  j["T_or_t"] = check.t;
  j["lhs"] = check.lhs;
  j["rhs"] = check.rhs;
  j["ok"] = check.ok;
  j["applicable"] = check.applicable;
  j["from"] = check.from;
  j["to"] = check.to;
  j["violations"] = check.violations;
  j["transition"] = check.transition ? nlohmann::json(*check.transition)
                                     : nlohmann::json(nullptr);
  j["note"] = check.note;
  return j;
}

nlohmann::json to_json(const std::vector<BoundCheck>& checks) {
  auto arr = nlohmann::json::array();
  for (const auto& c : checks) arr.push_back(to_json(c));
  return arr;
}

}  // namespace ufpl
