#include "ufpl/ufpl.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include <fmt/format.h>

#include "ufpl/adversaries.hpp"
#include "ufpl/descriptor.hpp"
#include "ufpl/errors.hpp"
#include "ufpl/evaluator.hpp"
#include "ufpl/experiment.hpp"
#include "ufpl/finance.hpp"
#include "ufpl/fuzz.hpp"
#include "ufpl/perturbation.hpp"

struct ufpl_gains {
  ufpl::GainSequence value;
};
struct ufpl_policy {
  ufpl::PolicySpec value;
};
struct ufpl_trace {
  ufpl::EvalTrace value;
};
struct ufpl_report {
  ufpl::AdversaryReport value;
};
struct ufpl_path {
  ufpl::PricePath value;
};

namespace {

thread_local std::string last_error;

ufpl_status to_status(ufpl::ErrorCode code) {
  switch (code) {
    case ufpl::ErrorCode::kInvalidArgument: return UFPL_ERR_INVALID_ARGUMENT;
    case ufpl::ErrorCode::kModeViolation: return UFPL_ERR_MODE_VIOLATION;
    case ufpl::ErrorCode::kOverflow: return UFPL_ERR_OVERFLOW;
    case ufpl::ErrorCode::kNotPositiveDefinite: return UFPL_ERR_NOT_POSITIVE_DEFINITE;
    case ufpl::ErrorCode::kIo: return UFPL_ERR_IO;
    case ufpl::ErrorCode::kConfig: return UFPL_ERR_CONFIG;
  }
  return UFPL_ERR_INTERNAL;
}

ufpl_status fail(ufpl_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <class F>
ufpl_status guard(F&& body) {
  try {
    body();
    return UFPL_OK;
  } catch (const ufpl::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(UFPL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(UFPL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(UFPL_ERR_INTERNAL, "unknown exception");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) ufpl::throw_invalid(fmt::format("{} must not be NULL", what));
}

ufpl_status copy_string(const std::string& text, char* buf, size_t cap,
                        size_t* needed) {
  if (needed != nullptr) *needed = text.size() + 1;
  if (cap < text.size() + 1) {
    if (buf != nullptr && cap > 0) {
      std::memcpy(buf, text.data(), cap - 1);
      buf[cap - 1] = '\0';
    }
    return fail(UFPL_ERR_BUFFER_TOO_SMALL,
                fmt::format("buffer holds {} bytes, {} needed", cap, text.size() + 1));
  }
  require(buf, "buf");
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return UFPL_OK;
}

ufpl::GameMode to_mode(ufpl_game_mode mode) {
  switch (mode) {
    case UFPL_MODE_ONE_HOT: return ufpl::GameMode::kOneHot;
    case UFPL_MODE_ZERO_SUM: return ufpl::GameMode::kZeroSum;
    case UFPL_MODE_GENERAL_NONNEGATIVE: return ufpl::GameMode::kGeneralNonnegative;
    case UFPL_MODE_INFER: break;
  }
  ufpl::throw_invalid(fmt::format("invalid game mode {}", static_cast<int>(mode)));
}

ufpl_game_mode from_mode(ufpl::GameMode mode) {
  switch (mode) {
    case ufpl::GameMode::kOneHot: return UFPL_MODE_ONE_HOT;
    case ufpl::GameMode::kZeroSum: return UFPL_MODE_ZERO_SUM;
    case ufpl::GameMode::kGeneralNonnegative: return UFPL_MODE_GENERAL_NONNEGATIVE;
  }
  return UFPL_MODE_INFER;
}

int exit_code_for(ufpl_status status) {
  switch (status) {
    case UFPL_OK: return UFPL_EXIT_OK;
    case UFPL_ERR_INVALID_ARGUMENT:
    case UFPL_ERR_CONFIG: return UFPL_EXIT_USAGE;
    default: return UFPL_EXIT_RUNTIME;
  }
}

}  // namespace

extern "C" {

const char* ufpl_last_error(void) { return last_error.c_str(); }

const char* ufpl_status_string(ufpl_status status) {
  switch (status) {
    case UFPL_OK: return "ok";
    case UFPL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case UFPL_ERR_MODE_VIOLATION: return "game mode violation";
    case UFPL_ERR_OVERFLOW: return "magnitude overflow";
    case UFPL_ERR_NOT_POSITIVE_DEFINITE: return "matrix not positive definite";
    case UFPL_ERR_IO: return "i/o error";
    case UFPL_ERR_CONFIG: return "config error";
    case UFPL_ERR_BUFFER_TOO_SMALL: return "buffer too small";
    case UFPL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

ufpl_status ufpl_comparison_probability(double a, double* out) {
  return guard([&] {
    require(out, "out");
    *out = ufpl::comparison_probability(a);
  });
}

ufpl_status ufpl_fgn_covariance(size_t lag, double hurst, double* out) {
  return guard([&] {
    require(out, "out");
    *out = ufpl::fgn_covariance(lag, hurst);
  });
}

ufpl_status ufpl_gains_create(ufpl_game_mode mode, ufpl_gains** out) {
  return guard([&] {
    require(out, "out");
    *out = new ufpl_gains{ufpl::GainSequence(to_mode(mode))};
  });
}

void ufpl_gains_destroy(ufpl_gains* gains) { delete gains; }

ufpl_status ufpl_gains_append(ufpl_gains* gains, double s1, double s2) {
  return guard([&] {
    require(gains, "gains");
    gains->value.append(s1, s2);
  });
}

ufpl_status ufpl_gains_size(const ufpl_gains* gains, size_t* out) {
  return guard([&] {
    require(gains, "gains");
    require(out, "out");
    *out = gains->value.size();
  });
}

ufpl_status ufpl_gains_mode(const ufpl_gains* gains, ufpl_game_mode* out) {
  return guard([&] {
    require(gains, "gains");
    require(out, "out");
    *out = from_mode(gains->value.mode());
  });
}

ufpl_status ufpl_gains_state(const ufpl_gains* gains, size_t t, double* cum1,
                             double* cum2, double* volume) {
  return guard([&] {
    require(gains, "gains");
    const auto& s = gains->value.state(t);
    if (cum1 != nullptr) *cum1 = s.cum1;
    if (cum2 != nullptr) *cum2 = s.cum2;
    if (volume != nullptr) *volume = s.volume;
  });
}

ufpl_status ufpl_gains_lift(const ufpl_gains* zero_sum, ufpl_gains** out) {
  return guard([&] {
    require(zero_sum, "zero_sum");
    require(out, "out");
    *out = new ufpl_gains{ufpl::zero_sum_lift(zero_sum->value)};
  });
}

ufpl_status ufpl_gains_fuzz(const char* family, uint64_t seed, size_t horizon,
                            ufpl_gains** out) {
  return guard([&] {
    require(family, "family");
    require(out, "out");
    *out = new ufpl_gains{
        ufpl::fuzz_game_exact(ufpl::parse_fuzz_family(family), seed, horizon)};
  });
}

ufpl_status ufpl_gains_read_csv(const char* path, ufpl_game_mode mode,
                                ufpl_gains** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    std::ifstream in(path);
    if (!in) throw ufpl::Error(ufpl::ErrorCode::kIo, fmt::format("cannot read {}", path));
    std::optional<ufpl::GameMode> m;
    if (mode != UFPL_MODE_INFER) m = to_mode(mode);
    *out = new ufpl_gains{ufpl::read_gains_csv(in, m)};
  });
}

ufpl_status ufpl_gains_write_csv(const ufpl_gains* gains, const char* path) {
  return guard([&] {
    require(gains, "gains");
    require(path, "path");
    std::ofstream o(path, std::ios::binary);
    if (!o) throw ufpl::Error(ufpl::ErrorCode::kIo, fmt::format("cannot write {}", path));
    ufpl::write_gains_csv(o, gains->value);
  });
}

ufpl_status ufpl_policy_parse(const char* descriptor, ufpl_policy** out) {
  return guard([&] {
    require(descriptor, "descriptor");
    require(out, "out");
    *out = new ufpl_policy{ufpl::parse_policy(descriptor)};
  });
}

void ufpl_policy_destroy(ufpl_policy* policy) { delete policy; }

ufpl_status ufpl_policy_describe(const ufpl_policy* policy, char* buf, size_t cap,
                                 size_t* needed) {
  ufpl_status status = UFPL_OK;
  auto guarded = guard([&] {
    require(policy, "policy");
    status = copy_string(policy->value.describe(), buf, cap, needed);
  });
  return guarded != UFPL_OK ? guarded : status;
}

ufpl_status ufpl_policy_decide(const ufpl_policy* policy, const ufpl_gains* gains,
                               size_t step, double* prob1) {
  return guard([&] {
    require(policy, "policy");
    require(gains, "gains");
    require(prob1, "prob1");
    const auto& seq = gains->value;
    if (step < 1 || step > seq.size() + (policy->value.needs_step_gains() ? 0 : 1)) {
      ufpl::throw_invalid(fmt::format("step {} outside the game", step));
    }
    std::optional<ufpl::GainStep> oracle;
    if (policy->value.needs_step_gains()) oracle = seq.step(step);
    *prob1 = ufpl::decide_prob(policy->value, seq.state(step - 1), oracle);
  });
}

ufpl_status ufpl_trace_exact(const ufpl_gains* gains, double mu, int remark,
                             ufpl_trace** out) {
  return guard([&] {
    require(gains, "gains");
    require(out, "out");
    auto rate = remark != 0 ? ufpl::ZeroSumRate::kRemark : ufpl::ZeroSumRate::kLifted;
    *out = new ufpl_trace{ufpl::exact_trace(gains->value, mu, rate)};
  });
}

void ufpl_trace_destroy(ufpl_trace* trace) { delete trace; }

ufpl_status ufpl_trace_size(const ufpl_trace* trace, size_t* out) {
  return guard([&] {
    require(trace, "trace");
    require(out, "out");
    *out = trace->value.size();
  });
}

ufpl_status ufpl_trace_row_at(const ufpl_trace* trace, size_t t,
                              ufpl_trace_row* out) {
  return guard([&] {
    require(trace, "trace");
    require(out, "out");
    if (t < 1 || t > trace->value.size())
      ufpl::throw_invalid(fmt::format("step {} outside the trace", t));
    const auto& s = trace->value.steps[t - 1];
    *out = {s.s1, s.s2, s.prob1_fpl, s.prob1_ifpl, s.l, s.r, s.cuml, s.cumr};
  });
}

ufpl_status ufpl_trace_write_csv(const ufpl_trace* trace, const char* path) {
  return guard([&] {
    require(trace, "trace");
    require(path, "path");
    std::ofstream o(path, std::ios::binary);
    if (!o) throw ufpl::Error(ufpl::ErrorCode::kIo, fmt::format("cannot write {}", path));
    ufpl::write_trace_csv(o, trace->value);
  });
}

ufpl_status ufpl_trace_check_json(const ufpl_trace* trace, const ufpl_gains* gains,
                                  double delta, int* all_pass, char* buf,
                                  size_t cap, size_t* needed) {
  ufpl_status status = UFPL_OK;
  auto guarded = guard([&] {
    require(trace, "trace");
    require(gains, "gains");
    ufpl::CheckOptions options;
    if (delta > 0.0) options.delta = delta;
    auto checks = ufpl::check_bounds(trace->value, gains->value, options);
    if (all_pass != nullptr) *all_pass = ufpl::all_pass(checks) ? 1 : 0;
    status = copy_string(ufpl::to_json(checks).dump(), buf, cap, needed);
  });
  return guarded != UFPL_OK ? guarded : status;
}

ufpl_status ufpl_monte_carlo(const ufpl_gains* gains, const ufpl_policy* policy,
                             size_t replicas, uint64_t seed, unsigned threads,
                             double* mean, double* standard_error) {
  return guard([&] {
    require(gains, "gains");
    require(policy, "policy");
    auto result =
        ufpl::monte_carlo_trace(gains->value, policy->value, replicas, seed, threads);
    if (mean != nullptr) *mean = result.mean;
    if (standard_error != nullptr) *standard_error = result.standard_error;
  });
}

ufpl_status ufpl_adversary_run(const char* descriptor, const ufpl_policy* policy,
                               ufpl_report** out) {
  return guard([&] {
    require(descriptor, "descriptor");
    require(policy, "policy");
    require(out, "out");
    *out = new ufpl_report{ufpl::run_adversary(descriptor, policy->value)};
  });
}

void ufpl_report_destroy(ufpl_report* report) { delete report; }

ufpl_status ufpl_report_status(const ufpl_report* report, int* complete,
                               int* all_ok) {
  return guard([&] {
    require(report, "report");
    if (complete != nullptr) *complete = report->value.complete() ? 1 : 0;
    if (all_ok != nullptr) *all_ok = report->value.all_ok() ? 1 : 0;
  });
}

ufpl_status ufpl_report_gains(const ufpl_report* report, ufpl_gains** out) {
  return guard([&] {
    require(report, "report");
    require(out, "out");
    *out = new ufpl_gains{report->value.gains};
  });
}

ufpl_status ufpl_report_json(const ufpl_report* report, char* buf, size_t cap,
                             size_t* needed) {
  ufpl_status status = UFPL_OK;
  auto guarded = guard([&] {
    require(report, "report");
    status = copy_string(ufpl::to_json(report->value).dump(), buf, cap, needed);
  });
  return guarded != UFPL_OK ? guarded : status;
}

ufpl_status ufpl_path_generate(size_t steps, double hurst, double sigma, double s0,
                               uint64_t seed, ufpl_path** out) {
  return guard([&] {
    require(out, "out");
    *out = new ufpl_path{ufpl::generate_path(steps, hurst, sigma, s0, seed)};
  });
}

ufpl_status ufpl_path_from_params(const char* params, ufpl_path** out) {
  return guard([&] {
    require(params, "params");
    require(out, "out");
    auto d = ufpl::Descriptor::parse(std::string("fbm ") + params);
    if (d.words().size() != 1)
      ufpl::throw_invalid(fmt::format("unexpected word '{}'", d.words()[1]));
    double hurst = d.required_number("hurst");
    auto steps = d.count("steps", 1024);
    double sigma = d.number("sigma", 1.0);
    double s0 = d.number("s0", 100.0);
    auto seed = d.u64("seed", 0);
    d.reject_unknown("fbm");
    *out = new ufpl_path{ufpl::generate_path(steps, hurst, sigma, s0, seed)};
  });
}

void ufpl_path_destroy(ufpl_path* path) { delete path; }

ufpl_status ufpl_path_steps(const ufpl_path* path, size_t* out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = path->value.steps();
  });
}

ufpl_status ufpl_path_prices(const ufpl_path* path, double* out, size_t cap) {
  ufpl_status status = UFPL_OK;
  auto guarded = guard([&] {
    require(path, "path");
    require(out, "out");
    const auto& prices = path->value.prices;
    if (cap < prices.size()) {
      status = fail(UFPL_ERR_BUFFER_TOO_SMALL,
                    fmt::format("need room for {} prices, have {}", prices.size(), cap));
      return;
    }
    std::copy(prices.begin(), prices.end(), out);
  });
  return guarded != UFPL_OK ? guarded : status;
}

ufpl_status ufpl_path_write_csv(const ufpl_path* path, const char* file) {
  return guard([&] {
    require(path, "path");
    require(file, "file");
    std::ofstream o(file, std::ios::binary);
    if (!o) throw ufpl::Error(ufpl::ErrorCode::kIo, fmt::format("cannot write {}", file));
    ufpl::write_path_csv(o, path->value);
    o.flush();
    if (!o) throw ufpl::Error(ufpl::ErrorCode::kIo, fmt::format("error writing {}", file));
  });
}

ufpl_status ufpl_path_expert_gains(const ufpl_path* path, double c,
                                   ufpl_gains** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new ufpl_gains{ufpl::expert_gains(path->value, c)};
  });
}

ufpl_status ufpl_path_trade(const ufpl_policy* policy, const ufpl_path* path,
                            double c, double* total_income, double* cumulative,
                            size_t cap) {
  return guard([&] {
    require(policy, "policy");
    require(path, "path");
    auto record = ufpl::derandomized_trade(policy->value, path->value, c);
    if (cumulative != nullptr) {
      if (cap < record.steps.size())
        ufpl::throw_invalid(fmt::format("need room for {} values", record.steps.size()));
      for (size_t i = 0; i < record.steps.size(); ++i)
        cumulative[i] = record.steps[i].cumulative;
    }
    if (total_income != nullptr) *total_income = record.total();
  });
}

ufpl_status ufpl_output_root(const char* override_root, char* buf, size_t cap,
                             size_t* needed) {
  ufpl_status status = UFPL_OK;
  auto guarded = guard([&] {
    std::optional<std::filesystem::path> cli;
    if (override_root != nullptr) cli = override_root;
    status = copy_string(ufpl::resolve_output_root(cli).string(), buf, cap, needed);
  });
  return guarded != UFPL_OK ? guarded : status;
}

ufpl_status ufpl_run_experiment(const char* config_path, const char* output_root,
                                int* exit_code) {
  auto status = guard([&] {
    require(config_path, "config_path");
    auto config = ufpl::load_config(config_path);
    std::optional<std::filesystem::path> cli;
    if (output_root != nullptr) cli = output_root;
    auto result = ufpl::run_experiment(config, ufpl::resolve_output_root(cli));
    if (exit_code != nullptr) *exit_code = static_cast<int>(result.exit_code);
  });
  if (status != UFPL_OK && exit_code != nullptr) *exit_code = exit_code_for(status);
  return status;
}

ufpl_status ufpl_check_trace_file(const char* trace_path, const char* gains_path,
                                  double mu, double delta, const char* schedule,
                                  int* exit_code, char* buf, size_t cap,
                                  size_t* needed) {
  ufpl_status status = UFPL_OK;
  auto guarded = guard([&] {
    require(trace_path, "trace_path");
    ufpl::TraceCheckOptions options;
    if (gains_path != nullptr) options.gains = gains_path;
    if (!std::isnan(mu)) options.mu = mu;
    if (!std::isnan(delta)) options.delta = delta;
    if (schedule != nullptr) options.schedule = ufpl::parse_zero_sum_rate(schedule);
    auto result = ufpl::check_trace_file(trace_path, options);
    if (exit_code != nullptr) *exit_code = static_cast<int>(result.exit_code);
    status = copy_string(ufpl::to_json(result.checks).dump(2), buf, cap, needed);
  });
  if (guarded != UFPL_OK) {
    if (exit_code != nullptr) *exit_code = exit_code_for(guarded);
    return guarded;
  }
  return status;
}

}  // extern "C"
