#include "ufpl/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <variant>

#include <fmt/format.h>
#include <json.hpp>

#include "ufpl/adversaries.hpp"
#include "ufpl/csv.hpp"
#include "ufpl/descriptor.hpp"
#include "ufpl/errors.hpp"
#include "ufpl/finance.hpp"
#include "ufpl/fuzz.hpp"
#include "ufpl/perturbation.hpp"

namespace ufpl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kIdentityTolerance = 1e-9;

struct FuzzSource {
  FuzzFamily family;
  std::size_t count;
  std::optional<std::uint64_t> seed;
  std::size_t horizon;
};

struct AdversarySource {
  std::string descriptor;  // without the leading "adversary"
};

struct FbmSource {
  double hurst;
  std::size_t steps;
  double sigma;
  std::size_t seeds;
  double c;
  double s0;
  std::optional<std::uint64_t> seed;
};

struct FileSource {
  fs::path path;
  std::optional<GameMode> mode;
};

using GameSource = std::variant<FuzzSource, AdversarySource, FbmSource, FileSource>;

GameSource parse_game(std::string_view text, const fs::path& base_dir) {
  auto d = Descriptor::parse(text);
  if (d.words().empty()) throw_invalid("empty game descriptor");
  const auto& kind = d.words().front();
  if (kind == "adversary") {
    auto rest = std::string(text);
    auto at = rest.find("adversary");
    return AdversarySource{rest.substr(at + std::string_view("adversary").size())};
  }
  if (d.words().size() != 1)
    throw_invalid(fmt::format("game '{}': unexpected word '{}'", kind, d.words()[1]));
  auto context = fmt::format("game '{}'", kind);
  if (kind == "fuzz") {
    FuzzSource src{parse_fuzz_family(d.text("family", "one-hot")),
                   d.count("count", 1), std::nullopt, d.count("horizon", 500)};
    if (d.has("seed")) src.seed = d.u64("seed", 0);
    if (src.count == 0) throw_invalid("fuzz count must be positive");
    if (src.horizon == 0) throw_invalid("fuzz horizon must be positive");
    d.reject_unknown(context);
    return src;
  }
  if (kind == "fbm") {
    FbmSource src{d.required_number("hurst"), d.count("steps", 1024),
                  d.number("sigma", 1.0),     d.count("seeds", 1),
                  d.number("c", 1.0),         d.number("s0", 100.0),
                  std::nullopt};
    if (d.has("seed")) src.seed = d.u64("seed", 0);
    d.reject_unknown(context);
    if (!(src.hurst > 0.0 && src.hurst < 1.0)) throw_invalid("hurst must lie in (0,1)");
    if (src.steps < 2 || src.steps > kMaxPathSteps)
      throw_invalid(fmt::format("fbm steps must lie in [2, {}]", kMaxPathSteps));
    if (!(src.sigma > 0.0)) throw_invalid("sigma must be positive");
    if (!(src.c > 0.0)) throw_invalid("c must be positive");
    if (src.seeds == 0) throw_invalid("seeds must be positive");
    return src;
  }
  if (kind == "file") {
    auto path = d.text("path");
    if (!path) throw_invalid("file game needs path=<gains.csv>");
    FileSource src{fs::path(*path), std::nullopt};
    if (src.path.is_relative()) src.path = base_dir / src.path;
    if (auto mode = d.text("mode")) src.mode = parse_game_mode(*mode);
    d.reject_unknown(context);
    return src;
  }
  throw_invalid(fmt::format(
      "unknown game source '{}' (expected fuzz, adversary, fbm or file)", kind));
}

[[noreturn]] void config_error(std::size_t line, const std::string& field,
                               const std::string& what) {
  auto where = line > 0 ? fmt::format("config line {} ({})", line, field)
                        : fmt::format("config ({})", field);
  throw ConfigError(line, field, fmt::format("{}: {}", where, what));
}

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  body(out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, fmt::format("error writing {}", path.string()));
}

void write_json(const fs::path& path, const json& value) {
  write_file(path, [&](std::ostream& out) { out << value.dump(2) << '\n'; });
}

std::string num(double x) { return csv::format_number(x); }

// t vs cumulative expected gains, the largest cumulative and bound curves.
void write_plot_csv(std::ostream& out, const EvalTrace& trace,
                    const GainSequence& gains, const std::optional<double>& delta) {
  const double mu = trace.mu;
  const double c = std::exp(-2.0 / mu);
  if (gains.mode() != GameMode::kZeroSum) {
    std::vector<std::string> header{"t", "cuml", "cumr", "max_cum", "thm2_general_rhs",
                                    "cor2_rhs", "thm4_rhs"};
    if (delta) header.push_back("thm2_lowdev_rhs");
    csv::write_row(out, header);
    for (std::size_t t = 1; t <= gains.size(); ++t) {
      const auto& s = trace.steps[t - 1];
      double v = gains.state(t).v;
      std::vector<std::string> row{std::to_string(t),          num(s.cuml),
                                   num(s.cumr),                num(v),
                                   num(c * (1.0 - mu) * v),    num((1.0 - mu) * v),
                                   num(v - mu * std::max(v, 1.0))};
      if (delta) row.push_back(num((1.0 - *delta) * (1.0 - mu) * v));
      csv::write_row(out, row);
    }
    return;
  }
  bool remark = trace.zero_sum_rate == ZeroSumRate::kRemark;
  std::vector<std::string> header{"t", "cuml", "cumr", "max_cum", "volume"};
  if (!remark) header.push_back("thm6_general_rhs");
  if (delta) header.push_back(remark ? "remark_rhs" : "thm6_lowdev_rhs");
  csv::write_row(out, header);
  const double k = c * (1.0 - mu);
  for (std::size_t t = 1; t <= gains.size(); ++t) {
    const auto& s = trace.steps[t - 1];
    const auto& st = gains.state(t);
    double a = std::abs(st.cum1);
    std::vector<std::string> row{std::to_string(t), num(s.cuml), num(s.cumr),
                                 num(a), num(st.volume)};
    if (!remark) row.push_back(num(k * a - st.volume * (1.0 - k)));
    if (delta) {
      double base = (1.0 - *delta) * (1.0 - mu) * a;
      row.push_back(num(remark ? base : base - (*delta + mu) * st.volume));
    }
    csv::write_row(out, row);
  }
}

void write_policy_csv(std::ostream& out, const std::vector<ExpectedStep>& steps) {
  csv::write_row(out, {"t", "prob1", "gain", "cumulative"});
  for (std::size_t i = 0; i < steps.size(); ++i) {
    csv::write_row(out, {std::to_string(i + 1), num(steps[i].prob1),
                         num(steps[i].gain), num(steps[i].cumulative)});
  }
}

json meta_json(const ExperimentConfig& config, const PolicySpec& policy,
               const GainSequence& gains) {
  return {{"mode", std::string(to_string(gains.mode()))},
          {"steps", gains.size()},
          {"mu", config.mu},
          {"delta", config.delta ? json(*config.delta) : json(nullptr)},
          {"schedule", std::string(to_string(config.schedule))},
          {"policy", policy.describe()}};
}

class Runner {
 public:
  Runner(const ExperimentConfig& config, fs::path root)
      : config_(config),
        policy_(config.policy.empty()
                    ? parse_policy(fmt::format("fpl mu={}", num(config.mu)))
                    : parse_policy(config.policy)),
        root_(std::move(root)) {}

  ExperimentResult run() {
    ExperimentResult result;
    result.directory = root_;
    fs::create_directories(root_);
    auto source = parse_game(config_.game, config_.base_dir);
    std::visit([&](const auto& src) { play(src, result); }, source);

    bool violation = false;
    json games = json::array();
    for (const auto& g : result.games) {
      violation = violation || !g.failed.empty();
      games.push_back({{"name", g.name},
                       {"steps", g.steps},
                       {"failed", g.failed},
                       {"adversary_complete", g.adversary_complete}});
    }
    result.exit_code = violation ? ExitCode::kViolation : ExitCode::kOk;
    json summary{{"game", config_.game},
                 {"policy", policy_.describe()},
                 {"mu", config_.mu},
                 {"delta", config_.delta ? json(*config_.delta) : json(nullptr)},
                 {"schedule", std::string(to_string(config_.schedule))},
                 {"replicas", config_.replicas},
                 {"seed", config_.seed},
                 {"games", std::move(games)},
                 {"status", violation ? "violation" : "pass"},
                 {"exit_code", static_cast<int>(result.exit_code)}};
    write_json(root_ / "summary.json", summary);
    return result;
  }

 private:
  // Trace, checks, policy replay and optional Monte Carlo for one game.
  GameOutcome evaluate(const std::string& name, const GainSequence& gains,
                       std::size_t index, const fs::path& dir) {
    GameOutcome outcome;
    outcome.name = name;
    outcome.steps = gains.size();
    auto trace = exact_trace(gains, config_.mu, config_.schedule);
    auto checks = check_bounds(trace, gains, {.delta = config_.delta});
    for (const auto& c : checks) {
      if (c.applicable && !c.ok) outcome.failed.push_back(c.name);
    }
    auto expected = expected_gains(gains, policy_);
    if (config_.csv) {
      write_file(dir / "gains.csv", [&](auto& o) { write_gains_csv(o, gains); });
      write_file(dir / "trace.csv", [&](auto& o) { write_trace_csv(o, trace); });
      write_file(dir / "plot.csv",
                 [&](auto& o) { write_plot_csv(o, trace, gains, config_.delta); });
      write_file(dir / "policy.csv", [&](auto& o) { write_policy_csv(o, expected); });
    }
    if (config_.json) {
      write_json(dir / "bounds.json", to_json(checks));
      write_json(dir / "meta.json", meta_json(config_, policy_, gains));
    }
    if (config_.replicas > 0 && !gains.empty()) {
      auto seed = derive_seed(config_.seed, "montecarlo", index);
      auto mc = monte_carlo_trace(gains, policy_, config_.replicas, seed,
                                  config_.threads);
      double exact = expected.back().cumulative;
      bool within = std::abs(mc.mean - exact) <= 4.0 * mc.standard_error +
                                                     1e-9 * std::max(1.0, std::abs(exact));
      if (!within) outcome.failed.push_back("montecarlo-4sigma");
      if (config_.json) {
        write_json(dir / "montecarlo.json",
                   {{"policy", policy_.describe()},
                    {"replicas", mc.replicas},
                    {"seed", seed},
                    {"mean", mc.mean},
                    {"standard_error", mc.standard_error},
                    {"exact", exact},
                    {"within_4_sigma", within}});
      }
    }
    return outcome;
  }

  fs::path game_dir(const std::string& name) {
    auto dir = root_ / name;
    fs::create_directories(dir);
    return dir;
  }

  void play(const FuzzSource& src, ExperimentResult& result) {
    auto base = src.seed.value_or(config_.seed);
    for (std::size_t i = 0; i < src.count; ++i) {
      auto name = fmt::format("fuzz-{:04}", i);
      auto seed = derive_seed(base, fmt::format("fuzz-{}", to_string(src.family)), i);
      auto gains = fuzz_game(src.family, seed, src.horizon);
      result.games.push_back(evaluate(name, gains, i, game_dir(name)));
    }
  }

  void play(const AdversarySource& src, ExperimentResult& result) {
    auto report = run_adversary(src.descriptor, policy_);
    auto name = "adversary-" + report.construction;
    auto dir = game_dir(name);
    auto outcome = evaluate(name, report.gains, 0, dir);
    outcome.adversary_complete = report.complete();
    for (const auto& c : report.checkpoints) {
      if (c.applicable && !c.ok)
        outcome.failed.push_back(fmt::format("{}@{}", c.name, c.t));
    }
    if (config_.json) write_json(dir / "adversary.json", to_json(report));
    result.games.push_back(std::move(outcome));
  }

  void play(const FbmSource& src, ExperimentResult& result) {
    FgnGenerator generator(src.steps, src.hurst);
    auto base = src.seed.value_or(config_.seed);
    for (std::size_t i = 0; i < src.seeds; ++i) {
      auto name = fmt::format("fbm-{:04}", i);
      auto dir = game_dir(name);
      auto path = generator.path(src.sigma, src.s0, derive_seed(base, "fbm", i));
      auto gains = expert_gains(path, src.c);
      auto outcome = evaluate(name, gains, i, dir);

      auto identity = squared_displacement_identity(path);
      auto gain_identity = expert_gain_identity(path, src.c);
      auto trading = derandomized_trade(policy_, path, src.c);
      auto expected = expected_gains(gains, policy_);
      double gap = 0.0;
      for (std::size_t t = 0; t < expected.size(); ++t) {
        double scale = std::max(1.0, std::abs(expected[t].cumulative));
        gap = std::max(gap, std::abs(trading.steps[t].cumulative -
                                     expected[t].cumulative) / scale);
      }
      if (identity.relative_error > kIdentityTolerance)
        outcome.failed.push_back("displacement-identity");
      if (gap > kIdentityTolerance) outcome.failed.push_back("derandomized-income");

      if (config_.csv) {
        write_file(dir / "path.csv", [&](auto& o) { write_path_csv(o, path); });
        write_file(dir / "trading.csv",
                   [&](auto& o) { write_trading_csv(o, trading); });
      }
      if (config_.json) {
        write_json(dir / "finance.json",
                   {{"hurst", src.hurst},
                    {"sigma", src.sigma},
                    {"seed", *path.seed},
                    {"c", src.c},
                    {"displacement_identity",
                     {{"lhs", identity.lhs},
                      {"rhs", identity.rhs},
                      {"relative_error", identity.relative_error}}},
                    {"expert_gain_identity",
                     {{"direct_sum", gain_identity.lhs},
                      {"closed_form", gain_identity.rhs},
                      {"relative_error", gain_identity.relative_error}}},
                    {"trading_income", trading.total()},
                    {"derandomized_gap", gap}});
      }
      result.games.push_back(std::move(outcome));
    }
  }

  void play(const FileSource& src, ExperimentResult& result) {
    std::ifstream in(src.path);
    if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", src.path.string()));
    auto gains = read_gains_csv(in, src.mode);
    auto name = "file-" + src.path.stem().string();
    result.games.push_back(evaluate(name, gains, 0, game_dir(name)));
  }

  const ExperimentConfig& config_;
  PolicySpec policy_;
  fs::path root_;
};

}  // namespace

ExperimentConfig parse_config(std::istream& in, const fs::path& base_dir) {
  ExperimentConfig config;
  config.base_dir = base_dir;
  std::map<std::string, std::size_t> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto hash = raw.find('#');
    auto line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      config_error(line_no, "?", fmt::format("expected 'key = value', found '{}'", line));
    auto key = trim(std::string_view(line).substr(0, eq));
    auto value = trim(std::string_view(line).substr(eq + 1));
    if (auto it = seen.find(key); it != seen.end()) {
      config_error(line_no, key,
                   fmt::format("duplicate key (first set on line {})", it->second));
    }
    seen[key] = line_no;
    try {
      if (key == "game") {
        config.game = value;
      } else if (key == "policy") {
        config.policy = value;
      } else if (key == "mu") {
        config.mu = parse_real(value, "mu");
        if (!(config.mu > 0.0 && config.mu < 1.0)) throw_invalid("mu must lie in (0,1)");
      } else if (key == "delta") {
        config.delta = parse_real(value, "delta");
        if (!(*config.delta > 0.0 && *config.delta < 1.0))
          throw_invalid("delta must lie in (0,1)");
      } else if (key == "schedule") {
        config.schedule = parse_zero_sum_rate(value);
      } else if (key == "replicas") {
        config.replicas = parse_u64(value, "replicas");
      } else if (key == "seed") {
        config.seed = parse_u64(value, "seed");
      } else if (key == "threads") {
        config.threads = static_cast<unsigned>(parse_u64(value, "threads"));
      } else if (key == "output") {
        if (value.empty()) throw_invalid("output must not be empty");
        config.output = value;
      } else if (key == "formats") {
        config.csv = config.json = false;
        std::stringstream list(value);
        std::string item;
        while (std::getline(list, item, ',')) {
          item = trim(item);
          if (item == "csv") {
            config.csv = true;
          } else if (item == "json") {
            config.json = true;
          } else {
            throw_invalid(fmt::format("unknown format '{}' (expected csv or json)", item));
          }
        }
      } else {
        throw_invalid(fmt::format("unknown key '{}'", key));
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      config_error(line_no, key, e.what());
    }
  }

  if (!seen.contains("game")) config_error(0, "game", "missing required key");
  // Validate descriptors now so diagnostics point at their lines.
  std::optional<PolicySpec> policy;
  try {
    policy = config.policy.empty()
                 ? parse_policy(fmt::format("fpl mu={}", num(config.mu)))
                 : parse_policy(config.policy);
  } catch (const Error& e) {
    config_error(seen.contains("policy") ? seen["policy"] : seen["mu"], "policy",
                 e.what());
  }
  try {
    auto source = parse_game(config.game, config.base_dir);
    if (std::holds_alternative<AdversarySource>(source) && policy->needs_step_gains())
      throw_invalid("adversaries cannot attack ifpl: it needs the step's own gains");
  } catch (const Error& e) {
    config_error(seen["game"], "game", e.what());
  }
  return config;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot read config {}", path.string()));
  return parse_config(in, path.parent_path());
}

fs::path resolve_output_root(const std::optional<fs::path>& cli_override) {
  if (cli_override) return *cli_override;
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0')
    return fs::path(env);
  return fs::current_path();
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const fs::path& output_root) {
  try {
    return Runner(config, output_root / config.output).run();
  } catch (const fs::filesystem_error& e) {
    throw Error(ErrorCode::kIo, e.what());
  }
}

TraceCheckResult check_trace_file(const fs::path& trace,
                                  const TraceCheckOptions& options) {
  auto dir = trace.parent_path();
  json meta;
  if (auto meta_path = dir / "meta.json"; fs::exists(meta_path)) {
    std::ifstream in(meta_path);
    try {
      meta = json::parse(in);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kIo, fmt::format("{}: {}", meta_path.string(), e.what()));
    }
  }
  auto from_meta = [&](const char* key) -> std::optional<json> {
    if (meta.is_object() && meta.contains(key) && !meta[key].is_null()) return meta[key];
    return std::nullopt;
  };

  double mu;
  if (options.mu) {
    mu = *options.mu;
  } else if (auto m = from_meta("mu")) {
    mu = m->get<double>();
  } else {
    throw_invalid("mu unknown: pass it explicitly or keep meta.json next to the trace");
  }
  std::optional<double> delta = options.delta;
  if (!delta) {
    if (auto d = from_meta("delta")) delta = d->get<double>();
  }
  ZeroSumRate schedule = ZeroSumRate::kLifted;
  if (options.schedule) {
    schedule = *options.schedule;
  } else if (auto s = from_meta("schedule")) {
    schedule = parse_zero_sum_rate(s->get<std::string>());
  }
  std::optional<GameMode> mode;
  if (auto m = from_meta("mode")) mode = parse_game_mode(m->get<std::string>());

  auto gains_path = options.gains.value_or(dir / "gains.csv");
  std::ifstream gin(gains_path);
  if (!gin) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", gains_path.string()));
  auto gains = read_gains_csv(gin, mode);
  std::ifstream tin(trace);
  if (!tin) throw Error(ErrorCode::kIo, fmt::format("cannot read {}", trace.string()));
  auto loaded = read_trace_csv(tin, gains, mu, schedule);

  TraceCheckResult result;
  result.checks = check_bounds(loaded, gains, {.delta = delta});
  result.exit_code = all_pass(result.checks) ? ExitCode::kOk : ExitCode::kViolation;
  return result;
}

}  // namespace ufpl
