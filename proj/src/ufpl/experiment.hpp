#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ufpl/evaluator.hpp"

namespace ufpl {

// Process exit codes shared by the library entry points and the CLI.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,      // invalid config or arguments
  kViolation = 2,  // a bound check or adversary checkpoint failed
  kRuntime = 3,    // I/O or numerical failure
};

// Parsed from a "key = value" file. Keys:
//   game      fuzz family=.. count=.. [seed=..] [horizon=..]
//             | adversary <name> [params]
//             | fbm hurst=.. steps=.. [sigma=..] [seeds=..] [c=..] [s0=..] [seed=..]
//             | file path=.. [mode=..]
//   policy    policy descriptor, default "fpl mu=<mu>"
//   mu, delta, schedule (lifted|remark), replicas, seed, output,
//   formats (comma-separated subset of csv,json), threads
struct ExperimentConfig {
  std::string game;
  std::string policy;
  double mu = 0.618;
  std::optional<double> delta;
  ZeroSumRate schedule = ZeroSumRate::kLifted;
  std::size_t replicas = 0;
  std::uint64_t seed = 0;
  std::string output = "ufpl-out";
  bool csv = true;
  bool json = true;
  unsigned threads = 0;
  // Relative game file paths resolve against this directory.
  std::filesystem::path base_dir;
};

// Throws ConfigError carrying the line and field of the first problem.
ExperimentConfig parse_config(std::istream& in,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

inline constexpr const char* kOutputRootEnv = "UFPL_OUTPUT_ROOT";

// cli_override, else $UFPL_OUTPUT_ROOT, else the working directory.
std::filesystem::path resolve_output_root(
    const std::optional<std::filesystem::path>& cli_override = {});

struct GameOutcome {
  std::string name;
  std::size_t steps = 0;
  std::vector<std::string> failed;  // names of failing checks and checkpoints
  bool adversary_complete = true;
};

struct ExperimentResult {
  std::filesystem::path directory;
  std::vector<GameOutcome> games;
  ExitCode exit_code = ExitCode::kOk;
};

// Writes one subdirectory per game plus summary.json under
// output_root / config.output.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& output_root);

struct TraceCheckResult {
  std::vector<BoundCheck> checks;
  ExitCode exit_code = ExitCode::kOk;
};

// Re-verifies the bounds of a written trace. The game comes from `gains`
// (default: gains.csv next to the trace); mu, delta and the zero-sum rate
// default to the sibling meta.json when present.
struct TraceCheckOptions {
  std::optional<std::filesystem::path> gains;
  std::optional<double> mu;
  std::optional<double> delta;
  std::optional<ZeroSumRate> schedule;
};

TraceCheckResult check_trace_file(const std::filesystem::path& trace,
                                  const TraceCheckOptions& options = {});

}  // namespace ufpl
