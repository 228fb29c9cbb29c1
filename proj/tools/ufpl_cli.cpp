#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ufpl/ufpl.h"

namespace {

int report_failure(ufpl_status status) {
  std::fprintf(stderr, "ufpl: %s: %s\n", ufpl_status_string(status), ufpl_last_error());
  return status == UFPL_ERR_INVALID_ARGUMENT || status == UFPL_ERR_CONFIG
             ? UFPL_EXIT_USAGE
             : UFPL_EXIT_RUNTIME;
}

int run(const std::string& config, const std::string& out) {
  int exit_code = UFPL_EXIT_RUNTIME;
  auto status = ufpl_run_experiment(config.c_str(), out.empty() ? nullptr : out.c_str(),
                                    &exit_code);
  if (status != UFPL_OK) return report_failure(status);
  if (exit_code == UFPL_EXIT_VIOLATION)
    std::fprintf(stderr, "ufpl: bound or checkpoint violation (see summary.json)\n");
  return exit_code;
}

int check(const std::string& trace, const std::string& gains, double mu, double delta,
          const std::string& schedule) {
  const char* gains_arg = gains.empty() ? nullptr : gains.c_str();
  const char* schedule_arg = schedule.empty() ? nullptr : schedule.c_str();
  int exit_code = UFPL_EXIT_RUNTIME;
  size_t needed = 0;
  auto status = ufpl_check_trace_file(trace.c_str(), gains_arg, mu, delta, schedule_arg,
                                      &exit_code, nullptr, 0, &needed);
  if (status != UFPL_ERR_BUFFER_TOO_SMALL) return report_failure(status);
  std::vector<char> buf(needed);
  status = ufpl_check_trace_file(trace.c_str(), gains_arg, mu, delta, schedule_arg,
                                 &exit_code, buf.data(), buf.size(), nullptr);
  if (status != UFPL_OK) return report_failure(status);
  std::printf("%s\n", buf.data());
  return exit_code;
}

int fbm(const std::vector<std::string>& params, const std::string& out,
        const std::string& file) {
  std::string joined;
  for (const auto& p : params) joined += p + " ";
  ufpl_path* path = nullptr;
  auto status = ufpl_path_from_params(joined.c_str(), &path);
  if (status != UFPL_OK) return report_failure(status);

  size_t needed = 0;
  const char* root_override = out.empty() ? nullptr : out.c_str();
  ufpl_output_root(root_override, nullptr, 0, &needed);
  std::vector<char> root(needed);
  status = ufpl_output_root(root_override, root.data(), root.size(), nullptr);
  if (status != UFPL_OK) {
    ufpl_path_destroy(path);
    return report_failure(status);
  }
  auto target = std::filesystem::path(root.data()) / file;
  std::error_code ec;
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path(), ec);
  status = ufpl_path_write_csv(path, target.string().c_str());
  ufpl_path_destroy(path);
  if (status != UFPL_OK) return report_failure(status);
  std::printf("%s\n", target.string().c_str());
  return UFPL_EXIT_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Follow-the-perturbed-leader experiments with unbounded gains"};
  app.require_subcommand(1);
  std::string out;
  app.add_option("--out", out,
                 "Output root; overrides the UFPL_OUTPUT_ROOT environment variable");

  std::string config;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  run_cmd->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);

  std::string trace, gains, schedule;
  double mu = NAN, delta = NAN;
  auto* check_cmd = app.add_subcommand("check", "Re-verify the bounds of a trace CSV");
  check_cmd->add_option("trace", trace, "Trace CSV")->required()->check(CLI::ExistingFile);
  check_cmd->add_option("--gains", gains, "Gains CSV (default: gains.csv beside the trace)");
  check_cmd->add_option("--mu", mu, "Learning-rate parameter (default: from meta.json)");
  check_cmd->add_option("--delta", delta, "Deviation parameter for low-deviation checks");
  check_cmd->add_option("--schedule", schedule, "Zero-sum rate: lifted or remark");

  std::vector<std::string> params;
  std::string file = "path.csv";
  auto* fbm_cmd = app.add_subcommand("fbm", "Generate a fractional Brownian price path");
  fbm_cmd->add_option("params", params, "hurst=.. steps=.. [sigma=..] [s0=..] [seed=..]")
      ->required();
  fbm_cmd->add_option("--file", file, "Output file relative to the output root");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? UFPL_EXIT_OK : UFPL_EXIT_USAGE;
  }

  if (*run_cmd) return run(config, out);
  if (*check_cmd) return check(trace, gains, mu, delta, schedule);
  return fbm(params, out, file);
}
