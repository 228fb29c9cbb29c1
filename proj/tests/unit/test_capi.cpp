#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "ufpl/ufpl.h"

// Links only the shared library: everything goes through the C interface.

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ufpl-test-capi" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_string(ufpl_status (*fn)(const ufpl_report*, char*, size_t, size_t*),
                        const ufpl_report* r) {
  size_t needed = 0;
  REQUIRE(fn(r, nullptr, 0, &needed) == UFPL_ERR_BUFFER_TOO_SMALL);
  std::string out(needed, '\0');
  REQUIRE(fn(r, out.data(), out.size(), nullptr) == UFPL_OK);
  out.resize(needed - 1);
  return out;
}

}  // namespace

TEST_CASE("comparison probability through the C interface") {
  for (double a : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
    double p = 0.0;
    REQUIRE(ufpl_comparison_probability(a, &p) == UFPL_OK);
    CHECK(p == doctest::Approx(oracle::laplace_tail(a)).epsilon(1e-14));
  }
  double p = 0.0;
  CHECK(ufpl_comparison_probability(NAN, &p) == UFPL_ERR_INVALID_ARGUMENT);
  CHECK(std::string(ufpl_last_error()).size() > 0);
  CHECK(ufpl_comparison_probability(0.0, nullptr) == UFPL_ERR_INVALID_ARGUMENT);
}

TEST_CASE("status strings are distinct") {
  std::vector<std::string> names;
  for (int s = UFPL_OK; s <= UFPL_ERR_INTERNAL; ++s)
    names.emplace_back(ufpl_status_string(static_cast<ufpl_status>(s)));
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j) CHECK(names[i] != names[j]);
}

TEST_CASE("gains: append, state, mode errors, lift") {
  ufpl_gains* g = nullptr;
  REQUIRE(ufpl_gains_create(UFPL_MODE_ZERO_SUM, &g) == UFPL_OK);
  CHECK(ufpl_gains_append(g, 2.0, -2.0) == UFPL_OK);
  CHECK(ufpl_gains_append(g, -3.0, 3.0) == UFPL_OK);
  CHECK(ufpl_gains_append(g, 1.0, 1.0) == UFPL_ERR_MODE_VIOLATION);
  CHECK(std::string(ufpl_last_error()).find("zero-sum") != std::string::npos);
  CHECK(ufpl_gains_append(g, 1e301, -1e301) != UFPL_OK);
  size_t n = 0;
  REQUIRE(ufpl_gains_size(g, &n) == UFPL_OK);
  CHECK(n == 2);
  double c1 = 0, c2 = 0, vol = 0;
  REQUIRE(ufpl_gains_state(g, 2, &c1, &c2, &vol) == UFPL_OK);
  CHECK(c1 == -1.0);
  CHECK(c2 == 1.0);
  CHECK(vol == 5.0);
  CHECK(ufpl_gains_state(g, 3, &c1, nullptr, nullptr) == UFPL_ERR_INVALID_ARGUMENT);

  ufpl_gains* lifted = nullptr;
  REQUIRE(ufpl_gains_lift(g, &lifted) == UFPL_OK);
  ufpl_game_mode mode;
  REQUIRE(ufpl_gains_mode(lifted, &mode) == UFPL_OK);
  CHECK(mode == UFPL_MODE_ONE_HOT);
  REQUIRE(ufpl_gains_state(lifted, 2, &c1, &c2, nullptr) == UFPL_OK);
  CHECK(c1 == 4.0);  // (2+2) + (-3+3)
  CHECK(c2 == 6.0);  // (-2+2) + (3+3)
  ufpl_gains_destroy(lifted);
  ufpl_gains_destroy(g);
  ufpl_gains_destroy(nullptr);
}

TEST_CASE("exact trace rows match the independent oracle") {
  ufpl_gains* g = nullptr;
  REQUIRE(ufpl_gains_fuzz("general", 17, 120, &g) == UFPL_OK);
  size_t n = 0;
  ufpl_gains_size(g, &n);
  REQUIRE(n == 120);
  oracle::Steps steps;
  double prev1 = 0, prev2 = 0;
  for (size_t t = 1; t <= n; ++t) {
    double c1, c2;
    ufpl_gains_state(g, t, &c1, &c2, nullptr);
    steps.emplace_back(c1 - prev1, c2 - prev2);
    prev1 = c1;
    prev2 = c2;
  }
  ufpl_trace* tr = nullptr;
  REQUIRE(ufpl_trace_exact(g, 0.618, 0, &tr) == UFPL_OK);
  auto ref = oracle::exact(steps, 0.618);
  for (size_t t = 1; t <= n; ++t) {
    ufpl_trace_row row;
    REQUIRE(ufpl_trace_row_at(tr, t, &row) == UFPL_OK);
    CHECK(row.prob1_fpl == doctest::Approx(ref.p_fpl[t - 1]).epsilon(1e-12));
    CHECK(row.cumr == doctest::Approx(ref.cumr[t - 1]).epsilon(1e-9));
  }
  ufpl_trace_row row;
  CHECK(ufpl_trace_row_at(tr, 0, &row) == UFPL_ERR_INVALID_ARGUMENT);

  int pass = 0;
  size_t needed = 0;
  CHECK(ufpl_trace_check_json(tr, g, 0.1, &pass, nullptr, 0, &needed) ==
        UFPL_ERR_BUFFER_TOO_SMALL);
  std::string json(needed, '\0');
  REQUIRE(ufpl_trace_check_json(tr, g, 0.1, &pass, json.data(), json.size(), nullptr) ==
          UFPL_OK);
  CHECK(json.find("\"thm3-step\"") != std::string::npos);
  CHECK(pass == 1);

  ufpl_policy* p = nullptr;
  REQUIRE(ufpl_policy_parse("fpl mu=0.618", &p) == UFPL_OK);
  double prob = 0;
  REQUIRE(ufpl_policy_decide(p, g, 7, &prob) == UFPL_OK);
  CHECK(prob == doctest::Approx(ref.p_fpl[6]).epsilon(1e-12));
  double mean = 0, se = 0;
  REQUIRE(ufpl_monte_carlo(g, p, 20000, 5, 2, &mean, &se) == UFPL_OK);
  ufpl_trace_row last;
  ufpl_trace_row_at(tr, n, &last);
  CHECK(std::abs(mean - last.cuml) <= 4 * se + 1e-9);
  ufpl_policy_destroy(p);
  ufpl_trace_destroy(tr);
  ufpl_gains_destroy(g);
}

TEST_CASE("policies: parse errors and descriptions") {
  ufpl_policy* p = nullptr;
  CHECK(ufpl_policy_parse("fpl mu=1.5", &p) == UFPL_ERR_INVALID_ARGUMENT);
  CHECK(p == nullptr);
  CHECK(ufpl_policy_parse("nonsense", &p) == UFPL_ERR_INVALID_ARGUMENT);
  CHECK(ufpl_policy_parse(nullptr, &p) == UFPL_ERR_INVALID_ARGUMENT);
  REQUIRE(ufpl_policy_parse("threshold delta=0.05", &p) == UFPL_OK);
  char small[4];
  size_t needed = 0;
  CHECK(ufpl_policy_describe(p, small, sizeof small, &needed) == UFPL_ERR_BUFFER_TOO_SMALL);
  CHECK(std::string(small).size() == 3);
  std::string full(needed, '\0');
  REQUIRE(ufpl_policy_describe(p, full.data(), full.size(), nullptr) == UFPL_OK);
  CHECK(full.rfind("threshold", 0) == 0);
  ufpl_policy_destroy(p);
}

TEST_CASE("adversary reports through the C interface") {
  ufpl_policy* ftl = nullptr;
  REQUIRE(ufpl_policy_parse("ftl", &ftl) == UFPL_OK);
  ufpl_report* r = nullptr;
  REQUIRE(ufpl_adversary_run("kv_ftl", ftl, &r) == UFPL_OK);
  int complete = 0, ok = 0;
  REQUIRE(ufpl_report_status(r, &complete, &ok) == UFPL_OK);
  CHECK(complete == 1);
  CHECK(ok == 1);
  auto json = read_string(ufpl_report_json, r);
  CHECK(json.find("kv-total-loss-2-6") != std::string::npos);
  ufpl_gains* g = nullptr;
  REQUIRE(ufpl_report_gains(r, &g) == UFPL_OK);
  size_t n = 0;
  ufpl_gains_size(g, &n);
  CHECK(n == 6);
  ufpl_gains_destroy(g);
  ufpl_report_destroy(r);

  ufpl_policy* ifpl = nullptr;
  REQUIRE(ufpl_policy_parse("ifpl mu=0.5", &ifpl) == UFPL_OK);
  CHECK(ufpl_adversary_run("kv_ftl", ifpl, &r) == UFPL_ERR_INVALID_ARGUMENT);
  CHECK(ufpl_adversary_run("thm9", ftl, &r) == UFPL_ERR_INVALID_ARGUMENT);
  ufpl_policy_destroy(ifpl);
  ufpl_policy_destroy(ftl);
}

TEST_CASE("price paths: generation, identity, trading") {
  ufpl_path* path = nullptr;
  REQUIRE(ufpl_path_generate(128, 0.75, 1.0, 100.0, 3, &path) == UFPL_OK);
  size_t steps = 0;
  ufpl_path_steps(path, &steps);
  CHECK(steps == 128);
  std::vector<double> prices(steps + 1);
  CHECK(ufpl_path_prices(path, prices.data(), steps) == UFPL_ERR_BUFFER_TOO_SMALL);
  REQUIRE(ufpl_path_prices(path, prices.data(), prices.size()) == UFPL_OK);
  CHECK(prices[0] == 100.0);

  ufpl_gains* g = nullptr;
  REQUIRE(ufpl_path_expert_gains(path, 0.5, &g) == UFPL_OK);
  size_t n = 0;
  ufpl_gains_size(g, &n);
  CHECK(n == steps - 1);
  ufpl_trace* tr = nullptr;
  REQUIRE(ufpl_trace_exact(g, 0.618, 0, &tr) == UFPL_OK);

  ufpl_policy* p = nullptr;
  // The lifted view reproduces the trace's zero-sum rate.
  REQUIRE(ufpl_policy_parse("fpl mu=0.618 view=lifted", &p) == UFPL_OK);
  std::vector<double> cumulative(n);
  double total = 0;
  REQUIRE(ufpl_path_trade(p, path, 0.5, &total, cumulative.data(), cumulative.size()) ==
          UFPL_OK);
  for (size_t t = 1; t <= n; ++t) {
    ufpl_trace_row row;
    ufpl_trace_row_at(tr, t, &row);
    CHECK(cumulative[t - 1] ==
          doctest::Approx(row.cuml).epsilon(1e-9).scale(1.0));
  }
  CHECK(total == cumulative.back());

  auto dir = scratch("path");
  REQUIRE(ufpl_path_write_csv(path, (dir / "p.csv").string().c_str()) == UFPL_OK);
  CHECK(fs::file_size(dir / "p.csv") > 0);
  ufpl_policy_destroy(p);
  ufpl_trace_destroy(tr);
  ufpl_gains_destroy(g);
  ufpl_path_destroy(path);

  CHECK(ufpl_path_from_params("hurst=0.5 steps=16 seed=2", &path) == UFPL_OK);
  ufpl_path_destroy(path);
  CHECK(ufpl_path_from_params("steps=16", &path) == UFPL_ERR_INVALID_ARGUMENT);
  CHECK(ufpl_path_generate(16, 1.0 - 1e-14, 1.0, 0.0, 0, &path) ==
        UFPL_ERR_NOT_POSITIVE_DEFINITE);
  CHECK(std::string(ufpl_last_error()).find("pivot") != std::string::npos);
}

TEST_CASE("gains CSV round trip and experiment entry points") {
  auto dir = scratch("io");
  ufpl_gains* g = nullptr;
  REQUIRE(ufpl_gains_fuzz("one-hot", 4, 30, &g) == UFPL_OK);
  auto file = (dir / "g.csv").string();
  REQUIRE(ufpl_gains_write_csv(g, file.c_str()) == UFPL_OK);
  ufpl_gains* back = nullptr;
  REQUIRE(ufpl_gains_read_csv(file.c_str(), UFPL_MODE_INFER, &back) == UFPL_OK);
  ufpl_game_mode mode;
  ufpl_gains_mode(back, &mode);
  CHECK(mode == UFPL_MODE_ONE_HOT);
  for (size_t t = 0; t <= 30; ++t) {
    double a1, a2, b1, b2;
    ufpl_gains_state(g, t, &a1, &a2, nullptr);
    ufpl_gains_state(back, t, &b1, &b2, nullptr);
    CHECK(a1 == b1);
    CHECK(a2 == b2);
  }
  ufpl_gains_destroy(back);
  ufpl_gains_destroy(g);
  CHECK(ufpl_gains_read_csv((dir / "none.csv").string().c_str(), UFPL_MODE_INFER, &back) ==
        UFPL_ERR_IO);

  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "game = fuzz family=zero-sum count=2 horizon=50\noutput = out\n";
  }
  int exit_code = -1;
  REQUIRE(ufpl_run_experiment((dir / "run.cfg").string().c_str(), dir.string().c_str(),
                              &exit_code) == UFPL_OK);
  CHECK(exit_code == UFPL_EXIT_OK);
  CHECK(fs::exists(dir / "out" / "summary.json"));

  auto trace = (dir / "out" / "fuzz-0001" / "trace.csv").string();
  size_t needed = 0;
  CHECK(ufpl_check_trace_file(trace.c_str(), nullptr, NAN, NAN, nullptr, &exit_code,
                              nullptr, 0, &needed) == UFPL_ERR_BUFFER_TOO_SMALL);
  std::string json(needed, '\0');
  REQUIRE(ufpl_check_trace_file(trace.c_str(), nullptr, NAN, NAN, nullptr, &exit_code,
                                json.data(), json.size(), nullptr) == UFPL_OK);
  CHECK(exit_code == UFPL_EXIT_OK);

  {
    std::ofstream cfg(dir / "bad.cfg");
    cfg << "game = fuzz\nmu = 1.5\n";
  }
  CHECK(ufpl_run_experiment((dir / "bad.cfg").string().c_str(), dir.string().c_str(),
                            &exit_code) == UFPL_ERR_CONFIG);
  CHECK(std::string(ufpl_last_error()).find("line 2 (mu)") != std::string::npos);

  ::setenv("UFPL_OUTPUT_ROOT", "/tmp/ufpl-env-root", 1);
  std::string root(256, '\0');
  REQUIRE(ufpl_output_root(nullptr, root.data(), root.size(), &needed) == UFPL_OK);
  CHECK(root.substr(0, needed - 1) == "/tmp/ufpl-env-root");
  REQUIRE(ufpl_output_root("/x", root.data(), root.size(), &needed) == UFPL_OK);
  CHECK(root.substr(0, needed - 1) == "/x");
  ::unsetenv("UFPL_OUTPUT_ROOT");
}

TEST_CASE("fGn covariance through the C interface") {
  for (double h : {0.25, 0.5, 0.75}) {
    for (size_t k : {0u, 1u, 2u, 10u}) {
      double c = 0;
      REQUIRE(ufpl_fgn_covariance(k, h, &c) == UFPL_OK);
      CHECK(c == doctest::Approx(oracle::fgn_covariance(static_cast<double>(k), h))
                     .epsilon(1e-12));
    }
  }
  double c;
  CHECK(ufpl_fgn_covariance(1, 1.0, &c) == UFPL_ERR_INVALID_ARGUMENT);
}
