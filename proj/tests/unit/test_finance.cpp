#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "ufpl/errors.hpp"
#include "ufpl/evaluator.hpp"
#include "ufpl/finance.hpp"

using namespace ufpl;

namespace {

PricePath from_prices(std::vector<double> prices) {
  PricePath p;
  p.prices = std::move(prices);
  return p;
}

std::vector<double> increments(const PricePath& p) {
  std::vector<double> out;
  for (std::size_t t = 0; t < p.steps(); ++t) out.push_back(p.increment(t));
  return out;
}

}  // namespace

TEST_CASE("fGn covariance") {
  for (double h : {0.1, 0.3, 0.5, 0.75, 0.95}) {
    CHECK(fgn_covariance(0, h) == doctest::Approx(1.0));
    for (std::size_t k = 0; k < 50; ++k)
      CHECK(fgn_covariance(k, h) == doctest::Approx(oracle::fgn_covariance(double(k), h)).epsilon(1e-13));
  }
  for (std::size_t k = 1; k < 20; ++k) CHECK(std::abs(fgn_covariance(k, 0.5)) < 1e-15);
  CHECK(fgn_covariance(1, 0.75) == doctest::Approx(0.4142136).epsilon(1e-7));
  CHECK(fgn_covariance(1, 0.25) < 0.0);
  CHECK_THROWS_AS(fgn_covariance(1, 0.0), Error);
  CHECK_THROWS_AS(fgn_covariance(1, 1.0), Error);
}

TEST_CASE("paths are deterministic in the seed") {
  auto a = generate_path(256, 0.75, 2.0, 50.0, 9);
  auto b = generate_path(256, 0.75, 2.0, 50.0, 9);
  auto c = generate_path(256, 0.75, 2.0, 50.0, 10);
  CHECK(a.prices == b.prices);
  CHECK(a.prices != c.prices);
  CHECK(a.prices.size() == 257);
  CHECK(a.prices.front() == 50.0);
  CHECK(*a.hurst == 0.75);
  FgnGenerator gen(256, 0.75);
  CHECK(gen.path(2.0, 50.0, 9).prices == a.prices);
}

TEST_CASE("Brownian increments are uncorrelated") {
  auto p = generate_path(4096, 0.5, 1.0, 0.0, 3);
  double rho = oracle::lag1_autocorrelation({increments(p)});
  CHECK(std::abs(rho) < 0.05);
}

TEST_CASE("trending increments have the fGn lag-1 correlation") {
  FgnGenerator gen(1024, 0.75);
  std::vector<std::vector<double>> series;
  for (std::uint64_t seed = 0; seed < 20; ++seed) series.push_back(gen.noise(seed));
  double rho = oracle::lag1_autocorrelation(series);
  CHECK(std::abs(rho - oracle::fgn_covariance(1, 0.75)) < 0.05);
  double var = 0;
  std::size_t n = 0;
  for (const auto& x : series)
    for (double v : x) var += v * v, ++n;
  CHECK(var / n == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("path generation rejects bad parameters") {
  CHECK_THROWS_AS(generate_path(0, 0.5, 1, 0, 1), Error);
  CHECK_THROWS_AS(generate_path(kMaxPathSteps + 1, 0.5, 1, 0, 1), Error);
  CHECK_THROWS_AS(generate_path(10, 1.2, 1, 0, 1), Error);
  CHECK_THROWS_AS(generate_path(10, 0.5, 0, 0, 1), Error);
}

TEST_CASE("near-singular covariance reports the failing pivot") {
  try {
    FgnGenerator gen(64, 1.0 - 1e-14);
    FAIL("expected a non-positive-definite covariance");
  } catch (const NotPositiveDefinite& e) {
    CHECK(e.code() == ErrorCode::kNotPositiveDefinite);
    CHECK(e.pivot() > 0);
    CHECK(e.pivot() < 64);
    CHECK(std::string(e.what()).find(std::to_string(e.pivot())) != std::string::npos);
  }
}

TEST_CASE("expert gains") {
  auto g = expert_gains(from_prices({10, 12, 13}), 1.0);
  REQUIRE(g.size() == 1);
  CHECK(g.step(1).s1 == 4.0);
  CHECK(g.step(1).s2 == -4.0);
  CHECK(g.mode() == GameMode::kZeroSum);

  auto flat = expert_gains(from_prices(std::vector<double>(20, 5.0)), 3.0);
  CHECK(flat.size() == 18);
  for (const auto& s : flat.steps()) CHECK(s.s1 == 0.0);
  CHECK_THROWS_AS(expert_gains(from_prices({1, 2, 3}), 0.0), Error);
}

TEST_CASE("squared displacement identity and the gain coefficient") {
  for (double h : {0.25, 0.5, 0.75}) {
    FgnGenerator gen(512, h);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto p = gen.path(1.0, 100.0, seed);
      CHECK(squared_displacement_identity(p).relative_error < 1e-9);
      auto g = expert_gain_identity(p, 0.5);
      CHECK(g.relative_error < 1e-9);
      // Coefficient 2c does not fit.
      CHECK(std::abs(g.lhs - 2 * g.rhs) > 1e-6 * std::abs(g.rhs));
      auto gains = expert_gains(p, 0.5);
      double direct = 0;
      for (const auto& s : gains.steps()) {
        CHECK(s.s1 + s.s2 == 0.0);
        direct += s.s1;
      }
      CHECK(direct == doctest::Approx(g.lhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("derandomized trading") {
  FgnGenerator gen(300, 0.75);
  auto path = gen.path(1.0, 100.0, 4);
  auto uniform = derandomized_trade(PolicySpec::uniform(), path, 1.0);
  for (const auto& s : uniform.steps) {
    CHECK(s.shares == 0.0);
    CHECK(s.income == 0.0);
  }
  auto gains = expert_gains(path, 1.0);
  for (auto rate : {ZeroSumRate::kLifted, ZeroSumRate::kRemark}) {
    auto trace = exact_trace(gains, 0.618, rate);
    auto record = derandomized_trade(trace.fpl_policy(), path, 1.0);
    REQUIRE(record.steps.size() == trace.size());
    double running = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      running += record.steps[i].income;
      CHECK(record.steps[i].cumulative == running);
      double scale = std::max(1.0, std::abs(trace.steps[i].cuml));
      CHECK(std::abs(record.steps[i].cumulative - trace.steps[i].cuml) <= 1e-9 * scale);
    }
    auto ifpl = derandomized_trade(trace.ifpl_policy(), path, 1.0);
    CHECK(ifpl.total() == doctest::Approx(trace.steps.back().cumr).epsilon(1e-9));
  }
}

TEST_CASE("path and trading CSV") {
  auto p = generate_path(64, 0.3, 1.0, 10.0, 2);
  std::stringstream buf;
  write_path_csv(buf, p);
  auto back = read_path_csv(buf);
  CHECK(back.prices == p.prices);
  CHECK_FALSE(back.hurst.has_value());
  std::stringstream bad("t,price\n0,1\n2,3\n");
  CHECK_THROWS_AS(read_path_csv(bad), Error);

  std::stringstream trading;
  write_trading_csv(trading, derandomized_trade(PolicySpec::ftl(), p, 1.0));
  std::string header;
  std::getline(trading, header);
  CHECK(header == "t,shares,income,cumulative");
}
