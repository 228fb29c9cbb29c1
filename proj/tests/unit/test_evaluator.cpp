#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "ufpl/errors.hpp"
#include "ufpl/evaluator.hpp"
#include "ufpl/fuzz.hpp"

using namespace ufpl;

namespace {

oracle::Steps raw(const GainSequence& g) {
  oracle::Steps out;
  for (const auto& s : g.steps()) out.emplace_back(s.s1, s.s2);
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("symmetric two-step game") {
  GainSequence g(GameMode::kOneHot);
  g.append(1, 0);
  g.append(0, 1);
  auto trace = exact_trace(g, 0.5);
  REQUIRE(trace.size() == 2);
  CHECK(trace.steps[0].prob1_fpl == 0.5);
  CHECK(trace.steps[0].l == 0.5);
}

TEST_CASE("exact trace agrees with the oracle on fuzzed games") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    for (auto family : {FuzzFamily::kOneHot, FuzzFamily::kGeneral, FuzzFamily::kBounded}) {
      auto g = fuzz_game(family, seed, 300);
      for (double mu : {0.1, 0.618}) {
        auto trace = exact_trace(g, mu);
        auto ref = oracle::exact(raw(g), mu);
        for (std::size_t i = 0; i < g.size(); ++i) {
          REQUIRE(rel(trace.steps[i].prob1_fpl, ref.p_fpl[i]) < 1e-12);
          REQUIRE(rel(trace.steps[i].prob1_ifpl, ref.p_ifpl[i]) < 1e-12);
          REQUIRE(rel(trace.steps[i].cuml, ref.cuml[i]) < 1e-9);
          REQUIRE(rel(trace.steps[i].cumr, ref.cumr[i]) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("zero-sum games are evaluated through the lift") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto g = fuzz_game(FuzzFamily::kZeroSum, seed, 200);
    auto trace = exact_trace(g, 0.618);
    auto ref = oracle::exact(raw(g), 0.618, true);
    for (std::size_t i = 0; i < g.size(); ++i) {
      REQUIRE(rel(trace.steps[i].prob1_fpl, ref.p_fpl[i]) < 1e-12);
      REQUIRE(rel(trace.steps[i].cuml, ref.cuml[i]) < 1e-9);
    }
  }
}

TEST_CASE("trace invariants hold exactly") {
  auto g = fuzz_game(FuzzFamily::kGeneral, 99, 500);
  auto trace = exact_trace(g, 0.382);
  double cl = 0, cr = 0;
  for (const auto& s : trace.steps) {
    CHECK(s.l == s.s1 * s.prob1_fpl + s.s2 * (1 - s.prob1_fpl));
    CHECK(s.r == s.s1 * s.prob1_ifpl + s.s2 * (1 - s.prob1_ifpl));
    cl += s.l;
    cr += s.r;
    CHECK(s.cuml == cl);
    CHECK(s.cumr == cr);
  }
  CHECK(exact_trace(GainSequence(), 0.5).size() == 0);
  CHECK_THROWS_AS(exact_trace(g, 1.0), Error);
}

TEST_CASE("trace CSV round-trips and rejects tampering") {
  auto g = fuzz_game(FuzzFamily::kOneHot, 4, 100);
  auto trace = exact_trace(g, 0.618);
  std::stringstream buf;
  write_trace_csv(buf, trace);
  auto text = buf.str();
  std::stringstream in(text);
  auto back = read_trace_csv(in, g, 0.618, ZeroSumRate::kLifted);
  REQUIRE(back.size() == trace.size());
  for (std::size_t i = 0; i < trace.size(); ++i) CHECK(back.steps[i].cuml == trace.steps[i].cuml);

  // Break one expected gain: the row no longer matches its probability.
  auto line_end = text.find('\n', text.find('\n') + 1);
  auto row = text.substr(text.find('\n') + 1, line_end - text.find('\n') - 1);
  auto comma = row.find(',');
  auto tampered = text;
  tampered.replace(text.find('\n') + 1 + comma + 1, row.find(',', comma + 1) - comma - 1, "12345");
  std::stringstream bad(tampered);
  CHECK_THROWS_AS(read_trace_csv(bad, g, 0.618, ZeroSumRate::kLifted), Error);
}

TEST_CASE("bound constants at the golden-ratio rate") {
  const double mu = 0.618;
  CHECK(std::exp(-2.0 / mu) * (1.0 - mu) == doctest::Approx(0.015).epsilon(0.0005 / 0.015));
  CHECK(1.0 - mu == doctest::Approx(0.382));
}

TEST_CASE("all-zero game: every bound holds, with equality except the unit floor") {
  GainSequence g(GameMode::kOneHot);
  for (int i = 0; i < 10; ++i) g.append(0, 0);
  auto checks = check_bounds(exact_trace(g, 0.5), g, {.delta = 0.1});
  CHECK(all_pass(checks));
  for (const auto& c : checks) {
    if (!c.applicable) continue;
    CHECK(c.lhs == 0.0);
    // The loss-ratio bound floors the scale at 1, leaving slack mu.
    CHECK(c.rhs == (c.name == "thm4" ? -0.5 : 0.0));
  }
}

TEST_CASE("fuzzed games pass every unconditional bound") {
  const std::vector<std::string> unconditional{"thm3-step", "cor1",  "thm4",
                                               "cor2",      "thm2-general", "triv1",
                                               "thm3-step-lowdev", "thm6-general"};
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    for (auto family : {FuzzFamily::kOneHot, FuzzFamily::kGeneral, FuzzFamily::kZeroSum}) {
      auto g = fuzz_game(family, seed, 500);
      for (double mu : {0.1, 0.382, 0.618, 0.9}) {
        auto checks = check_bounds(exact_trace(g, mu), g, {.delta = 0.1});
        for (const auto& name : unconditional) {
          const auto* c = find_check(checks, name);
          if (c == nullptr) continue;
          CAPTURE(name);
          CAPTURE(seed);
          CHECK((!c->applicable || c->ok));
        }
      }
    }
  }
}

TEST_CASE("low-deviation totals hold on long bounded games") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto g = fuzz_game_exact(FuzzFamily::kBounded, seed, 3000);
    for (double mu : {0.382, 0.618}) {
      auto checks = check_bounds(exact_trace(g, mu), g, {.delta = 0.1});
      const auto* c = find_check(checks, "thm2-lowdev");
      REQUIRE(c->applicable);
      CHECK(c->ok);
      CHECK(all_pass(checks));
    }
  }
}

TEST_CASE("low-deviation totals are eventual: an early spike outlasts a short horizon") {
  // One huge step at t = 5 that FPL misses, then sub-unit steps: the tail
  // deviation is tiny, but 41 steps are too few to recover the spike.
  auto g = fuzz_game(FuzzFamily::kOneHot, 55, 500);
  REQUIRE(g.size() == 41);
  auto checks = check_bounds(exact_trace(g, 0.618), g, {.delta = 0.1});
  const auto* total = find_check(checks, "thm2-lowdev");
  REQUIRE(total->applicable);
  CHECK_FALSE(total->ok);
  CHECK_FALSE(total->transition.has_value());
  CHECK(find_check(checks, "thm3-step-lowdev")->ok);
  CHECK(find_check(checks, "cor2")->ok);
  CHECK(find_check(checks, "thm2-general")->ok);
}

TEST_CASE("a doctored trace is caught") {
  auto g = fuzz_game(FuzzFamily::kOneHot, 12, 200);
  auto trace = exact_trace(g, 0.618);
  // Claim FPL never follows the gaining expert from step 50 on.
  double cum = trace.steps[48].cuml;
  for (std::size_t i = 49; i < trace.size(); ++i) {
    auto& s = trace.steps[i];
    s.prob1_fpl = s.s1 > 0 ? 0.0 : 1.0;
    s.l = 0.0;
    s.cuml = cum;
  }
  auto checks = check_bounds(trace, g);
  const auto* step = find_check(checks, "thm3-step");
  REQUIRE(step != nullptr);
  CHECK_FALSE(step->ok);
  CHECK(step->violations > 0);
  CHECK(step->t >= 50);
  CHECK_FALSE(all_pass(checks));
}

TEST_CASE("low-deviation checks need delta and the deviation hypothesis") {
  auto spiky = fuzz_game_exact(FuzzFamily::kOneHot, 3, 50);
  auto trace = exact_trace(spiky, 0.618);
  auto none = check_bounds(trace, spiky);
  CHECK_FALSE(find_check(none, "thm2-lowdev")->applicable);

  GainSequence wild(GameMode::kOneHot);
  for (int t = 0; t < 40; ++t) wild.append(t % 2 ? std::pow(2.0, t) : 0.0, t % 2 ? 0.0 : std::pow(2.0, t));
  auto checks = check_bounds(exact_trace(wild, 0.618), wild, {.delta = 0.1});
  const auto* lowdev = find_check(checks, "thm2-lowdev");
  CHECK_FALSE(lowdev->applicable);
  CHECK(lowdev->note.find("exceeds") != std::string::npos);
  CHECK(all_pass(checks));

  GainSequence tame(GameMode::kGeneralNonnegative);
  for (int t = 0; t < 4000; ++t) tame.append(0.5 + 0.5 * ((t * 7) % 3 == 0), 0.25);
  auto tame_checks = check_bounds(exact_trace(tame, 0.618), tame, {.delta = 0.1});
  CHECK(find_check(tame_checks, "thm2-lowdev")->applicable);
  CHECK(find_check(tame_checks, "thm2-lowdev")->ok);
  CHECK(find_check(tame_checks, "thm3-step-lowdev")->applicable);
  CHECK(find_check(tame_checks, "thm3-step-lowdev")->ok);
  CHECK_THROWS_AS(check_bounds(exact_trace(tame, 0.618), tame, {.delta = 1.5}), Error);
}

TEST_CASE("zero-sum checks use the absolute cumulative and the volume") {
  auto g = fuzz_game_exact(FuzzFamily::kZeroSum, 8, 300);
  auto lifted_checks = check_bounds(exact_trace(g, 0.618), g, {.delta = 0.1});
  CHECK(find_check(lifted_checks, "thm6-general") != nullptr);
  CHECK(find_check(lifted_checks, "remark") == nullptr);
  auto remark_checks =
      check_bounds(exact_trace(g, 0.618, ZeroSumRate::kRemark), g, {.delta = 0.1});
  CHECK(remark_checks.size() == 1);
  CHECK(remark_checks[0].name == "remark");
}

TEST_CASE("trace must come from the game") {
  auto g = fuzz_game_exact(FuzzFamily::kOneHot, 1, 20);
  auto h = fuzz_game_exact(FuzzFamily::kOneHot, 2, 20);
  CHECK_THROWS_AS(check_bounds(exact_trace(g, 0.5), h), Error);
}

TEST_CASE("final quartile start") {
  CHECK(final_quartile_start(1) == 1);
  CHECK(final_quartile_start(4) == 4);
  CHECK(final_quartile_start(8) == 7);
  CHECK(final_quartile_start(10000) == 7501);
}

TEST_CASE("bound check JSON carries the documented keys") {
  auto g = fuzz_game_exact(FuzzFamily::kOneHot, 1, 20);
  auto j = to_json(check_bounds(exact_trace(g, 0.5), g));
  REQUIRE(j.is_array());
  for (const auto& c : j) {
    for (const char* key : {"name", "T_or_t", "lhs", "rhs", "ok", "applicable"})
      CHECK(c.contains(key));
  }
}

TEST_CASE("Monte Carlo: uniform, deterministic and thread-independent") {
  auto g = fuzz_game_exact(FuzzFamily::kOneHot, 21, 60);
  auto uniform = monte_carlo_trace(g, PolicySpec::uniform(), 20000, 1);
  double half = 0.5 * (g.back().cum1 + g.back().cum2);
  CHECK(std::abs(uniform.mean - half) <= 4 * uniform.standard_error);

  auto ftl = monte_carlo_trace(g, PolicySpec::ftl(), 50, 1);
  CHECK(ftl.standard_error == 0.0);
  CHECK(ftl.mean == doctest::Approx(expected_gains(g, PolicySpec::ftl()).back().cumulative));

  auto fpl = PolicySpec::fpl(RateSchedule(RateKind::kAdaptiveMax, 0.618));
  auto one = monte_carlo_trace(g, fpl, 3000, 7, 1);
  auto many = monte_carlo_trace(g, fpl, 3000, 7, 5);
  CHECK(one.mean == many.mean);
  CHECK(one.standard_error == many.standard_error);
  CHECK_THROWS_AS(monte_carlo_trace(g, fpl, 0, 7), Error);
}

TEST_CASE("Monte Carlo agrees with the exact engine and the oracle sampler") {
  auto g = fuzz_game_exact(FuzzFamily::kOneHot, 77, 100);
  auto fpl = PolicySpec::fpl(RateSchedule(RateKind::kAdaptiveMax, 0.618));
  auto mc = monte_carlo_trace(g, fpl, 100000, 3);
  double exact = exact_trace(g, 0.618).steps.back().cuml;
  CHECK(std::abs(mc.mean - exact) <= 4 * mc.standard_error);
  auto [mean, se] = oracle::fpl_monte_carlo(raw(g), 0.618, 100000, 5);
  CHECK(std::abs(mean - exact) <= 4 * se);
}
