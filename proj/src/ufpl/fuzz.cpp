#include "ufpl/fuzz.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "ufpl/errors.hpp"
#include "ufpl/perturbation.hpp"

namespace ufpl {

namespace {

enum class Regime { kUniform, kLogUniform, kSpiky, kGrowing, kCount };

double magnitude(Regime regime, ExpSampler& rng, std::size_t t, double cap) {
  double u = rng.next_uniform();
  switch (regime) {
    case Regime::kUniform: return cap * u;
    case Regime::kLogUniform: return cap * std::pow(10.0, -9.0 * (1.0 - u));
    case Regime::kSpiky:
      return rng.next_uniform() < 0.05 ? cap * u : std::min(cap, u);
    case Regime::kGrowing:
      return std::min(cap, u * static_cast<double>(t));
    case Regime::kCount: break;
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(FuzzFamily family) {
  switch (family) {
    case FuzzFamily::kOneHot: return "one-hot";
    case FuzzFamily::kBounded: return "bounded";
    case FuzzFamily::kZeroSum: return "zero-sum";
    case FuzzFamily::kGeneral: return "general";
  }
  return "?";
}

FuzzFamily parse_fuzz_family(std::string_view text) {
  if (text == "one-hot") return FuzzFamily::kOneHot;
  if (text == "bounded") return FuzzFamily::kBounded;
  if (text == "zero-sum") return FuzzFamily::kZeroSum;
  if (text == "general") return FuzzFamily::kGeneral;
  throw_invalid(fmt::format(
      "unknown fuzz family '{}' (expected one-hot, bounded, zero-sum or general)",
      text));
}

GainSequence fuzz_game(FuzzFamily family, std::uint64_t seed,
                       std::size_t max_horizon) {
  if (max_horizon == 0) throw_invalid("fuzz horizon must be positive");
  ExpSampler rng(seed, 1);
  auto horizon = std::min<std::size_t>(
      max_horizon,
      1 + static_cast<std::size_t>(rng.next_uniform() * static_cast<double>(max_horizon)));
  return fuzz_game_exact(family, seed, horizon);
}

GainSequence fuzz_game_exact(FuzzFamily family, std::uint64_t seed,
                             std::size_t horizon) {
  ExpSampler rng(seed, 0);
  GameMode mode = family == FuzzFamily::kOneHot    ? GameMode::kOneHot
                  : family == FuzzFamily::kZeroSum ? GameMode::kZeroSum
                                                   : GameMode::kGeneralNonnegative;
  GainSequence seq(mode);
  if (family == FuzzFamily::kBounded) {
    for (std::size_t t = 1; t <= horizon; ++t) {
      double s1 = rng.next_uniform();
      double s2 = rng.next_uniform();
      seq.append(s1, s2);
    }
    return seq;
  }
  auto regime = static_cast<Regime>(
      std::min<std::size_t>(static_cast<std::size_t>(Regime::kCount) - 1,
                            static_cast<std::size_t>(rng.next_uniform() * 4.0)));
  // Probability that Expert 1 is the one that gains (one-hot) or gets the
  // positive side (zero-sum); skewed games have a persistent leader.
  double bias = rng.next_uniform();
  for (std::size_t t = 1; t <= horizon; ++t) {
    double m = magnitude(regime, rng, t, kFuzzMaxGain);
    bool first = rng.next_uniform() < bias;
    switch (family) {
      case FuzzFamily::kOneHot:
        first ? seq.append(m, 0.0) : seq.append(0.0, m);
        break;
      case FuzzFamily::kZeroSum:
        first ? seq.append(m, -m) : seq.append(-m, m);
        break;
      case FuzzFamily::kGeneral: {
        double other = magnitude(regime, rng, t, kFuzzMaxGain);
        first ? seq.append(m, other) : seq.append(other, m);
        break;
      }
      case FuzzFamily::kBounded: break;
    }
  }
  return seq;
}

}  // namespace ufpl
