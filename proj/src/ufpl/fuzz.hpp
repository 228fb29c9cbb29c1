#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "ufpl/gains.hpp"

namespace ufpl {

enum class FuzzFamily {
  kOneHot,   // one expert gains per step, magnitudes up to 1e6
  kBounded,  // both experts gain in [0, 1]
  kZeroSum,  // s1 = -s2, magnitudes up to 1e6
  kGeneral,  // both experts gain, magnitudes up to 1e6
};

std::string_view to_string(FuzzFamily family);
FuzzFamily parse_fuzz_family(std::string_view text);

inline constexpr double kFuzzMaxGain = 1e6;

// Random game whose horizon is uniform on [1, max_horizon]; deterministic in
// seed. Each game picks one magnitude regime (uniform, log-uniform, spiky or
// growing), so a corpus mixes tame and heavy-tailed games.
GainSequence fuzz_game(FuzzFamily family, std::uint64_t seed,
                       std::size_t max_horizon);

// Fixed-horizon variant.
GainSequence fuzz_game_exact(FuzzFamily family, std::uint64_t seed,
                             std::size_t horizon);

}  // namespace ufpl
