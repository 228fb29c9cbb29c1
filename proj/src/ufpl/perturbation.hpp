#pragma once

#include <cstdint>
#include <string_view>

namespace ufpl {

// Counter-based generator: the value of draw k depends only on
// (seed, stream_id, k), so streams can be replayed or split freely.
class ExpSampler {
 public:
  ExpSampler(std::uint64_t seed, std::uint64_t stream_id);

  // Exp(1) via inverse CDF -ln(u), u in (0, 1].
  double next();
  // Uniform in (0, 1].
  double next_uniform();
  // Standard normal (Box-Muller over two consecutive uniforms).
  double next_normal();

  // Raw access by draw index; does not move the counter.
  double uniform_at(std::uint64_t index) const;
  double exp_at(std::uint64_t index) const;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Two independent streams, one per expert.
struct ExpertNoise {
  ExpSampler expert1;
  ExpSampler expert2;

  // Streams 2k and 2k+1 of `seed`, k = replica.
  static ExpertNoise for_replica(std::uint64_t seed, std::uint64_t replica);
};

// P{xi1 - xi2 > a} for independent Exp(1) variables:
// e^{-a}/2 for a >= 0, 1 - e^{a}/2 for a < 0. Throws on non-finite a.
double comparison_probability(double a);

// Deterministic sub-seed for a named purpose, e.g. derive_seed(s, "fuzz", 3).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name,
                          std::uint64_t index = 0);

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace ufpl
