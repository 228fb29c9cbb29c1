#include "ufpl/perturbation.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "ufpl/errors.hpp"

namespace ufpl {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

double to_unit_interval(std::uint64_t bits) {
  // 53 random bits mapped onto {1, ..., 2^53} / 2^53.
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ExpSampler::ExpSampler(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      key_(splitmix64(seed) ^ rotl(splitmix64(stream_id ^ 0x5bd1e995ULL), 17)) {}

double ExpSampler::uniform_at(std::uint64_t index) const {
  return to_unit_interval(splitmix64(key_ + index * kGolden));
}

double ExpSampler::exp_at(std::uint64_t index) const {
  return -std::log(uniform_at(index));
}

double ExpSampler::next() { return exp_at(counter_++); }

double ExpSampler::next_uniform() { return uniform_at(counter_++); }

double ExpSampler::next_normal() {
  double u1 = next_uniform();
  double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

ExpertNoise ExpertNoise::for_replica(std::uint64_t seed, std::uint64_t replica) {
  return {ExpSampler(seed, 2 * replica), ExpSampler(seed, 2 * replica + 1)};
}

double comparison_probability(double a) {
  if (!std::isfinite(a)) {
    throw_invalid(fmt::format("comparison_probability: argument {} is not finite", a));
  }
  if (a >= 0.0) return 0.5 * std::exp(-a);
  return 1.0 - 0.5 * std::exp(a);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view name,
                          std::uint64_t index) {
  // FNV-1a over the name, then mixed with the seed and index.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed ^ h) + index * kGolden);
}

}  // namespace ufpl
