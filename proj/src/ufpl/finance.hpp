#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ufpl/gains.hpp"
#include "ufpl/policies.hpp"

namespace ufpl {

struct PricePath {
  std::vector<double> prices;  // S_0 .. S_T
  // Generation parameters; unset for imported paths.
  std::optional<double> hurst;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;

  std::size_t steps() const noexcept {
    return prices.empty() ? 0 : prices.size() - 1;
  }
  // S_{t+1} - S_t, t in [0, steps()).
  double increment(std::size_t t) const { return prices.at(t + 1) - prices.at(t); }
};

// Autocovariance of unit-variance fractional Gaussian noise at lag k.
double fgn_covariance(std::size_t k, double hurst);

inline constexpr std::size_t kMaxPathSteps = 4096;

// Cholesky factor of the T x T fGn covariance, reusable across seeds.
class FgnGenerator {
 public:
  // Throws NotPositiveDefinite with the failing pivot when the matrix is
  // numerically singular.
  FgnGenerator(std::size_t steps, double hurst);

  std::size_t steps() const noexcept { return steps_; }
  double hurst() const noexcept { return hurst_; }

  // Correlated unit-variance noise X_0 .. X_{T-1} from stream 0 of `seed`.
  std::vector<double> noise(std::uint64_t seed) const;
  PricePath path(double sigma, double s0, std::uint64_t seed) const;

 private:
  std::size_t steps_;
  double hurst_;
  std::vector<double> factor_;  // packed lower triangle, row i at i(i+1)/2
};

PricePath generate_path(std::size_t steps, double hurst, double sigma, double s0,
                        std::uint64_t seed);

// Expert holdings at the start of step t (1 <= t < T).
double trend_holding(const PricePath& path, double c, std::size_t t);

// Zero-sum game: s1_t = 2c (S_t - S_0)(S_{t+1} - S_t), s2_t = -s1_t for
// t = 1 .. T-1.
GainSequence expert_gains(const PricePath& path, double c);

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_error = 0.0;  // |lhs - rhs| over the summed term magnitudes
};

// (S_T - S_0)^2 against sum_{t=0}^{T-1} [2 (S_t - S_0) dS_t + dS_t^2].
IdentityCheck squared_displacement_identity(const PricePath& path);

// Directly summed Expert 1 gain against
// c ((S_T - S_0)^2 - (S_1 - S_0)^2 - sum_{t=1}^{T-1} dS_t^2).
IdentityCheck expert_gain_identity(const PricePath& path, double c);

struct TradingStep {
  double prob1 = 0.0;
  double shares = 0.0;  // C_t = p C1_t + (1 - p) C2_t
  double income = 0.0;  // C_t dS_t
  double cumulative = 0.0;
};

struct TradingRecord {
  std::vector<TradingStep> steps;  // steps[t-1] is step t
  double total() const noexcept {
    return steps.empty() ? 0.0 : steps.back().cumulative;
  }
};

// Holds the probability-weighted mixture of both experts' positions.
TradingRecord derandomized_trade(const PolicySpec& policy, const PricePath& path,
                                 double c);

// Columns t,price.
void write_path_csv(std::ostream& out, const PricePath& path);
PricePath read_path_csv(std::istream& in);
// Columns t,shares,income,cumulative.
void write_trading_csv(std::ostream& out, const TradingRecord& record);

}  // namespace ufpl
