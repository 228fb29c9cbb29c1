#include "ufpl/finance.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "ufpl/csv.hpp"
#include "ufpl/errors.hpp"
#include "ufpl/perturbation.hpp"

namespace ufpl {

namespace {

void require_hurst(double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0))
    throw_invalid(fmt::format("hurst exponent {} must lie in (0,1)", hurst));
}

void require_scale(double c) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw_invalid("position scale c must be positive");
}

constexpr double kMinPivot = 1e-13;

// Four independent partial sums so the reduction pipelines.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

double relative(double lhs, double rhs, double magnitude) {
  return magnitude > 0.0 ? std::abs(lhs - rhs) / magnitude : std::abs(lhs - rhs);
}

}  // namespace

double fgn_covariance(std::size_t k, double hurst) {
  require_hurst(hurst);
  const double h2 = 2.0 * hurst;
  auto x = static_cast<double>(k);
  double below = k == 0 ? 1.0 : std::pow(x - 1.0, h2);
  return 0.5 * (std::pow(x + 1.0, h2) - 2.0 * std::pow(x, h2) + below);
}

FgnGenerator::FgnGenerator(std::size_t steps, double hurst)
    : steps_(steps), hurst_(hurst) {
  require_hurst(hurst);
  if (steps == 0 || steps > kMaxPathSteps) {
    throw_invalid(fmt::format("path length {} must lie in [1, {}]", steps,
                              kMaxPathSteps));
  }
  std::vector<double> gamma(steps);
  for (std::size_t k = 0; k < steps; ++k) gamma[k] = fgn_covariance(k, hurst);

  factor_.assign(steps * (steps + 1) / 2, 0.0);
  auto row = [&](std::size_t i) { return factor_.data() + i * (i + 1) / 2; };
  for (std::size_t i = 0; i < steps; ++i) {
    double* li = row(i);
    for (std::size_t j = 0; j < i; ++j) {
      const double* lj = row(j);
      li[j] = (gamma[i - j] - dot(li, lj, j)) / lj[j];
    }
    double pivot = gamma[0] - dot(li, li, i);
    if (!(pivot > kMinPivot)) {
      throw NotPositiveDefinite(
          i, fmt::format("fGn covariance for H = {} is not positive definite at "
                         "pivot {} (value {})",
                         hurst, i, pivot));
    }
    li[i] = std::sqrt(pivot);
  }
}

std::vector<double> FgnGenerator::noise(std::uint64_t seed) const {
  ExpSampler sampler(seed, 0);
  std::vector<double> z(steps_);
  for (auto& v : z) v = sampler.next_normal();
  std::vector<double> x(steps_);
  for (std::size_t i = 0; i < steps_; ++i) {
    const double* li = factor_.data() + i * (i + 1) / 2;
    x[i] = dot(li, z.data(), i + 1);
  }
  return x;
}

PricePath FgnGenerator::path(double sigma, double s0, std::uint64_t seed) const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw_invalid("sigma must be positive");
  if (!std::isfinite(s0)) throw_invalid("initial price must be finite");
  auto x = noise(seed);
  PricePath path;
  path.hurst = hurst_;
  path.sigma = sigma;
  path.seed = seed;
  path.prices.reserve(steps_ + 1);
  path.prices.push_back(s0);
  for (double xi : x) path.prices.push_back(path.prices.back() + sigma * xi);
  return path;
}

PricePath generate_path(std::size_t steps, double hurst, double sigma, double s0,
                        std::uint64_t seed) {
  return FgnGenerator(steps, hurst).path(sigma, s0, seed);
}

double trend_holding(const PricePath& path, double c, std::size_t t) {
  return 2.0 * c * (path.prices.at(t) - path.prices.front());
}

GainSequence expert_gains(const PricePath& path, double c) {
  require_scale(c);
  GainSequence seq(GameMode::kZeroSum);
  for (std::size_t t = 1; t < path.steps(); ++t) {
    double s1 = trend_holding(path, c, t) * path.increment(t);
    seq.append(s1, -s1);
  }
  return seq;
}

IdentityCheck squared_displacement_identity(const PricePath& path) {
  IdentityCheck out;
  if (path.prices.empty()) return out;
  const double s0 = path.prices.front();
  double magnitude = 0.0;
  for (std::size_t t = 0; t < path.steps(); ++t) {
    double d = path.increment(t);
    double cross = 2.0 * (path.prices[t] - s0) * d;
    out.rhs += cross + d * d;
    magnitude += std::abs(cross) + d * d;
  }
  double disp = path.prices.back() - s0;
  out.lhs = disp * disp;
  out.relative_error = relative(out.lhs, out.rhs, std::max(magnitude, out.lhs));
  return out;
}

IdentityCheck expert_gain_identity(const PricePath& path, double c) {
  require_scale(c);
  IdentityCheck out;
  if (path.steps() < 1) return out;
  const double s0 = path.prices.front();
  double magnitude = 0.0;
  for (std::size_t t = 1; t < path.steps(); ++t) {
    double s1 = trend_holding(path, c, t) * path.increment(t);
    out.lhs += s1;
    magnitude += std::abs(s1);
  }
  double total = path.prices.back() - s0;
  double first = path.prices[1] - s0;
  double squares = 0.0;
  for (std::size_t t = 1; t < path.steps(); ++t) {
    double d = path.increment(t);
    squares += d * d;
  }
  out.rhs = c * (total * total - first * first - squares);
  magnitude = std::max(
      magnitude, c * (total * total + first * first + squares));
  out.relative_error = relative(out.lhs, out.rhs, magnitude);
  return out;
}

TradingRecord derandomized_trade(const PolicySpec& policy, const PricePath& path,
                                 double c) {
  auto gains = expert_gains(path, c);
  TradingRecord record;
  record.steps.reserve(gains.size());
  double cumulative = 0.0;
  for (std::size_t t = 1; t <= gains.size(); ++t) {
    std::optional<GainStep> oracle;
    if (policy.needs_step_gains()) oracle = gains.step(t);
    double p = decide_prob(policy, gains.state(t - 1), oracle);
    double held1 = trend_holding(path, c, t);
    double shares = p * held1 + (1.0 - p) * -held1;
    double income = shares * path.increment(t);
    cumulative += income;
    record.steps.push_back({p, shares, income, cumulative});
  }
  return record;
}

void write_path_csv(std::ostream& out, const PricePath& path) {
  csv::write_row(out, {"t", "price"});
  for (std::size_t t = 0; t < path.prices.size(); ++t) {
    csv::write_row(out, {std::to_string(t), csv::format_number(path.prices[t])});
  }
}

PricePath read_path_csv(std::istream& in) {
  auto table = csv::read(in);
  const auto ct = table.column("t");
  const auto cp = table.column("price");
  PricePath path;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    auto context = fmt::format("path row {}", i + 1);
    if (csv::parse_number(row[ct], context) != static_cast<double>(i)) {
      throw Error(ErrorCode::kIo,
                  fmt::format("{}: expected t = {}, found '{}'", context, i, row[ct]));
    }
    path.prices.push_back(csv::parse_number(row[cp], context));
  }
  if (path.prices.size() < 2)
    throw Error(ErrorCode::kIo, "price path needs at least two prices");
  return path;
}

void write_trading_csv(std::ostream& out, const TradingRecord& record) {
  csv::write_row(out, {"t", "shares", "income", "cumulative"});
  for (std::size_t i = 0; i < record.steps.size(); ++i) {
    const auto& s = record.steps[i];
    csv::write_row(out, {std::to_string(i + 1), csv::format_number(s.shares),
                         csv::format_number(s.income),
                         csv::format_number(s.cumulative)});
  }
}

}  // namespace ufpl
