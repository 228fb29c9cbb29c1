#include "ufpl/gains.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "ufpl/csv.hpp"
#include "ufpl/errors.hpp"

namespace ufpl {

std::string_view to_string(GameMode mode) {
  switch (mode) {
    case GameMode::kOneHot: return "one-hot";
    case GameMode::kZeroSum: return "zero-sum";
    case GameMode::kGeneralNonnegative: return "general-nonnegative";
  }
  return "?";
}

GameMode parse_game_mode(std::string_view text) {
  if (text == "one-hot") return GameMode::kOneHot;
  if (text == "zero-sum") return GameMode::kZeroSum;
  if (text == "general-nonnegative" || text == "general")
    return GameMode::kGeneralNonnegative;
  throw_invalid(fmt::format(
      "unknown game mode '{}' (expected one-hot, zero-sum or general)", text));
}

CumulativeState CumulativeState::advanced(GainStep step) const {
  CumulativeState next;
  next.mode = mode;
  next.t = t + 1;
  next.cum1 = cum1 + step.s1;
  next.cum2 = cum2 + step.s2;
  next.v = std::max(next.cum1, next.cum2);
  next.peak = std::max(peak, next.v);
  next.volume = mode == GameMode::kZeroSum ? volume + std::abs(step.s1) : 0.0;
  return next;
}

CumulativeState lifted(const CumulativeState& state) {
  CumulativeState out = state;
  out.cum1 = state.cum1 + state.volume;
  out.cum2 = state.cum2 + state.volume;
  out.v = std::max(out.cum1, out.cum2);
  // The lifted game has nonnegative gains, so its v is already its running max.
  out.peak = out.v;
  return out;
}

void validate_step(GameMode mode, GainStep step) {
  if (!std::isfinite(step.s1) || !std::isfinite(step.s2)) {
    throw Error(ErrorCode::kModeViolation,
                fmt::format("{} game: gains ({}, {}) are not finite",
                            to_string(mode), step.s1, step.s2));
  }
  if (std::abs(step.s1) > GainSequence::kMagnitudeCap ||
      std::abs(step.s2) > GainSequence::kMagnitudeCap) {
    throw Error(ErrorCode::kOverflow,
                fmt::format("gains ({}, {}) exceed the magnitude cap {}",
                            step.s1, step.s2, GainSequence::kMagnitudeCap));
  }
  switch (mode) {
    case GameMode::kOneHot:
      if (step.s1 < 0.0 || step.s2 < 0.0 || std::min(step.s1, step.s2) != 0.0) {
        throw Error(ErrorCode::kModeViolation,
                    fmt::format("one-hot game: step ({}, {}) must have both "
                                "gains >= 0 and at least one equal to 0",
                                step.s1, step.s2));
      }
      break;
    case GameMode::kZeroSum:
      if (step.s1 != -step.s2) {
        throw Error(ErrorCode::kModeViolation,
                    fmt::format("zero-sum game: step ({}, {}) has s1 != -s2",
                                step.s1, step.s2));
      }
      break;
    case GameMode::kGeneralNonnegative:
      if (step.s1 < 0.0 || step.s2 < 0.0) {
        throw Error(ErrorCode::kModeViolation,
                    fmt::format("general-nonnegative game: step ({}, {}) has "
                                "a negative gain",
                                step.s1, step.s2));
      }
      break;
  }
}

GainSequence::GainSequence(GameMode mode) : mode_(mode), states_(1) {
  states_.front().mode = mode;
}

GainSequence GainSequence::from_steps(GameMode mode,
                                      std::span<const GainStep> steps) {
  GainSequence seq(mode);
  for (const auto& step : steps) seq.append(step.s1, step.s2);
  return seq;
}

bool GainSequence::fits(GainStep step) const {
  if (!std::isfinite(step.s1) || !std::isfinite(step.s2)) return false;
  if (std::abs(step.s1) > kMagnitudeCap || std::abs(step.s2) > kMagnitudeCap)
    return false;
  auto next = back().advanced(step);
  return std::abs(next.cum1) <= kMagnitudeCap &&
         std::abs(next.cum2) <= kMagnitudeCap && next.volume <= kMagnitudeCap;
}

const CumulativeState& GainSequence::append(double s1, double s2) {
  GainStep step{s1, s2};
  validate_step(mode_, step);
  if (!fits(step)) {
    throw Error(ErrorCode::kOverflow,
                fmt::format("step {}: cumulative gains would exceed the "
                            "magnitude cap {}",
                            size() + 1, kMagnitudeCap));
  }
  states_.push_back(back().advanced(step));
  steps_.push_back(step);
  return states_.back();
}

const GainStep& GainSequence::step(std::size_t t) const {
  if (t == 0 || t > steps_.size())
    throw_invalid(fmt::format("step index {} outside [1, {}]", t, size()));
  return steps_[t - 1];
}

const CumulativeState& GainSequence::state(std::size_t t) const {
  if (t >= states_.size())
    throw_invalid(fmt::format("state index {} outside [0, {}]", t, size()));
  return states_[t];
}

GainSequence zero_sum_lift(const GainSequence& seq) {
  if (seq.mode() != GameMode::kZeroSum)
    throw_invalid("zero_sum_lift requires a zero-sum game");
  GainSequence out(GameMode::kOneHot);
  for (const auto& step : seq.steps()) {
    double shift = std::abs(step.s1);
    // One of the two sums is exactly zero: x + |x| for x <= 0.
    out.append(step.s1 + shift, step.s2 + shift);
  }
  return out;
}

double step_size(GameMode mode, GainStep step) {
  return mode == GameMode::kZeroSum ? std::abs(step.s1)
                                    : std::max(step.s1, step.s2);
}

double deviation_scale(GameMode mode, const CumulativeState& state) {
  return mode == GameMode::kZeroSum ? state.volume : state.v;
}

std::vector<std::optional<double>> step_deviations(const GainSequence& seq) {
  std::vector<std::optional<double>> out;
  out.reserve(seq.size());
  for (std::size_t t = 1; t <= seq.size(); ++t) {
    double scale = deviation_scale(seq.mode(), seq.state(t));
    if (scale > 0.0) {
      out.emplace_back(step_size(seq.mode(), seq.step(t)) / scale);
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

DeviationStats finite_deviation(const GainSequence& seq,
                                std::optional<std::size_t> window) {
  DeviationStats stats;
  auto ratios = step_deviations(seq);
  std::size_t tail_start = 0;
  if (window) {
    stats.window = *window;
    stats.tail_dev = 0.0;
    tail_start = ratios.size() > *window ? ratios.size() - *window : 0;
  }
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!ratios[i]) {
      stats.skipped.push_back(i + 1);
      continue;
    }
    stats.finite_dev = std::max(stats.finite_dev, *ratios[i]);
    if (window && i >= tail_start) {
      stats.tail_dev = std::max(*stats.tail_dev, *ratios[i]);
    }
  }
  return stats;
}

void write_gains_csv(std::ostream& out, const GainSequence& seq) {
  using csv::format_number;
  csv::write_row(out, {"t", "s1", "s2", "cum1", "cum2", "v", "volume"});
  for (std::size_t t = 1; t <= seq.size(); ++t) {
    const auto& step = seq.step(t);
    const auto& state = seq.state(t);
    csv::write_row(out, {std::to_string(t), format_number(step.s1),
                         format_number(step.s2), format_number(state.cum1),
                         format_number(state.cum2), format_number(state.v),
                         format_number(state.volume)});
  }
}

namespace {

bool fits_mode(GameMode mode, const std::vector<GainStep>& steps) {
  for (const auto& step : steps) {
    try {
      validate_step(mode, step);
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

}  // namespace

GainSequence read_gains_csv(std::istream& in, std::optional<GameMode> mode) {
  auto table = csv::read(in);
  auto c1 = table.column("s1");
  auto c2 = table.column("s2");
  std::vector<GainStep> steps;
  steps.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    auto context = fmt::format("gains row {}", i + 1);
    steps.push_back({csv::parse_number(table.rows[i][c1], context),
                     csv::parse_number(table.rows[i][c2], context)});
  }
  if (!mode) {
    bool all_zero = std::all_of(steps.begin(), steps.end(), [](GainStep s) {
      return s.s1 == 0.0 && s.s2 == 0.0;
    });
    if (!all_zero && fits_mode(GameMode::kZeroSum, steps)) {
      mode = GameMode::kZeroSum;
    } else if (fits_mode(GameMode::kOneHot, steps)) {
      mode = GameMode::kOneHot;
    } else {
      mode = GameMode::kGeneralNonnegative;
    }
  }
  GainSequence seq(*mode);
  for (const auto& step : steps) seq.append(step.s1, step.s2);
  return seq;
}

}  // namespace ufpl
