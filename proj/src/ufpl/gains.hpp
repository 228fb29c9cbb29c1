#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ufpl {

enum class GameMode {
  kOneHot,              // s1, s2 >= 0 and at most one of them nonzero
  kZeroSum,             // s1 == -s2
  kGeneralNonnegative,  // s1, s2 >= 0
};

std::string_view to_string(GameMode mode);
GameMode parse_game_mode(std::string_view text);

struct GainStep {
  double s1 = 0.0;
  double s2 = 0.0;
};

// Cumulative statistics after step t (t == 0 is the empty game).
struct CumulativeState {
  GameMode mode = GameMode::kOneHot;
  std::size_t t = 0;
  double cum1 = 0.0;
  double cum2 = 0.0;
  double v = 0.0;       // max(cum1, cum2)
  double peak = 0.0;    // max over j <= t of v_j
  double volume = 0.0;  // sum of |s1_j|; zero-sum games only

  // State after one more step. Does not validate the step.
  CumulativeState advanced(GainStep step) const;
};

// The same state seen through the zero-sum lift: every cumulative is shifted
// by the volume. Identity for states with zero volume.
CumulativeState lifted(const CumulativeState& state);

// Throws Error(kModeViolation) naming the mode when `step` does not belong to
// a game of that mode, Error(kOverflow) past the magnitude cap.
void validate_step(GameMode mode, GainStep step);

class GainSequence {
 public:
  // Generated games stop before any gain or cumulative crosses this.
  static constexpr double kMagnitudeCap = 1e300;

  explicit GainSequence(GameMode mode = GameMode::kOneHot);

  // Builds a sequence of the given mode from raw steps, validating each.
  static GainSequence from_steps(GameMode mode, std::span<const GainStep> steps);

  const CumulativeState& append(double s1, double s2);

  GameMode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return steps_.size(); }
  bool empty() const noexcept { return steps_.empty(); }

  std::span<const GainStep> steps() const noexcept { return steps_; }
  // 1-based, t in [1, size()].
  const GainStep& step(std::size_t t) const;
  // t in [0, size()]; state(0) is all zeros.
  const CumulativeState& state(std::size_t t) const;
  const CumulativeState& back() const noexcept { return states_.back(); }

  // True when appending `step` would keep every magnitude under the cap.
  bool fits(GainStep step) const;

 private:
  GameMode mode_;
  std::vector<GainStep> steps_;
  std::vector<CumulativeState> states_;
};

// Maps a zero-sum game onto the nonnegative one-hot game with gains
// s_i + |s1|. Cumulatives of the result equal the original ones plus V_t.
GainSequence zero_sum_lift(const GainSequence& seq);

// Size of the one-step gain entering the deviation ratio:
// max(s1, s2) in nonnegative games, |s1| in zero-sum games.
double step_size(GameMode mode, GainStep step);

// Denominator of the deviation ratio: v_t, or V_t in zero-sum games.
double deviation_scale(GameMode mode, const CumulativeState& state);

// Per-step ratios step_size / deviation_scale; index 0 is step 1. Steps with
// a zero denominator are reported as nullopt.
std::vector<std::optional<double>> step_deviations(const GainSequence& seq);

struct DeviationStats {
  double finite_dev = 0.0;
  std::optional<double> tail_dev;    // set when a window was requested
  std::size_t window = 0;
  std::vector<std::size_t> skipped;  // steps with a zero denominator
};

DeviationStats finite_deviation(const GainSequence& seq,
                                std::optional<std::size_t> window = {});

// CSV with columns t,s1,s2,cum1,cum2,v,volume.
void write_gains_csv(std::ostream& out, const GainSequence& seq);
// Reads s1,s2 from a gains CSV. Without a mode the most specific mode that
// fits every row is used (zero-sum, then one-hot, then general).
GainSequence read_gains_csv(std::istream& in,
                            std::optional<GameMode> mode = {});

}  // namespace ufpl
