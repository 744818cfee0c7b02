#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lptdrive/vehicle/control_word.hpp"

namespace lptdrive::vehicle {

/// Coil outputs (A, B, C, D) of the full-step driver. B and D are the
/// complements of A and C.
struct PhasePattern {
  bool a = true;
  bool b = false;
  bool c = true;
  bool d = false;

  static constexpr PhasePattern from_ac(bool a, bool c) { return {a, !a, c, !c}; }

  constexpr bool complementary() const { return b == !a && d == !c; }

  /// "ABCD" as four binary digits, e.g. "1010".
  std::string str() const {
    return {a ? '1' : '0', b ? '1' : '0', c ? '1' : '0', d ? '1' : '0'};
  }

  static PhasePattern parse(std::string_view s) {
    if (s.size() != 4 || s.find_first_not_of("01") != std::string_view::npos) {
      throw std::invalid_argument("phase pattern must be four binary digits: " + std::string(s));
    }
    PhasePattern p{s[0] == '1', s[1] == '1', s[2] == '1', s[3] == '1'};
    if (!p.complementary()) {
      throw std::invalid_argument("phase pattern " + std::string(s) + " is not a full-step state");
    }
    return p;
  }

  friend constexpr bool operator==(PhasePattern, PhasePattern) = default;
};

inline constexpr PhasePattern kHomePattern = PhasePattern::from_ac(true, true);  // 1010

/// Two-bit synchronous up/down counter with Gray-decoded outputs. Counting up
/// is clockwise; A = NOT g0 and C = NOT g1 of the Gray code.
class StepCounter {
 public:
  constexpr StepCounter() = default;
  explicit StepCounter(PhasePattern start) {
    for (std::uint8_t n = 0; n < 4; ++n) {
      if (decode(n) == start) {
        count_ = n;
        return;
      }
    }
    throw std::invalid_argument("not a full-step pattern: " + start.str());
  }

  constexpr PhasePattern pattern() const { return decode(count_); }
  constexpr std::uint8_t count() const { return count_; }

  constexpr PhasePattern step(StepDirection dir) {
    count_ = static_cast<std::uint8_t>((count_ + (dir == StepDirection::kClockwise ? 1 : 3)) & 3);
    return pattern();
  }

 private:
  static constexpr PhasePattern decode(std::uint8_t n) {
    const std::uint8_t gray = n ^ (n >> 1);
    return PhasePattern::from_ac((gray & 1) == 0, (gray & 2) == 0);
  }

  std::uint8_t count_ = 0;
};

/// The `n` patterns that follow `start` when stepping in `dir`.
inline std::vector<PhasePattern> step_sequence(StepDirection dir, std::size_t n,
                                               PhasePattern start = kHomePattern) {
  StepCounter counter(start);
  std::vector<PhasePattern> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(counter.step(dir));
  return out;
}

/// One pattern per line, `ABCD`.
inline std::string phase_table_text(const std::vector<PhasePattern>& seq) {
  std::string out;
  for (const auto& p : seq) {
    out += p.str();
    out += '\n';
  }
  return out;
}

struct SteeringConfig {
  double step_deg = 1.8;
  double max_deg = 45.0;

  void validate() const {
    if (!(step_deg > 0.0) || !(max_deg >= step_deg) || !std::isfinite(max_deg)) {
      throw std::invalid_argument("steering needs 0 < step_deg <= max_deg");
    }
  }

  /// Steps from centre to a mechanical stop.
  int max_steps() const { return static_cast<int>(std::floor(max_deg / step_deg + 1e-9)); }
};

/// Front-wheel angle driven by stepper edges. Steps driven into a stop slip.
class Steering {
 public:
  explicit Steering(SteeringConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  void step(StepDirection dir) {
    const int limit = cfg_.max_steps();
    steps_ = std::clamp(steps_ + (dir == StepDirection::kClockwise ? 1 : -1), -limit, limit);
  }

  int steps() const { return steps_; }
  double angle_deg() const {
    return std::clamp(steps_ * cfg_.step_deg, -cfg_.max_deg, cfg_.max_deg);
  }
  const SteeringConfig& config() const { return cfg_; }

 private:
  SteeringConfig cfg_;
  int steps_ = 0;
};

/// From centre: all clockwise steps first, then all counter-clockwise ones.
inline double steering_angle_after(int cw_steps, int ccw_steps, SteeringConfig cfg = {}) {
  if (cw_steps < 0 || ccw_steps < 0) throw std::invalid_argument("step counts must be >= 0");
  Steering s(cfg);
  for (int i = 0; i < cw_steps; ++i) s.step(StepDirection::kClockwise);
  for (int i = 0; i < ccw_steps; ++i) s.step(StepDirection::kCounterClockwise);
  return s.angle_deg();
}

}  // namespace lptdrive::vehicle
