#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>

#include "lptdrive/sim/scheduler.hpp"
#include "lptdrive/vehicle/control_word.hpp"
#include "lptdrive/vehicle/stepper.hpp"

namespace lptdrive::vehicle {

struct VehicleGeometry {
  double length_cm = 35.5;
  double width_cm = 14.1;
  double weight_kg = 1.0;  // carried, never used by the motion model
  double wheelbase_cm = 20.0;

  void validate() const {
    if (!(length_cm > 0.0) || !(width_cm > 0.0)) throw std::invalid_argument("bad chassis size");
    if (!(wheelbase_cm > 0.0 && wheelbase_cm < length_cm)) {
      throw std::invalid_argument("wheelbase must lie in (0, length)");
    }
  }
};

struct VehicleConfig {
  double clock_hz = 25.0;
  double speed_cm_s = 14.0;
  SteeringConfig steering;
  VehicleGeometry geometry;

  void validate() const {
    if (!(clock_hz > 0.0) || !std::isfinite(clock_hz)) {
      throw std::invalid_argument("NE555 frequency must be positive");
    }
    if (!(speed_cm_s >= 0.0) || !std::isfinite(speed_cm_s)) {
      throw std::invalid_argument("drive speed must be non-negative");
    }
    steering.validate();
    geometry.validate();
  }
};

inline double signed_velocity(DriveMode mode, double speed) {
  switch (mode) {
    case DriveMode::kForward: return speed;
    case DriveMode::kBackward: return -speed;
    case DriveMode::kStopped: break;
  }
  return 0.0;
}

/// Astable stepper clock. While enabled, rising edges land at exact multiples
/// of the period after the enable instant; the reset pin stops the train.
class Ne555Clock {
 public:
  Ne555Clock(sim::Scheduler& sched, double hz, std::function<void()> on_edge)
      : sched_(sched), hz_(hz), on_edge_(std::move(on_edge)) {}

  Ne555Clock(const Ne555Clock&) = delete;
  Ne555Clock& operator=(const Ne555Clock&) = delete;
  ~Ne555Clock() { set_enabled(false); }

  bool enabled() const { return enabled_; }
  double frequency() const { return hz_; }
  std::uint64_t edges() const { return edges_; }

  void set_enabled(bool on) {
    if (on == enabled_) return;
    enabled_ = on;
    if (on) {
      enabled_at_ = sched_.now();
      k_ = 0;
      arm();
    } else if (next_) {
      sched_.cancel(*next_);
      next_.reset();
    }
  }

 private:
  void arm() {
    ++k_;
    const auto offset = static_cast<std::int64_t>(std::llround(static_cast<double>(k_) * 1e9 / hz_));
    next_ = sched_.schedule_at(enabled_at_ + sim::Duration{offset}, "vehicle.ne555", [this] {
      next_.reset();
      ++edges_;
      arm();
      if (on_edge_) on_edge_();
    });
  }

  sim::Scheduler& sched_;
  double hz_;
  std::function<void()> on_edge_;
  bool enabled_ = false;
  sim::SimTime enabled_at_{};
  std::uint64_t k_ = 0;
  std::uint64_t edges_ = 0;
  std::optional<sim::EventId> next_;
};

/// Vehicle-side electronics: output latch, control decode, stepper clock and
/// counter, steering linkage and DC drive.
class VehicleUnit {
 public:
  /// Invoked just before any state change, with the clock at the change time.
  using ChangeHook = std::function<void()>;

  explicit VehicleUnit(sim::Scheduler& sched, VehicleConfig cfg = {})
      : cfg_((cfg.validate(), cfg)),
        steering_(cfg_.steering),
        clock_(sched, cfg_.clock_hz, [this] { clock_edge(); }) {}

  VehicleUnit(const VehicleUnit&) = delete;
  VehicleUnit& operator=(const VehicleUnit&) = delete;

  void set_change_hook(ChangeHook hook) { hook_ = std::move(hook); }

  void on_byte_received(std::uint8_t value) {
    if (hook_) hook_();
    word_ = ControlWord{value};
    ++bytes_;
    clock_.set_enabled(word_.step_enabled());
  }

  /// One counter step in the latched direction. Called by the NE555 edge.
  PhasePattern clock_edge() {
    if (!clock_.enabled()) throw std::logic_error("clock edge while STEP_EN is low");
    if (hook_) hook_();
    counter_.step(word_.direction());
    steering_.step(word_.direction());
    return counter_.pattern();
  }

  const VehicleConfig& config() const { return cfg_; }
  ControlWord control_word() const { return word_; }
  DriveMode drive() const { return word_.drive(); }
  double velocity_cm_s() const { return signed_velocity(drive(), cfg_.speed_cm_s); }
  double steering_deg() const { return steering_.angle_deg(); }
  int steering_steps() const { return steering_.steps(); }
  PhasePattern phases() const { return counter_.pattern(); }
  bool clock_enabled() const { return clock_.enabled(); }
  std::uint64_t clock_edges() const { return clock_.edges(); }
  std::uint64_t bytes_received() const { return bytes_; }

 private:
  VehicleConfig cfg_;
  ControlWord word_{};
  StepCounter counter_{};
  Steering steering_;
  Ne555Clock clock_;
  ChangeHook hook_;
  std::uint64_t bytes_ = 0;
};

}  // namespace lptdrive::vehicle
