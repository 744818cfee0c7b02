#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lptdrive/command/command.hpp"
#include "lptdrive/kinematics/bicycle.hpp"
#include "lptdrive/kinematics/trajectory.hpp"
#include "lptdrive/lpt/port.hpp"
#include "lptdrive/lpt/responder.hpp"
#include "lptdrive/sim/scheduler.hpp"
#include "lptdrive/vehicle/vehicle_unit.hpp"

namespace lptdrive::teleop {

using namespace std::chrono_literals;

struct SessionConfig {
  lpt::PortConfig port;
  lpt::ResponderTiming peripheral;
  lpt::ResponderBehavior peripheral_behavior = lpt::ResponderBehavior::kResponsive;
  vehicle::VehicleConfig vehicle;
  sim::Duration sample_period = 10ms;
  sim::Duration integration_step = 1ms;
  std::size_t trace_capacity = 4096;  // EPP events kept for /api/trace

  void validate() const {
    port.validate();
    peripheral.validate();
    vehicle.validate();
    if (sample_period <= 0ns) throw std::invalid_argument("sample period must be positive");
    if (integration_step <= 0ns) throw std::invalid_argument("integration step must be positive");
    if (trace_capacity == 0) throw std::invalid_argument("trace capacity must be positive");
  }
};

/// Input arrived after END.
class SessionEnded : public std::logic_error {
 public:
  SessionEnded() : std::logic_error("session has ended") {}
};

struct LinkStats {
  std::uint64_t bytes_written = 0;  // bytes handed to the EPP engine
  std::uint64_t cycles_completed = 0;  // CYCLE_END count
  std::uint64_t timeouts = 0;
  std::uint64_t stalls = 0;

  friend bool operator==(const LinkStats&, const LinkStats&) = default;
};

/// Consistent view of the whole stack at one event boundary.
struct Snapshot {
  sim::SimTime t;
  kinematics::Pose pose;
  double steering_deg = 0.0;
  int steering_steps = 0;
  vehicle::DriveMode drive = vehicle::DriveMode::kStopped;
  std::uint8_t control_word = 0;
  vehicle::PhasePattern phases;
  bool clock_enabled = false;
  lpt::RegisterFile registers;
  lpt::PinBus pins;
  bool timeout_flag = false;
  std::vector<lpt::EppTraceEntry> trace_tail;
  LinkStats link;
  bool ended = false;
};

struct KeyOutcome {
  std::optional<std::uint8_t> byte;
  std::optional<lpt::EppCycleTrace> cycle;
  bool ended = false;

  bool link_ok() const { return !cycle || cycle->ok(); }
};

/// One simulated PC + cable + vehicle. Every control byte travels through an
/// EPP data-write cycle; the vehicle latches it on the data strobe.
class Session {
 public:
  static constexpr std::size_t kTraceTail = 16;

  explicit Session(SessionConfig cfg = {})
      : cfg_((cfg.validate(), cfg)),
        port_(sched_, cfg_.port),
        responder_(sched_, port_, cfg_.peripheral, cfg_.peripheral_behavior),
        vehicle_(sched_, cfg_.vehicle) {
    params_.wheelbase_cm = cfg_.vehicle.geometry.wheelbase_cm;
    params_.max_steering_deg = cfg_.vehicle.steering.max_deg;
    params_.internal_step = cfg_.integration_step;
    responder_.set_sink([this](std::uint8_t b) { vehicle_.on_byte_received(b); });
    vehicle_.set_change_hook([this] { sync_motion(); });
    record_sample();
    schedule_sample();
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const SessionConfig& config() const { return cfg_; }
  sim::SimTime now() const { return sched_.now(); }
  bool ended() const { return ended_; }

  /// Keyboard (and script) entry point.
  KeyOutcome key(command::Command cmd, command::KeyAction action) {
    ensure_open();
    KeyOutcome out;
    if (cmd == command::Command::kEnd) {
      finish();
      out.ended = true;
      return out;
    }
    out.byte = operator_.apply(cmd, action);
    if (out.byte) out.cycle = send_byte(*out.byte);
    return out;
  }

  /// Sends one byte to the vehicle over an EPP data-write cycle.
  lpt::EppCycleTrace send_byte(std::uint8_t value) {
    ensure_open();
    ++link_.bytes_written;
    lpt::EppCycleTrace trace = port_.epp_data_write(value);
    account(trace);
    return trace;
  }

  /// Raw register access, e.g. SPP writes to the data register. Writes to
  /// offsets 4..7 start an EPP cycle and count as link traffic.
  std::optional<lpt::EppCycleTrace> port_write(int offset, std::uint8_t value) {
    ensure_open();
    if (offset >= lpt::offset::kEppDataFirst && offset <= lpt::offset::kEppDataLast) {
      return send_byte(value);
    }
    return port_.port_write(offset, value);
  }

  void advance_until(sim::SimTime t) {
    sched_.advance_until(t);
    sync_motion();
  }
  void advance_by(sim::Duration d) { advance_until(sched_.now() + d); }

  /// Closes the session: takes a final trajectory sample at the current time.
  void finish() {
    if (ended_) return;
    sync_motion();
    if (trajectory_.empty() || trajectory_.back().t < sched_.now()) record_sample();
    if (sample_event_) sched_.cancel(*sample_event_);
    sample_event_.reset();
    ended_ = true;
  }

  Snapshot snapshot() {
    sync_motion();
    Snapshot s;
    s.t = sched_.now();
    s.pose = pose_;
    s.steering_deg = vehicle_.steering_deg();
    s.steering_steps = vehicle_.steering_steps();
    s.drive = vehicle_.drive();
    s.control_word = vehicle_.control_word().raw;
    s.phases = vehicle_.phases();
    s.clock_enabled = vehicle_.clock_enabled();
    s.registers = port_.registers();
    s.pins = port_.pins();
    s.timeout_flag = port_.timeout_flag();
    const std::size_t n = std::min(kTraceTail, trace_log_.size());
    s.trace_tail.assign(trace_log_.end() - static_cast<std::ptrdiff_t>(n), trace_log_.end());
    s.link = link_;
    s.ended = ended_;
    return s;
  }

  /// EPP events strictly after `since`.
  std::vector<lpt::EppTraceEntry> trace_since(sim::SimTime since) const {
    std::vector<lpt::EppTraceEntry> out;
    for (const auto& e : trace_log_) {
      if (e.t > since) out.push_back(e);
    }
    return out;
  }

  const kinematics::Trajectory& trajectory() const { return trajectory_; }
  const LinkStats& link() const { return link_; }
  const kinematics::Pose& pose() {
    sync_motion();
    return pose_;
  }
  const vehicle::VehicleUnit& vehicle() const { return vehicle_; }
  const lpt::ParallelPort& port() const { return port_; }
  lpt::ParallelPort& port() { return port_; }
  const lpt::EppResponder& peripheral() const { return responder_; }

 private:
  void ensure_open() const {
    if (ended_) throw SessionEnded();
  }

  void account(const lpt::EppCycleTrace& trace) {
    switch (trace.outcome) {
      case lpt::EppOutcome::kCompleted: ++link_.cycles_completed; break;
      case lpt::EppOutcome::kTimedOut: ++link_.timeouts; break;
      case lpt::EppOutcome::kStalled: ++link_.stalls; break;
      case lpt::EppOutcome::kPending: break;
    }
    for (const auto& e : trace.entries) {
      trace_log_.push_back(e);
      if (trace_log_.size() > cfg_.trace_capacity) trace_log_.pop_front();
    }
  }

  // Integrates the pose up to now with the inputs in force since the last
  // sync. Runs before every vehicle state change.
  void sync_motion() {
    const sim::SimTime t = sched_.now();
    if (t <= pose_time_) return;
    pose_ = kinematics::integrate(pose_, vehicle_.steering_deg(), vehicle_.velocity_cm_s(),
                                  t - pose_time_, params_);
    pose_time_ = t;
  }

  void record_sample() {
    sync_motion();
    trajectory_.record(sched_.now(), pose_, vehicle_.steering_deg(), vehicle_.drive());
  }

  void schedule_sample() {
    sample_event_ = sched_.schedule(cfg_.sample_period, "teleop.sample", [this] {
      sample_event_.reset();
      record_sample();
      schedule_sample();
    });
  }

  SessionConfig cfg_;
  sim::Scheduler sched_;
  lpt::ParallelPort port_;
  lpt::EppResponder responder_;
  vehicle::VehicleUnit vehicle_;
  kinematics::BicycleParams params_;
  command::OperatorState operator_;

  kinematics::Pose pose_;
  sim::SimTime pose_time_{};
  kinematics::Trajectory trajectory_;
  std::optional<sim::EventId> sample_event_;
  std::deque<lpt::EppTraceEntry> trace_log_;
  LinkStats link_;
  bool ended_ = false;
};

}  // namespace lptdrive::teleop
