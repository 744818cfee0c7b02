#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>

#include <fmt/format.h>

#include "lptdrive/command/script.hpp"
#include "lptdrive/teleop/session.hpp"

namespace lptdrive::teleop {

struct PaceConfig {
  enum class Mode : std::uint8_t { kRealtime, kMax };

  Mode mode = Mode::kRealtime;
  double factor = 1.0;  // virtual seconds per wall second
  double snapshot_rate_hz = 20.0;

  static PaceConfig max() { return PaceConfig{Mode::kMax, 1.0, 20.0}; }
  static PaceConfig realtime(double factor) { return PaceConfig{Mode::kRealtime, factor, 20.0}; }

  /// "max" or a positive real-time factor such as "1" or "2.5".
  static PaceConfig parse(std::string_view s) {
    if (s == "max") return max();
    double f = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), f);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw std::invalid_argument(fmt::format("pace '{}' is neither 'max' nor a factor", s));
    }
    PaceConfig p = realtime(f);
    p.validate();
    return p;
  }

  void validate() const {
    if (mode == Mode::kRealtime && !(factor > 0.0 && std::isfinite(factor))) {
      throw std::invalid_argument("real-time factor must be positive");
    }
    if (!(snapshot_rate_hz > 0.0 && std::isfinite(snapshot_rate_hz))) {
      throw std::invalid_argument("snapshot rate must be positive");
    }
  }

  sim::Duration snapshot_interval() const {
    return sim::from_seconds(1.0 / snapshot_rate_hz);
  }
};

inline std::string_view name(PaceConfig::Mode m) {
  return m == PaceConfig::Mode::kMax ? "max" : "realtime";
}

/// Maps virtual time onto the wall clock for real-time runs.
class Pacer {
 public:
  Pacer(PaceConfig pace, sim::SimTime virtual_start)
      : pace_(pace), virt0_(virtual_start), wall0_(std::chrono::steady_clock::now()) {}

  void wait_for(sim::SimTime t) const {
    if (pace_.mode == PaceConfig::Mode::kMax) return;
    const double wall_s = sim::to_seconds(t - virt0_) / pace_.factor;
    std::this_thread::sleep_until(wall0_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                               std::chrono::duration<double>(wall_s)));
  }

  /// Advances the session to `t`, sleeping between snapshot-sized slices so
  /// virtual time tracks the wall clock.
  void advance(Session& session, sim::SimTime t,
               const std::function<void(Session&)>& on_slice = {}) const {
    if (pace_.mode == PaceConfig::Mode::kMax) {
      session.advance_until(t);
      return;
    }
    const sim::Duration slice = pace_.snapshot_interval();
    while (session.now() < t) {
      const sim::SimTime next = std::min(t, session.now() + slice);
      wait_for(next);
      session.advance_until(next);
      if (on_slice) on_slice(session);
    }
  }

 private:
  PaceConfig pace_;
  sim::SimTime virt0_;
  std::chrono::steady_clock::time_point wall0_;
};

struct RunReport {
  bool ok = true;
  std::string error;
  sim::Duration virtual_time{0};
  LinkStats link;
  std::size_t steps_run = 0;
  kinematics::Pose final_pose;
  std::size_t samples = 0;

  /// Process exit status: 0 on success, 2 when the link failed.
  int exit_status() const { return ok ? 0 : 2; }
};

inline std::string to_text(const RunReport& r) {
  return fmt::format(
      "status: {}\n{}virtual_time_us: {}\nsteps: {}\nbytes_written: {}\nepp_cycles: {}\n"
      "timeouts: {}\nstalls: {}\nfinal_pose: x={} cm y={} cm heading={} deg\nsamples: {}\n",
      r.ok ? "ok" : "aborted", r.ok ? "" : fmt::format("error: {}\n", r.error),
      sim::format_us(sim::SimTime{r.virtual_time}), r.steps_run, r.link.bytes_written,
      r.link.cycles_completed, r.link.timeouts, r.link.stalls, r.final_pose.x_cm,
      r.final_pose.y_cm, kinematics::rad_to_deg(r.final_pose.heading_rad), r.samples);
}

/// Plays a path program through the keyboard path: each step presses its
/// key, holds it for the step's duration (measured from the instant the
/// vehicle latches the byte) and releases it. Stops at the first failed EPP
/// cycle and ends the session either way. `on_slice` runs after each paced
/// slice in real-time mode.
inline RunReport run_script(Session& session, const command::PathProgram& program,
                            PaceConfig pace = PaceConfig::max(),
                            const std::function<void(Session&)>& on_slice = {}) {
  pace.validate();
  const sim::SimTime start = session.now();
  const LinkStats link0 = session.link();
  const Pacer pacer(pace, start);
  RunReport report;

  auto fail = [&](const lpt::EppCycleTrace& trace) {
    report.ok = false;
    report.error = fmt::format("EPP cycle for byte {:#04x} {} at {} us", trace.value,
                               lpt::name(trace.outcome), sim::format_us(trace.end()));
  };

  for (const command::ScriptStep& step : program.steps) {
    const KeyOutcome press = session.key(step.command, command::KeyAction::kPress);
    if (!press.link_ok()) {
      fail(*press.cycle);
      break;
    }
    sim::SimTime held_from = session.now();
    if (press.cycle) {
      held_from = press.cycle->time_of(lpt::EppEvent::kDataStrobeAsserted).value_or(held_from);
    }
    pacer.advance(session, std::max(session.now(), held_from + step.duration()), on_slice);
    const KeyOutcome release = session.key(step.command, command::KeyAction::kRelease);
    ++report.steps_run;
    if (!release.link_ok()) {
      fail(*release.cycle);
      break;
    }
  }
  session.finish();

  report.virtual_time = session.now() - start;
  const LinkStats& link = session.link();
  report.link = {link.bytes_written - link0.bytes_written,
                 link.cycles_completed - link0.cycles_completed, link.timeouts - link0.timeouts,
                 link.stalls - link0.stalls};
  report.final_pose = session.pose();
  report.samples = session.trajectory().size();
  return report;
}

}  // namespace lptdrive::teleop
