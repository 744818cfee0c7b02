#pragma once

// JSON shapes for the HTTP API. Times go out twice: `t_ns` (exact integer)
// and `t_us` (for people). Register values are hex strings.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "lptdrive/teleop/runner.hpp"
#include "lptdrive/teleop/session.hpp"

namespace lptdrive::teleop {

using json = nlohmann::json;

/// Everything PUT /api/config can change.
struct ServiceConfig {
  SessionConfig session;
  PaceConfig pace = PaceConfig::realtime(1.0);

  void validate() const {
    session.validate();
    pace.validate();
  }
};

namespace wire {

inline std::string hex(std::uint8_t v) { return fmt::format("0x{:02X}", v); }

inline double t_us(sim::SimTime t) { return static_cast<double>(sim::to_ns(t)) / 1000.0; }

inline json time_fields(sim::SimTime t) {
  return {{"t_ns", sim::to_ns(t)}, {"t_us", t_us(t)}};
}

inline json to_json(const lpt::EppTraceEntry& e) {
  json j = time_fields(e.t);
  j["event"] = lpt::name(e.event);
  return j;
}

inline json to_json(const std::vector<lpt::EppTraceEntry>& entries) {
  json a = json::array();
  for (const auto& e : entries) a.push_back(to_json(e));
  return a;
}

inline json to_json(const lpt::EppCycleTrace& tr) {
  return {{"value", hex(tr.value)},
          {"outcome", lpt::name(tr.outcome)},
          {"conforms", tr.conforms()},
          {"elapsed_ns", tr.elapsed().count()},
          {"events", to_json(tr.entries)}};
}

inline json to_json(const std::optional<lpt::EppCycleTrace>& tr) {
  return tr ? to_json(*tr) : json(nullptr);
}

inline json to_json(const kinematics::Pose& p) {
  return {{"x_cm", p.x_cm},
          {"y_cm", p.y_cm},
          {"heading_rad", p.heading_rad},
          {"heading_deg", kinematics::rad_to_deg(p.heading_rad)}};
}

inline json to_json(const LinkStats& l) {
  return {{"bytes_written", l.bytes_written},
          {"cycles_completed", l.cycles_completed},
          {"timeouts", l.timeouts},
          {"stalls", l.stalls}};
}

inline json to_json(const lpt::RegisterFile& r) {
  return {{"data", hex(r.data)},
          {"status", hex(r.status)},
          {"control", hex(r.control)},
          {"epp_address", hex(r.epp_address)}};
}

inline json to_json(const lpt::PinBus& p) {
  return {{"data", hex(p.data)},
          {"nStrobe", p.n_strobe},
          {"nAutoFeed", p.n_auto_feed},
          {"nInit", p.n_init},
          {"nSelectIn", p.n_select_in},
          {"nAck", p.n_ack},
          {"Busy", p.busy},
          {"PaperOut", p.paper_out},
          {"Select", p.select},
          {"nError", p.n_error}};
}

/// `seq` orders snapshots across the whole service; `session` changes on
/// every reset, and `t` is monotone within one session.
inline json to_json(const Snapshot& s, std::uint64_t seq = 0, std::uint64_t session = 0) {
  json j = time_fields(s.t);
  j["seq"] = seq;
  j["session"] = session;
  j["pose"] = to_json(s.pose);
  j["steering_deg"] = s.steering_deg;
  j["steering_steps"] = s.steering_steps;
  j["drive"] = vehicle::name(s.drive);
  j["control_word"] = hex(s.control_word);
  j["phases"] = s.phases.str();
  j["clock_enabled"] = s.clock_enabled;
  j["registers"] = to_json(s.registers);
  j["pins"] = to_json(s.pins);
  j["timeout_flag"] = s.timeout_flag;
  j["trace_tail"] = to_json(s.trace_tail);
  j["link"] = to_json(s.link);
  j["ended"] = s.ended;
  return j;
}

inline json to_json(const RunReport& r) {
  return {{"ok", r.ok},
          {"error", r.ok ? json(nullptr) : json(r.error)},
          {"exit_status", r.exit_status()},
          {"virtual_time_ns", r.virtual_time.count()},
          {"steps_run", r.steps_run},
          {"link", to_json(r.link)},
          {"final_pose", to_json(r.final_pose)},
          {"samples", r.samples}};
}

inline json to_json(const PaceConfig& p) {
  return {{"mode", name(p.mode)}, {"factor", p.factor}, {"snapshot_rate_hz", p.snapshot_rate_hz}};
}

inline json to_json(const ServiceConfig& c) {
  const SessionConfig& s = c.session;
  return {
      {"pace", to_json(c.pace)},
      {"epp_mode", lpt::name(s.port.epp_mode)},
      {"base_address", s.port.base_address},
      {"timing",
       {{"host_setup_ns", s.port.t_host_setup.count()},
        {"host_step_ns", s.port.t_host_step.count()},
        {"timeout_ns", s.port.t_timeout.count()},
        {"stall_budget_ns", s.port.stall_budget.count()},
        {"peripheral_ack_ns", s.peripheral.ack.count()},
        {"peripheral_recover_ns", s.peripheral.recover.count()}}},
      {"peripheral", lpt::name(s.peripheral_behavior)},
      {"ne555_hz", s.vehicle.clock_hz},
      {"speed_cm_s", s.vehicle.speed_cm_s},
      {"wheelbase_cm", s.vehicle.geometry.wheelbase_cm},
      {"steering", {{"step_deg", s.vehicle.steering.step_deg}, {"max_deg", s.vehicle.steering.max_deg}}},
      {"sample_period_ns", s.sample_period.count()},
      {"integration_step_ns", s.integration_step.count()},
  };
}

namespace detail {

[[noreturn]] inline void bad(const std::string& key, const std::string& why) {
  throw std::invalid_argument(fmt::format("config '{}': {}", key, why));
}

inline const json& object_at(const json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "expected an object");
  return j;
}

inline double number(const json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

inline sim::Duration nanos(const json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "expected an integer count of nanoseconds");
  return sim::Duration{v.get<std::int64_t>()};
}

inline std::string text(const json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

}  // namespace detail

/// Applies a partial config object on top of `base`. Unknown keys and wrong
/// types are rejected; the result is validated as a whole.
inline ServiceConfig merge(ServiceConfig base, const json& patch) {
  using detail::bad;
  detail::object_at(patch, "<root>");
  SessionConfig& s = base.session;
  for (const auto& [key, v] : patch.items()) {
    if (key == "pace") {
      detail::object_at(v, key);
      for (const auto& [k, pv] : v.items()) {
        if (k == "mode") {
          const std::string m = detail::text(pv, "pace.mode");
          if (m == "max") base.pace.mode = PaceConfig::Mode::kMax;
          else if (m == "realtime") base.pace.mode = PaceConfig::Mode::kRealtime;
          else bad("pace.mode", "expected 'max' or 'realtime'");
        } else if (k == "factor") {
          base.pace.factor = detail::number(pv, "pace.factor");
        } else if (k == "snapshot_rate_hz") {
          base.pace.snapshot_rate_hz = detail::number(pv, "pace.snapshot_rate_hz");
        } else {
          bad("pace." + k, "unknown key");
        }
      }
    } else if (key == "epp_mode") {
      const auto m = lpt::parse_epp_mode(detail::text(v, key));
      if (!m) bad(key, "expected 'epp17' or 'epp19'");
      s.port.epp_mode = *m;
    } else if (key == "base_address") {
      if (!v.is_number_unsigned() || v.get<std::uint64_t>() > 0xFFFF) bad(key, "expected 0..65535");
      s.port.base_address = static_cast<std::uint16_t>(v.get<std::uint64_t>());
    } else if (key == "timing") {
      detail::object_at(v, key);
      for (const auto& [k, tv] : v.items()) {
        const std::string full = "timing." + k;
        if (k == "host_setup_ns") s.port.t_host_setup = detail::nanos(tv, full);
        else if (k == "host_step_ns") s.port.t_host_step = detail::nanos(tv, full);
        else if (k == "timeout_ns") s.port.t_timeout = detail::nanos(tv, full);
        else if (k == "stall_budget_ns") s.port.stall_budget = detail::nanos(tv, full);
        else if (k == "peripheral_ack_ns") s.peripheral.ack = detail::nanos(tv, full);
        else if (k == "peripheral_recover_ns") s.peripheral.recover = detail::nanos(tv, full);
        else bad(full, "unknown key");
      }
    } else if (key == "peripheral") {
      const auto b = lpt::parse_responder_behavior(detail::text(v, key));
      if (!b) bad(key, "expected responsive, never_ack or always_busy");
      s.peripheral_behavior = *b;
    } else if (key == "ne555_hz") {
      s.vehicle.clock_hz = detail::number(v, key);
    } else if (key == "speed_cm_s") {
      s.vehicle.speed_cm_s = detail::number(v, key);
    } else if (key == "wheelbase_cm") {
      s.vehicle.geometry.wheelbase_cm = detail::number(v, key);
    } else if (key == "steering") {
      detail::object_at(v, key);
      for (const auto& [k, sv] : v.items()) {
        if (k == "step_deg") s.vehicle.steering.step_deg = detail::number(sv, "steering.step_deg");
        else if (k == "max_deg") s.vehicle.steering.max_deg = detail::number(sv, "steering.max_deg");
        else bad("steering." + k, "unknown key");
      }
    } else if (key == "sample_period_ns") {
      s.sample_period = detail::nanos(v, key);
    } else if (key == "integration_step_ns") {
      s.integration_step = detail::nanos(v, key);
    } else {
      bad(key, "unknown key");
    }
  }
  base.validate();
  return base;
}

}  // namespace wire
}  // namespace lptdrive::teleop
