#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "lptdrive/lpt/epp_trace.hpp"
#include "lptdrive/lpt/port.hpp"
#include "lptdrive/lpt/responder.hpp"
#include "lptdrive/sim/scheduler.hpp"

namespace lptdrive::lpt {

struct ConformanceCheck {
  std::string what;
  bool ok = false;
};

struct ConformanceResult {
  EppMode mode = EppMode::kEpp19;
  bool stuck = false;
  EppCycleTrace trace;
  std::uint8_t status = 0;  // status register read after the cycle
  std::vector<ConformanceCheck> checks;

  bool passed() const {
    for (const auto& c : checks) {
      if (!c.ok) return false;
    }
    return !checks.empty();
  }
};

/// One EPP data-write against a responsive or stuck (never acknowledging)
/// peripheral, checked against the handshake the mode requires.
inline ConformanceResult run_conformance(EppMode mode, bool stuck, std::uint8_t value = 0x01,
                                         PortConfig cfg = {}, ResponderTiming timing = {}) {
  cfg.epp_mode = mode;
  sim::Scheduler sched;
  ParallelPort port(sched, cfg);
  EppResponder peer(sched, port, timing,
                    stuck ? ResponderBehavior::kNeverAck : ResponderBehavior::kResponsive);

  ConformanceResult r;
  r.mode = mode;
  r.stuck = stuck;
  r.trace = port.epp_data_write(value);
  r.status = port.port_read(offset::kStatus);
  auto check = [&](std::string what, bool ok) { r.checks.push_back({std::move(what), ok}); };

  const bool bit0 = (r.status & status::kTimeout) != 0;
  const auto timeout_at = r.trace.time_of(EppEvent::kTimeout);
  if (!stuck) {
    check("cycle completes", r.trace.outcome == EppOutcome::kCompleted);
    check("seven events in handshake order", r.trace.conforms());
    check("peripheral latched the byte", peer.latched() == std::vector<std::uint8_t>{value});
    check("timeout flag clear", !port.timeout_flag());
  } else if (mode == EppMode::kEpp19) {
    check("cycle aborted by the watchdog", r.trace.outcome == EppOutcome::kTimedOut);
    check(fmt::format("TIMEOUT at +{} us", sim::to_seconds(cfg.t_timeout) * 1e6),
          timeout_at && *timeout_at - r.trace.start() == cfg.t_timeout);
    check("status bit0 = 1", bit0);
  } else {
    check("cycle stalls", r.trace.outcome == EppOutcome::kStalled);
    check("no TIMEOUT event", !timeout_at);
    check("status bit0 = 0", !bit0 && !port.timeout_flag());
  }
  return r;
}

}  // namespace lptdrive::lpt
