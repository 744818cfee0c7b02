#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lptdrive/sim/scheduler.hpp"

namespace lptdrive::lpt {

enum class EppEvent : std::uint8_t {
  kWriteIssued,
  kNWriteLow,
  kDataPlaced,
  kDataStrobeAsserted,
  kWaitWentHigh,
  kDataStrobeDeasserted,
  kCycleEnd,
  kTimeout,
};

constexpr std::string_view name(EppEvent e) {
  switch (e) {
    case EppEvent::kWriteIssued: return "WRITE_ISSUED";
    case EppEvent::kNWriteLow: return "NWRITE_LOW";
    case EppEvent::kDataPlaced: return "DATA_PLACED";
    case EppEvent::kDataStrobeAsserted: return "DATASTROBE_ASSERTED";
    case EppEvent::kWaitWentHigh: return "WAIT_WENT_HIGH";
    case EppEvent::kDataStrobeDeasserted: return "DATASTROBE_DEASSERTED";
    case EppEvent::kCycleEnd: return "CYCLE_END";
    case EppEvent::kTimeout: return "TIMEOUT";
  }
  return "?";
}

inline std::optional<EppEvent> parse_epp_event(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(EppEvent::kTimeout); ++i) {
    const auto e = static_cast<EppEvent>(i);
    if (name(e) == s) return e;
  }
  return std::nullopt;
}

/// The seven events of a successful data-write cycle, in handshake order.
inline constexpr std::array<EppEvent, 7> kDataWriteSequence{
    EppEvent::kWriteIssued,          EppEvent::kNWriteLow,    EppEvent::kDataPlaced,
    EppEvent::kDataStrobeAsserted,   EppEvent::kWaitWentHigh, EppEvent::kDataStrobeDeasserted,
    EppEvent::kCycleEnd,
};

enum class EppOutcome : std::uint8_t {
  kPending,
  kCompleted,
  kTimedOut,  // EPP 1.9 watchdog fired
  kStalled,   // EPP 1.7 caller budget expired
};

constexpr std::string_view name(EppOutcome o) {
  switch (o) {
    case EppOutcome::kPending: return "pending";
    case EppOutcome::kCompleted: return "completed";
    case EppOutcome::kTimedOut: return "timeout";
    case EppOutcome::kStalled: return "stalled";
  }
  return "?";
}

struct EppTraceEntry {
  sim::SimTime t;
  EppEvent event;

  friend bool operator==(const EppTraceEntry&, const EppTraceEntry&) = default;
};

/// Timestamped record of one EPP data-write cycle.
struct EppCycleTrace {
  std::uint8_t value = 0;
  EppOutcome outcome = EppOutcome::kPending;
  std::vector<EppTraceEntry> entries;

  bool ok() const { return outcome == EppOutcome::kCompleted; }

  sim::SimTime start() const { return entries.empty() ? sim::SimTime{} : entries.front().t; }
  sim::SimTime end() const { return entries.empty() ? sim::SimTime{} : entries.back().t; }
  sim::Duration elapsed() const { return end() - start(); }

  std::vector<EppEvent> events() const {
    std::vector<EppEvent> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.event);
    return out;
  }

  std::optional<sim::SimTime> time_of(EppEvent ev) const {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [ev](const EppTraceEntry& e) { return e.event == ev; });
    if (it == entries.end()) return std::nullopt;
    return it->t;
  }

  /// Success traces hold exactly the seven handshake events in order, with
  /// non-decreasing timestamps.
  bool conforms() const {
    if (!ok() || entries.size() != kDataWriteSequence.size()) return false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].event != kDataWriteSequence[i]) return false;
      if (i > 0 && entries[i].t < entries[i - 1].t) return false;
    }
    return true;
  }
};

/// `<t_us> <EVENT_NAME>` per line.
inline std::string to_text(const std::vector<EppTraceEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += sim::format_us(e.t);
    out += ' ';
    out += name(e.event);
    out += '\n';
  }
  return out;
}

inline std::string to_text(const EppCycleTrace& trace) { return to_text(trace.entries); }

}  // namespace lptdrive::lpt
