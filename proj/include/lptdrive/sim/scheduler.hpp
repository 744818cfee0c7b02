#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

#include <fmt/format.h>

namespace lptdrive::sim {

/// Virtual clock. Never sampled from the host: time only moves when a
/// Scheduler advances it.
struct VirtualClock {
  using rep = std::int64_t;
  using period = std::nano;
  using duration = std::chrono::duration<rep, period>;
  using time_point = std::chrono::time_point<VirtualClock>;
  static constexpr bool is_steady = true;
};

using Duration = VirtualClock::duration;
using SimTime = VirtualClock::time_point;

inline constexpr SimTime kEpoch{};

constexpr std::int64_t to_ns(SimTime t) { return t.time_since_epoch().count(); }

constexpr SimTime from_ns(std::int64_t ns) { return SimTime{Duration{ns}}; }

inline double to_seconds(Duration d) {
  return static_cast<double>(d.count()) * 1e-9;
}

/// Seconds to the nearest nanosecond.
inline Duration from_seconds(double s) {
  return Duration{static_cast<std::int64_t>(std::llround(s * 1e9))};
}

/// Microseconds with three decimals, e.g. "10.000". Used by every text export.
inline std::string format_us(SimTime t) {
  const std::int64_t ns = to_ns(t);
  return fmt::format("{}.{:03d}", ns / 1000, ns % 1000);
}

struct EventId {
  SimTime due;
  std::uint64_t seq = 0;

  friend bool operator==(const EventId&, const EventId&) = default;
};

/// Single-owner discrete-event scheduler. Events fire in (due, seq) order, so
/// simultaneous events run in insertion order.
class Scheduler {
 public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }

  EventId schedule(Duration delay, std::string target, Action action) {
    if (delay < Duration::zero()) {
      throw std::invalid_argument(
          fmt::format("negative delay {} ns for '{}'", delay.count(), target));
    }
    return schedule_at(now_ + delay, std::move(target), std::move(action));
  }

  EventId schedule_at(SimTime due, std::string target, Action action) {
    if (due < now_) {
      throw std::invalid_argument(fmt::format(
          "event for '{}' due in the past ({} < {})", target, to_ns(due), to_ns(now_)));
    }
    const EventId id{due, next_seq_++};
    queue_.emplace(Key{due, id.seq}, Entry{std::move(target), std::move(action)});
    return id;
  }

  /// Returns false if the event already fired or was cancelled.
  bool cancel(EventId id) { return queue_.erase(Key{id.due, id.seq}) > 0; }

  bool pending(EventId id) const { return queue_.count(Key{id.due, id.seq}) > 0; }

  std::size_t pending_count() const { return queue_.size(); }

  bool empty() const { return queue_.empty(); }

  /// Due time of the queue head. Precondition: !empty().
  SimTime next_due() const { return queue_.begin()->first.first; }

  std::uint64_t fired_count() const { return fired_; }

  /// Fires every event with due <= t, including ones scheduled by handlers
  /// during this call. The clock ends at t.
  std::size_t advance_until(SimTime t) {
    if (t < now_) {
      throw std::invalid_argument(
          fmt::format("advance_until({}) is behind now() = {}", to_ns(t), to_ns(now_)));
    }
    std::size_t n = 0;
    while (!queue_.empty() && next_due() <= t) {
      fire_head();
      ++n;
    }
    now_ = t;
    return n;
  }

  std::size_t advance_by(Duration d) {
    if (d < Duration::zero()) throw std::invalid_argument("advance_by: negative duration");
    return advance_until(now_ + d);
  }

  /// Fires events in order until `done()` holds or the next event lies past
  /// `deadline`. When the deadline is reached without `done()`, the clock is
  /// left at the deadline. Returns done().
  template <typename Predicate>
  bool run_until(Predicate&& done, SimTime deadline) {
    while (!done()) {
      if (queue_.empty() || next_due() > deadline) {
        if (deadline > now_) now_ = deadline;
        return done();
      }
      fire_head();
    }
    return true;
  }

  /// Fires only the queue head. Returns false if nothing is pending.
  bool step() {
    if (queue_.empty()) return false;
    fire_head();
    return true;
  }

 private:
  using Key = std::pair<SimTime, std::uint64_t>;
  struct Entry {
    std::string target;
    Action action;
  };

  void fire_head() {
    auto node = queue_.extract(queue_.begin());
    now_ = node.key().first;
    ++fired_;
    if (node.mapped().action) node.mapped().action();
  }

  SimTime now_{};
  std::uint64_t next_seq_ = 0;
  std::uint64_t fired_ = 0;
  std::map<Key, Entry> queue_;
};

}  // namespace lptdrive::sim
