#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "lptdrive/lpt/port.hpp"

namespace lptdrive::lpt {

enum class ResponderBehavior : std::uint8_t {
  kResponsive,
  kNeverAck,     // nWait stays low after the strobe
  kAlwaysBusy,   // nWait stuck high; the host never gets to strobe
};

constexpr std::string_view name(ResponderBehavior b) {
  switch (b) {
    case ResponderBehavior::kNeverAck: return "never_ack";
    case ResponderBehavior::kAlwaysBusy: return "always_busy";
    case ResponderBehavior::kResponsive: break;
  }
  return "responsive";
}

inline std::optional<ResponderBehavior> parse_responder_behavior(std::string_view s) {
  for (auto b : {ResponderBehavior::kResponsive, ResponderBehavior::kNeverAck,
                 ResponderBehavior::kAlwaysBusy}) {
    if (s == name(b)) return b;
  }
  return std::nullopt;
}

struct ResponderTiming {
  sim::Duration ack = 500ns;      // strobe asserted -> nWait high
  sim::Duration recover = 400ns;  // strobe released -> nWait low again

  void validate() const {
    if (ack < 0ns || recover < 0ns) throw std::invalid_argument("responder delays must be >= 0");
  }
};

/// Generic EPP handshake partner: latches the data lines on the strobe's
/// falling edge and hands the byte to a sink.
class EppResponder final : public EppPeripheral {
 public:
  using Sink = std::function<void(std::uint8_t)>;

  EppResponder(sim::Scheduler& sched, ParallelPort& port, ResponderTiming timing = {},
               ResponderBehavior behavior = ResponderBehavior::kResponsive)
      : sched_(sched), port_(port), timing_(timing), behavior_(behavior) {
    timing_.validate();
    port_.attach(this);
    port_.drive_status(StatusPin::kBusy, behavior_ == ResponderBehavior::kAlwaysBusy);
  }

  ~EppResponder() override { port_.attach(nullptr); }

  EppResponder(const EppResponder&) = delete;
  EppResponder& operator=(const EppResponder&) = delete;

  void set_sink(Sink sink) { sink_ = std::move(sink); }
  const std::vector<std::uint8_t>& latched() const { return latched_; }
  const ResponderTiming& timing() const { return timing_; }
  ResponderBehavior behavior() const { return behavior_; }

  void on_data_strobe(bool asserted, std::uint8_t data) override {
    if (asserted) {
      latched_.push_back(data);
      if (sink_) sink_(data);
      if (behavior_ == ResponderBehavior::kResponsive) {
        sched_.schedule(timing_.ack, "lpt.peripheral",
                        [this] { port_.drive_status(StatusPin::kBusy, true); });
      }
    } else if (behavior_ == ResponderBehavior::kResponsive) {
      sched_.schedule(timing_.recover, "lpt.peripheral",
                      [this] { port_.drive_status(StatusPin::kBusy, false); });
    }
  }

 private:
  sim::Scheduler& sched_;
  ParallelPort& port_;
  ResponderTiming timing_;
  ResponderBehavior behavior_;
  Sink sink_;
  std::vector<std::uint8_t> latched_;
};

}  // namespace lptdrive::lpt
