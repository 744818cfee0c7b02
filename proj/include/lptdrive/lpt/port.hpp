#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "lptdrive/lpt/epp_trace.hpp"
#include "lptdrive/lpt/pins.hpp"
#include "lptdrive/sim/scheduler.hpp"

namespace lptdrive::lpt {

using namespace std::chrono_literals;

enum class EppMode : std::uint8_t { kEpp17, kEpp19 };

constexpr std::string_view name(EppMode m) { return m == EppMode::kEpp17 ? "epp17" : "epp19"; }

inline std::optional<EppMode> parse_epp_mode(std::string_view s) {
  if (s == "epp17" || s == "EPP_1_7") return EppMode::kEpp17;
  if (s == "epp19" || s == "EPP_1_9") return EppMode::kEpp19;
  return std::nullopt;
}

// Window layout relative to the base address.
namespace offset {
inline constexpr int kData = 0;
inline constexpr int kStatus = 1;
inline constexpr int kControl = 2;
inline constexpr int kEppAddress = 3;
inline constexpr int kEppDataFirst = 4;
inline constexpr int kEppDataLast = 7;
inline constexpr int kWindowSize = 8;
}  // namespace offset

struct PortConfig {
  std::uint16_t base_address = 0x378;
  EppMode epp_mode = EppMode::kEpp19;
  sim::Duration t_host_setup = 0ns;
  // Host-side propagation per handshake step; five steps per cycle.
  sim::Duration t_host_step = 20ns;
  sim::Duration t_timeout = 10us;  // EPP 1.9 watchdog
  sim::Duration stall_budget = 1ms;  // default EPP 1.7 caller budget

  void validate() const {
    if (t_host_setup < 0ns || t_host_step < 0ns) {
      throw std::invalid_argument("port timing must be non-negative");
    }
    if (t_timeout <= 0ns) throw std::invalid_argument("EPP timeout must be positive");
    if (stall_budget <= 0ns) throw std::invalid_argument("stall budget must be positive");
    if (base_address > 0xFFFF - (offset::kWindowSize - 1)) {
      throw std::invalid_argument("port window exceeds the I/O space");
    }
  }
};

/// No device-select pulse: the address is outside the port window.
class AddressDecodeError : public std::out_of_range {
 public:
  explicit AddressDecodeError(const std::string& what) : std::out_of_range(what) {}
};

/// Software-visible register values at one instant.
struct RegisterFile {
  std::uint8_t data = 0;
  std::uint8_t status = 0;
  std::uint8_t control = 0;
  std::uint8_t epp_address = 0;
  bool epp_timeout = false;

  friend bool operator==(const RegisterFile&, const RegisterFile&) = default;
};

/// Device on the far end of the cable. The port reports data-strobe edges;
/// the device answers by driving nWait (the Busy pin) via
/// ParallelPort::drive_status.
class EppPeripheral {
 public:
  virtual ~EppPeripheral() = default;
  virtual void on_data_strobe(bool asserted, std::uint8_t data) = 0;
};

/// PC-side printer port: SPP register file plus the EPP data-write engine.
class ParallelPort {
 public:
  using PinObserver = std::function<void(sim::SimTime, const PinBus&)>;

  static constexpr std::uint8_t kResetControl = ctrl::kInit;

  explicit ParallelPort(sim::Scheduler& sched, PortConfig cfg = {})
      : sched_(sched), cfg_(cfg) {
    cfg_.validate();
    apply_control(pins_, control_);
  }

  ParallelPort(const ParallelPort&) = delete;
  ParallelPort& operator=(const ParallelPort&) = delete;

  const PortConfig& config() const { return cfg_; }
  void attach(EppPeripheral* peripheral) { peripheral_ = peripheral; }
  void set_pin_observer(PinObserver obs) { observer_ = std::move(obs); }

  const PinBus& pins() const { return pins_; }
  bool timeout_flag() const { return timeout_flag_; }
  void clear_timeout() { timeout_flag_ = false; }
  bool cycle_active() const { return cycle_.has_value(); }

  RegisterFile registers() const {
    return RegisterFile{port_read(offset::kData), port_read(offset::kStatus),
                        port_read(offset::kControl), epp_address_, timeout_flag_};
  }

  /// I/O write relative to the base address. Offsets 4..7 run one EPP
  /// data-write cycle and return its trace.
  std::optional<EppCycleTrace> port_write(int off, std::uint8_t value) {
    check_offset(off);
    switch (off) {
      case offset::kData:
        data_latch_ = value;
        if (!input_mode()) set_data_pins(value);
        return std::nullopt;
      case offset::kStatus:
        return std::nullopt;
      case offset::kControl:
        control_ = value & ctrl::kImplemented;
        apply_control(pins_, control_);
        pins_.data = input_mode() ? external_data_ : data_latch_;
        notify();
        return std::nullopt;
      case offset::kEppAddress:
        epp_address_ = value;
        return std::nullopt;
      default:
        return epp_data_write(value);
    }
  }

  std::uint8_t port_read(int off) const {
    check_offset(off);
    switch (off) {
      case offset::kData:
        return input_mode() ? external_data_ : data_latch_;
      case offset::kStatus: {
        std::uint8_t v = sample_status(pins_);
        if (cfg_.epp_mode == EppMode::kEpp19 && timeout_flag_) v |= status::kTimeout;
        return v;
      }
      case offset::kControl:
        return control_;
      case offset::kEppAddress:
        return epp_address_;
      default:
        return data_latch_;
    }
  }

  /// Absolute I/O address, decoded against the base.
  std::optional<EppCycleTrace> io_out(std::uint32_t address, std::uint8_t value) {
    return port_write(decode(address), value);
  }
  std::uint8_t io_in(std::uint32_t address) const { return port_read(decode(address)); }

  EppCycleTrace epp_data_write(std::uint8_t value) {
    return epp_data_write(value, cfg_.stall_budget);
  }

  /// Runs one data-write cycle in virtual time and returns when it completes,
  /// times out (EPP 1.9) or exhausts `stall_budget` (EPP 1.7).
  EppCycleTrace epp_data_write(std::uint8_t value, sim::Duration stall_budget) {
    if (cycle_) throw std::logic_error("EPP cycle already in progress");
    const sim::SimTime start = sched_.now();
    cycle_.emplace();
    cycle_->trace.value = value;
    record(EppEvent::kWriteIssued);

    if (cfg_.epp_mode == EppMode::kEpp19) {
      cycle_->watchdog = sched_.schedule(cfg_.t_timeout, "lpt.watchdog",
                                         [this] { abort_cycle(EppOutcome::kTimedOut); });
    }
    cycle_->phase = Phase::kSetup;
    cycle_->step = sched_.schedule(cfg_.t_host_setup + cfg_.t_host_step, "lpt.epp",
                                   [this] { on_nwrite_low(); });

    const sim::SimTime deadline = cfg_.epp_mode == EppMode::kEpp19
                                      ? sim::SimTime{sim::Duration::max()}
                                      : start + stall_budget;
    const bool finished = sched_.run_until([this] { return cycle_->phase == Phase::kDone; },
                                           deadline);
    if (!finished) abort_cycle(EppOutcome::kStalled);

    EppCycleTrace out = std::move(cycle_->trace);
    cycle_.reset();
    return out;
  }

  /// Peripheral side of the cable.
  void drive_status(StatusPin pin, bool level) {
    bool& slot = pins_.input(pin);
    if (slot == level) return;
    slot = level;
    notify();
    if (pin == StatusPin::kBusy && cycle_) on_wait_changed();
  }

  /// Data lines as driven by the peripheral while the host is in input mode.
  void drive_external_data(std::uint8_t v) {
    external_data_ = v;
    if (input_mode()) set_data_pins(v);
  }

 private:
  enum class Phase {
    kSetup,
    kPlacing,
    kAwaitReady,
    kAwaitAck,
    kDeasserting,
    kAwaitRecover,
    kEnding,
    kDone,
  };

  struct Cycle {
    EppCycleTrace trace;
    Phase phase = Phase::kSetup;
    std::optional<sim::EventId> step;
    std::optional<sim::EventId> watchdog;
  };

  bool input_mode() const { return (control_ & ctrl::kDirection) != 0; }

  void check_offset(int off) const {
    if (off < 0 || off >= offset::kWindowSize) {
      throw AddressDecodeError(fmt::format(
          "offset {} outside port window 0..{} (no device select pulse)", off,
          offset::kWindowSize - 1));
    }
  }

  int decode(std::uint32_t address) const {
    const std::uint32_t end = cfg_.base_address + static_cast<std::uint32_t>(offset::kWindowSize);
    if (address < cfg_.base_address || address >= end) {
      throw AddressDecodeError(fmt::format("address {:#x} outside {:#x}..{:#x}", address,
                                           cfg_.base_address,
                                           cfg_.base_address + offset::kWindowSize - 1));
    }
    return static_cast<int>(address - cfg_.base_address);
  }

  void notify() {
    if (observer_) observer_(sched_.now(), pins_);
  }

  void set_data_pins(std::uint8_t v) {
    pins_.data = v;
    notify();
  }

  void record(EppEvent e) { cycle_->trace.entries.push_back({sched_.now(), e}); }

  void host_step(Phase next, void (ParallelPort::*handler)()) {
    cycle_->phase = next;
    cycle_->step = sched_.schedule(cfg_.t_host_step, "lpt.epp", [this, handler] {
      cycle_->step.reset();
      (this->*handler)();
    });
  }

  void on_nwrite_low() {
    cycle_->step.reset();
    pins_.n_strobe = false;
    notify();
    record(EppEvent::kNWriteLow);
    host_step(Phase::kPlacing, &ParallelPort::on_data_placed);
  }

  void on_data_placed() {
    data_latch_ = cycle_->trace.value;
    set_data_pins(data_latch_);
    record(EppEvent::kDataPlaced);
    host_step(Phase::kAwaitReady, &ParallelPort::on_ready_check);
  }

  void on_ready_check() {
    // Strobe only while nWait is low; otherwise wait for its falling edge.
    if (!pins_.n_wait()) assert_strobe();
  }

  void assert_strobe() {
    pins_.n_auto_feed = false;
    notify();
    record(EppEvent::kDataStrobeAsserted);
    cycle_->phase = Phase::kAwaitAck;
    if (peripheral_) peripheral_->on_data_strobe(true, pins_.data);
  }

  void on_wait_changed() {
    switch (cycle_->phase) {
      case Phase::kAwaitReady:
        if (!cycle_->step && !pins_.n_wait()) assert_strobe();
        break;
      case Phase::kAwaitAck:
        if (pins_.n_wait()) {
          record(EppEvent::kWaitWentHigh);
          host_step(Phase::kDeasserting, &ParallelPort::on_deassert);
        }
        break;
      case Phase::kAwaitRecover:
        if (!pins_.n_wait()) host_step(Phase::kEnding, &ParallelPort::on_cycle_end);
        break;
      default:
        break;
    }
  }

  void on_deassert() {
    pins_.n_auto_feed = true;
    notify();
    record(EppEvent::kDataStrobeDeasserted);
    cycle_->phase = Phase::kAwaitRecover;
    if (peripheral_) peripheral_->on_data_strobe(false, pins_.data);
    if (cycle_->phase == Phase::kAwaitRecover && !pins_.n_wait()) {
      host_step(Phase::kEnding, &ParallelPort::on_cycle_end);
    }
  }

  void on_cycle_end() {
    restore_idle_pins();
    record(EppEvent::kCycleEnd);
    finish(EppOutcome::kCompleted);
  }

  void abort_cycle(EppOutcome why) {
    if (!cycle_ || cycle_->phase == Phase::kDone) return;
    if (cycle_->step) sched_.cancel(*cycle_->step);
    cycle_->step.reset();
    const bool strobe_was_asserted = !pins_.n_data_strobe();
    if (why == EppOutcome::kTimedOut) {
      timeout_flag_ = true;
      record(EppEvent::kTimeout);
    }
    restore_idle_pins();
    finish(why);
    if (strobe_was_asserted && peripheral_) peripheral_->on_data_strobe(false, pins_.data);
  }

  void finish(EppOutcome outcome) {
    if (cycle_->watchdog) sched_.cancel(*cycle_->watchdog);
    cycle_->watchdog.reset();
    cycle_->trace.outcome = outcome;
    cycle_->phase = Phase::kDone;
  }

  void restore_idle_pins() {
    PinBus idle = pins_;
    apply_control(idle, control_);
    pins_.n_strobe = idle.n_strobe;
    pins_.n_auto_feed = idle.n_auto_feed;
    notify();
  }

  sim::Scheduler& sched_;
  PortConfig cfg_;
  EppPeripheral* peripheral_ = nullptr;
  PinObserver observer_;

  PinBus pins_;
  std::uint8_t data_latch_ = 0;
  std::uint8_t external_data_ = 0xFF;
  std::uint8_t control_ = kResetControl;
  std::uint8_t epp_address_ = 0;
  bool timeout_flag_ = false;
  std::optional<Cycle> cycle_;
};

/// Back-to-back EPP writes failed part way through.
class ThroughputError : public std::runtime_error {
 public:
  ThroughputError(std::size_t completed, EppCycleTrace failed)
      : std::runtime_error(fmt::format("EPP cycle {} failed ({}) after {} bytes", completed + 1,
                                       name(failed.outcome), completed)),
        completed_(completed),
        failed_(std::move(failed)) {}

  std::size_t completed() const { return completed_; }
  const EppCycleTrace& failed_cycle() const { return failed_; }

 private:
  std::size_t completed_;
  EppCycleTrace failed_;
};

/// Bytes per second of virtual time over `n_bytes` back-to-back data writes,
/// measured from the first WRITE_ISSUED to the last CYCLE_END.
inline double measure_throughput(ParallelPort& port, std::size_t n_bytes) {
  if (n_bytes == 0) throw std::invalid_argument("measure_throughput needs at least one byte");
  std::optional<sim::SimTime> first;
  sim::SimTime last{};
  for (std::size_t i = 0; i < n_bytes; ++i) {
    EppCycleTrace tr = port.epp_data_write(static_cast<std::uint8_t>(i & 0xFF));
    if (!tr.ok()) throw ThroughputError(i, std::move(tr));
    if (!first) first = tr.start();
    last = tr.end();
  }
  const double seconds = sim::to_seconds(last - *first);
  if (seconds <= 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(n_bytes) / seconds;
}

}  // namespace lptdrive::lpt
