#include "lptdrive/lpt/conformance.hpp"
#include "lptdrive/lpt/port.hpp"
#include "lptdrive/lpt/responder.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

using namespace std::chrono_literals;
using namespace lptdrive;
using lpt::EppEvent;
using lpt::EppMode;
using lpt::EppOutcome;
using lpt::ParallelPort;
using lpt::PortConfig;
using lpt::ResponderBehavior;

namespace {

PortConfig epp(EppMode mode) {
  PortConfig cfg;
  cfg.epp_mode = mode;
  return cfg;
}

// Pin levels the control register must produce, written out per bit.
struct ControlPins {
  bool n_strobe, n_auto_feed, n_init, n_select_in;
};
ControlPins expected_control_pins(unsigned v) {
  return {(v & 0x01) == 0, (v & 0x02) == 0, (v & 0x04) != 0, (v & 0x08) == 0};
}

}  // namespace

TEST(PortRegisters, DataLatchDrivesPins) {
  sim::Scheduler s;
  ParallelPort port(s);
  port.port_write(0, 0x0F);
  EXPECT_EQ(port.pins().data, 0x0F);
  EXPECT_EQ(port.port_read(0), 0x0F);
}

TEST(PortRegisters, ControlZeroPinLevels) {
  sim::Scheduler s;
  ParallelPort port(s);
  port.port_write(2, 0x00);
  EXPECT_TRUE(port.pins().n_strobe);
  EXPECT_TRUE(port.pins().n_auto_feed);
  EXPECT_FALSE(port.pins().n_init);
  EXPECT_TRUE(port.pins().n_select_in);
}

TEST(PortRegisters, ExhaustiveControlRoundTripAndInversion) {
  sim::Scheduler s;
  ParallelPort port(s);
  for (unsigned v = 0; v < 256; ++v) {
    port.port_write(2, static_cast<std::uint8_t>(v));
    EXPECT_EQ(port.port_read(2), v & 0x3F) << v;
    const auto want = expected_control_pins(v);
    EXPECT_EQ(port.pins().n_strobe, want.n_strobe) << v;
    EXPECT_EQ(port.pins().n_auto_feed, want.n_auto_feed) << v;
    EXPECT_EQ(port.pins().n_init, want.n_init) << v;
    EXPECT_EQ(port.pins().n_select_in, want.n_select_in) << v;
  }
}

TEST(PortRegisters, ExhaustiveDataRoundTrip) {
  sim::Scheduler s;
  ParallelPort port(s);
  for (unsigned v = 0; v < 256; ++v) {
    port.port_write(0, static_cast<std::uint8_t>(v));
    EXPECT_EQ(port.port_read(0), v);
    EXPECT_EQ(port.pins().data, v);
  }
}

TEST(PortRegisters, StatusIsReadOnly) {
  sim::Scheduler s;
  ParallelPort port(s);
  const auto before = port.port_read(1);
  port.port_write(1, 0xFF);
  EXPECT_EQ(port.port_read(1), before);
}

TEST(PortRegisters, BusyPinInvertedInStatusBit7) {
  sim::Scheduler s;
  ParallelPort port(s);
  port.drive_status(lpt::StatusPin::kBusy, false);
  EXPECT_EQ(port.port_read(1) & 0x80, 0x80);
  port.drive_status(lpt::StatusPin::kBusy, true);
  EXPECT_EQ(port.port_read(1) & 0x80, 0x00);
}

TEST(PortRegisters, StatusBitsFollowInputPinsUninverted) {
  sim::Scheduler s;
  ParallelPort port(s);
  using lpt::StatusPin;
  const std::pair<StatusPin, std::uint8_t> lines[] = {
      {StatusPin::kError, 0x08}, {StatusPin::kSelect, 0x10},
      {StatusPin::kPaperOut, 0x20}, {StatusPin::kAck, 0x40}};
  for (unsigned levels = 0; levels < 32; ++levels) {
    std::uint8_t want = 0;
    for (int i = 0; i < 4; ++i) {
      const bool high = (levels >> i) & 1;
      port.drive_status(lines[i].first, high);
      if (high) want |= lines[i].second;
    }
    const bool busy = (levels >> 4) & 1;
    port.drive_status(StatusPin::kBusy, busy);
    if (!busy) want |= 0x80;
    EXPECT_EQ(port.port_read(1), want) << levels;
  }
}

TEST(PortRegisters, OffsetsOutsideWindowRejected) {
  sim::Scheduler s;
  ParallelPort port(s);
  EXPECT_THROW(port.port_write(8, 0), lpt::AddressDecodeError);
  EXPECT_THROW(port.port_write(-1, 0), lpt::AddressDecodeError);
  EXPECT_THROW((void)port.port_read(8), lpt::AddressDecodeError);
}

TEST(PortRegisters, AbsoluteAddressDecodeAgainstBase) {
  sim::Scheduler s;
  ParallelPort port(s);
  port.io_out(0x378, 0xA5);
  EXPECT_EQ(port.io_in(0x378), 0xA5);
  EXPECT_EQ(port.io_in(0x37A), port.port_read(2));
  EXPECT_THROW(port.io_out(0x377, 0), lpt::AddressDecodeError);
  EXPECT_THROW((void)port.io_in(0x380), lpt::AddressDecodeError);
}

TEST(PortRegisters, EppAddressRegisterStoresButRunsNoCycle) {
  sim::Scheduler s;
  ParallelPort port(s);
  EXPECT_FALSE(port.port_write(3, 0x5A).has_value());
  EXPECT_EQ(port.port_read(3), 0x5A);
  EXPECT_EQ(s.now(), sim::SimTime{});
}

TEST(PortRegisters, FreshEpp19HasTimeoutClear) {
  sim::Scheduler s;
  ParallelPort port(s, epp(EppMode::kEpp19));
  EXPECT_EQ(port.port_read(1) & 0x01, 0);
}

TEST(PortRegisters, InputModeReadsExternalData) {
  sim::Scheduler s;
  ParallelPort port(s);
  port.port_write(0, 0x12);
  port.drive_external_data(0x34);
  port.port_write(2, lpt::ctrl::kDirection | lpt::ctrl::kInit);
  EXPECT_EQ(port.port_read(0), 0x34);
  port.port_write(2, lpt::ctrl::kInit);
  EXPECT_EQ(port.port_read(0), 0x12);
}

TEST(EppDataWrite, ResponsiveTraceMatchesHandshakeOrderAndTiming) {
  sim::Scheduler s;
  ParallelPort port(s);
  lpt::EppResponder dev(s, port);
  const auto trace = port.port_write(4, 0x5C);
  ASSERT_TRUE(trace.has_value());
  EXPECT_TRUE(trace->conforms());
  EXPECT_EQ(trace->events(), std::vector<EppEvent>(lpt::kDataWriteSequence.begin(),
                                                    lpt::kDataWriteSequence.end()));
  // step 20, ack 500, recover 400: hand-summed event times.
  const std::int64_t want_ns[] = {0, 20, 40, 60, 560, 580, 1000};
  for (std::size_t i = 0; i < trace->entries.size(); ++i) {
    EXPECT_EQ(sim::to_ns(trace->entries[i].t), want_ns[i]) << i;
  }
  EXPECT_EQ(dev.latched(), std::vector<std::uint8_t>{0x5C});
  EXPECT_EQ(port.port_read(0), 0x5C);
  EXPECT_TRUE(port.pins().n_write());
  EXPECT_TRUE(port.pins().n_data_strobe());
}

TEST(EppDataWrite, OneMicrosecondAckShiftsWaitEvent) {
  sim::Scheduler s;
  ParallelPort port(s);
  lpt::EppResponder dev(s, port, {1us, 400ns});
  const auto tr = port.epp_data_write(0x01);
  EXPECT_TRUE(tr.conforms());
  EXPECT_EQ(*tr.time_of(EppEvent::kWaitWentHigh) - *tr.time_of(EppEvent::kDataStrobeAsserted),
            1us);
}

TEST(EppDataWrite, ConsecutiveWritesLatchEachByte) {
  sim::Scheduler s;
  ParallelPort port(s);
  lpt::EppResponder dev(s, port);
  EXPECT_TRUE(port.epp_data_write(0x11).ok());
  EXPECT_TRUE(port.epp_data_write(0x22).ok());
  EXPECT_EQ(dev.latched(), (std::vector<std::uint8_t>{0x11, 0x22}));
}

TEST(EppDataWrite, Epp19StuckPeripheralTimesOutAtTenMicroseconds) {
  sim::Scheduler s;
  ParallelPort port(s, epp(EppMode::kEpp19));
  lpt::EppResponder dev(s, port, {}, ResponderBehavior::kNeverAck);
  s.advance_by(3us);
  const auto tr = port.epp_data_write(0x42);
  EXPECT_EQ(tr.outcome, EppOutcome::kTimedOut);
  EXPECT_EQ(tr.entries.back().event, EppEvent::kTimeout);
  EXPECT_EQ(tr.entries.back().t - tr.start(), 10us);
  EXPECT_FALSE(tr.time_of(EppEvent::kCycleEnd).has_value());
  EXPECT_EQ(port.port_read(1) & 0x01, 0x01);
  EXPECT_TRUE(port.pins().n_write());
  EXPECT_TRUE(port.pins().n_data_strobe());
  port.clear_timeout();
  EXPECT_EQ(port.port_read(1) & 0x01, 0);
}

TEST(EppDataWrite, Epp19BusyPeripheralIsNeverStrobed) {
  sim::Scheduler s;
  ParallelPort port(s, epp(EppMode::kEpp19));
  lpt::EppResponder dev(s, port, {}, ResponderBehavior::kAlwaysBusy);
  const auto tr = port.epp_data_write(0x42);
  EXPECT_EQ(tr.outcome, EppOutcome::kTimedOut);
  EXPECT_FALSE(tr.time_of(EppEvent::kDataStrobeAsserted).has_value());
  EXPECT_TRUE(dev.latched().empty());
}

TEST(EppDataWrite, Epp17StallsOnBudgetWithoutFlag) {
  sim::Scheduler s;
  ParallelPort port(s, epp(EppMode::kEpp17));
  lpt::EppResponder dev(s, port, {}, ResponderBehavior::kNeverAck);
  const auto tr = port.epp_data_write(0x42, 50us);
  EXPECT_EQ(tr.outcome, EppOutcome::kStalled);
  EXPECT_FALSE(tr.time_of(EppEvent::kTimeout).has_value());
  EXPECT_EQ(s.now(), sim::from_ns(50'000));
  EXPECT_EQ(port.port_read(1) & 0x01, 0);
  EXPECT_FALSE(port.timeout_flag());
  EXPECT_TRUE(port.pins().n_write());
  EXPECT_TRUE(port.pins().n_data_strobe());
}

TEST(EppDataWrite, Epp17ResponsiveStillConforms) {
  sim::Scheduler s;
  ParallelPort port(s, epp(EppMode::kEpp17));
  lpt::EppResponder dev(s, port);
  EXPECT_TRUE(port.epp_data_write(0xFF).conforms());
}

TEST(EppDataWrite, TraceTextFormat) {
  sim::Scheduler s;
  ParallelPort port(s);
  lpt::EppResponder dev(s, port);
  const auto tr = port.epp_data_write(0x01);
  EXPECT_EQ(lpt::to_text(tr),
            "0.000 WRITE_ISSUED\n0.020 NWRITE_LOW\n0.040 DATA_PLACED\n"
            "0.060 DATASTROBE_ASSERTED\n0.560 WAIT_WENT_HIGH\n"
            "0.580 DATASTROBE_DEASSERTED\n1.000 CYCLE_END\n");
}

// Random timings and behaviours: strobe never falls while nWait is high,
// successes always conform, and the idle levels come back after any cycle.
TEST(EppProperty, HandshakeInvariantsUnderRandomTiming) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> ns(0, 3000);
  for (int round = 0; round < 300; ++round) {
    sim::Scheduler s;
    PortConfig cfg;
    cfg.epp_mode = (round % 2) ? EppMode::kEpp17 : EppMode::kEpp19;
    cfg.t_host_step = sim::Duration{ns(rng) / 10};
    cfg.t_host_setup = sim::Duration{ns(rng) / 10};
    ParallelPort port(s, cfg);
    const auto behavior = static_cast<ResponderBehavior>(rng() % 3);
    lpt::EppResponder dev(s, port, {sim::Duration{ns(rng)}, sim::Duration{ns(rng)}}, behavior);
    bool prev_strobe_high = true;
    int violations = 0;
    port.set_pin_observer([&](sim::SimTime, const lpt::PinBus& p) {
      if (prev_strobe_high && !p.n_data_strobe() && p.n_wait()) ++violations;
      prev_strobe_high = p.n_data_strobe();
    });
    for (int i = 0; i < 4; ++i) {
      const auto tr = port.epp_data_write(static_cast<std::uint8_t>(rng()), 20us);
      if (tr.ok()) {
        EXPECT_TRUE(tr.conforms());
      } else {
        EXPECT_NE(behavior, ResponderBehavior::kResponsive) << round;
      }
      for (std::size_t k = 1; k < tr.entries.size(); ++k) {
        EXPECT_LE(tr.entries[k - 1].t, tr.entries[k].t);
      }
      EXPECT_TRUE(port.pins().n_write());
      EXPECT_TRUE(port.pins().n_data_strobe());
    }
    EXPECT_EQ(violations, 0) << round;
  }
}

TEST(Throughput, DefaultTimingHandSum) {
  // setup 0 + 3 host steps (20 ns) + ack 500 + step + recover 400 + step.
  const double cycle_ns = 0 + 3 * 20 + 500 + 20 + 400 + 20;
  sim::Scheduler s;
  ParallelPort port(s);
  lpt::EppResponder dev(s, port);
  const double bps = lpt::measure_throughput(port, 10000);
  EXPECT_DOUBLE_EQ(bps, 1e9 / cycle_ns);
  EXPECT_GE(bps, 5.0e5);
  EXPECT_LE(bps, 2.0e6);
}

TEST(Throughput, SingleByteIsInverseCycleTime) {
  sim::Scheduler s;
  ParallelPort port(s);
  lpt::EppResponder dev(s, port);
  EXPECT_DOUBLE_EQ(lpt::measure_throughput(port, 1), 1e6);
}

TEST(Throughput, SlowerPeripheralIsSlower) {
  auto run = [](lpt::ResponderTiming t) {
    sim::Scheduler s;
    ParallelPort port(s);
    lpt::EppResponder dev(s, port, t);
    return lpt::measure_throughput(port, 100);
  };
  EXPECT_LT(run({1000ns, 800ns}), run({500ns, 400ns}));
}

TEST(Throughput, TimeoutCarriesPartialCount) {
  sim::Scheduler s;
  ParallelPort port(s);
  lpt::EppResponder dev(s, port, {}, ResponderBehavior::kNeverAck);
  try {
    lpt::measure_throughput(port, 5);
    FAIL() << "expected ThroughputError";
  } catch (const lpt::ThroughputError& e) {
    EXPECT_EQ(e.completed(), 0u);
    EXPECT_EQ(e.failed_cycle().outcome, EppOutcome::kTimedOut);
  }
  EXPECT_THROW(lpt::measure_throughput(port, 0), std::invalid_argument);
}

TEST(Conformance, AllFourScenariosPass) {
  for (auto mode : {lpt::EppMode::kEpp17, lpt::EppMode::kEpp19}) {
    for (bool stuck : {false, true}) {
      const auto r = lpt::run_conformance(mode, stuck);
      EXPECT_TRUE(r.passed()) << lpt::name(mode) << (stuck ? " stuck" : "");
    }
  }
}

TEST(Conformance, ShortWatchdogIsReportedAtItsOwnTime) {
  lpt::PortConfig cfg;
  cfg.t_timeout = 3us;
  const auto r = lpt::run_conformance(lpt::EppMode::kEpp19, true, 0x5A, cfg);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.trace.elapsed(), 3us);
}

TEST(Conformance, SlowPeripheralTripsWatchdogEvenWhenResponsive) {
  lpt::ResponderTiming slow;
  slow.ack = 20us;
  const auto r = lpt::run_conformance(lpt::EppMode::kEpp19, false, 0x01, {}, slow);
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.trace.outcome, lpt::EppOutcome::kTimedOut);
}
