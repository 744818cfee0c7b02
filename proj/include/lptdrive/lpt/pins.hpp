#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace lptdrive::lpt {

// Register bit positions. Control bits 0, 1 and 3 and status bit 7 are
// inverted between the register and the connector pin.
namespace ctrl {
inline constexpr std::uint8_t kStrobe = 1u << 0;
inline constexpr std::uint8_t kAutoFeed = 1u << 1;
inline constexpr std::uint8_t kInit = 1u << 2;
inline constexpr std::uint8_t kSelectIn = 1u << 3;
inline constexpr std::uint8_t kIrqEnable = 1u << 4;
inline constexpr std::uint8_t kDirection = 1u << 5;
inline constexpr std::uint8_t kImplemented = 0x3F;
inline constexpr std::uint8_t kPinMask = 0x0F;
inline constexpr std::uint8_t kInvertMask = kStrobe | kAutoFeed | kSelectIn;
}  // namespace ctrl

namespace status {
inline constexpr std::uint8_t kTimeout = 1u << 0;
inline constexpr std::uint8_t kError = 1u << 3;
inline constexpr std::uint8_t kSelect = 1u << 4;
inline constexpr std::uint8_t kPaperOut = 1u << 5;
inline constexpr std::uint8_t kAck = 1u << 6;
inline constexpr std::uint8_t kBusy = 1u << 7;
inline constexpr std::uint8_t kInvertMask = kBusy;
}  // namespace status

enum class StatusPin { kError, kSelect, kPaperOut, kAck, kBusy };

/// Electrical levels on the D-25 connector, true = high. Twelve host outputs
/// (d0..d7 plus four control lines) and five peripheral-driven inputs.
struct PinBus {
  std::uint8_t data = 0;  // d0..d7

  bool n_strobe = true;
  bool n_auto_feed = true;
  bool n_init = true;
  bool n_select_in = true;

  bool n_ack = true;
  bool busy = false;
  bool paper_out = false;
  bool select = true;
  bool n_error = true;

  // EPP names for the same wires.
  bool n_write() const { return n_strobe; }
  bool n_data_strobe() const { return n_auto_feed; }
  bool n_wait() const { return busy; }

  static constexpr int kOutputLines = 12;
  static constexpr int kInputLines = 5;

  bool& input(StatusPin p) {
    switch (p) {
      case StatusPin::kError: return n_error;
      case StatusPin::kSelect: return select;
      case StatusPin::kPaperOut: return paper_out;
      case StatusPin::kAck: return n_ack;
      case StatusPin::kBusy: break;
    }
    return busy;
  }

  friend bool operator==(const PinBus&, const PinBus&) = default;
};

/// Drives the four control pins from a control register value.
constexpr void apply_control(PinBus& pins, std::uint8_t control) {
  const std::uint8_t level = (control ^ ctrl::kInvertMask) & ctrl::kPinMask;
  pins.n_strobe = level & ctrl::kStrobe;
  pins.n_auto_feed = level & ctrl::kAutoFeed;
  pins.n_init = level & ctrl::kInit;
  pins.n_select_in = level & ctrl::kSelectIn;
}

/// Status register bits 3..7 as seen by software (bits 0..2 not included).
constexpr std::uint8_t sample_status(const PinBus& pins) {
  std::uint8_t v = 0;
  if (pins.n_error) v |= status::kError;
  if (pins.select) v |= status::kSelect;
  if (pins.paper_out) v |= status::kPaperOut;
  if (pins.n_ack) v |= status::kAck;
  if (pins.busy) v |= status::kBusy;
  return v ^ status::kInvertMask;
}

}  // namespace lptdrive::lpt
