#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace lptdrive::vehicle {

enum class DriveMode : std::uint8_t { kForward, kBackward, kStopped };

constexpr char drive_code(DriveMode m) {
  switch (m) {
    case DriveMode::kForward: return 'F';
    case DriveMode::kBackward: return 'B';
    case DriveMode::kStopped: break;
  }
  return 'S';
}

constexpr std::string_view name(DriveMode m) {
  switch (m) {
    case DriveMode::kForward: return "Forward";
    case DriveMode::kBackward: return "Backward";
    case DriveMode::kStopped: break;
  }
  return "Stopped";
}

/// Stepper counting sense; HIGH on the direction input counts clockwise.
enum class StepDirection : std::uint8_t { kCounterClockwise, kClockwise };

constexpr std::string_view name(StepDirection d) {
  return d == StepDirection::kClockwise ? "cw" : "ccw";
}

inline std::optional<StepDirection> parse_direction(std::string_view s) {
  if (s == "cw" || s == "CW" || s == "HIGH") return StepDirection::kClockwise;
  if (s == "ccw" || s == "CCW" || s == "LOW") return StepDirection::kCounterClockwise;
  return std::nullopt;
}

/// The byte on d0..d7 as the vehicle decodes it.
///
///   bit 0  DRIVE_FWD
///   bit 1  DRIVE_REV
///   bit 2  STEP_EN   (NE555 reset pin; high runs the stepper clock)
///   bit 3  STEP_DIR  (1 = clockwise)
///   bits 4..7 ignored
///
/// FWD and REV together decode as Stopped.
struct ControlWord {
  static constexpr std::uint8_t kDriveFwd = 1u << 0;
  static constexpr std::uint8_t kDriveRev = 1u << 1;
  static constexpr std::uint8_t kStepEnable = 1u << 2;
  static constexpr std::uint8_t kStepDir = 1u << 3;
  static constexpr std::uint8_t kDriveMask = kDriveFwd | kDriveRev;
  static constexpr std::uint8_t kSteerMask = kStepEnable | kStepDir;

  std::uint8_t raw = 0;

  constexpr DriveMode drive() const {
    switch (raw & kDriveMask) {
      case kDriveFwd: return DriveMode::kForward;
      case kDriveRev: return DriveMode::kBackward;
      default: return DriveMode::kStopped;
    }
  }
  constexpr bool step_enabled() const { return (raw & kStepEnable) != 0; }
  constexpr StepDirection direction() const {
    return (raw & kStepDir) ? StepDirection::kClockwise : StepDirection::kCounterClockwise;
  }

  friend constexpr bool operator==(ControlWord, ControlWord) = default;
};

}  // namespace lptdrive::vehicle
