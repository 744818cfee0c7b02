#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lptdrive/vehicle/control_word.hpp"

namespace lptdrive::command {

enum class Command : std::uint8_t { kForward, kBackward, kLeft, kRight, kStop, kEnd };

constexpr std::string_view verb(Command c) {
  switch (c) {
    case Command::kForward: return "FORWARD";
    case Command::kBackward: return "BACKWARD";
    case Command::kLeft: return "LEFT";
    case Command::kRight: return "RIGHT";
    case Command::kStop: return "STOP";
    case Command::kEnd: break;
  }
  return "END";
}

class UnknownKeyError : public std::invalid_argument {
 public:
  explicit UnknownKeyError(std::string token)
      : std::invalid_argument("unknown key '" + token + "'"), token_(std::move(token)) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

namespace detail {
inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(a[i])) !=
        std::toupper(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}
}  // namespace detail

/// Keyboard map: arrow keys drive and steer, S stops, END leaves the session.
/// The BACK arrow is the DOWN key.
inline Command key_to_command(std::string_view token) {
  if (token == "UP") return Command::kForward;
  if (token == "DOWN") return Command::kBackward;
  if (token == "LEFT") return Command::kLeft;
  if (token == "RIGHT") return Command::kRight;
  if (detail::iequals(token, "S")) return Command::kStop;
  if (detail::iequals(token, "END")) return Command::kEnd;
  throw UnknownKeyError(std::string(token));
}

inline constexpr std::string_view kKeyTokens[] = {"UP", "DOWN", "LEFT", "RIGHT", "S", "END"};

/// Wire byte for one command in isolation. Steering commands only carry
/// STEP_EN/STEP_DIR while the key is held; drive bits are the caller's to
/// merge (see OperatorState).
inline std::uint8_t command_to_control_word(Command cmd, bool held = true) {
  using vehicle::ControlWord;
  switch (cmd) {
    case Command::kForward: return ControlWord::kDriveFwd;
    case Command::kBackward: return ControlWord::kDriveRev;
    case Command::kStop: return 0x00;
    case Command::kLeft: return held ? ControlWord::kStepEnable : 0x00;
    case Command::kRight:
      return held ? static_cast<std::uint8_t>(ControlWord::kStepEnable | ControlWord::kStepDir)
                  : 0x00;
    case Command::kEnd: break;
  }
  throw std::invalid_argument("END is a session control, not a wire byte");
}

enum class KeyAction : std::uint8_t { kPress, kRelease };

inline std::optional<KeyAction> parse_key_action(std::string_view s) {
  if (detail::iequals(s, "press")) return KeyAction::kPress;
  if (detail::iequals(s, "release")) return KeyAction::kRelease;
  return std::nullopt;
}

/// Operator-side latch shared by keyboard and script input: drive keys latch
/// a drive mode, steering keys run the stepper only while held, S clears both.
class OperatorState {
 public:
  /// Byte to transmit for this key event, if any. END is never transmitted.
  std::optional<std::uint8_t> apply(Command cmd, KeyAction action) {
    using vehicle::ControlWord;
    switch (cmd) {
      case Command::kForward:
      case Command::kBackward:
        if (action == KeyAction::kRelease) return std::nullopt;
        drive_bits_ = command_to_control_word(cmd);
        return word();
      case Command::kStop:
        if (action == KeyAction::kRelease) return std::nullopt;
        drive_bits_ = 0;
        steer_.reset();
        return word();
      case Command::kLeft:
      case Command::kRight:
        if (action == KeyAction::kPress) {
          steer_ = cmd;
          return word();
        }
        if (steer_ != cmd) return std::nullopt;
        steer_.reset();
        return word();
      case Command::kEnd:
        break;
    }
    return std::nullopt;
  }

  std::uint8_t word() const {
    const std::uint8_t steer = steer_ ? command_to_control_word(*steer_, true) : 0;
    return static_cast<std::uint8_t>(drive_bits_ | steer);
  }

  std::optional<Command> held_steering() const { return steer_; }

 private:
  std::uint8_t drive_bits_ = 0;
  std::optional<Command> steer_;
};

}  // namespace lptdrive::command
