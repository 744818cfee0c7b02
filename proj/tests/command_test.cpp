#include "lptdrive/command/command.hpp"
#include "lptdrive/command/script.hpp"
#include "lptdrive/vehicle/control_word.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace lptdrive;
using command::Command;
using command::KeyAction;

TEST(KeyMap, ArrowKeysAndLetters) {
  EXPECT_EQ(command::key_to_command("UP"), Command::kForward);
  EXPECT_EQ(command::key_to_command("DOWN"), Command::kBackward);
  EXPECT_EQ(command::key_to_command("LEFT"), Command::kLeft);
  EXPECT_EQ(command::key_to_command("RIGHT"), Command::kRight);
  EXPECT_EQ(command::key_to_command("S"), Command::kStop);
  EXPECT_EQ(command::key_to_command("s"), Command::kStop);
  EXPECT_EQ(command::key_to_command("END"), Command::kEnd);
  EXPECT_EQ(command::key_to_command("end"), Command::kEnd);
}

TEST(KeyMap, UnknownTokenCarriesToken) {
  try {
    command::key_to_command("PAGE_UP");
    FAIL();
  } catch (const command::UnknownKeyError& e) {
    EXPECT_EQ(e.token(), "PAGE_UP");
  }
}

TEST(KeyMap, TotalAndInjective) {
  std::set<Command> seen;
  for (auto tok : command::kKeyTokens) seen.insert(command::key_to_command(tok));
  EXPECT_EQ(seen.size(), std::size(command::kKeyTokens));
}

TEST(ControlWordEncode, Table) {
  EXPECT_EQ(command::command_to_control_word(Command::kStop), 0x00);
  EXPECT_EQ(command::command_to_control_word(Command::kForward), 0x01);
  EXPECT_EQ(command::command_to_control_word(Command::kBackward), 0x02);
  EXPECT_EQ(command::command_to_control_word(Command::kLeft, true), 0x04);
  EXPECT_EQ(command::command_to_control_word(Command::kRight, true), 0x0C);
  EXPECT_EQ(command::command_to_control_word(Command::kLeft, false), 0x00);
  EXPECT_EQ(command::command_to_control_word(Command::kRight, false), 0x00);
  EXPECT_THROW(command::command_to_control_word(Command::kEnd), std::invalid_argument);
}

TEST(ControlWordEncode, DecodesBackToIntent) {
  using vehicle::ControlWord;
  using vehicle::DriveMode;
  EXPECT_EQ(ControlWord{command::command_to_control_word(Command::kForward)}.drive(),
            DriveMode::kForward);
  EXPECT_EQ(ControlWord{command::command_to_control_word(Command::kBackward)}.drive(),
            DriveMode::kBackward);
  const ControlWord right{command::command_to_control_word(Command::kRight)};
  EXPECT_TRUE(right.step_enabled());
  EXPECT_EQ(right.direction(), vehicle::StepDirection::kClockwise);
  const ControlWord left{command::command_to_control_word(Command::kLeft)};
  EXPECT_TRUE(left.step_enabled());
  EXPECT_EQ(left.direction(), vehicle::StepDirection::kCounterClockwise);
}

TEST(OperatorState, HoldSteeringWhileDriving) {
  command::OperatorState op;
  EXPECT_EQ(op.apply(Command::kForward, KeyAction::kPress), 0x01);
  EXPECT_EQ(op.apply(Command::kForward, KeyAction::kRelease), std::nullopt);
  EXPECT_EQ(op.apply(Command::kRight, KeyAction::kPress), 0x0D);
  EXPECT_EQ(op.apply(Command::kLeft, KeyAction::kRelease), std::nullopt);
  EXPECT_EQ(op.apply(Command::kRight, KeyAction::kRelease), 0x01);
  EXPECT_EQ(op.apply(Command::kLeft, KeyAction::kPress), 0x05);
  EXPECT_EQ(op.apply(Command::kStop, KeyAction::kPress), 0x00);
  EXPECT_EQ(op.held_steering(), std::nullopt);
  EXPECT_EQ(op.apply(Command::kEnd, KeyAction::kPress), std::nullopt);
}

TEST(Script, MinimalProgram) {
  const auto p = command::parse_script("FORWARD 2.0\nEND");
  ASSERT_EQ(p.steps.size(), 1u);
  EXPECT_EQ(p.steps[0], (command::ScriptStep{Command::kForward, 2.0}));
}

TEST(Script, Composition) {
  const auto p = command::parse_script("LEFT 0.5\nFORWARD 1\nSTOP 0.5\nEND");
  ASSERT_EQ(p.steps.size(), 3u);
  EXPECT_EQ(p.steps[0].command, Command::kLeft);
  EXPECT_EQ(p.steps[2].seconds, 0.5);
}

TEST(Script, CommentsBlanksCaseAndCrlf) {
  const auto p = command::parse_script("# lap\r\n\n  forward\t1.5  \r\n# mid\nStop 2\nend\n\n# tail\n");
  ASSERT_EQ(p.steps.size(), 2u);
  EXPECT_EQ(p.steps[0], (command::ScriptStep{Command::kForward, 1.5}));
  EXPECT_EQ(p.steps[1], (command::ScriptStep{Command::kStop, 2.0}));
}

TEST(Script, OnlyEnd) { EXPECT_TRUE(command::parse_script("END\n").steps.empty()); }

namespace {
void expect_error(std::string_view text, int line, int column, std::string_view fragment) {
  try {
    command::parse_script(text);
    ADD_FAILURE() << "no error for: " << text;
  } catch (const command::ScriptError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
    EXPECT_EQ(e.column(), column) << e.what();
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}
}  // namespace

TEST(Script, Errors) {
  expect_error("FORWARD -1\nEND", 1, 9, "positive");
  expect_error("FORWARD 0\nEND", 1, 9, "positive");
  expect_error("JUMP 1\nEND", 1, 1, "unknown verb");
  expect_error("FORWARD 1\n", 2, 1, "missing END");
  expect_error("END\nFORWARD 1", 2, 1, "after END");
  expect_error("FORWARD\nEND", 1, 8, "needs a duration");
  expect_error("FORWARD abc\nEND", 1, 9, "not a duration");
  expect_error("FORWARD inf\nEND", 1, 9, "not a duration");
  expect_error("FORWARD 1 2\nEND", 1, 11, "extra");
  expect_error("END now", 1, 5, "no argument");
  expect_error("FORWARD 1e-12\nEND", 1, 9, "resolution");
}

TEST(ScriptProperty, RenderParseRoundTrip) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> verb(0, 4);
  std::uniform_real_distribution<double> secs(1e-6, 100.0);
  for (int i = 0; i < 300; ++i) {
    command::PathProgram p;
    const int n = static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) {
      p.steps.push_back({static_cast<Command>(verb(rng)), (k % 3 == 0) ? double(k + 1) : secs(rng)});
    }
    EXPECT_EQ(command::parse_script(command::render_script(p)), p);
  }
}
