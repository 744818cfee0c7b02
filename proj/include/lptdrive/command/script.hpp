#pragma once

#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "lptdrive/command/command.hpp"
#include "lptdrive/sim/scheduler.hpp"

namespace lptdrive::command {

struct ScriptStep {
  Command command = Command::kStop;
  double seconds = 0.0;

  sim::Duration duration() const { return sim::from_seconds(seconds); }

  friend bool operator==(const ScriptStep&, const ScriptStep&) = default;
};

/// Timed commands, END implied after the last step.
struct PathProgram {
  std::vector<ScriptStep> steps;

  sim::Duration total_duration() const {
    sim::Duration d{0};
    for (const auto& s : steps) d += s.duration();
    return d;
  }

  friend bool operator==(const PathProgram&, const PathProgram&) = default;
};

class ScriptError : public std::runtime_error {
 public:
  ScriptError(int line, int column, const std::string& message)
      : std::runtime_error(fmt::format("line {}, column {}: {}", line, column, message)),
        line_(line),
        column_(column),
        message_(message) {}

  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t'; }

struct Token {
  std::string_view text;
  int column;  // 1-based
};

inline std::vector<Token> split_words(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    const std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

inline std::optional<Command> parse_verb(std::string_view word) {
  for (Command c : {Command::kForward, Command::kBackward, Command::kLeft, Command::kRight,
                    Command::kStop, Command::kEnd}) {
    if (iequals(word, verb(c))) return c;
  }
  return std::nullopt;
}

}  // namespace detail

/// Line-oriented path script:
///
///   # comment
///   FORWARD 2.0
///   LEFT 0.5
///   END
///
/// Verbs are case-insensitive; durations are positive decimal seconds.
inline PathProgram parse_script(std::string_view text) {
  PathProgram program;
  bool ended = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const auto words = detail::split_words(line);
    if (words.empty() || words.front().text.front() == '#') continue;

    if (ended) throw ScriptError(line_no, words.front().column, "content after END");

    const auto cmd = detail::parse_verb(words.front().text);
    if (!cmd) {
      throw ScriptError(line_no, words.front().column,
                        fmt::format("unknown verb '{}'", words.front().text));
    }
    if (*cmd == Command::kEnd) {
      if (words.size() > 1) throw ScriptError(line_no, words[1].column, "END takes no argument");
      ended = true;
      continue;
    }
    if (words.size() < 2) {
      throw ScriptError(line_no, words.front().column + static_cast<int>(words.front().text.size()),
                        fmt::format("{} needs a duration in seconds", verb(*cmd)));
    }
    if (words.size() > 2) throw ScriptError(line_no, words[2].column, "unexpected extra token");

    const auto& num = words[1];
    double seconds = 0.0;
    const char* first = num.text.data();
    const char* last = first + num.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, seconds);
    if (ec != std::errc{} || ptr != last || !std::isfinite(seconds)) {
      throw ScriptError(line_no, num.column, fmt::format("'{}' is not a duration", num.text));
    }
    if (!(seconds > 0.0)) {
      throw ScriptError(line_no, num.column, fmt::format("duration {} must be positive", num.text));
    }
    if (sim::from_seconds(seconds) <= sim::Duration::zero()) {
      throw ScriptError(line_no, num.column, "duration below the 1 ns clock resolution");
    }
    program.steps.push_back({*cmd, seconds});
  }
  if (!ended) throw ScriptError(line_no, 1, "missing END");
  return program;
}

inline std::string render_script(const PathProgram& program) {
  std::string out;
  for (const auto& s : program.steps) out += fmt::format("{} {}\n", verb(s.command), s.seconds);
  out += "END\n";
  return out;
}

}  // namespace lptdrive::command
