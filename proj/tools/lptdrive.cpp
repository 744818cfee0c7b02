// lptdrive command line: script runs, the teleoperation server, stepper
// tables and EPP handshake conformance.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "lptdrive/command/script.hpp"
#include "lptdrive/lpt/conformance.hpp"
#include "lptdrive/teleop/runner.hpp"
#include "lptdrive/teleop/service.hpp"
#include "lptdrive/teleop/session.hpp"
#include "lptdrive/teleop/wire.hpp"
#include "lptdrive/vehicle/stepper.hpp"

namespace {

using namespace lptdrive;

constexpr int kExitFailure = 1;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path));
  out << text;
  if (!out.flush()) throw std::runtime_error(fmt::format("write to {} failed", path));
}

struct LinkOptions {
  std::string epp_mode = "epp19";
  bool stuck = false;

  void add_to(CLI::App& app) {
    app.add_option("--epp-mode", epp_mode, "EPP variant")
        ->check(CLI::IsMember({"epp17", "epp19"}))
        ->capture_default_str();
    app.add_flag("--stuck-peripheral", stuck, "peripheral never acknowledges the strobe");
  }

  void apply(teleop::SessionConfig& cfg) const {
    cfg.port.epp_mode = *lpt::parse_epp_mode(epp_mode);
    if (stuck) cfg.peripheral_behavior = lpt::ResponderBehavior::kNeverAck;
  }
};

int cmd_run(const std::string& script_path, const std::string& out_path, const std::string& pace_arg,
            const std::string& trace_path, const LinkOptions& link) {
  const teleop::PaceConfig pace = teleop::PaceConfig::parse(pace_arg);
  command::PathProgram program;
  try {
    program = command::parse_script(read_file(script_path));
  } catch (const command::ScriptError& e) {
    fmt::print(stderr, "{}:{}:{}: {}\n", script_path, e.line(), e.column(), e.message());
    return kExitFailure;
  }
  teleop::SessionConfig cfg;
  link.apply(cfg);
  teleop::Session session(cfg);
  const teleop::RunReport report = teleop::run_script(session, program, pace);
  // The trajectory is written even when the run aborted.
  write_file(out_path, kinematics::to_csv(session.trajectory()));
  if (!trace_path.empty()) {
    write_file(trace_path, lpt::to_text(session.trace_since(sim::SimTime{} - sim::Duration{1})));
  }
  fmt::print("{}", teleop::to_text(report));
  if (!report.ok) fmt::print(stderr, "run aborted: {}\n", report.error);
  return report.exit_status();
}

std::pair<std::string, int> split_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw CLI::ValidationError("--listen", "expected HOST:PORT");
  }
  const std::string host = listen.substr(0, colon);
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(listen.substr(colon + 1), &used);
    if (used != listen.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) throw CLI::ValidationError("--listen", "port must be 0..65535");
  return {host, port};
}

int cmd_serve(const std::string& listen, const std::string& pace_arg, const std::string& config_path,
              const LinkOptions& link) {
  const auto [host, port] = split_listen(listen);
  teleop::ServiceConfig cfg;
  cfg.pace = teleop::PaceConfig::parse(pace_arg);
  link.apply(cfg.session);
  if (!config_path.empty()) cfg = teleop::wire::merge(cfg, nlohmann::json::parse(read_file(config_path)));
  cfg.validate();

  // Signals go to a dedicated thread; every other thread inherits the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  teleop::Service service(cfg);
  const int bound = service.bind(host, port);
  fmt::print("listening on http://{}:{} (pace {})\n", host, bound, pace_arg);
  std::fflush(stdout);

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.run();
  pthread_kill(waiter.native_handle(), SIGTERM);  // no-op if a signal already arrived
  waiter.join();
  return 0;
}

int cmd_steps(const std::string& dir, std::size_t count, const std::string& start) {
  const auto direction = vehicle::parse_direction(dir);
  const auto from = vehicle::PhasePattern::parse(start);
  fmt::print("{}", vehicle::phase_table_text(vehicle::step_sequence(*direction, count, from)));
  return 0;
}

int cmd_conformance(const std::string& mode, bool stuck) {
  const lpt::ConformanceResult r = lpt::run_conformance(*lpt::parse_epp_mode(mode), stuck);
  fmt::print("{}", lpt::to_text(r.trace));
  std::fflush(stdout);
  for (const auto& c : r.checks) fmt::print(stderr, "{} {}\n", c.ok ? "ok  " : "FAIL", c.what);
  fmt::print(stderr, "{} {}{}: {}\n", lpt::name(r.trace.outcome), mode, stuck ? " stuck" : "",
             r.passed() ? "conforms" : "does not conform");
  return r.passed() ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel-port vehicle simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "play a path script at max or real-time pace");
  std::string script_path;
  std::string out_path;
  std::string pace = "max";
  std::string trace_path;
  LinkOptions run_link;
  run->add_option("--script", script_path, "path script")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_path, "trajectory CSV to write")->required();
  run->add_option("--pace", pace, "'max' or a real-time factor")->capture_default_str();
  run->add_option("--trace", trace_path, "also write the EPP event trace");
  run_link.add_to(*run);

  auto* serve = app.add_subcommand("serve", "HTTP teleoperation service");
  std::string listen = "127.0.0.1:8080";
  std::string serve_pace = "1";
  std::string config_path;
  LinkOptions serve_link;
  serve->add_option("--listen", listen, "HOST:PORT")->capture_default_str();
  serve->add_option("--pace", serve_pace, "'max' or a real-time factor")->capture_default_str();
  serve->add_option("--config", config_path, "JSON config overrides")->check(CLI::ExistingFile);
  serve_link.add_to(*serve);

  auto* steps = app.add_subcommand("steps", "print the stepper phase sequence");
  std::string dir;
  std::size_t count = 0;
  std::string start = "1010";
  steps->add_option("--dir", dir, "cw or ccw")->required()->check(CLI::IsMember({"cw", "ccw"}));
  steps->add_option("--count", count, "number of steps")->required()->check(CLI::Range(0, 1 << 20));
  steps->add_option("--start", start, "starting ABCD pattern")->capture_default_str();

  auto* conf = app.add_subcommand("conformance", "run one EPP data-write and check the handshake");
  std::string mode;
  bool stuck = false;
  conf->add_option("--mode", mode, "EPP variant")->required()->check(CLI::IsMember({"epp17", "epp19"}));
  conf->add_flag("--stuck-peripheral", stuck, "peripheral never acknowledges the strobe");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(script_path, out_path, pace, trace_path, run_link);
    if (*serve) return cmd_serve(listen, serve_pace, config_path, serve_link);
    if (*steps) return cmd_steps(dir, count, start);
    if (*conf) return cmd_conformance(mode, stuck);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    fmt::print(stderr, "lptdrive: {}\n", e.what());
    return kExitFailure;
  }
  return kExitFailure;
}
