#pragma once

#include <atomic>
#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "lptdrive/command/command.hpp"
#include "lptdrive/command/script.hpp"
#include "lptdrive/teleop/runner.hpp"
#include "lptdrive/teleop/session.hpp"
#include "lptdrive/teleop/wire.hpp"

namespace lptdrive::teleop {

/// One emitted snapshot, rendered once and shared by every reader.
struct Published {
  std::uint64_t seq = 0;
  std::uint64_t session = 0;
  Snapshot snapshot;
  std::string json;
};

class ServiceStopping : public std::runtime_error {
 public:
  ServiceStopping() : std::runtime_error("service is stopping") {}
};

/// The single simulation executor. Network threads submit tasks into an
/// ordered queue; only the loop thread touches the session. Readers get
/// immutable snapshots, latest wins.
class SimLoop {
 public:
  using SteadyClock = std::chrono::steady_clock;

  /// State owned by the loop thread, handed to every task.
  class State {
   public:
    Session& session() { return *session_; }
    const ServiceConfig& config() const { return cfg_; }
    std::uint64_t session_id() const { return session_id_; }

    /// Starts a new session, optionally with a new config.
    void reset(std::optional<ServiceConfig> cfg = std::nullopt) {
      if (cfg) {
        cfg->validate();
        cfg_ = std::move(*cfg);
      }
      session_ = std::make_unique<Session>(cfg_.session);
      ++session_id_;
      anchor();
    }

    /// Re-pins the virtual/wall mapping after a jump in virtual time.
    void anchor() {
      anchor_virtual_ = session_->now();
      anchor_wall_ = SteadyClock::now();
    }

    bool pacing() const {
      return cfg_.pace.mode == PaceConfig::Mode::kRealtime && !session_->ended();
    }

    /// Real-time mode: advances the session to the virtual time that
    /// corresponds to the wall clock.
    void catch_up() {
      if (!pacing()) return;
      const std::chrono::duration<double> wall = SteadyClock::now() - anchor_wall_;
      const sim::SimTime target = anchor_virtual_ + sim::from_seconds(wall.count() * cfg_.pace.factor);
      if (target > session_->now()) session_->advance_until(target);
    }

    /// Publishes the current state and returns it.
    std::shared_ptr<const Published> publish() { return loop_.publish(*this); }

   private:
    friend class SimLoop;
    State(SimLoop& loop, ServiceConfig cfg) : loop_(loop), cfg_(std::move(cfg)) {
      cfg_.validate();
      reset();
    }

    SimLoop& loop_;
    ServiceConfig cfg_;
    std::unique_ptr<Session> session_;
    std::uint64_t session_id_ = 0;
    sim::SimTime anchor_virtual_{};
    SteadyClock::time_point anchor_wall_{};
  };

  explicit SimLoop(ServiceConfig cfg = {}) : state_(*this, std::move(cfg)) {
    state_.publish();
    thread_ = std::thread([this] { run(); });
  }

  ~SimLoop() { stop(); }

  SimLoop(const SimLoop&) = delete;
  SimLoop& operator=(const SimLoop&) = delete;

  /// Queues `fn(State&)` behind every earlier task. The loop publishes a
  /// snapshot after the task unless the task published one itself.
  template <class F>
  auto submit(F fn) -> std::future<std::invoke_result_t<F&, State&>> {
    using R = std::invoke_result_t<F&, State&>;
    auto promise = std::make_shared<std::promise<R>>();
    auto future = promise->get_future();
    auto task = [this, fn = std::move(fn), promise](State& s) mutable {
      const std::uint64_t before = latest_seq();
      auto settle = [&] {
        if (latest_seq() == before) s.publish();
      };
      try {
        if constexpr (std::is_void_v<R>) {
          fn(s);
          settle();
          promise->set_value();
        } else {
          R r = fn(s);
          settle();
          promise->set_value(std::move(r));
        }
      } catch (...) {
        settle();
        promise->set_exception(std::current_exception());
      }
    };
    {
      std::lock_guard lk(queue_mu_);
      if (stopping_) throw ServiceStopping();
      queue_.emplace_back(std::move(task));
    }
    queue_cv_.notify_one();
    return future;
  }

  /// Convenience: submit and wait.
  template <class F>
  auto call(F fn) {
    return submit(std::move(fn)).get();
  }

  std::shared_ptr<const Published> latest() const {
    std::lock_guard lk(pub_mu_);
    return latest_;
  }

  /// Waits for a snapshot newer than `seq`; null on timeout or stop.
  std::shared_ptr<const Published> wait_newer(std::uint64_t seq,
                                              std::chrono::milliseconds timeout) const {
    std::unique_lock lk(pub_mu_);
    pub_cv_.wait_for(lk, timeout, [&] { return closed_ || latest_->seq > seq; });
    if (closed_ || latest_->seq <= seq) return nullptr;
    return latest_;
  }

  /// Sleeps until `t` or until the loop stops; false if stopped.
  bool sleep_until(SteadyClock::time_point t) const {
    std::unique_lock lk(pub_mu_);
    return !pub_cv_.wait_until(lk, t, [&] { return closed_; });
  }

  bool stopped() const {
    std::lock_guard lk(pub_mu_);
    return closed_;
  }

  /// Drains queued tasks, then joins the loop thread.
  void stop() {
    {
      std::lock_guard lk(queue_mu_);
      stopping_ = true;
    }
    queue_cv_.notify_all();
    {
      std::lock_guard lk(pub_mu_);
      closed_ = true;
    }
    pub_cv_.notify_all();
    if (thread_.joinable()) thread_.join();
  }

 private:
  using Task = std::function<void(State&)>;

  std::uint64_t latest_seq() const {
    std::lock_guard lk(pub_mu_);
    return latest_ ? latest_->seq : 0;
  }

  std::shared_ptr<const Published> publish(State& s) {
    auto p = std::make_shared<Published>();
    p->session = s.session_id();
    p->snapshot = s.session().snapshot();
    {
      std::lock_guard lk(pub_mu_);
      p->seq = ++seq_;
      p->json = wire::to_json(p->snapshot, p->seq, p->session).dump();
      latest_ = p;
    }
    pub_cv_.notify_all();
    return p;
  }

  void run() {
    for (;;) {
      std::deque<Task> batch;
      {
        std::unique_lock lk(queue_mu_);
        auto ready = [&] { return stopping_ || !queue_.empty(); };
        if (state_.pacing()) {
          queue_cv_.wait_for(lk, state_.config().pace.snapshot_interval(), ready);
        } else {
          queue_cv_.wait(lk, ready);
        }
        if (stopping_ && queue_.empty()) return;
        batch.swap(queue_);
      }
      if (batch.empty()) {
        state_.catch_up();
        state_.publish();
        continue;
      }
      for (Task& task : batch) {
        state_.catch_up();
        task(state_);
      }
    }
  }

  State state_;

  std::mutex queue_mu_;
  std::condition_variable queue_cv_;
  std::deque<Task> queue_;
  bool stopping_ = false;

  mutable std::mutex pub_mu_;
  mutable std::condition_variable pub_cv_;
  std::shared_ptr<const Published> latest_;
  std::uint64_t seq_ = 0;
  bool closed_ = false;

  std::thread thread_;
};

/// HTTP front end over one SimLoop.
class Service {
 public:
  explicit Service(ServiceConfig cfg = {}) : loop_(std::move(cfg)) {
    server_.set_keep_alive_timeout(1);
    // httplib's default adds SO_REUSEPORT, which lets a second server share
    // a busy port silently.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    routes();
  }

  ~Service() { stop(); }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listen socket; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port) {
    if (port == 0) {
      const int p = server_.bind_to_any_port(host);
      if (p < 0) throw std::runtime_error(fmt::format("cannot bind {}:0", host));
      return p;
    }
    if (!server_.bind_to_port(host, port)) {
      throw std::runtime_error(fmt::format("cannot bind {}:{}", host, port));
    }
    return port;
  }

  /// Accepts connections on a background thread.
  void start() {
    listener_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  /// Accepts connections on the calling thread until stop().
  void run() { server_.listen_after_bind(); }

  void stop() {
    loop_.stop();
    server_.stop();
    if (listener_.joinable()) listener_.join();
  }

  SimLoop& loop() { return loop_; }

 private:
  using Request = httplib::Request;
  using Response = httplib::Response;
  using json = nlohmann::json;

  static void reply(Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void error(Response& res, int status, const std::string& message) {
    reply(res, status, json{{"error", message}});
  }

  // Maps exceptions onto status codes.
  template <class F>
  static void guarded(Response& res, F&& body) {
    try {
      body();
    } catch (const command::ScriptError& e) {
      reply(res, 400, json{{"error", e.message()}, {"line", e.line()}, {"column", e.column()}});
    } catch (const command::UnknownKeyError& e) {
      error(res, 400, e.what());
    } catch (const json::exception& e) {
      error(res, 400, fmt::format("bad request body: {}", e.what()));
    } catch (const SessionEnded& e) {
      error(res, 409, e.what());
    } catch (const std::invalid_argument& e) {
      error(res, 400, e.what());
    } catch (const std::out_of_range& e) {
      error(res, 400, e.what());
    } catch (const ServiceStopping& e) {
      error(res, 503, e.what());
    } catch (const std::exception& e) {
      error(res, 500, e.what());
    }
  }

  static json parse_object(const Request& req) {
    json body = json::parse(req.body);
    if (!body.is_object()) throw std::invalid_argument("request body must be an object");
    return body;
  }

  static int int_field(const json& body, const char* key, int lo, int hi) {
    if (!body.contains(key)) throw std::invalid_argument(fmt::format("'{}' is required", key));
    const json& v = body.at(key);
    if (!v.is_number_integer()) throw std::invalid_argument(fmt::format("'{}' must be an integer", key));
    const auto n = v.get<std::int64_t>();
    if (n < lo || n > hi) throw std::invalid_argument(fmt::format("'{}' must lie in {}..{}", key, lo, hi));
    return static_cast<int>(n);
  }

  static double parse_double(const std::string& s, const char* what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw std::invalid_argument(fmt::format("'{}' is not a valid {}", s, what));
    }
    return v;
  }

  void routes() {
    server_.Get("/api/state", [this](const Request&, Response& res) {
      guarded(res, [&] {
        auto p = loop_.call([](SimLoop::State& s) { return s.publish(); });
        res.set_content(p->json, "application/json");
      });
    });

    server_.Post("/api/key", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const json body = parse_object(req);
        if (!body.contains("key") || !body["key"].is_string()) {
          throw std::invalid_argument("'key' must be one of UP, DOWN, LEFT, RIGHT, S, END");
        }
        const command::Command cmd = command::key_to_command(body["key"].get<std::string>());
        command::KeyAction action = command::KeyAction::kPress;
        if (body.contains("action")) {
          if (!body["action"].is_string()) throw std::invalid_argument("'action' must be a string");
          const auto a = command::parse_key_action(body["action"].get<std::string>());
          if (!a) throw std::invalid_argument("'action' must be press or release");
          action = *a;
        }
        reply(res, 200, loop_.call([cmd, action](SimLoop::State& s) {
          const KeyOutcome out = s.session().key(cmd, action);
          const auto p = s.publish();
          return json{{"byte", out.byte ? json(wire::hex(*out.byte)) : json(nullptr)},
                      {"trace", wire::to_json(out.cycle)},
                      {"ended", out.ended},
                      {"state", json::parse(p->json)}};
        }));
      });
    });

    server_.Post("/api/port/write", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const json body = parse_object(req);
        const int off = int_field(body, "offset", 0, lpt::offset::kEppDataLast);
        const auto value = static_cast<std::uint8_t>(int_field(body, "value", 0, 255));
        reply(res, 200, loop_.call([off, value](SimLoop::State& s) {
          const auto trace = s.session().port_write(off, value);
          const auto p = s.publish();
          return json{{"trace", wire::to_json(trace)}, {"state", json::parse(p->json)}};
        }));
      });
    });

    server_.Post("/api/advance", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const json body = parse_object(req);
        if (!body.contains("seconds") || !body["seconds"].is_number()) {
          throw std::invalid_argument("'seconds' must be a number");
        }
        const double secs = body["seconds"].get<double>();
        if (!(secs > 0.0) || !std::isfinite(secs)) throw std::invalid_argument("'seconds' must be positive");
        reply(res, 200, loop_.call([secs](SimLoop::State& s) {
          if (s.session().ended()) throw SessionEnded();
          s.session().advance_by(sim::from_seconds(secs));
          s.anchor();
          return json::parse(s.publish()->json);
        }));
      });
    });

    server_.Post("/api/script", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const command::PathProgram program = command::parse_script(req.body);
        PaceConfig pace = PaceConfig::max();
        if (req.has_param("pace")) pace = PaceConfig::parse(req.get_param_value("pace"));
        reply(res, 200, loop_.call([program, pace](SimLoop::State& s) {
          s.reset();
          const RunReport report =
              run_script(s.session(), program, pace, [&s](Session&) { s.publish(); });
          s.anchor();
          return json{{"report", wire::to_json(report)},
                      {"session", s.session_id()},
                      {"trajectory", "/api/trajectory"}};
        }));
      });
    });

    server_.Get("/api/trajectory", [this](const Request&, Response& res) {
      guarded(res, [&] {
        res.set_content(loop_.call([](SimLoop::State& s) {
          return kinematics::to_csv(s.session().trajectory());
        }),
                        "text/csv");
      });
    });

    server_.Get("/api/trace", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        std::optional<sim::SimTime> since;
        if (req.has_param("since")) {
          const double us = parse_double(req.get_param_value("since"), "time in microseconds");
          since = sim::from_ns(std::llround(us * 1000.0));
        }
        const bool text = req.has_param("format") && req.get_param_value("format") == "text";
        auto [now, events] = loop_.call([since](SimLoop::State& s) {
          Session& session = s.session();
          return std::pair{session.now(),
                           session.trace_since(since.value_or(sim::SimTime{} - sim::Duration{1}))};
        });
        if (text) {
          res.set_content(lpt::to_text(events), "text/plain");
          return;
        }
        json body = wire::time_fields(now);
        body["events"] = wire::to_json(events);
        reply(res, 200, body);
      });
    });

    server_.Get("/api/config", [this](const Request&, Response& res) {
      guarded(res, [&] {
        reply(res, 200, loop_.call([](SimLoop::State& s) { return wire::to_json(s.config()); }));
      });
    });

    server_.Put("/api/config", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        const json patch = parse_object(req);
        reply(res, 200, loop_.call([patch](SimLoop::State& s) {
          s.reset(wire::merge(s.config(), patch));
          return wire::to_json(s.config());
        }));
      });
    });

    server_.Post("/api/reset", [this](const Request&, Response& res) {
      guarded(res, [&] {
        auto p = loop_.call([](SimLoop::State& s) {
          s.reset();
          return s.publish();
        });
        res.set_content(p->json, "application/json");
      });
    });

    // Server-sent events, one `snapshot` event per emitted snapshot.
    server_.Get("/api/stream", [this](const Request& req, Response& res) {
      guarded(res, [&] {
        double rate = loop_.call([](SimLoop::State& s) { return s.config().pace.snapshot_rate_hz; });
        if (req.has_param("rate")) {
          rate = parse_double(req.get_param_value("rate"), "rate");
          if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
        }
        const auto interval = std::chrono::duration_cast<SimLoop::SteadyClock::duration>(
            std::chrono::duration<double>(1.0 / rate));
        struct Cursor {
          std::uint64_t seq = 0;
          SimLoop::SteadyClock::time_point next{};
        };
        auto cursor = std::make_shared<Cursor>();
        res.set_header("Cache-Control", "no-cache");
        res.set_chunked_content_provider(
            "text/event-stream", [this, cursor, interval](std::size_t, httplib::DataSink& sink) {
              if (!loop_.sleep_until(cursor->next)) return false;
              const auto p = loop_.wait_newer(cursor->seq, std::chrono::seconds(1));
              if (loop_.stopped()) return false;
              if (!p) {
                static constexpr char kKeepAlive[] = ": idle\n\n";
                return sink.write(kKeepAlive, sizeof(kKeepAlive) - 1);
              }
              cursor->seq = p->seq;
              cursor->next = SimLoop::SteadyClock::now() + interval;
              const std::string frame =
                  fmt::format("id: {}\nevent: snapshot\ndata: {}\n\n", p->seq, p->json);
              return sink.write(frame.data(), frame.size());
            });
      });
    });
  }

  SimLoop loop_;
  httplib::Server server_;
  std::thread listener_;
};

}  // namespace lptdrive::teleop
