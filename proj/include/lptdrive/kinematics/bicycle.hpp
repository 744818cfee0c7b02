#pragma once

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lptdrive/sim/scheduler.hpp"

namespace lptdrive::kinematics {

using namespace std::chrono_literals;

/// Rear-axle pose. The frame is viewed from above with y to the vehicle's
/// initial right, so positive heading (and positive steering) turns
/// clockwise.
struct Pose {
  double x_cm = 0.0;
  double y_cm = 0.0;
  double heading_rad = 0.0;

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Wraps into (-pi, pi].
inline double wrap_heading(double h) {
  double w = std::remainder(h, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

inline double deg_to_rad(double d) { return d * (std::numbers::pi / 180.0); }
inline double rad_to_deg(double r) { return r * (180.0 / std::numbers::pi); }

struct BicycleParams {
  double wheelbase_cm = 20.0;
  double max_steering_deg = 45.0;
  sim::Duration internal_step = 1ms;

  void validate() const {
    if (!(wheelbase_cm > 0.0) || !std::isfinite(wheelbase_cm)) {
      throw std::invalid_argument("wheelbase must be positive");
    }
    if (internal_step <= 0ns) throw std::invalid_argument("internal step must be positive");
  }
};

namespace detail {

struct Rate {
  double dx, dy, dh;
};

inline Rate rate(double heading, double v, double yaw_rate) {
  return {v * std::cos(heading), v * std::sin(heading), yaw_rate};
}

// Classic fourth-order Runge-Kutta step of length h (seconds).
inline Pose rk4(const Pose& p, double v, double yaw_rate, double h) {
  const Rate k1 = rate(p.heading_rad, v, yaw_rate);
  const Rate k2 = rate(p.heading_rad + 0.5 * h * k1.dh, v, yaw_rate);
  const Rate k3 = rate(p.heading_rad + 0.5 * h * k2.dh, v, yaw_rate);
  const Rate k4 = rate(p.heading_rad + h * k3.dh, v, yaw_rate);
  return Pose{
      p.x_cm + h / 6.0 * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
      p.y_cm + h / 6.0 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy),
      wrap_heading(p.heading_rad + h / 6.0 * (k1.dh + 2.0 * k2.dh + 2.0 * k3.dh + k4.dh)),
  };
}

}  // namespace detail

/// Advances the pose by `dt` under constant steering and speed:
///   x' = v cos h,  y' = v sin h,  h' = v tan(steering) / wheelbase
/// using fixed internal steps (the last one shortened to land on dt).
inline Pose integrate(const Pose& pose, double steering_deg, double v_cm_s, sim::Duration dt,
                      const BicycleParams& params = {}) {
  if (!std::isfinite(pose.x_cm) || !std::isfinite(pose.y_cm) ||
      !std::isfinite(pose.heading_rad) || !std::isfinite(steering_deg) ||
      !std::isfinite(v_cm_s)) {
    throw std::invalid_argument("integrate: non-finite input");
  }
  if (std::abs(steering_deg) > params.max_steering_deg) {
    throw std::invalid_argument("integrate: steering beyond mechanical limit");
  }
  if (dt <= 0ns) throw std::invalid_argument("integrate: dt must be positive");
  if (v_cm_s == 0.0) return pose;

  const double yaw_rate = v_cm_s * std::tan(deg_to_rad(steering_deg)) / params.wheelbase_cm;
  Pose p = pose;
  sim::Duration left = dt;
  while (left > 0ns) {
    const sim::Duration h = std::min(left, params.internal_step);
    p = detail::rk4(p, v_cm_s, yaw_rate, sim::to_seconds(h));
    left -= h;
  }
  return p;
}

/// Turning radius of the rear axle; infinite for straight driving.
inline double turning_radius_cm(double steering_deg, double wheelbase_cm) {
  const double t = std::tan(deg_to_rad(steering_deg));
  return t == 0.0 ? INFINITY : wheelbase_cm / std::abs(t);
}

}  // namespace lptdrive::kinematics
