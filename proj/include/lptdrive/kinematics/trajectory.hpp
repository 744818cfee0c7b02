#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "lptdrive/kinematics/bicycle.hpp"
#include "lptdrive/sim/scheduler.hpp"
#include "lptdrive/vehicle/control_word.hpp"

namespace lptdrive::kinematics {

struct TrajectorySample {
  sim::SimTime t;
  Pose pose;
  double steering_deg = 0.0;
  vehicle::DriveMode drive = vehicle::DriveMode::kStopped;

  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

/// Append-only, strictly time-ordered record of the run.
class Trajectory {
 public:
  void record(sim::SimTime t, const Pose& pose, double steering_deg, vehicle::DriveMode drive) {
    if (!samples_.empty() && t <= samples_.back().t) {
      throw std::invalid_argument(fmt::format("trajectory sample at {} us is not after {} us",
                                              sim::format_us(t),
                                              sim::format_us(samples_.back().t)));
    }
    samples_.push_back({t, pose, steering_deg, drive});
  }

  const std::vector<TrajectorySample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const TrajectorySample& back() const { return samples_.back(); }
  void clear() { samples_.clear(); }

 private:
  std::vector<TrajectorySample> samples_;
};

inline constexpr const char* kTrajectoryCsvHeader =
    "t_us,x_cm,y_cm,heading_deg,steering_deg,drive";

namespace detail {
// Shortest round-trip decimal; negative zero printed as 0.
inline std::string csv_number(double v) { return fmt::format("{}", v == 0.0 ? 0.0 : v); }
}  // namespace detail

inline std::string to_csv(const Trajectory& traj) {
  std::string out = kTrajectoryCsvHeader;
  out += '\n';
  for (const auto& s : traj.samples()) {
    out += fmt::format("{},{},{},{},{},{}\n", sim::format_us(s.t), detail::csv_number(s.pose.x_cm),
                       detail::csv_number(s.pose.y_cm),
                       detail::csv_number(rad_to_deg(s.pose.heading_rad)),
                       detail::csv_number(s.steering_deg), vehicle::drive_code(s.drive));
  }
  return out;
}

}  // namespace lptdrive::kinematics
