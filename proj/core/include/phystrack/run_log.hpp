#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phystrack/geometry.hpp"
#include "phystrack/physics.hpp"

namespace phystrack {

/// One observation frame of a recorded run.
struct RunRecord {
  double time = 0.0;
  Vec3 control = Vec3::Zero();  // pusher displacement since the previous frame
  double control_yaw = 0.0;
  Pose truth;
  std::optional<Pose> observation;
};

/// Self-contained recording of one run: scene geometry and pusher start in
/// the header, then one CSV row per frame. Text form:
///
///   # key = value            (header lines)
///   t,ux,uy,uz,uyaw,gt_px,...,gt_qz,obs_present,obs_px,...,obs_qz
///   <rows>
///
/// Numbers use shortest round-trip formatting, so parse/serialize is exact.
struct RunLog {
  std::string scenario_name;
  std::string scenario_hash;
  std::uint64_t seed = 0;
  double frame_period = 0.02;
  SceneModel scene;
  Vec3 pusher_start = Vec3::Zero();
  std::vector<RunRecord> records;

  std::string serialize() const;
  /// Throws RunLogParseError carrying the 1-based line number.
  static RunLog parse(std::string_view text);

  /// Absolute pusher position at every frame, accumulated from the controls.
  std::vector<Vec3> pusher_positions() const;
  /// Pusher motion from frame `from` to frame `to` as a single straight control.
  Control control_between(const std::vector<Vec3>& pusher, std::size_t from, std::size_t to) const;
};

class RunLogParseError : public std::runtime_error {
 public:
  RunLogParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline constexpr std::string_view kRunLogFormat = "phystrack-runlog/1";

}  // namespace phystrack
