#pragma once

#include <optional>
#include <vector>

#include "phystrack/geometry.hpp"
#include "phystrack/random.hpp"

namespace phystrack {

/// Output of a single-snapshot pose estimator for one camera frame. An empty
/// pose means the estimator produced nothing (e.g. the object was hidden).
struct Observation {
  double time = 0.0;
  std::optional<Pose> pose;

  bool present() const noexcept { return pose.has_value(); }
};

/// Half-open time interval [start, end) in seconds.
struct TimeWindow {
  double start = 0.0;
  double end = 0.0;

  bool contains(double t) const noexcept { return t >= start && t < end; }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// Behavior of the synthetic snapshot estimator.
struct ObserverSpec {
  NoiseSpec noise{0.02, 0.09};
  std::vector<TimeWindow> occlusion_windows;
  double outlier_rate = 0.05;
  NoiseSpec outlier_magnitude{0.15, 0.8};
  // When > 0, outliers only occur within this many seconds of an occlusion
  // window (failures cluster around partial occlusion). 0 = anywhere.
  double outlier_margin = 0.0;
  double frame_period = 0.02;

  /// Throws std::invalid_argument if rates fall outside [0, 1], windows are
  /// empty, unsorted or overlapping, or the frame period is not positive.
  void validate() const;
  bool occluded(double time) const noexcept;
  /// Whether an outlier may be drawn at `time` (not occluded, within the margin).
  bool outlier_possible(double time) const noexcept;
  friend bool operator==(const ObserverSpec&, const ObserverSpec&) = default;
};

/// Synthetic estimator output for ground truth `truth` at `time`. Inside an
/// occlusion window the pose is absent and no random numbers are drawn.
Observation observe(const Pose& truth, double time, const ObserverSpec& spec, Rng& rng);

/// Merges a per-frame occlusion mask (frame k at k * frame_period) into
/// sorted half-open windows.
std::vector<TimeWindow> windows_from_mask(const std::vector<bool>& occluded, double frame_period);

}  // namespace phystrack
