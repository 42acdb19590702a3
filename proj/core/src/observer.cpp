#include "phystrack/observer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phystrack {

void ObserverSpec::validate() const {
  noise.validate();
  outlier_magnitude.validate();
  if (!(outlier_rate >= 0.0 && outlier_rate <= 1.0)) throw std::invalid_argument("outlier_rate must be in [0, 1]");
  if (!(outlier_margin >= 0.0) || !std::isfinite(outlier_margin)) {
    throw std::invalid_argument("outlier_margin must be >= 0");
  }
  if (!(frame_period > 0.0) || !std::isfinite(frame_period)) {
    throw std::invalid_argument("frame_period must be > 0");
  }
  for (std::size_t i = 0; i < occlusion_windows.size(); ++i) {
    const TimeWindow& w = occlusion_windows[i];
    if (!(w.end > w.start)) throw std::invalid_argument("occlusion window must have end > start");
    if (i > 0 && w.start < occlusion_windows[i - 1].end) {
      throw std::invalid_argument("occlusion windows must be sorted and non-overlapping");
    }
  }
}

bool ObserverSpec::occluded(double time) const noexcept {
  for (const TimeWindow& w : occlusion_windows) {
    if (w.contains(time)) return true;
  }
  return false;
}

bool ObserverSpec::outlier_possible(double time) const noexcept {
  if (outlier_rate <= 0.0) return false;
  if (outlier_margin <= 0.0) return true;
  for (const TimeWindow& w : occlusion_windows) {
    if (time >= w.start - outlier_margin && time < w.end + outlier_margin) return true;
  }
  return false;
}

Observation observe(const Pose& truth, double time, const ObserverSpec& spec, Rng& rng) {
  if (spec.occluded(time)) return {time, std::nullopt};
  if (spec.outlier_possible(time) && uniform01(rng) < spec.outlier_rate) {
    return {time, perturb_pose(truth, spec.outlier_magnitude, rng)};
  }
  return {time, perturb_pose(truth, spec.noise, rng)};
}

std::vector<TimeWindow> windows_from_mask(const std::vector<bool>& occluded, double frame_period) {
  std::vector<TimeWindow> out;
  std::size_t k = 0;
  while (k < occluded.size()) {
    if (!occluded[k]) {
      ++k;
      continue;
    }
    const std::size_t begin = k;
    while (k < occluded.size() && occluded[k]) ++k;
    // Window edges sit halfway between frames so frame times never land on
    // a boundary.
    const double start = (static_cast<double>(begin) - 0.5) * frame_period;
    const double end = (static_cast<double>(k) - 0.5) * frame_period;
    out.push_back({std::max(start, 0.0), end});
  }
  return out;
}

}  // namespace phystrack
