#pragma once

#include <optional>

#include "phystrack/filter.hpp"
#include "phystrack/geometry.hpp"
#include "phystrack/observer.hpp"

namespace phystrack {

// ---------------------------------------------------------------------------
// Repetitive single-snapshot tracking

struct SnapshotState {
  std::optional<Pose> last_reported;
};

/// Returns the observed pose when present (and stores it); otherwise the last
/// reported pose. Throws std::runtime_error("no pose ever observed") when
/// nothing has been seen yet.
Pose snapshot_track(const Observation& obs, SnapshotState& state);

// ---------------------------------------------------------------------------
// Constant-velocity particle filter

/// Rigid increment between two estimates. The translation is a world-frame
/// difference; the rotation is applied on the left (world frame).
struct PoseDelta {
  Vec3 translation = Vec3::Zero();
  Quat rotation = Quat::Identity();

  static PoseDelta identity() { return {}; }
  /// Applies the increment: p + translation, rotation * q.
  Pose apply(const Pose& p) const;
};

/// Difference between the two most recent estimates: p1 - p2 and q1 * q2^-1.
PoseDelta cv_delta(const Pose& est_prev, const Pose& est_prev2);

struct CvpfConfig {
  std::size_t particles = 200;
  double dt = 0.02;
  NoiseSpec motion_noise{0.005, 0.05};
  NoiseSpec obs_noise{0.02, 0.09};
  InitNoise init_noise;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Shifts every particle by `delta`, then adds motion noise. Particle m draws
/// from stream (seed, step, rng_stream_m).
ParticleSet cv_motion_update(const ParticleSet& particles, const PoseDelta& delta, const NoiseSpec& motion_noise,
                             std::uint64_t seed, std::uint64_t step);

/// Particle filter whose motion model replays the last estimated velocity.
/// Observation update, resampling and estimation are the physics filter's.
class ConstantVelocityFilter {
 public:
  explicit ConstantVelocityFilter(CvpfConfig config);

  Pose initialize(const Observation& first);
  /// One update over config().dt. `step` does not need controls.
  StepReport step(const Observation& obs);

  const ParticleSet& particles() const noexcept { return particles_; }
  const CvpfConfig& config() const noexcept { return config_; }
  bool initialized() const noexcept { return !particles_.empty(); }

 private:
  CvpfConfig config_;
  ParticleSet particles_;
  std::optional<Pose> prev_;   // estimate at t-1
  std::optional<Pose> prev2_;  // estimate at t-2
  std::uint64_t step_ = 0;
};

}  // namespace phystrack
