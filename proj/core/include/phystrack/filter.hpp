#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "phystrack/geometry.hpp"
#include "phystrack/observer.hpp"
#include "phystrack/physics.hpp"

namespace phystrack {

struct Particle {
  Pose pose;
  double weight = 1.0;
  std::uint64_t rng_stream = 0;
};

using ParticleSet = std::vector<Particle>;

/// Spread of the initial particle cloud around the first observation.
struct InitNoise {
  Vec3 sigma_pos = Vec3(0.07, 0.02, 0.01);  // per world axis, meters
  double sigma_rot = 0.04;                  // radians
  friend bool operator==(const InitNoise&, const InitNoise&) = default;
};

/// Physics-based particle filter settings. Defaults follow the reference
/// experimental setup.
struct FilterConfig {
  std::size_t particles = 70;
  double dt = 0.16;  // update interval, seconds of simulated time per rollout
  ParamPrior param_prior;
  NoiseSpec motion_noise{0.005, 0.05};
  NoiseSpec obs_noise{0.02, 0.09};
  InitNoise init_noise;
  double substep = kDefaultSubstep;
  std::size_t workers = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Motion update failed for one particle.
class MotionUpdateError : public std::runtime_error {
 public:
  MotionUpdateError(std::size_t index, const std::string& what);
  std::size_t particle_index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// M particles drawn around `first_obs` with per-axis position noise and
/// uniform-axis Gaussian-angle rotation noise; uniform weights. Particle m
/// uses random stream (seed, 0, m).
ParticleSet init_particles(const std::optional<Pose>& first_obs, std::size_t count, const InitNoise& noise,
                           std::uint64_t seed);

/// Physics motion model: per particle, sample parameters, roll the backend
/// forward over the control, then add motion noise. Particle m draws from
/// stream (seed, step, rng_stream_m), so results do not depend on `workers`.
/// backends.size() must equal particles.size().
ParticleSet motion_update(const ParticleSet& particles, const Control& control, const ParamPrior& prior,
                          const NoiseSpec& motion_noise, std::span<const std::unique_ptr<PhysicsBackend>> backends,
                          std::uint64_t seed, std::uint64_t step, std::size_t workers);

struct ObservationOutcome {
  bool skipped = false;     // no pose in the observation
  bool degenerate = false;  // every likelihood underflowed; uniform floor applied
};

/// Product of Gaussian densities of positional and rotational error.
double observation_likelihood(const Pose& particle, const Pose& observed, const NoiseSpec& obs_noise);

inline constexpr double kLikelihoodUnderflow = 1e-300;
inline constexpr double kLikelihoodFloor = 1e-12;

/// Reweights particles against the observation and normalizes the weights.
/// An absent observation leaves the set untouched.
ObservationOutcome observation_update(ParticleSet& particles, const Observation& obs, const NoiseSpec& obs_noise);

/// Systematic (low-variance) resampling. Output weights are 1/M and stream ids
/// are renumbered 0..M-1. Throws std::invalid_argument on a zero or
/// non-finite total weight.
ParticleSet resample(const ParticleSet& particles, Rng& rng);

/// Arithmetic mean position and Markley mean orientation. Weights are not
/// consulted: the filter only estimates from uniformly weighted sets.
Pose estimate(const ParticleSet& particles);

/// Stream used for the resampling draw of step `step`.
Rng resample_stream(std::uint64_t seed, std::uint64_t step);

struct StepReport {
  Pose estimate;
  bool skipped = false;
  bool degenerate = false;
  double motion_seconds = 0.0;  // wall time of the motion update
  double total_seconds = 0.0;
};

/// Physics-based particle filter state: particle set, one backend per
/// particle, and the step counter that keys the random streams.
class PhysicsParticleFilter {
 public:
  PhysicsParticleFilter(FilterConfig config, const SceneModel& scene);

  /// Throws std::invalid_argument("cannot initialize without an observation").
  Pose initialize(const Observation& first);
  StepReport step(const Control& control, const Observation& obs);

  const ParticleSet& particles() const noexcept { return particles_; }
  const FilterConfig& config() const noexcept { return config_; }
  std::uint64_t steps() const noexcept { return step_; }
  bool initialized() const noexcept { return !particles_.empty(); }

 private:
  FilterConfig config_;
  std::vector<std::unique_ptr<PhysicsBackend>> backends_;
  ParticleSet particles_;
  std::uint64_t step_ = 0;
};

}  // namespace phystrack
