#include "phystrack/baselines.hpp"

#include <chrono>
#include <stdexcept>

namespace phystrack {

Pose snapshot_track(const Observation& obs, SnapshotState& state) {
  if (obs.present()) {
    state.last_reported = obs.pose;
    return *obs.pose;
  }
  if (!state.last_reported) throw std::runtime_error("no pose ever observed");
  return *state.last_reported;
}

Pose PoseDelta::apply(const Pose& p) const {
  return Pose(p.position() + translation, rotation * p.orientation());
}

PoseDelta cv_delta(const Pose& est_prev, const Pose& est_prev2) {
  PoseDelta d;
  d.translation = est_prev.position() - est_prev2.position();
  d.rotation = (est_prev.orientation() * est_prev2.orientation().conjugate()).normalized();
  return d;
}

void CvpfConfig::validate() const {
  FilterConfig as_pbpf;
  as_pbpf.particles = particles;
  as_pbpf.dt = dt;
  as_pbpf.motion_noise = motion_noise;
  as_pbpf.obs_noise = obs_noise;
  as_pbpf.init_noise = init_noise;
  as_pbpf.validate();
}

ParticleSet cv_motion_update(const ParticleSet& particles, const PoseDelta& delta, const NoiseSpec& motion_noise,
                             std::uint64_t seed, std::uint64_t step) {
  ParticleSet out(particles.size());
  for (std::size_t m = 0; m < particles.size(); ++m) {
    const Particle& in = particles[m];
    Rng rng = make_stream(seed, step, in.rng_stream);
    out[m] = {perturb_pose(delta.apply(in.pose), motion_noise, rng), in.weight, in.rng_stream};
  }
  return out;
}

ConstantVelocityFilter::ConstantVelocityFilter(CvpfConfig config) : config_(std::move(config)) { config_.validate(); }

Pose ConstantVelocityFilter::initialize(const Observation& first) {
  particles_ = init_particles(first.pose, config_.particles, config_.init_noise, config_.seed);
  step_ = 0;
  prev_ = estimate(particles_);
  prev2_.reset();
  return *prev_;
}

StepReport ConstantVelocityFilter::step(const Observation& obs) {
  using Clock = std::chrono::steady_clock;
  if (!initialized()) throw std::logic_error("filter stepped before initialize()");
  const auto t0 = Clock::now();
  ++step_;

  const PoseDelta delta = prev2_ ? cv_delta(*prev_, *prev2_) : PoseDelta::identity();
  ParticleSet predicted = cv_motion_update(particles_, delta, config_.motion_noise, config_.seed, step_);
  const auto t1 = Clock::now();

  const ObservationOutcome outcome = observation_update(predicted, obs, config_.obs_noise);
  if (!outcome.skipped) {
    Rng rng = resample_stream(config_.seed, step_);
    predicted = resample(predicted, rng);
  }
  particles_ = std::move(predicted);

  StepReport report;
  report.estimate = estimate(particles_);
  report.skipped = outcome.skipped;
  report.degenerate = outcome.degenerate;
  report.motion_seconds = std::chrono::duration<double>(t1 - t0).count();
  report.total_seconds = std::chrono::duration<double>(Clock::now() - t0).count();

  prev2_ = prev_;
  prev_ = report.estimate;
  return report;
}

}  // namespace phystrack
