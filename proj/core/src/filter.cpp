#include "phystrack/filter.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "phystrack/parallel.hpp"

namespace phystrack {

namespace {

constexpr std::uint64_t kResampleTag = 0x5245'5341'4d50'4c45ULL;

double gaussian_density(double x, double sigma) {
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

void FilterConfig::validate() const {
  if (particles < 1) throw std::invalid_argument("filter needs at least one particle");
  if (!(dt > 0.0)) throw std::invalid_argument("filter dt must be > 0");
  if (!(substep > 0.0)) throw std::invalid_argument("filter substep must be > 0");
  param_prior.validate();
  motion_noise.validate();
  obs_noise.validate();
  if (!(obs_noise.sigma_pos > 0.0) || !(obs_noise.sigma_rot > 0.0)) {
    throw std::invalid_argument("observation noise must be > 0 to define a likelihood");
  }
  if (!(init_noise.sigma_pos.minCoeff() >= 0.0) || !(init_noise.sigma_rot >= 0.0)) {
    throw std::invalid_argument("init noise must be >= 0");
  }
}

MotionUpdateError::MotionUpdateError(std::size_t index, const std::string& what)
    : std::runtime_error("motion update failed for particle " + std::to_string(index) + ": " + what), index_(index) {}

ParticleSet init_particles(const std::optional<Pose>& first_obs, std::size_t count, const InitNoise& noise,
                           std::uint64_t seed) {
  if (!first_obs) throw std::invalid_argument("cannot initialize without an observation");
  if (count < 1) throw std::invalid_argument("filter needs at least one particle");
  ParticleSet out(count);
  const double w = 1.0 / static_cast<double>(count);
  for (std::size_t m = 0; m < count; ++m) {
    Rng rng = make_stream(seed, 0, m);
    Pose p = *first_obs;
    const Vec3& s = noise.sigma_pos;
    if (s.x() > 0.0 || s.y() > 0.0 || s.z() > 0.0) {
      const Vec3 d(standard_normal(rng), standard_normal(rng), standard_normal(rng));
      p.set_position(p.position() + s.cwiseProduct(d));
    }
    if (noise.sigma_rot > 0.0) p.set_orientation(sample_rotation_noise(noise.sigma_rot, rng) * p.orientation());
    out[m] = {p, w, m};
  }
  return out;
}

ParticleSet motion_update(const ParticleSet& particles, const Control& control, const ParamPrior& prior,
                          const NoiseSpec& motion_noise, std::span<const std::unique_ptr<PhysicsBackend>> backends,
                          std::uint64_t seed, std::uint64_t step, std::size_t workers) {
  if (backends.size() != particles.size()) {
    throw std::invalid_argument("motion_update needs exactly one backend per particle");
  }
  ParticleSet out(particles.size());
  parallel_for(particles.size(), workers, [&](std::size_t m) {
    const Particle& in = particles[m];
    Rng rng = make_stream(seed, step, in.rng_stream);
    const PhysicsParams theta = sample_params(prior, rng);
    const PhysicsBackend& engine = *backends[m];
    // A hypothesis overlapping the known pusher position is infeasible;
    // move it to the nearest contact configuration first.
    const Pose start = separate_from_pusher(in.pose, control.pusher_start, engine.scene());
    Pose predicted;
    try {
      predicted = engine.predict(start, control, theta);
    } catch (const std::exception& e) {
      throw MotionUpdateError(m, e.what());
    }
    out[m] = {perturb_pose(predicted, motion_noise, rng), in.weight, in.rng_stream};
  });
  return out;
}

double observation_likelihood(const Pose& particle, const Pose& observed, const NoiseSpec& obs_noise) {
  const PoseError e = pose_error(particle, observed);
  return gaussian_density(e.positional, obs_noise.sigma_pos) * gaussian_density(e.rotational, obs_noise.sigma_rot);
}

ObservationOutcome observation_update(ParticleSet& particles, const Observation& obs, const NoiseSpec& obs_noise) {
  ObservationOutcome outcome;
  if (!obs.present()) {
    outcome.skipped = true;
    return outcome;
  }
  double max_raw = 0.0;
  for (Particle& p : particles) {
    p.weight = observation_likelihood(p.pose, *obs.pose, obs_noise);
    max_raw = std::max(max_raw, p.weight);
  }
  if (!(max_raw >= kLikelihoodUnderflow)) {
    outcome.degenerate = true;
    for (Particle& p : particles) p.weight = std::max(p.weight, kLikelihoodFloor);
  }
  double total = 0.0;
  for (const Particle& p : particles) total += p.weight;
  for (Particle& p : particles) p.weight /= total;
  return outcome;
}

ParticleSet resample(const ParticleSet& particles, Rng& rng) {
  const std::size_t n = particles.size();
  if (n == 0) throw std::invalid_argument("cannot resample an empty particle set");
  std::vector<double> cumulative(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(particles[i].weight >= 0.0)) throw std::invalid_argument("particle weights must be >= 0");
    total += particles[i].weight;
    cumulative[i] = total;
  }
  if (!(total > 0.0) || !std::isfinite(total)) throw std::invalid_argument("cannot resample: zero total weight");

  const double inv_n = 1.0 / static_cast<double>(n);
  const double offset = uniform01(rng);
  ParticleSet out(n);
  std::size_t i = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double u = (static_cast<double>(j) + offset) * inv_n * total;
    while (i + 1 < n && cumulative[i] <= u) ++i;
    out[j] = {particles[i].pose, inv_n, j};
  }
  return out;
}

Pose estimate(const ParticleSet& particles) {
  if (particles.empty()) throw std::invalid_argument("cannot estimate from an empty particle set");
  Vec3 sum = Vec3::Zero();
  std::vector<Quat> rotations;
  rotations.reserve(particles.size());
  for (const Particle& p : particles) {
    sum += p.pose.position();
    rotations.push_back(p.pose.orientation());
  }
  return Pose(sum / static_cast<double>(particles.size()), quat_average(rotations));
}

Rng resample_stream(std::uint64_t seed, std::uint64_t step) { return make_stream(seed, step, kResampleTag); }

PhysicsParticleFilter::PhysicsParticleFilter(FilterConfig config, const SceneModel& scene)
    : config_(std::move(config)) {
  config_.validate();
  backends_.reserve(config_.particles);
  for (std::size_t m = 0; m < config_.particles; ++m) {
    backends_.push_back(std::make_unique<PusherSliderBackend>(scene, config_.substep));
  }
}

Pose PhysicsParticleFilter::initialize(const Observation& first) {
  particles_ = init_particles(first.pose, config_.particles, config_.init_noise, config_.seed);
  step_ = 0;
  return phystrack::estimate(particles_);
}

StepReport PhysicsParticleFilter::step(const Control& control, const Observation& obs) {
  using Clock = std::chrono::steady_clock;
  if (!initialized()) throw std::logic_error("filter stepped before initialize()");
  const auto t0 = Clock::now();
  ++step_;

  ParticleSet predicted = motion_update(particles_, control, config_.param_prior, config_.motion_noise, backends_,
                                        config_.seed, step_, config_.workers);
  const auto t1 = Clock::now();

  const ObservationOutcome outcome = observation_update(predicted, obs, config_.obs_noise);
  if (!outcome.skipped) {
    Rng rng = resample_stream(config_.seed, step_);
    predicted = resample(predicted, rng);
  }
  particles_ = std::move(predicted);

  StepReport report;
  report.estimate = phystrack::estimate(particles_);
  report.skipped = outcome.skipped;
  report.degenerate = outcome.degenerate;
  report.motion_seconds = std::chrono::duration<double>(t1 - t0).count();
  report.total_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return report;
}

}  // namespace phystrack
