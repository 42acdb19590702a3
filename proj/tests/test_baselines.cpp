#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "phystrack/baselines.hpp"
#include "test_util.hpp"

using namespace phystrack;
using phystrack::testing::about_z;
using phystrack::testing::deg;
using phystrack::testing::random_quat;

namespace {

Observation seen(const Pose& p, double t = 0.0) { return {t, p}; }
Observation hidden(double t = 0.0) { return {t, std::nullopt}; }

}  // namespace

TEST(Snapshot, ReturnsPresentObservation) {
  SnapshotState s;
  const Pose p(Vec3(0.1, 0.2, 0.3), about_z(0.4));
  EXPECT_EQ(snapshot_track(seen(p), s), p);
  ASSERT_TRUE(s.last_reported.has_value());
  EXPECT_EQ(*s.last_reported, p);
}

TEST(Snapshot, HoldsLastPoseWhenHidden) {
  SnapshotState s;
  const Pose p(Vec3(0.1, 0.2, 0.3), about_z(0.4));
  snapshot_track(seen(p), s);
  EXPECT_EQ(snapshot_track(hidden(0.02), s), p);
  EXPECT_EQ(snapshot_track(hidden(0.04), s), p);
  const Pose q(Vec3(0.5, 0, 0), Quat::Identity());
  EXPECT_EQ(snapshot_track(seen(q, 0.06), s), q);
}

TEST(Snapshot, NothingSeenIsAnError) {
  SnapshotState s;
  try {
    snapshot_track(hidden(), s);
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "no pose ever observed");
  }
}

TEST(CvDelta, EqualEstimatesGiveIdentity) {
  const Pose p(Vec3(0.1, 0.2, 0.3), about_z(0.4));
  const PoseDelta d = cv_delta(p, p);
  EXPECT_EQ(d.translation, Vec3::Zero());
  EXPECT_LT(rotation_distance(d.rotation, Quat::Identity()), 1e-12);
}

TEST(CvDelta, TranslationIsDifference) {
  const PoseDelta d = cv_delta(Pose(Vec3(0.02, 0, 0), Quat::Identity()), Pose(Vec3(0.01, 0, 0), Quat::Identity()));
  EXPECT_NEAR((d.translation - Vec3(0.01, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(CvDelta, RotationIsRelativeAboutZ) {
  const PoseDelta d = cv_delta(Pose(Vec3::Zero(), about_z(deg(25))), Pose(Vec3::Zero(), about_z(deg(10))));
  EXPECT_LT(rotation_distance(d.rotation, about_z(deg(15))), 1e-9);
}

TEST(CvDelta, ApplyingDeltaReproducesLatestEstimate) {
  Rng rng = make_stream(3, 3);
  for (int i = 0; i < 100; ++i) {
    const Pose a(Vec3(standard_normal(rng), standard_normal(rng), 0), random_quat(rng));
    const Pose b(Vec3(standard_normal(rng), standard_normal(rng), 0), random_quat(rng));
    const Pose c = cv_delta(a, b).apply(b);
    EXPECT_LT(pose_error(c, a).positional, 1e-12);
    EXPECT_LT(pose_error(c, a).rotational, 1e-9);
  }
}

TEST(CvMotionUpdate, IdentityDeltaZeroNoiseIsIdentity) {
  const ParticleSet ps = init_particles(Pose(Vec3(0, 0, 0.1), about_z(0.2)), 15, InitNoise{}, 4);
  const ParticleSet out = cv_motion_update(ps, PoseDelta::identity(), NoiseSpec{}, 1, 1);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_LT(pose_error(out[i].pose, ps[i].pose).positional, 1e-15);
    EXPECT_LT(pose_error(out[i].pose, ps[i].pose).rotational, 1e-9);
    EXPECT_EQ(out[i].weight, ps[i].weight);
    EXPECT_EQ(out[i].rng_stream, ps[i].rng_stream);
  }
}

TEST(CvMotionUpdate, TranslationShiftsEveryParticle) {
  const ParticleSet ps = init_particles(Pose(Vec3(0, 0, 0.1), Quat::Identity()), 15, InitNoise{}, 5);
  PoseDelta d;
  d.translation = Vec3(0.01, 0, 0);
  const ParticleSet out = cv_motion_update(ps, d, NoiseSpec{}, 1, 1);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_NEAR((out[i].pose.position() - ps[i].pose.position() - Vec3(0.01, 0, 0)).norm(), 0.0, 1e-15);
  }
}

TEST(CvMotionUpdate, PreservesRelativeRotationsBetweenParticles) {
  Rng rng = make_stream(6, 6);
  ParticleSet ps;
  for (std::size_t i = 0; i < 20; ++i) ps.push_back({Pose(Vec3::Zero(), random_quat(rng)), 0.05, i});
  PoseDelta d;
  d.rotation = random_quat(rng);
  const ParticleSet out = cv_motion_update(ps, d, NoiseSpec{}, 1, 1);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_LT(rotation_distance(out[i].pose.orientation(), d.rotation * ps[i].pose.orientation()), 1e-9);
    for (std::size_t j = 0; j < i; ++j) {
      const Quat before = ps[j].pose.orientation().conjugate() * ps[i].pose.orientation();
      const Quat after = out[j].pose.orientation().conjugate() * out[i].pose.orientation();
      EXPECT_LT(rotation_distance(before, after), 1e-9);
    }
  }
}

TEST(CvpfConfig, DefaultsDifferFromPbpfOnlyInCountAndInterval) {
  const CvpfConfig c;
  const FilterConfig f;
  EXPECT_EQ(c.particles, 200u);
  EXPECT_EQ(c.dt, 0.02);
  EXPECT_EQ(c.motion_noise, f.motion_noise);
  EXPECT_EQ(c.obs_noise, f.obs_noise);
  EXPECT_EQ(c.init_noise, f.init_noise);
}

TEST(CvMotionUpdate, TracksConstantVelocityTruthExactly) {
  const Vec3 v(0.002, -0.001, 0.0);
  const Quat w = about_z(0.01);
  auto truth = [&](int k) {
    Quat q = Quat::Identity();
    for (int i = 0; i < k; ++i) q = w * q;
    return Pose(Vec3(0.1, 0.0, 0.1) + k * v, q);
  };
  ParticleSet ps(10, Particle{truth(1), 0.1, 0});
  for (std::size_t m = 0; m < ps.size(); ++m) ps[m].rng_stream = m;
  Pose prev = truth(1), prev2 = truth(0);
  for (int k = 2; k <= 40; ++k) {
    ps = cv_motion_update(ps, cv_delta(prev, prev2), NoiseSpec{}, 3, k);
    const Pose e = estimate(ps);
    EXPECT_LT(pose_error(e, truth(k)).positional, 1e-12) << k;
    EXPECT_LT(pose_error(e, truth(k)).rotational, 1e-7) << k;
    prev2 = prev;
    prev = e;
  }
}

TEST(ConstantVelocityFilter, ColdStartUsesIdentityDelta) {
  CvpfConfig cfg;
  cfg.particles = 5;
  cfg.motion_noise = NoiseSpec{};
  ConstantVelocityFilter f(cfg);
  const Pose p(Vec3(0, 0, 0.1), Quat::Identity());
  const Pose e0 = f.initialize(seen(p));
  const StepReport r = f.step(hidden(0.02));
  EXPECT_TRUE(r.skipped);
  EXPECT_EQ(r.estimate, e0);
}

TEST(ConstantVelocityFilter, IsReproducible) {
  auto run = [] {
    CvpfConfig cfg;
    cfg.seed = 8;
    ConstantVelocityFilter f(cfg);
    f.initialize(seen(Pose(Vec3(0, 0, 0.1), Quat::Identity())));
    std::vector<Pose> out;
    for (int k = 1; k < 20; ++k) out.push_back(f.step(seen(Pose(Vec3(0.001 * k, 0, 0.1), Quat::Identity()), 0.02 * k)).estimate);
    return out;
  };
  EXPECT_EQ(run(), run());
}
