#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "phystrack/physics.hpp"
#include "test_util.hpp"

using namespace phystrack;
using phystrack::testing::about_z;

namespace {

const Pose kRest(Vec3(0.0, 0.0, 0.105), Quat::Identity());

// Pusher starting just right of the +x face, offset `dy` along y, moving -x.
Control push_minus_x(double dy, double distance, double duration, double clearance = 0.001) {
  SceneModel scene;
  Control c;
  c.pusher_start = Vec3(scene.object_half_extents.x() + scene.pusher_radius + clearance, dy, 0.05);
  c.displacement = Vec3(-distance, 0.0, 0.0);
  c.duration = duration;
  return c;
}

PhysicsParams sticky() { return PhysicsParams(1.0, 0.3, 0.5, 0.4); }

Vec2 rotate2(const Vec2& v, double a) { return Vec2(std::cos(a) * v.x() - std::sin(a) * v.y(), std::sin(a) * v.x() + std::cos(a) * v.y()); }

Vec3 rotate_planar(const Vec3& v, double a) {
  const Vec2 r = rotate2(v.head<2>(), a);
  return Vec3(r.x(), r.y(), v.z());
}

}  // namespace

TEST(PhysicsParams, ClampsToFloors) {
  const PhysicsParams p(-0.2, -0.5, 1.7, -0.1);
  EXPECT_EQ(p.contact_friction(), kMinFriction);
  EXPECT_EQ(p.support_friction(), kMinFriction);
  EXPECT_EQ(p.restitution(), 1.0);
  EXPECT_EQ(p.mass(), kMinMass);
  EXPECT_EQ(PhysicsParams(0.2, 0.2, -0.3, 1.0).restitution(), 0.0);
}

TEST(PhysicsParams, DefaultPriorMatchesReferenceSetup) {
  const ParamPrior prior;
  EXPECT_EQ(prior.contact_friction, (GaussianPrior{0.1, 0.3}));
  EXPECT_EQ(prior.support_friction, (GaussianPrior{0.1, 0.3}));
  EXPECT_EQ(prior.restitution, (GaussianPrior{0.9, 0.2}));
  EXPECT_EQ(prior.mass, (GaussianPrior{0.38, 0.5}));
}

TEST(SampleParams, ZeroStdReturnsMeans) {
  ParamPrior prior;
  prior.contact_friction = {0.2, 0.0};
  prior.support_friction = {0.3, 0.0};
  prior.restitution = {0.6, 0.0};
  prior.mass = {0.5, 0.0};
  Rng rng = make_stream(1, 1);
  EXPECT_EQ(sample_params(prior, rng), PhysicsParams(0.2, 0.3, 0.6, 0.5));
}

TEST(SampleParams, NegativeDrawsAreCapped) {
  ParamPrior prior;
  prior.contact_friction = {-0.2, 0.0};
  prior.support_friction = {-0.2, 0.0};
  prior.mass = {-0.1, 0.0};
  Rng rng = make_stream(1, 2);
  const PhysicsParams p = sample_params(prior, rng);
  EXPECT_EQ(p.contact_friction(), 0.001);
  EXPECT_EQ(p.support_friction(), 0.001);
  EXPECT_EQ(p.mass(), 0.05);
}

TEST(SampleParams, DrawsRespectCapsEverywhere) {
  Rng rng = make_stream(1, 3);
  const ParamPrior prior;
  for (int i = 0; i < 5000; ++i) {
    const PhysicsParams p = sample_params(prior, rng);
    EXPECT_GE(p.contact_friction(), kMinFriction);
    EXPECT_GE(p.support_friction(), kMinFriction);
    EXPECT_GE(p.mass(), kMinMass);
    EXPECT_GE(p.restitution(), 0.0);
    EXPECT_LE(p.restitution(), 1.0);
  }
}

TEST(ParamPrior, RejectsNegativeStd) {
  ParamPrior prior;
  prior.mass.std = -1.0;
  EXPECT_THROW(prior.validate(), std::invalid_argument);
}

TEST(MeanContactRadius, MatchesNumericQuadrature) {
  for (const Vec2& half : {Vec2(0.03, 0.08), Vec2(0.05, 0.05), Vec2(0.2, 0.01)}) {
    SceneModel scene;
    scene.object_half_extents = half;
    const int n = 800;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double x = (i + 0.5) / n * half.x();
        const double y = (j + 0.5) / n * half.y();
        sum += std::hypot(x, y);
      }
    }
    const double numeric = sum / (static_cast<double>(n) * n);
    EXPECT_NEAR(scene.mean_contact_radius(), numeric, 1e-6 * numeric) << half.transpose();
  }
}

TEST(MeanContactRadius, SquareHasKnownValue) {
  // For the unit square [-1,1]^2 the mean distance is (sqrt2 + asinh 1) / 3.
  SceneModel scene;
  scene.object_half_extents = Vec2(1.0, 1.0);
  EXPECT_NEAR(scene.mean_contact_radius(), (std::sqrt(2.0) + std::asinh(1.0)) / 3.0, 1e-14);
}

TEST(LimitSurface, RatioIsMeanRadiusIndependentOfFrictionAndMass) {
  SceneModel scene;
  const double r = scene.mean_contact_radius();
  EXPECT_NEAR(limit_surface_ratio(scene, PhysicsParams(0.1, 0.2, 0.5, 0.3)), r, 1e-15);
  EXPECT_NEAR(limit_surface_ratio(scene, PhysicsParams(0.9, 0.7, 0.5, 2.0)), r, 1e-15);
}

TEST(Step, RejectsNonPositiveSubstep) {
  const Control c = push_minus_x(0.0, 0.02, 0.16);
  EXPECT_THROW(step(kRest, c, sticky(), SceneModel{}, 0.0), PhysicsError);
  EXPECT_THROW(step(kRest, c, sticky(), SceneModel{}, -0.01), PhysicsError);
  EXPECT_THROW(step(kRest, c, sticky(), SceneModel{}, 0.03), PhysicsError);
}

TEST(Step, InitialPenetrationIsAnError) {
  Control c;
  c.pusher_start = Vec3(0.02, 0.0, 0.05);
  c.displacement = Vec3(0.01, 0.0, 0.0);
  c.duration = 0.16;
  try {
    step(kRest, c, sticky(), SceneModel{}, 0.002);
    FAIL() << "expected PhysicsError";
  } catch (const PhysicsError& e) {
    EXPECT_STREQ(e.what(), "initial penetration");
  }
}

TEST(Step, NoContactLeavesStateUnchanged) {
  Control c;
  c.pusher_start = Vec3(0.2, 0.2, 0.05);
  c.displacement = Vec3(0.1, 0.05, 0.0);
  c.duration = 0.16;
  const Pose s(Vec3(0.01, -0.02, 0.105), about_z(0.3));
  EXPECT_EQ(step(s, c, sticky(), SceneModel{}, 0.002), s);
}

TEST(Step, HeadOnPushTranslatesWithoutRotation) {
  SceneModel scene;
  const Control c = push_minus_x(0.0, 0.05, 1.0);
  const Pose out = step(kRest, c, sticky(), scene, 0.002);
  const Pose fine = step(kRest, c, sticky(), scene, 1e-4);
  EXPECT_LT(rotation_distance(out.orientation(), Quat::Identity()), 1e-6);
  EXPECT_LT(rotation_distance(fine.orientation(), Quat::Identity()), 1e-6);
  // The pusher ends at start - 0.05; the object face sits one radius beyond.
  const double face = c.pusher_end().x() - scene.pusher_radius - scene.object_half_extents.x();
  EXPECT_NEAR(out.position().x(), face, 1e-6);
  EXPECT_NEAR(fine.position().x(), face, 1e-6);
  EXPECT_NEAR(out.position().y(), 0.0, 1e-12);
}

TEST(Step, OffsetPushRotatesAwayFromOffsetSide) {
  const Control c = push_minus_x(0.02, 0.03, 0.5);
  for (const PhysicsParams& p : {sticky(), PhysicsParams(0.05, 0.3, 0.5, 0.4)}) {
    const Pose out = step(kRest, c, p, SceneModel{}, 0.002);
    const Pose fine = step(kRest, c, p, SceneModel{}, 1e-4);
    EXPECT_GT(planar_yaw(out.orientation()), 0.0);
    EXPECT_GT(planar_yaw(fine.orientation()), 0.0);
  }
  const Pose mirrored = step(kRest, push_minus_x(-0.02, 0.03, 0.5), sticky(), SceneModel{}, 0.002);
  EXPECT_LT(planar_yaw(mirrored.orientation()), 0.0);
}

TEST(Step, CoarseAndFineAgreeOverOneUpdate) {
  const Control c = push_minus_x(0.015, 0.02, 0.16);
  for (const PhysicsParams& p : {sticky(), PhysicsParams(0.1, 0.1, 0.9, 0.38)}) {
    const Pose coarse = step(kRest, c, p, SceneModel{}, 0.01);
    const Pose fine = step(kRest, c, p, SceneModel{}, 1e-4);
    EXPECT_LT(pose_error(coarse, fine).positional, 1e-3);
    EXPECT_GT(pose_error(fine, kRest).positional, 0.005);  // contact actually happened
  }
}

TEST(Step, IsDeterministic) {
  const Control c = push_minus_x(0.01, 0.04, 0.32);
  const PusherSliderBackend backend{SceneModel{}};
  const Pose a = backend.predict(kRest, c, sticky());
  const Pose b = backend.predict(kRest, c, sticky());
  EXPECT_EQ(a, b);
}

TEST(Step, ZeroDisplacementControlIsIdentity) {
  Control c = push_minus_x(0.0, 0.0, 0.16);
  const PusherSliderBackend backend{SceneModel{}};
  EXPECT_EQ(backend.predict(kRest, c, sticky()), kRest);
}

TEST(Step, PreservesHeightRollAndPitch) {
  Rng rng = make_stream(2, 1);
  for (int i = 0; i < 30; ++i) {
    const double z = 0.05 + 0.1 * uniform01(rng);
    const Pose s(Vec3(0.0, 0.0, z), about_z(0.4 * (uniform01(rng) - 0.5)));
    const Control c = push_minus_x(0.03 * (uniform01(rng) - 0.5), 0.08, 0.4, 0.03);
    const Pose out = step(s, c, PhysicsParams(uniform01(rng), 0.3, 0.5, 0.4), SceneModel{}, 0.002);
    EXPECT_EQ(out.position().z(), z);
    const Vec3 up = out.orientation() * Vec3::UnitZ();
    EXPECT_NEAR(up.z(), 1.0, 1e-12);
  }
}

TEST(Step, EquivariantUnderPlanarRotation) {
  Rng rng = make_stream(2, 2);
  for (int i = 0; i < 20; ++i) {
    const double a = 2.0 * std::numbers::pi * uniform01(rng);
    const Pose s(Vec3(0.0, 0.0, 0.105), about_z(0.2 * (uniform01(rng) - 0.5)));
    SceneModel scene;
    scene.obstacles.push_back(Rect2{Vec2(-0.09, 0.0), Vec2(0.01, 0.2), 0.1});
    const Control c = push_minus_x(0.04 * (uniform01(rng) - 0.5), 0.09, 0.4, 0.03);
    const PhysicsParams p(0.05 + uniform01(rng), 0.3, 0.5, 0.4);
    const Pose out = step(s, c, p, scene, 0.002);

    const Quat rz = about_z(a);
    SceneModel scene_r = scene;
    for (Rect2& o : scene_r.obstacles) {
      o.center = rotate2(o.center, a);
      o.yaw += a;
    }
    Control c_r = c;
    c_r.pusher_start = rotate_planar(c.pusher_start, a);
    c_r.displacement = rotate_planar(c.displacement, a);
    const Pose s_r(rotate_planar(s.position(), a), rz * s.orientation());
    const Pose out_r = step(s_r, c_r, p, scene_r, 0.002);

    EXPECT_LT((out_r.position() - rotate_planar(out.position(), a)).norm(), 1e-9) << "trial " << i;
    EXPECT_LT(rotation_distance(out_r.orientation(), rz * out.orientation()), 1e-9) << "trial " << i;
  }
}

TEST(Step, ObstacleBlocksMotion) {
  SceneModel scene;
  scene.obstacles.push_back(Rect2{Vec2(-0.06, 0.0), Vec2(0.01, 0.2), 0.0});
  const Pose out = step(kRest, push_minus_x(0.0, 0.05, 0.5), sticky(), scene, 0.002);
  // Object's -x face may not cross the obstacle's +x face at x = -0.05.
  EXPECT_GE(out.position().x() - scene.object_half_extents.x(), -0.05 - 1e-9);
}

TEST(Step, SubstepConvergesAtFirstOrder) {
  Rng rng = make_stream(2, 3);
  std::vector<double> ratios;
  for (int i = 0; i < 20; ++i) {
    const Control c = push_minus_x(0.03 * (uniform01(rng) - 0.5), 0.02 + 0.02 * uniform01(rng), 0.16);
    const PhysicsParams p(0.05 + 0.5 * uniform01(rng), 0.3, 0.5, 0.4);
    const double h = 0.004;
    const Pose a = step(kRest, c, p, SceneModel{}, h);
    const Pose b = step(kRest, c, p, SceneModel{}, h / 2);
    const Pose d = step(kRest, c, p, SceneModel{}, h / 4);
    const double e1 = pose_error(a, b).positional;
    const double e2 = pose_error(b, d).positional;
    if (e1 < 1e-9) continue;
    ratios.push_back(e2 / e1);
  }
  ASSERT_GE(ratios.size(), 10u);
  std::sort(ratios.begin(), ratios.end());
  const double median = ratios[ratios.size() / 2];
  EXPECT_GE(median, 0.3);
  EXPECT_LE(median, 0.7);
}

TEST(PushResponse, SeparatingPusherGivesNoMotion) {
  const PushResponse r = push_response(Vec2(0.03, 0.0), Vec2(-1, 0), Vec2(1.0, 0.0), 0.5, 0.05);
  EXPECT_EQ(r.mode, ContactMode::kSeparating);
  EXPECT_EQ(r.twist, Eigen::Vector3d::Zero());
}

TEST(PushResponse, StickingMatchesPusherNormalVelocity) {
  const Vec2 point(0.03, 0.01), normal(-1, 0), vp(-0.02, 0.001);
  const PushResponse r = push_response(point, normal, vp, 1.0, 0.05);
  ASSERT_EQ(r.mode, ContactMode::kSticking);
  const Vec2 vc(r.twist.x() - r.twist.z() * point.y(), r.twist.y() + r.twist.z() * point.x());
  EXPECT_NEAR((vc - vp).norm(), 0.0, 1e-12);
}

TEST(PushResponse, SlidingKeepsNormalVelocity) {
  const Vec2 point(0.03, 0.0), normal(-1, 0), vp(-0.01, 0.02);
  const PushResponse r = push_response(point, normal, vp, 0.05, 0.05);
  ASSERT_TRUE(r.mode == ContactMode::kSlidingLeft || r.mode == ContactMode::kSlidingRight);
  const Vec2 vc(r.twist.x() - r.twist.z() * point.y(), r.twist.y() + r.twist.z() * point.x());
  EXPECT_NEAR(normal.dot(vc), normal.dot(vp), 1e-12);
}

TEST(PushResponse, MoreFrictionNeverBreaksSticking) {
  Rng rng = make_stream(2, 4);
  const std::vector<double> mus{0.01, 0.05, 0.1, 0.2, 0.4, 0.8, 1.5, 3.0};
  int sticking_seen = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec2 point(0.03, 0.16 * (uniform01(rng) - 0.5));
    const Vec2 normal(-1, 0);
    const double ang = (uniform01(rng) - 0.5) * std::numbers::pi * 0.95;
    const Vec2 vp(-std::cos(ang), std::sin(ang));
    bool stuck = false;
    for (double mu : mus) {
      const bool now = push_response(point, normal, vp, mu, 0.05).mode == ContactMode::kSticking;
      if (stuck) {
        EXPECT_TRUE(now) << "mu " << mu << " trial " << i;
      }
      stuck = stuck || now;
    }
    sticking_seen += stuck;
  }
  EXPECT_GT(sticking_seen, 100);
}

TEST(SeparateFromPusher, ResolvesOverlap) {
  SceneModel scene;
  const Vec3 pusher(0.035, 0.0, 0.05);
  const Pose out = separate_from_pusher(kRest, pusher, scene);
  const PusherContact c = pusher_contact({out.position().x(), out.position().y(), 0.0}, pusher.head<2>(), scene);
  EXPECT_LE(c.depth, 1e-12);
  EXPECT_EQ(separate_from_pusher(kRest, Vec3(0.5, 0.5, 0.05), scene), kRest);
}

TEST(Backend, RejectsBadSubstep) { EXPECT_THROW(PusherSliderBackend(SceneModel{}, 0.0), PhysicsError); }
