#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phystrack/geometry.hpp"
#include "phystrack/random.hpp"

namespace phystrack {

using Vec2 = Eigen::Vector2d;

class PhysicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMinFriction = 0.001;
inline constexpr double kMinMass = 0.05;  // kg

/// Physical parameters of the pushed object. Values are clamped to their
/// floors on construction: friction >= 0.001, mass >= 0.05 kg, restitution in
/// [0, 1].
class PhysicsParams {
 public:
  PhysicsParams() : PhysicsParams(0.1, 0.1, 0.9, 0.38) {}
  PhysicsParams(double contact_friction, double support_friction, double restitution, double mass);

  double contact_friction() const noexcept { return contact_friction_; }
  double support_friction() const noexcept { return support_friction_; }
  double restitution() const noexcept { return restitution_; }
  double mass() const noexcept { return mass_; }

  friend bool operator==(const PhysicsParams&, const PhysicsParams&) = default;

 private:
  double contact_friction_;
  double support_friction_;
  double restitution_;
  double mass_;
};

struct GaussianPrior {
  double mean = 0.0;
  double std = 0.0;
  friend bool operator==(const GaussianPrior&, const GaussianPrior&) = default;
};

/// Independent Gaussian prior over each PhysicsParams field.
struct ParamPrior {
  GaussianPrior contact_friction{0.1, 0.3};
  GaussianPrior support_friction{0.1, 0.3};
  GaussianPrior restitution{0.9, 0.2};
  GaussianPrior mass{0.38, 0.5};

  void validate() const;
  /// All standard deviations zero, centered on `p`.
  static ParamPrior exact(const PhysicsParams& p);
  friend bool operator==(const ParamPrior&, const ParamPrior&) = default;
};

/// Draws each field from its prior, then applies the PhysicsParams caps.
PhysicsParams sample_params(const ParamPrior& prior, Rng& rng);

/// End-effector motion executed over one control interval. The pusher moves
/// on a straight line from `pusher_start` to `pusher_start + displacement`
/// (world frame) at constant speed.
struct Control {
  Vec3 pusher_start = Vec3::Zero();
  Vec3 displacement = Vec3::Zero();
  double yaw_delta = 0.0;  // pusher heading change; unused by a round pusher
  double duration = 0.0;   // seconds

  void validate() const;
  Vec3 pusher_end() const { return pusher_start + displacement; }
};

/// Oriented rectangle on the support plane.
struct Rect2 {
  Vec2 center = Vec2::Zero();
  Vec2 half_extents = Vec2(0.05, 0.05);
  double yaw = 0.0;
  friend bool operator==(const Rect2&, const Rect2&) = default;
};

struct SceneModel {
  Vec2 object_half_extents = Vec2(0.03, 0.08);  // meters
  double object_height = 0.21;                  // meters
  double pusher_radius = 0.015;                 // meters
  double gravity = 9.81;                        // m/s^2
  std::vector<Rect2> obstacles;                 // collision-only footprints

  void validate() const;

  /// Mean distance from the centroid over the footprint, (1/A) ∫∫ |r| dA, for
  /// a uniform pressure distribution.
  double mean_contact_radius() const;

  friend bool operator==(const SceneModel&, const SceneModel&) = default;
};

/// Object pose reduced to the support plane.
struct PlanarPose {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
};

/// Disk-versus-footprint contact query. `normal` is the unit direction in the
/// object frame along which the object must move to separate, `point` the
/// contact point on the footprint boundary (object frame). depth <= 0 means no
/// contact.
struct PusherContact {
  double depth = 0.0;
  Vec2 point = Vec2::Zero();
  Vec2 normal = Vec2::UnitX();
};

PusherContact pusher_contact(const PlanarPose& object, const Vec2& pusher_center, const SceneModel& scene);

enum class ContactMode { kSeparating, kSticking, kSlidingLeft, kSlidingRight };

/// Object-frame twist (vx, vy, omega) of a quasi-static slider pushed at
/// `point` with inward normal `normal` by a pusher moving at `pusher_velocity`
/// (object frame). Uses the ellipsoidal limit surface with moment-to-force
/// ratio `ls_ratio`; the normal velocity of the contact point matches the
/// pusher's.
struct PushResponse {
  ContactMode mode = ContactMode::kSeparating;
  Eigen::Vector3d twist = Eigen::Vector3d::Zero();
};

PushResponse push_response(const Vec2& point, const Vec2& normal, const Vec2& pusher_velocity,
                           double contact_friction, double ls_ratio);

/// Limit-surface moment-to-force ratio tau_max / f_max for the scene and
/// parameters. tau_max = mu_s m g r_mean, f_max = mu_s m g.
double limit_surface_ratio(const SceneModel& scene, const PhysicsParams& params);

/// Translates the object the minimum distance needed so the pusher disk at
/// `pusher` no longer overlaps its footprint. Returns the input unchanged when
/// there is no overlap.
Pose separate_from_pusher(const Pose& state, const Vec3& pusher, const SceneModel& scene);

/// Quasi-static pusher–slider integration of one control interval in
/// sub-steps of dt_sub. Deterministic and planar: z, roll, and pitch are
/// preserved. Throws PhysicsError on dt_sub <= 0, dt_sub not dividing the
/// duration, or when the pusher starts inside the object ("initial
/// penetration").
Pose step(const Pose& state, const Control& control, const PhysicsParams& params, const SceneModel& scene,
          double dt_sub);

inline constexpr double kDefaultSubstep = 0.002;       // seconds
inline constexpr double kGroundTruthSubstep = 1e-4;    // seconds
inline constexpr double kPenetrationTolerance = 1e-7;  // meters

/// Physics engine seam. One instance is created per particle; instances hold
/// no mutable state.
class PhysicsBackend {
 public:
  virtual ~PhysicsBackend() = default;
  virtual Pose predict(const Pose& state, const Control& control, const PhysicsParams& params) const = 0;
  virtual const SceneModel& scene() const = 0;
};

class PusherSliderBackend final : public PhysicsBackend {
 public:
  explicit PusherSliderBackend(SceneModel scene, double dt_sub = kDefaultSubstep);

  Pose predict(const Pose& state, const Control& control, const PhysicsParams& params) const override;
  const SceneModel& scene() const override { return scene_; }
  double substep() const noexcept { return dt_sub_; }

 private:
  SceneModel scene_;
  double dt_sub_;
};

}  // namespace phystrack
