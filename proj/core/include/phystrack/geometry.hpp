#pragma once

#include <span>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "phystrack/random.hpp"

namespace phystrack {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Rigid object pose: position in meters plus a unit quaternion.
///
/// The orientation is renormalized whenever it is set, so every Pose holds a
/// unit quaternion. q and -q describe the same rotation; use pose_error() or
/// same_rotation() for comparisons rather than component equality.
class Pose {
 public:
  Pose() = default;
  Pose(const Vec3& position, const Quat& orientation);

  static Pose identity() { return {}; }

  const Vec3& position() const noexcept { return position_; }
  const Quat& orientation() const noexcept { return orientation_; }

  void set_position(const Vec3& p) noexcept { position_ = p; }
  void set_orientation(const Quat& q);

  Pose inverse() const;

  /// Exact component equality (no sign folding). Used for determinism checks.
  friend bool operator==(const Pose& a, const Pose& b) noexcept {
    return a.position_ == b.position_ && a.orientation_.coeffs() == b.orientation_.coeffs();
  }

 private:
  Vec3 position_ = Vec3::Zero();
  Quat orientation_ = Quat::Identity();
};

/// Rigid composition a∘b: b expressed in a's frame, mapped to the world.
Pose pose_compose(const Pose& a, const Pose& b);

struct PoseError {
  double positional = 0.0;  // meters
  double rotational = 0.0;  // radians, [0, pi]
};

/// Geodesic angle of q_a * q_b^-1, folded to [0, pi].
double rotation_distance(const Quat& a, const Quat& b);

PoseError pose_error(const Pose& estimate, const Pose& truth);

/// Standard deviations for pose noise. Rotation noise is an angle about a
/// uniformly random axis.
struct NoiseSpec {
  double sigma_pos = 0.0;  // meters
  double sigma_rot = 0.0;  // radians

  void validate() const;
  bool is_zero() const noexcept { return sigma_pos == 0.0 && sigma_rot == 0.0; }
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

Quat axis_angle(const Vec3& axis, double angle);

/// Rotation about a uniform random axis by a signed angle ~ N(0, sigma^2).
Quat sample_rotation_noise(double sigma_rot, Rng& rng);

/// Adds isotropic Gaussian position noise and pre-multiplies the orientation
/// by a sampled rotation. Zero noise returns p bit-exactly without drawing.
Pose perturb_pose(const Pose& p, const NoiseSpec& noise, Rng& rng);

/// Weighted quaternion mean: the principal eigenvector of sum_i w_i q_i q_i^T.
///
/// Invariant to input order and to the sign of every input. The result is
/// returned with w >= 0. An empty `weights` span means uniform weights.
/// Throws std::invalid_argument on an empty set ("empty rotation set"),
/// mismatched sizes, negative weights, or all-zero weights.
Quat quat_average(std::span<const Quat> quats, std::span<const double> weights = {});

/// Symmetric 4x4 eigen-decomposition by cyclic Jacobi rotations. Eigenvalues
/// come back in descending order with matching eigenvector columns.
struct SymmetricEigen4 {
  Eigen::Vector4d values;
  Eigen::Matrix4d vectors;
};
SymmetricEigen4 symmetric_eigen4(const Eigen::Matrix4d& m);

/// Yaw of the body x-axis projected onto the support plane.
double planar_yaw(const Quat& q);

/// True if both describe the same rotation within `tol` radians.
bool same_rotation(const Quat& a, const Quat& b, double tol = 1e-9);

/// `px py pz qw qx qy qz` with shortest round-trip decimal formatting.
std::string format_pose(const Pose& p);

}  // namespace phystrack
