#include "phystrack/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "phystrack/text.hpp"

namespace phystrack {

namespace {

// Quaternions already unit to within this squared-norm slack are kept as-is,
// which makes parse -> serialize of stored poses exact.
constexpr double kUnitSlack = 1e-13;

Quat normalized_or_throw(const Quat& q) {
  const double n2 = q.squaredNorm();
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw std::invalid_argument("orientation quaternion must be finite and non-zero");
  }
  if (std::abs(n2 - 1.0) <= kUnitSlack) return q;
  return Quat(q.coeffs() / std::sqrt(n2));
}

}  // namespace

Pose::Pose(const Vec3& position, const Quat& orientation)
    : position_(position), orientation_(normalized_or_throw(orientation)) {}

void Pose::set_orientation(const Quat& q) { orientation_ = normalized_or_throw(q); }

Pose Pose::inverse() const {
  const Quat qi = orientation_.conjugate();
  return Pose(-(qi * position_), qi);
}

Pose pose_compose(const Pose& a, const Pose& b) {
  return Pose(a.position() + a.orientation() * b.position(), a.orientation() * b.orientation());
}

double rotation_distance(const Quat& a, const Quat& b) {
  // 2*acos(|<a,b>|), evaluated through atan2 so small angles keep full
  // precision. The scalar part of a*b^-1 is exactly <a,b>.
  const Quat rel = a * b.conjugate();
  const double s = rel.vec().norm();
  const double c = std::abs(rel.w());
  return 2.0 * std::atan2(s, c);
}

PoseError pose_error(const Pose& estimate, const Pose& truth) {
  return {(estimate.position() - truth.position()).norm(),
          rotation_distance(truth.orientation(), estimate.orientation())};
}

void NoiseSpec::validate() const {
  if (!(sigma_pos >= 0.0) || !(sigma_rot >= 0.0)) {
    throw std::invalid_argument("noise standard deviations must be >= 0");
  }
}

Quat axis_angle(const Vec3& axis, double angle) {
  return Quat(Eigen::AngleAxisd(angle, axis.normalized()));
}

Quat sample_rotation_noise(double sigma_rot, Rng& rng) {
  Vec3 axis;
  double n = 0.0;
  do {
    axis = Vec3(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    n = axis.norm();
  } while (n < 1e-12);
  const double angle = sigma_rot * standard_normal(rng);
  return Quat(Eigen::AngleAxisd(angle, axis / n));
}

Pose perturb_pose(const Pose& p, const NoiseSpec& noise, Rng& rng) {
  if (noise.is_zero()) return p;
  Pose out = p;
  if (noise.sigma_pos > 0.0) {
    const Vec3 d(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    out.set_position(p.position() + noise.sigma_pos * d);
  }
  if (noise.sigma_rot > 0.0) {
    out.set_orientation(sample_rotation_noise(noise.sigma_rot, rng) * p.orientation());
  }
  return out;
}

SymmetricEigen4 symmetric_eigen4(const Eigen::Matrix4d& m) {
  Eigen::Matrix4d a = 0.5 * (m + m.transpose());
  Eigen::Matrix4d v = Eigen::Matrix4d::Identity();
  const double scale = a.squaredNorm();

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 4; ++p)
      for (int q = p + 1; q < 4; ++q) off += a(p, q) * a(p, q);
    if (off == 0.0 || off <= 1e-32 * scale) break;

    for (int p = 0; p < 4; ++p) {
      for (int q = p + 1; q < 4; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 4; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 4; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (int k = 0; k < 4; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) > a(j, j); });
  SymmetricEigen4 out;
  for (int k = 0; k < 4; ++k) {
    out.values(k) = a(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

Quat quat_average(std::span<const Quat> quats, std::span<const double> weights) {
  if (quats.empty()) throw std::invalid_argument("empty rotation set");
  if (!weights.empty() && weights.size() != quats.size()) {
    throw std::invalid_argument("quat_average: weights and rotations differ in length");
  }

  Eigen::Matrix4d acc = Eigen::Matrix4d::Zero();
  double total = 0.0;
  for (std::size_t i = 0; i < quats.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("quat_average: weights must be >= 0");
    const Quat& q = quats[i];
    const Eigen::Vector4d v(q.w(), q.x(), q.y(), q.z());
    acc.noalias() += (w / q.squaredNorm()) * (v * v.transpose());
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("quat_average: weights are all zero");
  acc /= total;

  const SymmetricEigen4 eig = symmetric_eigen4(acc);
  int pick = 0;
  // Degenerate top eigenspace: prefer the basis vector closest to identity.
  const double tie_tol = 1e-12 * std::max(std::abs(eig.values(0)), 1e-300);
  for (int k = 1; k < 4 && eig.values(0) - eig.values(k) <= tie_tol; ++k) {
    if (std::abs(eig.vectors(0, k)) > std::abs(eig.vectors(0, pick))) pick = k;
  }
  Eigen::Vector4d v = eig.vectors.col(pick).normalized();
  int lead = 0;
  while (lead < 3 && std::abs(v(lead)) < 1e-15) ++lead;
  if (v(lead) < 0.0) v = -v;
  return Quat(v(0), v(1), v(2), v(3));
}

double planar_yaw(const Quat& q) {
  const Vec3 bx = q * Vec3::UnitX();
  if (std::hypot(bx.x(), bx.y()) > 1e-9) return std::atan2(bx.y(), bx.x());
  const Vec3 by = q * Vec3::UnitY();
  return std::atan2(by.y(), by.x()) - M_PI / 2.0;
}

bool same_rotation(const Quat& a, const Quat& b, double tol) { return rotation_distance(a, b) <= tol; }

std::string format_pose(const Pose& p) {
  const Vec3& t = p.position();
  const Quat& q = p.orientation();
  std::string out;
  for (double v : {t.x(), t.y(), t.z(), q.w(), q.x(), q.y(), q.z()}) {
    if (!out.empty()) out += ' ';
    out += format_double(v);
  }
  return out;
}

}  // namespace phystrack
