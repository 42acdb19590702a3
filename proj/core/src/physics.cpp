#include "phystrack/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace phystrack {

namespace {

// Penetration below this is treated as resting contact.
constexpr double kContactSlop = 1e-12;

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

Eigen::Matrix2d rot2(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

PlanarPose to_planar(const Pose& p) {
  return {p.position().x(), p.position().y(), planar_yaw(p.orientation())};
}

void check_finite(const Vec3& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + " must be finite");
}

// Object-frame twist generated by a unit contact force f applied at q.
Eigen::Vector3d force_twist(const Vec2& q, const Vec2& f, double ls_ratio) {
  return {f.x(), f.y(), cross2(q, f) / (ls_ratio * ls_ratio)};
}

Vec2 contact_velocity(const Eigen::Vector3d& twist, const Vec2& q) {
  return {twist.x() - twist.z() * q.y(), twist.y() + twist.z() * q.x()};
}

// Minimum translation separating `obj` from `obs`, or zero if disjoint.
Vec2 obstacle_mtv(const PlanarPose& obj, const Vec2& obj_half, const Rect2& obs) {
  const Eigen::Matrix2d ra = rot2(obj.yaw);
  const Eigen::Matrix2d rb = rot2(obs.yaw);
  const Vec2 d = obs.center - Vec2(obj.x, obj.y);
  double best = std::numeric_limits<double>::infinity();
  Vec2 best_axis = Vec2::Zero();
  for (int k = 0; k < 4; ++k) {
    const Vec2 axis = k < 2 ? Vec2(ra.col(k)) : Vec2(rb.col(k - 2));
    const double ra_ext = obj_half.x() * std::abs(ra.col(0).dot(axis)) + obj_half.y() * std::abs(ra.col(1).dot(axis));
    const double rb_ext =
        obs.half_extents.x() * std::abs(rb.col(0).dot(axis)) + obs.half_extents.y() * std::abs(rb.col(1).dot(axis));
    const double dc = d.dot(axis);
    const double overlap = ra_ext + rb_ext - std::abs(dc);
    if (overlap <= 0.0) return Vec2::Zero();
    if (overlap < best) {
      best = overlap;
      best_axis = dc >= 0.0 ? Vec2(-axis) : axis;
    }
  }
  return best * best_axis;
}

}  // namespace

PhysicsParams::PhysicsParams(double contact_friction, double support_friction, double restitution, double mass)
    : contact_friction_(std::max(contact_friction, kMinFriction)),
      support_friction_(std::max(support_friction, kMinFriction)),
      restitution_(std::clamp(restitution, 0.0, 1.0)),
      mass_(std::max(mass, kMinMass)) {
  if (!std::isfinite(contact_friction) || !std::isfinite(support_friction) || !std::isfinite(restitution) ||
      !std::isfinite(mass)) {
    throw std::invalid_argument("physics parameters must be finite");
  }
}

void ParamPrior::validate() const {
  for (const GaussianPrior* g : {&contact_friction, &support_friction, &restitution, &mass}) {
    if (!std::isfinite(g->mean) || !(g->std >= 0.0)) {
      throw std::invalid_argument("parameter prior needs finite means and std >= 0");
    }
  }
}

ParamPrior ParamPrior::exact(const PhysicsParams& p) {
  return {{p.contact_friction(), 0.0}, {p.support_friction(), 0.0}, {p.restitution(), 0.0}, {p.mass(), 0.0}};
}

PhysicsParams sample_params(const ParamPrior& prior, Rng& rng) {
  auto draw = [&rng](const GaussianPrior& g) { return g.std > 0.0 ? g.mean + g.std * standard_normal(rng) : g.mean; };
  const double cf = draw(prior.contact_friction);
  const double sf = draw(prior.support_friction);
  const double re = draw(prior.restitution);
  const double m = draw(prior.mass);
  return {cf, sf, re, m};
}

void Control::validate() const {
  check_finite(pusher_start, "control pusher_start");
  check_finite(displacement, "control displacement");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw std::invalid_argument("control duration must be > 0");
}

void SceneModel::validate() const {
  if (!(object_half_extents.x() > 0.0) || !(object_half_extents.y() > 0.0) || !(object_height > 0.0) ||
      !(pusher_radius > 0.0) || !(gravity > 0.0)) {
    throw std::invalid_argument("scene extents, pusher radius and gravity must be > 0");
  }
  for (const Rect2& r : obstacles) {
    if (!(r.half_extents.x() > 0.0) || !(r.half_extents.y() > 0.0)) {
      throw std::invalid_argument("obstacle extents must be > 0");
    }
  }
}

double SceneModel::mean_contact_radius() const {
  // Quadrant integral of sqrt(x^2 + y^2) over [0,a]x[0,b], divided by ab.
  const double a = object_half_extents.x();
  const double b = object_half_extents.y();
  const double d = std::hypot(a, b);
  const double quadrant = (2.0 * a * b * d + a * a * a * std::log((b + d) / a) + b * b * b * std::log((a + d) / b)) / 6.0;
  return quadrant / (a * b);
}

double limit_surface_ratio(const SceneModel& scene, const PhysicsParams& params) {
  const double normal_load = params.mass() * scene.gravity;
  const double f_max = params.support_friction() * normal_load;
  const double tau_max = params.support_friction() * normal_load * scene.mean_contact_radius();
  return tau_max / f_max;
}

PusherContact pusher_contact(const PlanarPose& object, const Vec2& pusher_center, const SceneModel& scene) {
  const Vec2 half = scene.object_half_extents;
  const Vec2 p = rot2(object.yaw).transpose() * (pusher_center - Vec2(object.x, object.y));
  const double r = scene.pusher_radius;
  PusherContact c;
  if (std::abs(p.x()) <= half.x() && std::abs(p.y()) <= half.y()) {
    // Center inside the footprint: leave through the nearest face.
    const double gx = half.x() - std::abs(p.x());
    const double gy = half.y() - std::abs(p.y());
    if (gx <= gy) {
      const double sx = p.x() >= 0.0 ? 1.0 : -1.0;
      c.point = Vec2(sx * half.x(), p.y());
      c.normal = Vec2(-sx, 0.0);
      c.depth = gx + r;
    } else {
      const double sy = p.y() >= 0.0 ? 1.0 : -1.0;
      c.point = Vec2(p.x(), sy * half.y());
      c.normal = Vec2(0.0, -sy);
      c.depth = gy + r;
    }
    return c;
  }
  const Vec2 closest(std::clamp(p.x(), -half.x(), half.x()), std::clamp(p.y(), -half.y(), half.y()));
  const Vec2 diff = closest - p;
  const double dist = diff.norm();
  c.point = closest;
  c.normal = diff / dist;
  c.depth = r - dist;
  return c;
}

PushResponse push_response(const Vec2& point, const Vec2& normal, const Vec2& pusher_velocity,
                           double contact_friction, double ls_ratio) {
  PushResponse out;
  const double vn = normal.dot(pusher_velocity);
  if (!(vn > 0.0)) return out;

  const Vec2 tangent(-normal.y(), normal.x());
  const Vec2 f_left = normal + contact_friction * tangent;
  const Vec2 f_right = normal - contact_friction * tangent;
  const Eigen::Vector3d tw_left = force_twist(point, f_left, ls_ratio);
  const Eigen::Vector3d tw_right = force_twist(point, f_right, ls_ratio);
  const Vec2 v_left = contact_velocity(tw_left, point);
  const Vec2 v_right = contact_velocity(tw_right, point);

  // Edges ordered counter-clockwise: v_right -> v_left.
  const bool ccw = cross2(v_right, v_left) >= 0.0;
  const Vec2& lo = ccw ? v_right : v_left;
  const Vec2& hi = ccw ? v_left : v_right;
  const bool inside = cross2(lo, pusher_velocity) >= 0.0 && cross2(pusher_velocity, hi) >= 0.0;

  auto edge_twist = [&](const Eigen::Vector3d& tw, const Vec2& vc) -> std::optional<Eigen::Vector3d> {
    const double edge_vn = normal.dot(vc);
    if (!(edge_vn > 1e-12 * vc.norm())) return std::nullopt;
    return Eigen::Vector3d(tw * (vn / edge_vn));
  };

  if (!inside) {
    const bool past_hi = cross2(pusher_velocity, hi) < 0.0;
    const bool use_left = past_hi == ccw;
    const auto tw = use_left ? edge_twist(tw_left, v_left) : edge_twist(tw_right, v_right);
    if (tw) {
      out.mode = use_left ? ContactMode::kSlidingLeft : ContactMode::kSlidingRight;
      out.twist = *tw;
      return out;
    }
  }

  // Sticking: the contact point moves with the pusher.
  const double c2 = ls_ratio * ls_ratio;
  const double px = point.x(), py = point.y();
  const double vpx = pusher_velocity.x(), vpy = pusher_velocity.y();
  const double den = c2 + px * px + py * py;
  const double vx = ((c2 + px * px) * vpx + px * py * vpy) / den;
  const double vy = (px * py * vpx + (c2 + py * py) * vpy) / den;
  out.mode = ContactMode::kSticking;
  out.twist = Eigen::Vector3d(vx, vy, (px * vy - py * vx) / c2);
  return out;
}

Pose separate_from_pusher(const Pose& state, const Vec3& pusher, const SceneModel& scene) {
  const PlanarPose planar = to_planar(state);
  const PusherContact c = pusher_contact(planar, pusher.head<2>(), scene);
  if (c.depth <= 0.0) return state;
  const Vec2 shift = rot2(planar.yaw) * c.normal * c.depth;
  Pose out = state;
  out.set_position(state.position() + Vec3(shift.x(), shift.y(), 0.0));
  return out;
}

Pose step(const Pose& state, const Control& control, const PhysicsParams& params, const SceneModel& scene,
          double dt_sub) {
  if (!(dt_sub > 0.0) || !std::isfinite(dt_sub)) throw PhysicsError("dt_sub must be positive");
  control.validate();
  scene.validate();
  const double ratio = control.duration / dt_sub;
  const long long n = std::llround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-6 * std::max(1.0, ratio)) {
    throw PhysicsError("dt_sub must divide the control duration");
  }

  PlanarPose obj = to_planar(state);
  const double yaw0 = obj.yaw;
  const Vec2 start = control.pusher_start.head<2>();
  const Vec2 travel = control.displacement.head<2>();
  const double mu = params.contact_friction();
  const double ls = limit_surface_ratio(scene, params);

  if (pusher_contact(obj, start, scene).depth > kPenetrationTolerance) {
    throw PhysicsError("initial penetration");
  }

  bool moved = false;
  Vec2 prev = start;
  for (long long i = 1; i <= n; ++i) {
    const Vec2 pusher = start + travel * (static_cast<double>(i) / static_cast<double>(n));
    const Vec2 dp = pusher - prev;
    prev = pusher;

    PusherContact c = pusher_contact(obj, pusher, scene);
    if (c.depth <= kContactSlop) continue;
    moved = true;

    const Eigen::Matrix2d r = rot2(obj.yaw);
    const Vec2 vp = r.transpose() * dp;
    const double vn = c.normal.dot(vp);
    if (vn > 0.0) {
      // Advance along the quasi-static twist just far enough to close the
      // penetration, then remove the second-order residual by translation.
      const PushResponse resp = push_response(c.point, c.normal, vp, mu, ls);
      const Eigen::Vector3d motion = resp.twist * (c.depth / vn);
      const Vec2 dxy = r * motion.head<2>();
      obj.x += dxy.x();
      obj.y += dxy.y();
      obj.yaw += motion.z();
      c = pusher_contact(obj, pusher, scene);
    }
    for (int iter = 0; iter < 4 && c.depth > 0.0; ++iter) {
      const Vec2 shift = rot2(obj.yaw) * c.normal * c.depth;
      obj.x += shift.x();
      obj.y += shift.y();
      c = pusher_contact(obj, pusher, scene);
    }

    for (int pass = 0; pass < 3; ++pass) {
      bool any = false;
      for (const Rect2& obs : scene.obstacles) {
        const Vec2 mtv = obstacle_mtv(obj, scene.object_half_extents, obs);
        if (mtv.x() != 0.0 || mtv.y() != 0.0) {
          obj.x += mtv.x();
          obj.y += mtv.y();
          any = true;
        }
      }
      if (!any) break;
    }
  }

  if (!moved) return state;
  const Vec3 pos(obj.x, obj.y, state.position().z());
  const Quat dq(Eigen::AngleAxisd(obj.yaw - yaw0, Vec3::UnitZ()));
  return Pose(pos, dq * state.orientation());
}

PusherSliderBackend::PusherSliderBackend(SceneModel scene, double dt_sub) : scene_(std::move(scene)), dt_sub_(dt_sub) {
  scene_.validate();
  if (!(dt_sub_ > 0.0)) throw PhysicsError("dt_sub must be positive");
}

Pose PusherSliderBackend::predict(const Pose& state, const Control& control, const PhysicsParams& params) const {
  return step(state, control, params, scene_, dt_sub_);
}

}  // namespace phystrack
