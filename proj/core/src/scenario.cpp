#include "phystrack/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "phystrack/config.hpp"
#include "phystrack/text.hpp"

namespace phystrack {

namespace {

constexpr std::uint64_t kObserverTag = 0x4f42'5345'5256'4552ULL;

// Frame count for a duration, rejecting durations the period does not divide.
std::size_t frames_in(double duration, double period) {
  const double n = duration / period;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-6 * std::max(1.0, r)) {
    throw std::invalid_argument("frame_period must divide the scenario duration");
  }
  return static_cast<std::size_t>(r);
}

// Exact pusher position (planar offset from the start) at time t.
Vec2 scripted_offset(const std::vector<PushSegment>& script, double t) {
  Vec2 offset = Vec2::Zero();
  double t0 = 0.0;
  for (const PushSegment& seg : script) {
    const double span = std::clamp(t - t0, 0.0, seg.duration);
    offset += seg.velocity * span;
    t0 += seg.duration;
    if (t <= t0) break;
  }
  return offset;
}

// 2D segment versus oriented rectangle.
bool segment_hits_rect(const Vec2& a, const Vec2& b, const Rect2& r) {
  const double c = std::cos(r.yaw), s = std::sin(r.yaw);
  auto local = [&](const Vec2& p) {
    const Vec2 d = p - r.center;
    return Vec2(c * d.x() + s * d.y(), -s * d.x() + c * d.y());
  };
  const Vec2 p = local(a);
  const Vec2 d = local(b) - p;
  double lo = 0.0, hi = 1.0;
  for (int axis = 0; axis < 2; ++axis) {
    const double h = r.half_extents(axis);
    if (std::abs(d(axis)) < 1e-15) {
      if (std::abs(p(axis)) > h) return false;
      continue;
    }
    double t1 = (-h - p(axis)) / d(axis);
    double t2 = (h - p(axis)) / d(axis);
    if (t1 > t2) std::swap(t1, t2);
    lo = std::max(lo, t1);
    hi = std::min(hi, t2);
    if (lo > hi) return false;
  }
  return true;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

std::vector<TimeWindow> merge_windows(std::vector<TimeWindow> windows) {
  std::sort(windows.begin(), windows.end(), [](const TimeWindow& a, const TimeWindow& b) { return a.start < b.start; });
  std::vector<TimeWindow> out;
  for (const TimeWindow& w : windows) {
    if (!out.empty() && w.start <= out.back().end) {
      out.back().end = std::max(out.back().end, w.end);
    } else {
      out.push_back(w);
    }
  }
  return out;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t stride_for(double dt, double frame_period, std::string_view who) {
  const double n = dt / frame_period;
  const double r = std::round(n);
  if (r < 1.0 || std::abs(n - r) > 1e-6 * r) {
    throw ScenarioError(std::string(who) + " dt must be a positive multiple of the log frame period");
  }
  return static_cast<std::size_t>(r);
}

Observation observation_at(const RunLog& log, std::size_t k) {
  return {log.records[k].time, log.records[k].observation};
}

// Shared by the presets: one synthetic estimator whose failures (gross
// misdetections) cluster around occlusions, and a centered push along +x.
Scenario base_preset(std::string name) {
  Scenario s;
  s.name = std::move(name);
  s.duration = 15.0;
  s.pusher_start = Vec3(-0.05, 0.0, 0.05);
  s.observer.frame_period = 0.02;
  s.observer.noise = {0.005, 0.03};
  s.observer.outlier_rate = 0.3;
  s.observer.outlier_magnitude = {2.0, 0.8};
  s.observer.outlier_margin = 0.5;
  s.script = {{Vec2(0.05, 0.0), 3.2}, {Vec2(0.03, 0.0), 3.2}, {Vec2(0.06, 0.0), 3.2},
              {Vec2(0.04, 0.0), 2.4}, {Vec2(0.05, 0.0), 3.0}};
  return s;
}

}  // namespace

std::string_view to_string(OcclusionModel m) {
  switch (m) {
    case OcclusionModel::kNone: return "none";
    case OcclusionModel::kClutter: return "clutter";
    case OcclusionModel::kHand: return "hand";
  }
  return "none";
}

OcclusionModel occlusion_model_from_string(std::string_view s) {
  if (s == "none") return OcclusionModel::kNone;
  if (s == "clutter") return OcclusionModel::kClutter;
  if (s == "hand") return OcclusionModel::kHand;
  throw std::invalid_argument("unknown occlusion model '" + std::string(s) + "'");
}

void Scenario::validate() const {
  scene.validate();
  observer.validate();
  if (!(duration > 0.0) || !std::isfinite(duration)) throw std::invalid_argument("duration must be > 0");
  frames_in(duration, observer.frame_period);
  if (!script.empty()) {
    double total = 0.0;
    for (const PushSegment& seg : script) {
      if (!(seg.duration > 0.0) || !seg.velocity.allFinite()) {
        throw std::invalid_argument("script segments need a finite velocity and a positive duration");
      }
      total += seg.duration;
    }
    if (std::abs(total - duration) > 1e-9 * std::max(1.0, duration)) {
      throw std::invalid_argument("script durations must sum to the scenario duration");
    }
  }
  if (!(hand_radius > 0.0)) throw std::invalid_argument("hand_radius must be > 0");
  if (!camera.allFinite() || !pusher_start.allFinite() || !initial_object.position().allFinite()) {
    throw std::invalid_argument("scenario coordinates must be finite");
  }
}

std::size_t Scenario::frame_count() const { return frames_in(duration, observer.frame_period) + 1; }

std::vector<Control> Scenario::frame_controls() const {
  const std::size_t n = frame_count();
  const double fp = observer.frame_period;
  std::vector<Control> out;
  out.reserve(n - 1);
  Vec3 pusher = pusher_start;
  Vec2 prev = Vec2::Zero();
  for (std::size_t k = 1; k < n; ++k) {
    const Vec2 next = scripted_offset(script, static_cast<double>(k) * fp);
    Control c;
    c.pusher_start = pusher;
    c.displacement = Vec3(next.x() - prev.x(), next.y() - prev.y(), 0.0);
    c.duration = fp;
    out.push_back(c);
    pusher += c.displacement;
    prev = next;
  }
  return out;
}

std::string scenario_hash(const Scenario& s) {
  IniDocument doc;
  write_scenario(doc, s);
  doc.add("experiment", "seed", std::to_string(s.seed));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(doc.format())));
  return buf;
}

std::vector<std::string> preset_names() { return {"scene1", "scene2", "scene3"}; }

Scenario preset_scenario(std::string_view name) {
  if (name == "scene1") {
    // Thin clutter (bottles) between the camera and the path hides the
    // object briefly, right where the push speed changes.
    Scenario s = base_preset("scene1");
    s.scene.obstacles = {{Vec2(0.202, -0.3), Vec2(0.005, 0.005), 0.0},
                         {Vec2(0.4036, -0.3), Vec2(0.005, 0.005), 0.0},
                         {Vec2(0.524, -0.3), Vec2(0.005, 0.005), 0.0}};
    s.occlusion = OcclusionModel::kClutter;
    s.camera = Vec2(0.3, -1.0);
    return s;
  }
  if (name == "scene2") {
    // Camera behind and left of the push: the hand drifts into the line of
    // sight as the object advances, and leaves when it retreats sideways.
    Scenario s = base_preset("scene2");
    s.script = {{Vec2(0.05, 0.0), 11.2}, {Vec2(-0.03, 0.08), 1.6}, {Vec2(0.0, 0.0), 2.2}};
    s.occlusion = OcclusionModel::kHand;
    s.camera = Vec2(-0.2, -0.5);
    s.hand_radius = 0.03;
    return s;
  }
  if (name == "scene3") return base_preset("scene3");
  throw ScenarioError("unknown scene preset '" + std::string(name) + "'");
}

std::vector<bool> geometric_occlusion(const Scenario& scenario, const std::vector<Pose>& truth,
                                      const std::vector<Vec3>& pusher) {
  std::vector<bool> mask(truth.size(), false);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const Vec2 obj = truth[k].position().head<2>();
    switch (scenario.occlusion) {
      case OcclusionModel::kNone:
        break;
      case OcclusionModel::kClutter:
        for (const Rect2& r : scenario.scene.obstacles) {
          if (segment_hits_rect(scenario.camera, obj, r)) {
            mask[k] = true;
            break;
          }
        }
        break;
      case OcclusionModel::kHand:
        if (k < pusher.size()) {
          mask[k] = point_segment_distance(pusher[k].head<2>(), scenario.camera, obj) < scenario.hand_radius;
        }
        break;
    }
  }
  return mask;
}

RunLog generate_run(const Scenario& scenario) {
  try {
    scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("invalid scenario: ") + e.what());
  }
  const std::vector<Control> controls = scenario.frame_controls();
  const std::size_t n = controls.size() + 1;
  const double fp = scenario.observer.frame_period;

  std::vector<Pose> truth;
  std::vector<Vec3> pusher;
  truth.reserve(n);
  pusher.reserve(n);
  truth.push_back(scenario.initial_object);
  pusher.push_back(scenario.pusher_start);
  for (std::size_t k = 1; k < n; ++k) {
    const Control& c = controls[k - 1];
    try {
      truth.push_back(step(truth.back(), c, scenario.true_params, scenario.scene, kGroundTruthSubstep));
    } catch (const PhysicsError& e) {
      throw ScenarioError("physics failure at step " + std::to_string(k) + ": " + e.what());
    }
    pusher.push_back(c.pusher_end());
  }

  ObserverSpec spec = scenario.observer;
  if (scenario.occlusion != OcclusionModel::kNone) {
    std::vector<TimeWindow> windows = spec.occlusion_windows;
    const auto derived = windows_from_mask(geometric_occlusion(scenario, truth, pusher), fp);
    windows.insert(windows.end(), derived.begin(), derived.end());
    spec.occlusion_windows = merge_windows(std::move(windows));
  }

  RunLog log;
  log.scenario_name = scenario.name;
  log.scenario_hash = scenario_hash(scenario);
  log.seed = scenario.seed;
  log.frame_period = fp;
  log.scene = scenario.scene;
  log.pusher_start = scenario.pusher_start;
  log.records.reserve(n);
  Rng rng = make_stream(scenario.seed, kObserverTag);
  for (std::size_t k = 0; k < n; ++k) {
    RunRecord r;
    r.time = static_cast<double>(k) * fp;
    if (k > 0) r.control = controls[k - 1].displacement;
    r.truth = truth[k];
    r.observation = observe(truth[k], r.time, spec, rng).pose;
    log.records.push_back(std::move(r));
  }
  return log;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kPbpf: return "pbpf";
    case Method::kCvpf: return "cvpf";
    case Method::kSnapshot: return "snapshot";
  }
  return "snapshot";
}

Method method_from_string(std::string_view s) {
  if (s == "pbpf") return Method::kPbpf;
  if (s == "cvpf") return Method::kCvpf;
  if (s == "snapshot") return Method::kSnapshot;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

ReplayResult replay(const RunLog& log, Method method, const MethodConfigs& configs, std::uint64_t seed) {
  if (log.records.empty()) throw ScenarioError("run log has no records");
  const std::size_t n = log.records.size();
  ReplayResult out;
  out.method = method;
  out.times.reserve(n);
  out.estimates.reserve(n);

  using Clock = std::chrono::steady_clock;
  double total_seconds = 0.0;
  auto timed = [&](auto&& fn) {
    const auto t0 = Clock::now();
    fn();
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    total_seconds += s;
    out.max_step_seconds = std::max(out.max_step_seconds, s);
  };
  auto note = [&](const StepReport& r) {
    ++out.updates;
    if (r.skipped) ++out.skipped_updates;
    if (r.degenerate) ++out.degenerate_updates;
  };

  switch (method) {
    case Method::kSnapshot: {
      SnapshotState state;
      for (std::size_t k = 0; k < n; ++k) {
        timed([&] { out.estimates.push_back(snapshot_track(observation_at(log, k), state)); });
        ++out.updates;
        if (!log.records[k].observation) ++out.skipped_updates;
      }
      break;
    }
    case Method::kPbpf: {
      FilterConfig cfg = configs.pbpf;
      cfg.seed = seed;
      const std::size_t stride = stride_for(cfg.dt, log.frame_period, "pbpf");
      PhysicsParticleFilter filter(cfg, log.scene);
      const std::vector<Vec3> pusher = log.pusher_positions();
      Pose current = filter.initialize(observation_at(log, 0));
      out.estimates.push_back(current);
      for (std::size_t k = 1; k < n; ++k) {
        if (k % stride == 0) {
          StepReport r;
          timed([&] { r = filter.step(log.control_between(pusher, k - stride, k), observation_at(log, k)); });
          note(r);
          current = r.estimate;
        }
        out.estimates.push_back(current);
      }
      break;
    }
    case Method::kCvpf: {
      CvpfConfig cfg = configs.cvpf;
      cfg.seed = seed;
      const std::size_t stride = stride_for(cfg.dt, log.frame_period, "cvpf");
      ConstantVelocityFilter filter(cfg);
      Pose current = filter.initialize(observation_at(log, 0));
      out.estimates.push_back(current);
      for (std::size_t k = 1; k < n; ++k) {
        if (k % stride == 0) {
          StepReport r;
          timed([&] { r = filter.step(observation_at(log, k)); });
          note(r);
          current = r.estimate;
        }
        out.estimates.push_back(current);
      }
      break;
    }
  }

  out.errors.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    out.times.push_back(log.records[k].time);
    out.errors.push_back(pose_error(out.estimates[k], log.records[k].truth));
  }
  if (out.updates > 0) out.mean_step_seconds = total_seconds / static_cast<double>(out.updates);
  return out;
}

}  // namespace phystrack
