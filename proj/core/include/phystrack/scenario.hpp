#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phystrack/baselines.hpp"
#include "phystrack/filter.hpp"
#include "phystrack/geometry.hpp"
#include "phystrack/observer.hpp"
#include "phystrack/physics.hpp"
#include "phystrack/run_log.hpp"

namespace phystrack {

/// Constant-velocity pusher motion on the support plane.
struct PushSegment {
  Vec2 velocity = Vec2::Zero();  // m/s
  double duration = 0.0;         // s
  friend bool operator==(const PushSegment&, const PushSegment&) = default;
};

/// How occlusion windows are produced on top of any explicit windows.
enum class OcclusionModel {
  kNone,     // only the observer's explicit windows
  kClutter,  // camera ray to the object crosses an obstacle footprint
  kHand,     // camera ray to the object passes within hand_radius of the pusher
};

std::string_view to_string(OcclusionModel m);
OcclusionModel occlusion_model_from_string(std::string_view s);

struct Scenario {
  std::string name = "custom";
  SceneModel scene;
  PhysicsParams true_params{0.3, 0.4, 0.5, 0.38};
  Pose initial_object = Pose(Vec3(0.0, 0.0, 0.105), Quat::Identity());
  Vec3 pusher_start = Vec3(-0.06, 0.0, 0.05);
  std::vector<PushSegment> script;
  ObserverSpec observer;
  OcclusionModel occlusion = OcclusionModel::kNone;
  Vec2 camera = Vec2(0.0, -1.0);
  double hand_radius = 0.05;
  std::uint64_t seed = 1;
  double duration = 15.0;  // s

  /// Throws std::invalid_argument when a non-empty script does not sum to
  /// `duration`, the frame period does not divide it, or any component is
  /// invalid.
  void validate() const;
  std::size_t frame_count() const;  // records, including t = 0

  /// Per-frame pusher controls; element k-1 moves the pusher from frame k-1
  /// to frame k. Pusher positions are accumulated from the per-frame
  /// displacements so a log replay reproduces them bit-exactly.
  std::vector<Control> frame_controls() const;
};

/// 16 hex digits of FNV-1a over the canonical scenario text. Any field change
/// (seed included) changes the hash.
std::string scenario_hash(const Scenario& s);

/// Desk-scale analogues of the three reference scenes.
Scenario preset_scenario(std::string_view name);
std::vector<std::string> preset_names();

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ground truth at the fine sub-step plus synthetic observations, one record
/// per frame. Physics failures abort with the offending frame index.
RunLog generate_run(const Scenario& scenario);

/// Occlusion mask per frame for the scenario's geometric occlusion model.
std::vector<bool> geometric_occlusion(const Scenario& scenario, const std::vector<Pose>& truth,
                                      const std::vector<Vec3>& pusher);

enum class Method { kPbpf, kCvpf, kSnapshot };

std::string_view to_string(Method m);
/// Throws std::invalid_argument("unknown method '<name>'").
Method method_from_string(std::string_view s);

struct MethodConfigs {
  FilterConfig pbpf;
  CvpfConfig cvpf;
};

struct ReplayResult {
  Method method = Method::kSnapshot;
  std::vector<double> times;           // log frame times
  std::vector<Pose> estimates;         // most recent estimate at or before each time
  std::vector<PoseError> errors;       // against the log's ground truth
  std::size_t updates = 0;             // filter updates performed
  std::size_t skipped_updates = 0;     // updates without an observation
  std::size_t degenerate_updates = 0;  // updates that hit the likelihood floor
  double mean_step_seconds = 0.0;
  double max_step_seconds = 0.0;
};

/// Feeds the log's controls and observations to `method` on its own update
/// grid and reports estimates aligned to every log frame. `seed` keys the
/// method's random streams. The first frame must carry an observation.
ReplayResult replay(const RunLog& log, Method method, const MethodConfigs& configs, std::uint64_t seed);

}  // namespace phystrack
