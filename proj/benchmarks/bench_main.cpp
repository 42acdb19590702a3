#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "phystrack/filter.hpp"
#include "phystrack/geometry.hpp"
#include "phystrack/physics.hpp"

using namespace phystrack;

namespace {

Control push() {
  Control c;
  c.pusher_start = Vec3(0.05, 0.01, 0.05);
  c.displacement = Vec3(-0.02, 0.0, 0.0);
  c.duration = 0.16;
  return c;
}

const Pose kRest(Vec3(0.0, 0.0, 0.105), Quat::Identity());

}  // namespace

// One 0.16 s rollout at a given sub-step (microseconds).
static void BM_Step(benchmark::State& state) {
  const double dt_sub = static_cast<double>(state.range(0)) * 1e-6;
  const SceneModel scene;
  const PhysicsParams params(0.3, 0.4, 0.5, 0.38);
  const Control c = push();
  for (auto _ : state) benchmark::DoNotOptimize(step(kRest, c, params, scene, dt_sub));
}
BENCHMARK(BM_Step)->Arg(2000)->Arg(100);

// Full motion update of a particle set; range(0) particles, range(1) workers.
static void BM_MotionUpdate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto workers = static_cast<std::size_t>(state.range(1));
  std::vector<std::unique_ptr<PhysicsBackend>> backends;
  for (std::size_t i = 0; i < n; ++i) backends.push_back(std::make_unique<PusherSliderBackend>(SceneModel{}));
  InitNoise spread;
  spread.sigma_pos = Vec3(0.01, 0.01, 0.0);
  spread.sigma_rot = 0.0;
  const ParticleSet ps = init_particles(kRest, n, spread, 1);
  std::uint64_t s = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(motion_update(ps, push(), ParamPrior{}, NoiseSpec{0.005, 0.05}, backends, 1, ++s, workers));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MotionUpdate)->Args({70, 1})->Args({70, 4})->Args({200, 1})->UseRealTime();

static void BM_QuatAverage(benchmark::State& state) {
  Rng rng = make_stream(1, 2);
  std::vector<Quat> qs;
  for (int i = 0; i < state.range(0); ++i) qs.push_back(sample_rotation_noise(0.3, rng));
  for (auto _ : state) benchmark::DoNotOptimize(quat_average(qs));
}
BENCHMARK(BM_QuatAverage)->Arg(70)->Arg(200);

BENCHMARK_MAIN();
