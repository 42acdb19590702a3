#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "phystrack/harness.hpp"
#include "phystrack/text.hpp"

using namespace phystrack;
namespace fs = std::filesystem;

namespace {

ErrorSeries constant_series(double value, std::size_t n, double dt = 0.02) {
  ErrorSeries s;
  for (std::size_t k = 0; k < n; ++k) {
    s.times.push_back(dt * k);
    s.positional.push_back(value);
    s.rotational.push_back(2 * value);
  }
  return s;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = fs::temp_directory_path() / ("phystrack_test_" + tag + "_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::remove_all(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

// Small clear-view experiment: a short push, every method, a few runs.
ExperimentConfig small_experiment(const fs::path& out) {
  ExperimentConfig cfg;
  Scenario s;
  s.name = "small";
  s.duration = 1.6;
  s.script = {{Vec2(0.04, 0.0), 1.6}};
  s.pusher_start = Vec3(-0.05, 0.0, 0.05);
  cfg.scenario = s;
  cfg.runs = 3;
  cfg.seed = 5;
  cfg.out_dir = out;
  cfg.method_configs.pbpf.particles = 20;
  cfg.method_configs.cvpf.particles = 40;
  return cfg;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Aggregate, ConstantSequence) {
  const ErrorSeries s = constant_series(0.1, 50);
  const MethodAggregate a = aggregate(Method::kSnapshot, std::span(&s, 1));
  EXPECT_NEAR(a.pos_mean, 0.1, 1e-15);
  EXPECT_NEAR(a.pos_std, 0.0, 1e-15);
  EXPECT_NEAR(a.rot_mean, 0.2, 1e-15);
  EXPECT_EQ(a.runs, 1u);
  for (double h : a.pos_step_half_width) EXPECT_EQ(h, 0.0);
}

TEST(Aggregate, TwoRunsClosedForm) {
  const std::vector<ErrorSeries> runs{constant_series(0.1, 10), constant_series(0.3, 10)};
  const MethodAggregate a = aggregate(Method::kPbpf, runs);
  EXPECT_NEAR(a.pos_mean, 0.2, 1e-15);
  const double s = std::sqrt(0.02);  // sample std of {0.1, 0.3}
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_NEAR(a.pos_step_mean[k], 0.2, 1e-15);
    EXPECT_NEAR(a.pos_step_half_width[k], 1.96 * s / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(a.pos_step_half_width[k], 0.196, 1e-12);
  }
  // Pooled sample std over 20 values, half 0.1 and half 0.3.
  EXPECT_NEAR(a.pos_std, std::sqrt(20 * 0.01 / 19), 1e-12);
}

TEST(Aggregate, ErrorsOnEmptyOrMisalignedInput) {
  try {
    aggregate(Method::kPbpf, std::span<const ErrorSeries>{});
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "aggregate: no error sequences");
  }
  const std::vector<ErrorSeries> runs{constant_series(0.1, 10), constant_series(0.1, 10, 0.04)};
  try {
    aggregate(Method::kPbpf, runs);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "aggregate: misaligned time grids");
  }
  const std::vector<ErrorSeries> ragged{constant_series(0.1, 10), constant_series(0.1, 9)};
  EXPECT_THROW(aggregate(Method::kPbpf, ragged), std::invalid_argument);
}

TEST(Aggregate, InvariantToRunOrder) {
  Rng rng = make_stream(4, 4);
  std::vector<ErrorSeries> runs;
  for (int r = 0; r < 6; ++r) {
    ErrorSeries s = constant_series(0.0, 30);
    for (double& v : s.positional) v = uniform01(rng);
    for (double& v : s.rotational) v = uniform01(rng);
    runs.push_back(s);
  }
  const MethodAggregate a = aggregate(Method::kCvpf, runs);
  std::reverse(runs.begin(), runs.end());
  std::swap(runs[1], runs[4]);
  const MethodAggregate b = aggregate(Method::kCvpf, runs);
  EXPECT_NEAR(a.pos_mean, b.pos_mean, 1e-14);
  EXPECT_NEAR(a.pos_std, b.pos_std, 1e-14);
  EXPECT_NEAR(a.rot_std, b.rot_std, 1e-14);
  for (std::size_t k = 0; k < 30; ++k) {
    EXPECT_NEAR(a.pos_step_mean[k], b.pos_step_mean[k], 1e-14);
    EXPECT_NEAR(a.rot_step_half_width[k], b.rot_step_half_width[k], 1e-14);
  }
}

TEST(ParseMethods, AcceptsSubsetsAndRejectsUnknown) {
  EXPECT_EQ(parse_methods("pbpf, snapshot"), (std::vector<Method>{Method::kPbpf, Method::kSnapshot}));
  EXPECT_THROW(parse_methods("pbpf,ekf"), std::invalid_argument);
}

TEST(ExperimentConfig, ValidationRejectsEmptyOrDuplicateMethods) {
  ExperimentConfig cfg;
  cfg.methods.clear();
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.methods = {Method::kPbpf, Method::kPbpf};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ExperimentConfig{};
  cfg.runs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(RunExperiment, PerfectSnapshotHasZeroError) {
  TempDir dir("perfect");
  ExperimentConfig cfg = small_experiment(dir.path());
  cfg.runs = 1;
  cfg.methods = {Method::kSnapshot};
  cfg.scenario.observer.noise = NoiseSpec{};
  cfg.scenario.observer.outlier_rate = 0.0;
  const AggregateReport r = run_experiment(cfg);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.at(Method::kSnapshot).pos_mean, 0.0);
  EXPECT_EQ(r.at(Method::kSnapshot).rot_mean, 0.0);
  EXPECT_THROW(r.at(Method::kPbpf), std::out_of_range);
}

TEST(RunExperiment, SameSeedGivesByteIdenticalReports) {
  TempDir a("det_a"), b("det_b");
  ExperimentConfig cfg = small_experiment(a.path());
  cfg.workers = 3;
  run_experiment(cfg);
  cfg.out_dir = b.path();
  cfg.workers = 1;
  run_experiment(cfg);
  for (const char* name : {"aggregate.csv", "timeseries.csv", "run_000_errors.csv", "run_002.log", "manifest.txt"}) {
    EXPECT_EQ(read_text_file(a.path() / name), read_text_file(b.path() / name)) << name;
  }
}

TEST(RunExperiment, ManifestListsEveryArtifact) {
  TempDir dir("manifest");
  const AggregateReport r = run_experiment(small_experiment(dir.path()));
  const auto listed = lines_of(read_text_file(dir.path() / "manifest.txt"));
  EXPECT_EQ(listed.back(), "manifest.txt");
  std::set<std::string> on_disk;
  for (const auto& e : fs::directory_iterator(dir.path())) on_disk.insert(e.path().filename().string());
  EXPECT_EQ(std::set<std::string>(listed.begin(), listed.end()), on_disk);
  EXPECT_EQ(listed.size(), r.artifacts.size());
  EXPECT_TRUE(on_disk.contains("aggregate.csv"));
  EXPECT_TRUE(on_disk.contains("run_001_errors.csv"));
}

TEST(RunExperiment, AggregateIsRecomputableFromPerRunCsvs) {
  TempDir dir("recompute");
  const ExperimentConfig cfg = small_experiment(dir.path());
  const AggregateReport r = run_experiment(cfg);
  std::map<std::string, std::vector<double>> pos, rot;
  for (std::size_t run = 0; run < cfg.runs; ++run) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%03zu_errors.csv", run);
    const auto rows = lines_of(read_text_file(dir.path() / name));
    ASSERT_EQ(rows.front(), "t,method,pos_err_m,rot_err_rad");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto cells = split(rows[i], ',');
      pos[std::string(cells[1])].push_back(parse_double(cells[2]));
      rot[std::string(cells[1])].push_back(parse_double(cells[3]));
    }
  }
  const auto agg_rows = lines_of(read_text_file(dir.path() / "aggregate.csv"));
  ASSERT_EQ(agg_rows.front(), "method,pos_mean,pos_std,rot_mean,rot_std");
  ASSERT_EQ(agg_rows.size(), 4u);
  for (std::size_t i = 1; i < agg_rows.size(); ++i) {
    const auto cells = split(agg_rows[i], ',');
    const std::string m(cells[0]);
    auto stats = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= v.size();
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      return std::pair(mean, std::sqrt(ss / (v.size() - 1)));
    };
    const auto [pm, ps] = stats(pos[m]);
    const auto [rm, rs] = stats(rot[m]);
    EXPECT_NEAR(parse_double(cells[1]), pm, 1e-9) << m;
    EXPECT_NEAR(parse_double(cells[2]), ps, 1e-9) << m;
    EXPECT_NEAR(parse_double(cells[3]), rm, 1e-9) << m;
    EXPECT_NEAR(parse_double(cells[4]), rs, 1e-9) << m;
    EXPECT_NEAR(r.at(method_from_string(m)).pos_mean, pm, 1e-9);
  }
}

TEST(RunExperiment, FailedRunsAreReportedAndExcluded) {
  TempDir dir("fail");
  ExperimentConfig cfg = small_experiment(dir.path());
  cfg.methods = {Method::kPbpf};
  // Occluding the first frame makes every filter replay fail to initialize.
  cfg.scenario.observer.occlusion_windows = {{0.0, 0.1}};
  const AggregateReport r = run_experiment(cfg);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.failures.size(), 3u);
  EXPECT_TRUE(r.methods.empty());
  EXPECT_TRUE(fs::exists(dir.path() / "failures.csv"));
  EXPECT_NE(r.failures[0].message.find("cannot initialize without an observation"), std::string::npos);
}

TEST(RunExperiment, UnwritableOutputDirectoryIsReported) {
  TempDir dir("blocked");
  fs::create_directories(dir.path());
  { std::ofstream(dir.path() / "file") << "x"; }
  ExperimentConfig cfg = small_experiment(dir.path() / "file" / "sub");
  try {
    run_experiment(cfg);
    FAIL();
  } catch (const OutputError& e) {
    EXPECT_NE(std::string(e.what()).find("is not writable"), std::string::npos);
  }
}

TEST(GenerateLogs, WritesLogsAndManifest) {
  TempDir dir("gen");
  ExperimentConfig cfg = small_experiment(dir.path());
  const auto paths = generate_logs(cfg);
  ASSERT_EQ(paths.size(), 4u);
  EXPECT_EQ(paths.back().filename(), "manifest.txt");
  const RunLog log = RunLog::parse(read_text_file(paths[1]));
  EXPECT_EQ(log.seed, 6u);
  EXPECT_EQ(log.scenario_name, "small");
}

TEST(MethodSeed, DistinctPerMethodAndRun) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t run = 1; run <= 10; ++run) {
    for (Method m : {Method::kPbpf, Method::kCvpf, Method::kSnapshot}) seeds.insert(method_seed(run, m));
  }
  EXPECT_EQ(seeds.size(), 30u);
}
