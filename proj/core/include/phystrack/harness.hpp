#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "phystrack/config.hpp"
#include "phystrack/scenario.hpp"

namespace phystrack {

/// Output directory missing and not creatable, or a file in it not writable.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Scenario scenario = preset_scenario("scene1");
  std::vector<Method> methods{Method::kPbpf, Method::kCvpf, Method::kSnapshot};
  std::size_t runs = 10;
  std::uint64_t seed = 1;  // run r uses scenario seed = seed + r
  std::filesystem::path out_dir = "out";
  MethodConfigs method_configs;
  std::size_t workers = 1;  // runs processed concurrently

  /// Throws std::invalid_argument on zero runs, an empty or duplicated
  /// method set, or an invalid scenario or method config.
  void validate() const;
};

/// "pbpf,cvpf" -> methods. Unknown names throw std::invalid_argument.
std::vector<Method> parse_methods(std::string_view list);

/// Full text form of a config: scenario sections plus [experiment], [pbpf]
/// and [cvpf]. The output directory is not part of the file.
std::string format_experiment(const ExperimentConfig& cfg);
/// Overlays a config file on `base`. Throws ConfigError.
ExperimentConfig parse_experiment(std::string_view text, ExperimentConfig base);

/// One method's errors on one run, sampled at every log frame.
struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> positional;
  std::vector<double> rotational;
};

ErrorSeries error_series(const ReplayResult& r);

struct MethodAggregate {
  Method method = Method::kSnapshot;
  std::size_t runs = 0;
  // Pooled over every run and frame; sample standard deviations.
  double pos_mean = 0.0;
  double pos_std = 0.0;
  double rot_mean = 0.0;
  double rot_std = 0.0;
  // Per frame across runs: mean and 95% normal-approximation half-width
  // 1.96 * s / sqrt(runs).
  std::vector<double> times;
  std::vector<double> pos_step_mean;
  std::vector<double> pos_step_half_width;
  std::vector<double> rot_step_mean;
  std::vector<double> rot_step_half_width;
};

/// Throws std::invalid_argument on empty input or runs whose time grids
/// differ.
MethodAggregate aggregate(Method method, std::span<const ErrorSeries> runs);

struct RunTiming {
  Method method = Method::kSnapshot;
  std::size_t run = 0;
  std::size_t updates = 0;
  std::size_t skipped_updates = 0;
  std::size_t degenerate_updates = 0;
  double mean_step_seconds = 0.0;
  double max_step_seconds = 0.0;
};

struct RunFailure {
  std::size_t run = 0;
  std::string message;
};

struct AggregateReport {
  std::vector<MethodAggregate> methods;  // in ExperimentConfig order
  std::vector<RunTiming> timings;
  std::vector<RunFailure> failures;
  std::vector<std::filesystem::path> artifacts;  // as listed in the manifest

  /// Throws std::out_of_range if the method was not run.
  const MethodAggregate& at(Method m) const;
  bool ok() const noexcept { return failures.empty(); }
};

/// Seed of `method` on the run whose scenario seed is `run_seed`.
std::uint64_t method_seed(std::uint64_t run_seed, Method method);

/// Generates every run, replays each method on it and aggregates. Failed runs
/// are reported and left out of the aggregate. When `write_artifacts` is set
/// the output directory receives run logs, per-run error CSVs,
/// aggregate.csv, timeseries.csv, timing.csv and, last, manifest.txt.
AggregateReport run_experiment(const ExperimentConfig& cfg, bool write_artifacts = true);

/// Writes run_NNN.log for every run without replaying anything. Returns the
/// written paths (manifest last).
std::vector<std::filesystem::path> generate_logs(const ExperimentConfig& cfg);

/// `t,method,pos_err_m,rot_err_rad` rows for the given replays.
std::string errors_csv(std::span<const ReplayResult> results);
/// `method,pos_mean,pos_std,rot_mean,rot_std` rows.
std::string aggregate_csv(std::span<const MethodAggregate> methods);
std::string timeseries_csv(std::span<const MethodAggregate> methods);

/// Creates `dir` if needed and checks that it accepts files.
void prepare_output_dir(const std::filesystem::path& dir);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace phystrack
