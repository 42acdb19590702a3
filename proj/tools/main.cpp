// phystrack: generate synthetic pushing runs, replay trackers on them and
// compare the methods.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phystrack/harness.hpp"
#include "phystrack/text.hpp"

namespace fs = std::filesystem;
using namespace phystrack;

namespace {

enum Exit { kOk = 0, kRunFailure = 1, kUsage = 2 };

struct Options {
  std::string scene = "scene1";
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> methods;
  std::optional<std::string> out;
  std::optional<std::size_t> particles;
  std::optional<double> dt;
  std::optional<std::size_t> workers;
  std::string log;
};

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig cfg;
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), o.scene) != names.end()) {
    cfg.scenario = preset_scenario(o.scene);
  } else if (fs::is_regular_file(o.scene)) {
    cfg = parse_experiment(read_text_file(o.scene), cfg);
  } else {
    throw ConfigError("'" + o.scene + "' is neither a scene preset nor a readable config file");
  }
  if (o.runs) cfg.runs = *o.runs;
  if (o.seed) cfg.seed = *o.seed;
  if (o.methods) cfg.methods = parse_methods(*o.methods);
  if (o.out) cfg.out_dir = *o.out;
  if (o.particles) cfg.method_configs.pbpf.particles = *o.particles;
  if (o.dt) cfg.method_configs.pbpf.dt = *o.dt;
  if (o.workers) cfg.workers = *o.workers;
  return cfg;
}

void print_summary(const std::vector<MethodAggregate>& methods) {
  std::printf("%-9s %12s %12s %12s %12s\n", "method", "pos_mean_m", "pos_std_m", "rot_mean_rad", "rot_std_rad");
  for (const MethodAggregate& a : methods) {
    std::printf("%-9s %12.6f %12.6f %12.6f %12.6f\n", std::string(to_string(a.method)).c_str(), a.pos_mean,
                a.pos_std, a.rot_mean, a.rot_std);
  }
}

int cmd_generate(const Options& o) {
  ExperimentConfig cfg = resolve(o);
  const auto paths = generate_logs(cfg);
  std::printf("wrote %zu run log(s) to %s\n", paths.size() - 1, cfg.out_dir.string().c_str());
  return kOk;
}

int cmd_compare(const Options& o) {
  ExperimentConfig cfg = resolve(o);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const AggregateReport report = run_experiment(cfg);
  print_summary(report.methods);
  for (const RunFailure& f : report.failures) std::fprintf(stderr, "error: run %zu failed: %s\n", f.run, f.message.c_str());
  std::printf("artifacts in %s\n", cfg.out_dir.string().c_str());
  return report.ok() ? kOk : kRunFailure;
}

int cmd_replay(const Options& o) {
  ExperimentConfig cfg = resolve(o);
  const RunLog log = RunLog::parse(read_text_file(o.log));
  std::vector<ReplayResult> results;
  std::vector<MethodAggregate> aggregates;
  for (Method m : cfg.methods) {
    results.push_back(replay(log, m, cfg.method_configs, method_seed(log.seed, m)));
    const ErrorSeries s = error_series(results.back());
    aggregates.push_back(aggregate(m, std::span(&s, 1)));
  }
  print_summary(aggregates);
  if (o.out) {
    prepare_output_dir(cfg.out_dir);
    write_text_file(cfg.out_dir / "replay_errors.csv", errors_csv(results));
    write_text_file(cfg.out_dir / "replay_aggregate.csv", aggregate_csv(aggregates));
    write_text_file(cfg.out_dir / "manifest.txt", "replay_errors.csv\nreplay_aggregate.csv\nmanifest.txt\n");
  }
  return kOk;
}

int cmd_dump_defaults(const Options& o) {
  std::cout << format_experiment(resolve(o));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-based particle filter pose tracking: synthetic runs and method comparison"};
  app.require_subcommand(0, 1);
  Options o;
  bool dump_flag = false;
  app.add_flag("--dump-defaults", dump_flag, "Print the default configuration and exit");
  app.add_option("--scene", o.scene, "Scene preset (scene1, scene2, scene3) or config file");

  auto add_common = [&o](CLI::App* sub, bool methods) {
    sub->add_option("--scene", o.scene, "Scene preset (scene1, scene2, scene3) or config file");
    sub->add_option("--runs", o.runs, "Number of seeded runs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "Master seed; run r uses seed + r");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--workers", o.workers, "Runs processed concurrently")->check(CLI::PositiveNumber);
    if (methods) {
      sub->add_option("--methods", o.methods, "Comma-separated subset of pbpf,cvpf,snapshot");
      sub->add_option("--particles", o.particles, "PBPF particle count")->check(CLI::PositiveNumber);
      sub->add_option("--dt", o.dt, "PBPF update interval in seconds")->check(CLI::PositiveNumber);
    }
  };

  CLI::App* generate = app.add_subcommand("generate", "Write seeded run logs for a scene");
  add_common(generate, false);
  CLI::App* compare = app.add_subcommand("compare", "Generate runs, replay every method and aggregate errors");
  add_common(compare, true);
  CLI::App* replay_cmd = app.add_subcommand("replay", "Replay methods on one recorded run log");
  add_common(replay_cmd, true);
  replay_cmd->add_option("--log", o.log, "Run log to replay")->required();
  CLI::App* dump = app.add_subcommand("dump-defaults", "Print the full configuration for a scene");
  dump->add_option("--scene", o.scene, "Scene preset or config file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (dump_flag || dump->parsed()) return cmd_dump_defaults(o);
    if (generate->parsed()) return cmd_generate(o);
    if (compare->parsed()) return cmd_compare(o);
    if (replay_cmd->parsed()) return cmd_replay(o);
    std::cerr << app.help();
    return kUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const OutputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const RunLogParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRunFailure;
  }
}
