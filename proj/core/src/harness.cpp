#include "phystrack/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "phystrack/parallel.hpp"
#include "phystrack/text.hpp"

namespace phystrack {

namespace fs = std::filesystem;

namespace {

constexpr double kZ95 = 1.96;

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation; zero for a single value.
double std_of(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string run_name(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%03zu", r);
  return buf;
}

struct RunOutcome {
  bool ok = false;
  std::string error;
  RunLog log;
  std::vector<ReplayResult> results;  // one per method
};

RunOutcome execute_run(const ExperimentConfig& cfg, std::size_t r) {
  RunOutcome out;
  try {
    Scenario s = cfg.scenario;
    s.seed = cfg.seed + r;
    out.log = generate_run(s);
    for (Method m : cfg.methods) out.results.push_back(replay(out.log, m, cfg.method_configs, method_seed(s.seed, m)));
    out.ok = true;
  } catch (const std::exception& e) {
    out.error = e.what();
    out.results.clear();
  }
  return out;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (runs < 1) throw std::invalid_argument("run count must be >= 1");
  if (methods.empty()) throw std::invalid_argument("method set must not be empty");
  std::set<Method> seen(methods.begin(), methods.end());
  if (seen.size() != methods.size()) throw std::invalid_argument("method set contains duplicates");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  scenario.validate();
  method_configs.pbpf.validate();
  method_configs.cvpf.validate();
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  for (std::string_view tok : split(list, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    out.push_back(method_from_string(tok));
  }
  return out;
}

std::string format_experiment(const ExperimentConfig& cfg) {
  IniDocument doc;
  write_scenario(doc, cfg.scenario);
  std::string methods;
  for (Method m : cfg.methods) {
    if (!methods.empty()) methods += ',';
    methods += to_string(m);
  }
  doc.add("experiment", "methods", methods);
  doc.add("experiment", "runs", std::to_string(cfg.runs));
  doc.add("experiment", "seed", std::to_string(cfg.seed));
  doc.add("experiment", "workers", std::to_string(cfg.workers));
  write_filter_config(doc, cfg.method_configs.pbpf);
  write_cvpf_config(doc, cfg.method_configs.cvpf);
  return doc.format();
}

ExperimentConfig parse_experiment(std::string_view text, ExperimentConfig base) {
  const IniDocument doc = IniDocument::parse(text);
  static const std::set<std::string, std::less<>> known{"scenario", "scene",      "object", "true_params", "script",
                                                        "observer", "experiment", "pbpf",   "cvpf"};
  for (const IniSection& s : doc.sections()) {
    if (!known.contains(s.name)) throw ConfigError(s.line, "unknown section [" + s.name + "]");
  }
  ExperimentConfig cfg = std::move(base);
  cfg.scenario = read_scenario(doc, cfg.scenario);
  cfg.method_configs.pbpf = read_filter_config(doc, cfg.method_configs.pbpf);
  cfg.method_configs.cvpf = read_cvpf_config(doc, cfg.method_configs.cvpf);
  if (const IniSection* s = doc.find("experiment")) {
    for (const IniEntry& e : s->entries) {
      try {
        if (e.key == "methods") {
          cfg.methods = parse_methods(e.value);
        } else if (e.key == "runs") {
          const long long v = parse_int(e.value);
          if (v < 1) throw std::invalid_argument("must be >= 1");
          cfg.runs = static_cast<std::size_t>(v);
        } else if (e.key == "seed") {
          const long long v = parse_int(e.value);
          if (v < 0) throw std::invalid_argument("must be >= 0");
          cfg.seed = static_cast<std::uint64_t>(v);
        } else if (e.key == "workers") {
          const long long v = parse_int(e.value);
          if (v < 1) throw std::invalid_argument("must be >= 1");
          cfg.workers = static_cast<std::size_t>(v);
        } else {
          throw ConfigError(e.line, "unknown key '" + e.key + "' in [experiment]");
        }
      } catch (const std::invalid_argument& ex) {
        throw ConfigError(e.line, "key '" + e.key + "': " + ex.what());
      }
    }
  }
  return cfg;
}

ErrorSeries error_series(const ReplayResult& r) {
  ErrorSeries s;
  s.times = r.times;
  s.positional.reserve(r.errors.size());
  s.rotational.reserve(r.errors.size());
  for (const PoseError& e : r.errors) {
    s.positional.push_back(e.positional);
    s.rotational.push_back(e.rotational);
  }
  return s;
}

MethodAggregate aggregate(Method method, std::span<const ErrorSeries> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no error sequences");
  const std::vector<double>& grid = runs.front().times;
  if (grid.empty()) throw std::invalid_argument("aggregate: empty error sequence");
  for (const ErrorSeries& s : runs) {
    if (s.times != grid) throw std::invalid_argument("aggregate: misaligned time grids");
    if (s.positional.size() != grid.size() || s.rotational.size() != grid.size()) {
      throw std::invalid_argument("aggregate: error sequence length differs from its time grid");
    }
  }

  MethodAggregate out;
  out.method = method;
  out.runs = runs.size();
  out.times = grid;

  std::vector<double> pooled_pos, pooled_rot;
  pooled_pos.reserve(runs.size() * grid.size());
  pooled_rot.reserve(runs.size() * grid.size());
  for (const ErrorSeries& s : runs) {
    pooled_pos.insert(pooled_pos.end(), s.positional.begin(), s.positional.end());
    pooled_rot.insert(pooled_rot.end(), s.rotational.begin(), s.rotational.end());
  }
  out.pos_mean = mean_of(pooled_pos);
  out.pos_std = std_of(pooled_pos, out.pos_mean);
  out.rot_mean = mean_of(pooled_rot);
  out.rot_std = std_of(pooled_rot, out.rot_mean);

  const double root_n = std::sqrt(static_cast<double>(runs.size()));
  std::vector<double> column(runs.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r].positional[k];
    double m = mean_of(column);
    out.pos_step_mean.push_back(m);
    out.pos_step_half_width.push_back(kZ95 * std_of(column, m) / root_n);
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r].rotational[k];
    m = mean_of(column);
    out.rot_step_mean.push_back(m);
    out.rot_step_half_width.push_back(kZ95 * std_of(column, m) / root_n);
  }
  return out;
}

const MethodAggregate& AggregateReport::at(Method m) const {
  for (const MethodAggregate& a : methods) {
    if (a.method == m) return a;
  }
  throw std::out_of_range("method '" + std::string(to_string(m)) + "' not in report");
}

std::uint64_t method_seed(std::uint64_t run_seed, Method method) {
  return derive_seed(run_seed, 0x4d45'5448ULL, static_cast<std::uint64_t>(method));
}

std::string errors_csv(std::span<const ReplayResult> results) {
  std::string out = "t,method,pos_err_m,rot_err_rad\n";
  for (const ReplayResult& r : results) {
    const std::string name(to_string(r.method));
    for (std::size_t k = 0; k < r.errors.size(); ++k) {
      out += format_double(r.times[k]) + ',' + name + ',' + format_double(r.errors[k].positional) + ',' +
             format_double(r.errors[k].rotational) + '\n';
    }
  }
  return out;
}

std::string aggregate_csv(std::span<const MethodAggregate> methods) {
  std::string out = "method,pos_mean,pos_std,rot_mean,rot_std\n";
  for (const MethodAggregate& a : methods) {
    out += std::string(to_string(a.method)) + ',' + format_double(a.pos_mean) + ',' + format_double(a.pos_std) + ',' +
           format_double(a.rot_mean) + ',' + format_double(a.rot_std) + '\n';
  }
  return out;
}

std::string timeseries_csv(std::span<const MethodAggregate> methods) {
  std::string out =
      "# per-frame mean over runs; band = mean +/- half_width, half_width = 1.96 * s / sqrt(runs) "
      "(normal approximation, s = sample std across runs)\n"
      "t,method,runs,pos_mean,pos_half_width,rot_mean,rot_half_width\n";
  for (const MethodAggregate& a : methods) {
    const std::string head = ',' + std::string(to_string(a.method)) + ',' + std::to_string(a.runs) + ',';
    for (std::size_t k = 0; k < a.times.size(); ++k) {
      out += format_double(a.times[k]) + head + format_double(a.pos_step_mean[k]) + ',' +
             format_double(a.pos_step_half_width[k]) + ',' + format_double(a.rot_step_mean[k]) + ',' +
             format_double(a.rot_step_half_width[k]) + '\n';
    }
  }
  return out;
}

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw OutputError("output directory '" + dir.string() + "' is not writable: " +
                      (ec ? ec.message() : std::string("not a directory")));
  }
  const fs::path probe = dir / ".phystrack-write-probe";
  {
    std::ofstream f(probe);
    if (!f) throw OutputError("output directory '" + dir.string() + "' is not writable");
  }
  fs::remove(probe, ec);
}

void write_text_file(const fs::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw OutputError("cannot write '" + path.string() + "'");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw OutputError("cannot write '" + path.string() + "'");
}

std::string read_text_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

AggregateReport run_experiment(const ExperimentConfig& cfg, bool write_artifacts) {
  cfg.validate();
  if (write_artifacts) prepare_output_dir(cfg.out_dir);

  std::vector<RunOutcome> outcomes(cfg.runs);
  parallel_for(cfg.runs, cfg.workers, [&](std::size_t r) { outcomes[r] = execute_run(cfg, r); });

  AggregateReport report;
  auto emit = [&](const std::string& name, const std::string& text) {
    const fs::path p = cfg.out_dir / name;
    if (write_artifacts) write_text_file(p, text);
    report.artifacts.push_back(name);
  };

  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const RunOutcome& o = outcomes[r];
    if (!o.ok) {
      report.failures.push_back({r, o.error});
      continue;
    }
    emit(run_name(r) + ".log", o.log.serialize());
    emit(run_name(r) + "_errors.csv", errors_csv(o.results));
    for (const ReplayResult& res : o.results) {
      report.timings.push_back({res.method, r, res.updates, res.skipped_updates, res.degenerate_updates,
                                res.mean_step_seconds, res.max_step_seconds});
    }
  }

  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    std::vector<ErrorSeries> series;
    for (const RunOutcome& o : outcomes) {
      if (o.ok) series.push_back(error_series(o.results[i]));
    }
    if (!series.empty()) report.methods.push_back(aggregate(cfg.methods[i], series));
  }

  emit("aggregate.csv", aggregate_csv(report.methods));
  emit("timeseries.csv", timeseries_csv(report.methods));
  {
    std::string t = "run,method,updates,skipped_updates,degenerate_updates,mean_step_s,max_step_s\n";
    for (const RunTiming& x : report.timings) {
      t += std::to_string(x.run) + ',' + std::string(to_string(x.method)) + ',' + std::to_string(x.updates) + ',' +
           std::to_string(x.skipped_updates) + ',' + std::to_string(x.degenerate_updates) + ',' +
           format_double(x.mean_step_seconds) + ',' + format_double(x.max_step_seconds) + '\n';
    }
    emit("timing.csv", t);
  }
  if (!report.failures.empty()) {
    std::string t = "run,error\n";
    for (const RunFailure& f : report.failures) t += std::to_string(f.run) + ",\"" + f.message + "\"\n";
    emit("failures.csv", t);
  }
  {
    std::string m;
    for (const fs::path& p : report.artifacts) m += p.string() + '\n';
    m += "manifest.txt\n";
    emit("manifest.txt", m);
  }
  return report;
}

std::vector<fs::path> generate_logs(const ExperimentConfig& cfg) {
  cfg.scenario.validate();
  if (cfg.runs < 1) throw std::invalid_argument("run count must be >= 1");
  prepare_output_dir(cfg.out_dir);
  std::vector<std::string> texts(cfg.runs);
  parallel_for(cfg.runs, cfg.workers, [&](std::size_t r) {
    Scenario s = cfg.scenario;
    s.seed = cfg.seed + r;
    texts[r] = generate_run(s).serialize();
  });
  std::vector<fs::path> out;
  std::string manifest;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const std::string name = run_name(r) + ".log";
    write_text_file(cfg.out_dir / name, texts[r]);
    out.push_back(cfg.out_dir / name);
    manifest += name + '\n';
  }
  manifest += "manifest.txt\n";
  write_text_file(cfg.out_dir / "manifest.txt", manifest);
  out.push_back(cfg.out_dir / "manifest.txt");
  return out;
}

}  // namespace phystrack
