/*
 * Copyright (C) 2026 The simest authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "simest/bench.hpp"
#include "simest/config.hpp"
#include "simest/io.hpp"
#include "simest/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace simest;

namespace {

struct Options {
  std::string config;
  std::string suite;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  double scale = 1.0;
  std::string method;
  std::vector<long> lags;
  std::vector<double> window;
  std::string precomputed;
  bool eval_log = false;
};

RunConfig prepared_config(const fs::path& path, const Options& o) {
  RunConfig cfg = load_run_config(path);
  if (o.seed) override_seeds(cfg, *o.seed);
  if (o.method == "mdn") cfg.method = Method::mdn;
  if (o.method == "kde") cfg.method = Method::kde;
  if (o.lags.size() == 1) cfg.mdn.lag = o.lags.front();
  apply_scale(cfg, o.scale);
  return cfg;
}

fs::path out_dir(const RunConfig& cfg, const Options& o) { return o.out.empty() ? fs::path(cfg.output) : fs::path(o.out); }

std::string stem(const RunConfig& cfg) { return cfg.name + "_" + to_string(cfg.method); }

int cmd_simulate(const Options& o) {
  const RunConfig cfg = prepared_config(o.config, o);
  const TimeSeriesMatrix s = simulate_empirical(cfg);
  const fs::path path = out_dir(cfg, o) / (cfg.name + "_series.csv");
  write_artifact(path, series_csv(s), cfg, "simulate");
  std::cout << "wrote " << path.string() << " (" << s.length() << " rows)\n";
  return 0;
}

/// Runs one estimation and writes its artifacts; returns the summary.
PosteriorSummary estimate_one(const RunConfig& cfg, const Options& o, const fs::path& dir) {
  const TimeSeriesMatrix emp = empirical_series(cfg);
  const EstimationResult r = run_estimation(cfg, emp, o.jobs, o.eval_log);
  std::ostringstream trace, sample;
  write_trace_csv(trace, r.sample);
  write_sample_csv(sample, r.sample);
  write_artifact(dir / (stem(cfg) + "_trace.csv"), trace.str(), cfg, "estimate");
  write_artifact(dir / (stem(cfg) + "_posterior.csv"), sample.str(), cfg, "estimate");
  write_artifact(dir / (stem(cfg) + "_summary.json"), summary_json(cfg, r), cfg, "estimate");
  if (o.eval_log) write_artifact(dir / (stem(cfg) + "_eval_log.csv"), r.eval_log_csv, cfg, "estimate");
  std::cout << stem(cfg) << ": " << r.evaluations << " evaluations";
  if (r.summary.ls) std::cout << ", LS " << format_double(*r.summary.ls);
  for (const auto& [k, v] : break_shifts(r.summary)) std::cout << ", " << k << " " << format_double(v);
  std::cout << '\n';
  return r.summary;
}

int cmd_estimate(const Options& o) {
  const RunConfig cfg = prepared_config(o.config, o);
  estimate_one(cfg, o, out_dir(cfg, o));
  return 0;
}

int cmd_lag_scan(const Options& o) {
  RunConfig cfg = prepared_config(o.config, o);
  if (!cfg.lag_scan && o.window.empty()) throw ConfigError("lag_scan: block missing and no --window given");
  LagScanSpec& spec = cfg.lag_scan.emplace(cfg.lag_scan.value_or(LagScanSpec{}));
  if (!o.lags.empty()) spec.lags = o.lags;
  if (!o.window.empty()) {
    spec.window = Eigen::Map<const VectorXd>(o.window.data(), static_cast<Eigen::Index>(o.window.size()));
  }
  const LagScanResult r = lag_scan(lag_scan_config(cfg));

  const fs::path dir = out_dir(cfg, o);
  std::ostringstream curves, tv;
  write_lag_curves_csv(curves, r);
  write_tv_table(tv, r);
  write_artifact(dir / (cfg.name + "_lag_curves.csv"), curves.str(), cfg, "lag-scan");
  write_artifact(dir / (cfg.name + "_lag_tv.csv"), tv.str(), cfg, "lag-scan");
  int failed = 0;
  for (const auto& c : r.curves) {
    if (c.status != "ok") {
      std::cerr << "L=" << c.lag << ": " << c.status << '\n';
      ++failed;
    }
  }
  std::cout << tv.str();
  return failed ? 1 : 0;
}

int cmd_benchmark(const Options& o) {
  const Suite suite = load_suite(o.suite);
  const fs::path dir = o.out.empty() ? fs::path("out/benchmark") : fs::path(o.out);
  std::vector<ExperimentPair> pairs;
  int failures = 0;
  for (const auto& e : suite.experiments) {
    try {
      ExperimentPair pair;
      pair.label = e.label;
      for (Method m : {Method::mdn, Method::kde}) {
        Options local = o;
        local.method = to_string(m);
        RunConfig cfg = prepared_config(e.config, local);
        cfg.name = e.label;
        PosteriorSummary s;
        if (!o.precomputed.empty()) {
          s = summary_from_json(read_file(fs::path(o.precomputed) / (stem(cfg) + "_summary.json")));
        } else {
          s = estimate_one(cfg, local, dir);
        }
        (m == Method::mdn ? pair.mdn : pair.kde) = s;
      }
      pairs.push_back(std::move(pair));
    } catch (const std::exception& ex) {
      std::cerr << e.label << ": " << ex.what() << '\n';
      ++failures;
    }
  }
  std::ostringstream table;
  write_summary_table(table, pairs);
  atomic_write(dir / "table_summary.csv", table.str());
  std::string agg_text;
  try {
    std::ostringstream agg;
    write_aggregate_table(agg, aggregate_metrics(pairs));
    agg_text = agg.str();
    atomic_write(dir / "table_aggregate.csv", agg_text);
  } catch (const std::exception& ex) {
    std::cerr << "aggregate: " << ex.what() << '\n';
    ++failures;
  }
  std::ostringstream meta;
  meta << "{\n  \"command\": \"benchmark\",\n  \"suite\": \"" << fs::path(o.suite).filename().string()
       << "\",\n  \"suite_hash\": \"" << hex64(fnv1a64(read_file(o.suite))) << "\",\n  \"scale\": "
       << format_double(o.scale) << ",\n  \"version\": \"" << kVersion << "\"\n}\n";
  atomic_write(metadata_path(dir / "table_summary.csv"), meta.str());
  if (!agg_text.empty()) atomic_write(metadata_path(dir / "table_aggregate.csv"), meta.str());
  std::cout << agg_text;
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Likelihood-free estimation of simulation models with mixture density networks"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", o.config, "run configuration (JSON)")->check(CLI::ExistingFile);
    if (needs_config) c->required();
    sub->add_option("--out", o.out, "output directory (overrides the config)");
    sub->add_option("--seed", o.seed, "derive every seed from this value");
    sub->add_option("--scale", o.scale, "divide S, burn-in, R and T by this factor")->check(CLI::Range(1.0, 1e9));
  };

  auto* sim = app.add_subcommand("simulate", "write the pseudo-empirical series");
  common(sim, true);

  auto* est = app.add_subcommand("estimate", "sample the posterior and summarize it");
  common(est, true);
  est->add_option("--jobs", o.jobs, "parallel restarts")->check(CLI::PositiveNumber);
  est->add_option("--method", o.method, "likelihood approximation")->check(CLI::IsMember({"mdn", "kde"}));
  est->add_option("--lags", o.lags, "lag length L")->expected(1);
  est->add_flag("--eval-log", o.eval_log, "also write the per-evaluation log (includes wall time)");

  auto* scan = app.add_subcommand("lag-scan", "conditional density curves across lag lengths");
  common(scan, true);
  scan->add_option("--lags", o.lags, "lag lengths, comma separated")->delimiter(',');
  scan->add_option("--window", o.window, "conditioning values, oldest first")->delimiter(',');

  auto* bench = app.add_subcommand("benchmark", "paired MDN/KDE runs over a suite");
  bench->add_option("--suite", o.suite, "suite file (JSON)")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", o.out, "output directory");
  bench->add_option("--seed", o.seed, "derive every seed from this value");
  bench->add_option("--scale", o.scale, "divide S, burn-in, R and T by this factor")->check(CLI::Range(1.0, 1e9));
  bench->add_option("--jobs", o.jobs, "parallel restarts")->check(CLI::PositiveNumber);
  bench->add_option("--precomputed", o.precomputed, "directory of existing *_summary.json files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(o);
    if (*est) return cmd_estimate(o);
    if (*scan) return cmd_lag_scan(o);
    if (*bench) return cmd_benchmark(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
