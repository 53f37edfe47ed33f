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


#include "simest/pipeline.hpp"

#include "simest/io.hpp"
#include "simest/likelihood.hpp"

#include <json.hpp>

#include <algorithm>
#include <sstream>

namespace simest {

namespace {

using nlohmann::json;

json vec(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd from_vec(const json& j) {
  const auto d = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
}

json seeds_json(const Seeds& s) {
  return {{"empirical", s.empirical}, {"ensemble", s.ensemble}, {"mcmc", s.mcmc}, {"train", s.train}};
}

}  // namespace

EstimationResult run_estimation(const RunConfig& cfg, const TimeSeriesMatrix& empirical, int jobs,
                                bool keep_eval_log) {
  PosteriorEvaluator evaluator(make_problem(cfg, empirical));
  McmcConfig mc = cfg.mcmc;
  mc.seed = cfg.seeds.mcmc;
  mc.jobs = jobs;
  EstimationResult r;
  r.sample = run_chain([&evaluator](const VectorXd& t) { return evaluator(t); }, cfg.bounds, mc);
  r.summary = summarize(r.sample, cfg.free_names, cfg.bounds, cfg.truth);
  r.evaluations = evaluator.evaluations();
  r.cache_hits = evaluator.cache_hits();
  if (keep_eval_log) {
    std::ostringstream os;
    evaluator.write_log_csv(os);
    r.eval_log_csv = os.str();
  }
  return r;
}

LagScanConfig lag_scan_config(const RunConfig& cfg) {
  if (!cfg.lag_scan) throw ConfigError("lag_scan: missing required block");
  const LagScanSpec& spec = *cfg.lag_scan;
  LagScanConfig lc;
  lc.model = apply_parameters(cfg.fixed, prior_box(cfg));
  lc.replications = spec.replications;
  lc.length = spec.length;
  lc.seed = cfg.seeds.ensemble;
  lc.preprocessing = cfg.preprocessing;
  lc.lags = spec.lags;
  lc.window = spec.window;
  lc.hidden = cfg.mdn.hidden;
  lc.components = cfg.mdn.components;
  lc.train = cfg.mdn.train;
  lc.train.seed = cfg.seeds.train;
  lc.grid_points = spec.grid_points;
  lc.grid_width = spec.grid_width;
  return lc;
}

std::map<std::string, double> break_shifts(const PosteriorSummary& s) {
  std::map<std::string, double> out;
  auto has = [&](const std::string& n) {
    return std::find(s.names.begin(), s.names.end(), n) != s.names.end();
  };
  if (has("d1") && has("d2")) out["delta_d"] = break_shift(s, "d2", "d1");
  if (has("sigma1") && has("sigma2")) out["delta_sigma"] = break_shift(s, "sigma2", "sigma1");
  return out;
}

std::string summary_json(const RunConfig& cfg, const EstimationResult& r) {
  const PosteriorSummary& s = r.summary;
  json doc;
  doc["name"] = cfg.name;
  doc["model"] = model_id(cfg.fixed);
  doc["method"] = to_string(cfg.method);
  doc["parameters"] = s.names;
  json bounds = json::array();
  for (const auto& b : s.bounds) bounds.push_back({b.lower, b.upper});
  doc["bounds"] = bounds;
  doc["mu_posterior"] = vec(s.mu);
  doc["sigma_posterior"] = vec(s.sigma);
  doc["sigma_sampling"] = s.sigma_sampling ? vec(*s.sigma_sampling) : json(nullptr);
  doc["theta_true"] = s.theta_true ? vec(*s.theta_true) : json(nullptr);
  doc["LS"] = s.ls ? json(*s.ls) : json(nullptr);
  json shifts = json::object();
  for (const auto& [k, v] : break_shifts(s)) shifts[k] = v;
  doc["break_shifts"] = shifts;
  doc["acceptance_rate"] = r.sample.acceptance;
  doc["retained_samples"] = r.sample.size();
  doc["evaluations"] = r.evaluations;
  doc["cache_hits"] = r.cache_hits;
  return doc.dump(2) + "\n";
}

PosteriorSummary summary_from_json(const std::string& text) {
  const json doc = json::parse(text);
  PosteriorSummary s;
  s.names = doc.at("parameters").get<std::vector<std::string>>();
  for (const auto& b : doc.at("bounds")) s.bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  s.mu = from_vec(doc.at("mu_posterior"));
  s.sigma = from_vec(doc.at("sigma_posterior"));
  if (!doc.at("sigma_sampling").is_null()) s.sigma_sampling = from_vec(doc.at("sigma_sampling"));
  if (!doc.at("theta_true").is_null()) s.theta_true = from_vec(doc.at("theta_true"));
  if (!doc.at("LS").is_null()) s.ls = doc.at("LS").get<double>();
  return s;
}

std::string metadata_json(const RunConfig& cfg, const std::string& command,
                          const std::string& artifact) {
  json doc;
  doc["artifact"] = artifact;
  doc["command"] = command;
  doc["config_name"] = cfg.name;
  doc["config_hash"] = cfg.hash;
  doc["model"] = model_id(cfg.fixed);
  doc["method"] = to_string(cfg.method);
  doc["seeds"] = seeds_json(cfg.seeds);
  doc["scale"] = cfg.scale;
  doc["effective"] = {{"S", cfg.mcmc.S},   {"N", cfg.mcmc.N},         {"burn_in", cfg.mcmc.burn_in},
                      {"restarts", cfg.mcmc.restarts}, {"R", cfg.R},    {"T_emp", cfg.T_emp},
                      {"T_sim", cfg.T_sim}, {"L", cfg.mdn.lag},
                      {"preprocessing", to_string(cfg.preprocessing)}};
  doc["version"] = kVersion;
  return doc.dump(2) + "\n";
}

void write_artifact(const std::filesystem::path& path, const std::string& content,
                    const RunConfig& cfg, const std::string& command) {
  atomic_write(path, content);
  atomic_write(metadata_path(path), metadata_json(cfg, command, path.filename().string()));
}

}  // namespace simest
