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


#include "simest/config.hpp"

#include "simest/io.hpp"
#include "simest/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace simest {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) fail(where + "." + key, "unknown key");
  }
}

const json& require(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.contains(key)) fail(where + "." + key, "missing required field");
  return obj.at(key);
}

double get_number(const json& obj, const std::string& where, const std::string& key, double dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

long get_int(const json& obj, const std::string& where, const std::string& key, long dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<long>();
}

std::uint64_t get_seed(const json& obj, const std::string& where, const std::string& key,
                       std::uint64_t dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) fail(where + "." + key, "expected a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& where, const std::string& key,
                       const std::string& dflt) {
  if (!obj.contains(key)) return dflt;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_numbers(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) fail(where, "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<long> get_ints(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where, "expected an array of integers");
  std::vector<long> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) fail(where, "expected an array of integers");
    out.push_back(e.get<long>());
  }
  return out;
}

ModelConfig parse_model_fixed(const std::string& id, const json& fixed, const std::string& where) {
  if (id == "brock_hommes") {
    check_keys(fixed, where, {"g", "b", "beta", "r", "sigma", "y_init", "warmup"});
    BrockHommesConfig c;
    c.g = get_numbers(require(fixed, where, "g"), where + ".g");
    c.b = get_numbers(require(fixed, where, "b"), where + ".b");
    if (c.g.size() != c.b.size() || c.g.empty()) fail(where, "g and b must be nonempty and equally long");
    c.beta = get_number(fixed, where, "beta", c.beta);
    c.r = get_number(fixed, where, "r", c.r);
    c.sigma = get_number(fixed, where, "sigma", c.sigma);
    if (fixed.contains("y_init")) {
      const auto y = get_numbers(fixed.at("y_init"), where + ".y_init");
      if (y.size() != 3) fail(where + ".y_init", "expected three values");
      std::copy(y.begin(), y.end(), c.y_init.begin());
    }
    c.warmup = static_cast<int>(get_int(fixed, where, "warmup", c.warmup));
    return c;
  }
  if (id == "random_walk_break") {
    check_keys(fixed, where, {"d1", "d2", "sigma1", "sigma2", "tau", "x_init"});
    RandomWalkBreakConfig c;
    c.d1 = get_number(fixed, where, "d1", c.d1);
    c.d2 = get_number(fixed, where, "d2", c.d2);
    c.sigma1 = get_number(fixed, where, "sigma1", c.sigma1);
    c.sigma2 = get_number(fixed, where, "sigma2", c.sigma2);
    c.tau = get_int(fixed, where, "tau", c.tau);
    c.x_init = get_number(fixed, where, "x_init", c.x_init);
    return c;
  }
  if (id == "franke_westerhoff") {
    check_keys(fixed, where, {"variant", "mu", "beta", "phi", "chi", "sigma_f", "sigma_c", "alpha_0",
                              "alpha_n", "alpha_p", "alpha_w", "eta", "p_star", "warmup"});
    FrankeWesterhoffConfig c;
    const std::string variant = get_string(fixed, where, "variant", "hpm");
    if (variant == "hpm") {
      c.variant = FwVariant::hpm;
    } else if (variant == "wp") {
      c.variant = FwVariant::wp;
    } else {
      fail(where + ".variant", "expected 'hpm' or 'wp'");
    }
    c.mu = get_number(fixed, where, "mu", c.mu);
    c.beta = get_number(fixed, where, "beta", c.beta);
    c.phi = get_number(fixed, where, "phi", c.phi);
    c.chi = get_number(fixed, where, "chi", c.chi);
    c.sigma_f = get_number(fixed, where, "sigma_f", c.sigma_f);
    c.sigma_c = get_number(fixed, where, "sigma_c", c.sigma_c);
    c.alpha_0 = get_number(fixed, where, "alpha_0", c.alpha_0);
    c.alpha_n = get_number(fixed, where, "alpha_n", c.alpha_n);
    c.alpha_p = get_number(fixed, where, "alpha_p", c.alpha_p);
    c.alpha_w = get_number(fixed, where, "alpha_w", c.alpha_w);
    c.eta = get_number(fixed, where, "eta", c.eta);
    c.p_star = get_number(fixed, where, "p_star", c.p_star);
    c.warmup = static_cast<int>(get_int(fixed, where, "warmup", c.warmup));
    return c;
  }
  if (id == "lognormal_iid") {
    check_keys(fixed, where, {"mu", "sigma"});
    LogNormalIidConfig c;
    c.mu = get_number(fixed, where, "mu", c.mu);
    c.sigma = get_number(fixed, where, "sigma", c.sigma);
    return c;
  }
  if (id == "ar2") {
    check_keys(fixed, where, {"phi1", "phi2", "sigma", "warmup"});
    Ar2Config c;
    c.phi1 = get_number(fixed, where, "phi1", c.phi1);
    c.phi2 = get_number(fixed, where, "phi2", c.phi2);
    c.sigma = get_number(fixed, where, "sigma", c.sigma);
    c.warmup = static_cast<int>(get_int(fixed, where, "warmup", c.warmup));
    return c;
  }
  fail("model.id", "unknown model '" + id + "'");
}

void parse_train(const json& t, const std::string& where, TrainConfig& tc) {
  check_keys(t, where, {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "eta_x",
                        "eta_y"});
  tc.epochs = get_int(t, where, "epochs", tc.epochs);
  tc.batch_size = get_int(t, where, "batch_size", tc.batch_size);
  tc.learning_rate = get_number(t, where, "learning_rate", tc.learning_rate);
  tc.beta1 = get_number(t, where, "beta1", tc.beta1);
  tc.beta2 = get_number(t, where, "beta2", tc.beta2);
  tc.epsilon = get_number(t, where, "epsilon", tc.epsilon);
  tc.eta_x = get_number(t, where, "eta_x", tc.eta_x);
  tc.eta_y = get_number(t, where, "eta_y", tc.eta_y);
  try {
    tc.validate();
  } catch (const std::invalid_argument& e) {
    fail(where, e.what());
  }
}

void positive(long v, const std::string& where) {
  if (v < 1) fail(where, "must be a positive integer");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  const std::string root = source;
  check_keys(doc, root, {"name", "model", "data", "method", "mcmc", "seeds", "lag_scan", "output"});
  RunConfig cfg;
  cfg.name = get_string(doc, root, "name", "run");

  // model
  const json& model = require(doc, root, "model");
  check_keys(model, "model", {"id", "fixed", "free"});
  const json& id = require(model, "model", "id");
  if (!id.is_string()) fail("model.id", "expected a string");
  cfg.fixed = parse_model_fixed(id.get<std::string>(), model.value("fixed", json::object()),
                                "model.fixed");
  std::vector<double> truth;
  bool all_true = true;
  if (model.contains("free")) {
    const json& free = model.at("free");
    if (!free.is_array()) fail("model.free", "expected an array");
    for (std::size_t i = 0; i < free.size(); ++i) {
      const std::string where = "model.free[" + std::to_string(i) + "]";
      const json& p = free[i];
      check_keys(p, where, {"name", "bounds", "true"});
      const json& name = require(p, where, "name");
      if (!name.is_string()) fail(where + ".name", "expected a string");
      const auto b = get_numbers(require(p, where, "bounds"), where + ".bounds");
      if (b.size() != 2 || !(b[0] < b[1])) fail(where + ".bounds", "expected [lower, upper] with lower < upper");
      cfg.free_names.push_back(name.get<std::string>());
      cfg.bounds.push_back({b[0], b[1]});
      if (p.contains("true")) {
        if (!p.at("true").is_number()) fail(where + ".true", "expected a number");
        const double t = p.at("true").get<double>();
        if (!cfg.bounds.back().contains(t)) fail(where + ".true", "lies outside bounds");
        truth.push_back(t);
      } else {
        all_true = false;
      }
    }
  }
  if (!truth.empty() && !all_true) fail("model.free", "give 'true' for every parameter or none");
  if (!truth.empty()) cfg.truth = Eigen::Map<const VectorXd>(truth.data(), static_cast<Eigen::Index>(truth.size()));
  try {
    (void)apply_parameters(cfg.fixed, ParameterVector(cfg.free_names,
                                                      VectorXd::Zero(static_cast<Eigen::Index>(cfg.free_names.size())),
                                                      cfg.bounds, true));
  } catch (const std::invalid_argument& e) {
    fail("model.free", e.what());
  }
  cfg.preprocessing = default_preprocessing(cfg.fixed);

  // data
  if (doc.contains("data")) {
    const json& d = doc.at("data");
    check_keys(d, "data", {"T_emp", "R", "T_sim", "preprocessing", "series"});
    cfg.T_emp = get_int(d, "data", "T_emp", cfg.T_emp);
    cfg.R = get_int(d, "data", "R", cfg.R);
    cfg.T_sim = get_int(d, "data", "T_sim", cfg.T_sim);
    positive(cfg.T_emp, "data.T_emp");
    positive(cfg.R, "data.R");
    positive(cfg.T_sim, "data.T_sim");
    const std::string pre = get_string(d, "data", "preprocessing", "auto");
    if (pre == "none") {
      cfg.preprocessing = Preprocessing::none;
    } else if (pre == "first_difference") {
      cfg.preprocessing = Preprocessing::first_difference;
    } else if (pre != "auto") {
      fail("data.preprocessing", "expected 'auto', 'none' or 'first_difference'");
    }
    if (d.contains("series")) cfg.series = get_string(d, "data", "series", "");
  }

  // method
  if (doc.contains("method")) {
    const json& m = doc.at("method");
    check_keys(m, "method", {"type", "L", "hidden", "K", "precision", "train", "discard"});
    const std::string type = get_string(m, "method", "type", "mdn");
    if (type == "mdn") {
      cfg.method = Method::mdn;
    } else if (type == "kde") {
      cfg.method = Method::kde;
    } else {
      fail("method.type", "expected 'mdn' or 'kde'");
    }
    cfg.mdn.lag = get_int(m, "method", "L", cfg.mdn.lag);
    positive(cfg.mdn.lag, "method.L");
    if (m.contains("hidden")) {
      cfg.mdn.hidden = get_ints(m.at("hidden"), "method.hidden");
      if (cfg.mdn.hidden.empty()) fail("method.hidden", "need at least one layer");
      for (long w : cfg.mdn.hidden) positive(w, "method.hidden");
    }
    cfg.mdn.components = get_int(m, "method", "K", cfg.mdn.components);
    positive(cfg.mdn.components, "method.K");
    const std::string prec = get_string(m, "method", "precision", "float64");
    if (prec == "float32") {
      cfg.mdn.precision = Precision::float32;
    } else if (prec != "float64") {
      fail("method.precision", "expected 'float32' or 'float64'");
    }
    if (m.contains("train")) parse_train(m.at("train"), "method.train", cfg.mdn.train);
    cfg.kde_discard = get_int(m, "method", "discard", 0);
    if (cfg.kde_discard < 0) fail("method.discard", "must be >= 0");
  }

  // mcmc
  if (doc.contains("mcmc")) {
    const json& m = doc.at("mcmc");
    check_keys(m, "mcmc", {"S", "N", "burn_in", "restarts", "bandwidth_factor"});
    cfg.mcmc.S = get_int(m, "mcmc", "S", cfg.mcmc.S);
    cfg.mcmc.N = get_int(m, "mcmc", "N", cfg.mcmc.N);
    cfg.mcmc.burn_in = get_int(m, "mcmc", "burn_in", cfg.mcmc.burn_in);
    cfg.mcmc.restarts = get_int(m, "mcmc", "restarts", cfg.mcmc.restarts);
    cfg.mcmc.bandwidth_factor = get_number(m, "mcmc", "bandwidth_factor", cfg.mcmc.bandwidth_factor);
    try {
      cfg.mcmc.validate();
    } catch (const std::invalid_argument& e) {
      fail("mcmc", e.what());
    }
  }

  if (doc.contains("seeds")) {
    const json& s = doc.at("seeds");
    check_keys(s, "seeds", {"empirical", "ensemble", "mcmc", "train"});
    cfg.seeds.empirical = get_seed(s, "seeds", "empirical", cfg.seeds.empirical);
    cfg.seeds.ensemble = get_seed(s, "seeds", "ensemble", cfg.seeds.ensemble);
    cfg.seeds.mcmc = get_seed(s, "seeds", "mcmc", cfg.seeds.mcmc);
    cfg.seeds.train = get_seed(s, "seeds", "train", cfg.seeds.train);
  }

  if (doc.contains("lag_scan")) {
    const json& l = doc.at("lag_scan");
    check_keys(l, "lag_scan", {"lags", "window", "R", "T", "grid_points", "grid_width"});
    LagScanSpec spec;
    if (l.contains("lags")) spec.lags = get_ints(l.at("lags"), "lag_scan.lags");
    for (long L : spec.lags) positive(L, "lag_scan.lags");
    const auto w = get_numbers(require(l, "lag_scan", "window"), "lag_scan.window");
    spec.window = Eigen::Map<const VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
    spec.replications = get_int(l, "lag_scan", "R", spec.replications);
    spec.length = get_int(l, "lag_scan", "T", spec.length);
    spec.grid_points = get_int(l, "lag_scan", "grid_points", spec.grid_points);
    spec.grid_width = get_number(l, "lag_scan", "grid_width", spec.grid_width);
    positive(spec.replications, "lag_scan.R");
    positive(spec.length, "lag_scan.T");
    if (spec.grid_points < 2) fail("lag_scan.grid_points", "must be >= 2");
    if (!(spec.grid_width > 0)) fail("lag_scan.grid_width", "must be > 0");
    const long max_lag = spec.lags.empty() ? 0 : *std::max_element(spec.lags.begin(), spec.lags.end());
    if (spec.window.size() < max_lag) fail("lag_scan.window", "shorter than the largest lag");
    cfg.lag_scan = spec;
  }

  cfg.output = get_string(doc, root, "output", cfg.output);
  if (!cfg.truth && !cfg.series && !cfg.free_names.empty()) {
    fail("data.series", "required when free parameters carry no 'true' values");
  }
  cfg.hash = hex64(fnv1a64(doc.dump()));
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  RunConfig cfg = parse_run_config(text, path.string());
  if (cfg.series && cfg.series->is_relative()) cfg.series = path.parent_path() / *cfg.series;
  return cfg;
}

void apply_scale(RunConfig& cfg, double scale) {
  if (!(scale >= 1.0)) throw ConfigError("--scale: must be >= 1");
  cfg.scale = scale;
  if (scale == 1.0) return;
  auto div = [scale](long v, long lo) { return std::max(lo, static_cast<long>(std::llround(v / scale))); };
  cfg.mcmc.S = div(cfg.mcmc.S, 2);
  cfg.mcmc.burn_in = std::min(cfg.mcmc.S - 1, div(cfg.mcmc.burn_in, 0));
  cfg.R = div(cfg.R, 1);
  const long min_len = cfg.mdn.lag + 3;
  cfg.T_emp = div(cfg.T_emp, min_len);
  cfg.T_sim = div(cfg.T_sim, min_len);
  if (auto* rw = std::get_if<RandomWalkBreakConfig>(&cfg.fixed)) {
    rw->tau = std::clamp(div(rw->tau, 1), 1L, std::min(cfg.T_emp, cfg.T_sim) - 1);
  }
}

void override_seeds(RunConfig& cfg, std::uint64_t seed) {
  cfg.seeds.empirical = mix_seed(seed, 1);
  cfg.seeds.ensemble = mix_seed(seed, 2);
  cfg.seeds.mcmc = mix_seed(seed, 3);
  cfg.seeds.train = mix_seed(seed, 4);
}

ParameterVector prior_box(const RunConfig& cfg) {
  VectorXd mid(static_cast<Eigen::Index>(cfg.bounds.size()));
  for (std::size_t i = 0; i < cfg.bounds.size(); ++i) {
    mid[static_cast<Eigen::Index>(i)] = 0.5 * (cfg.bounds[i].lower + cfg.bounds[i].upper);
  }
  return ParameterVector(cfg.free_names, cfg.truth ? *cfg.truth : mid, cfg.bounds);
}

TimeSeriesMatrix simulate_empirical(const RunConfig& cfg) {
  if (!cfg.truth && !cfg.free_names.empty()) {
    throw ConfigError("model.free: true values are needed to simulate the empirical series");
  }
  return simulate(apply_parameters(cfg.fixed, prior_box(cfg)), cfg.T_emp, cfg.seeds.empirical);
}

TimeSeriesMatrix empirical_series(const RunConfig& cfg) {
  if (cfg.series) return read_series_csv(*cfg.series);
  return simulate_empirical(cfg);
}

EstimationProblem make_problem(const RunConfig& cfg, const TimeSeriesMatrix& empirical) {
  EstimationProblem p;
  p.fixed = cfg.fixed;
  p.prior = prior_box(cfg);
  p.empirical = empirical;
  p.method = cfg.method;
  p.preprocessing = cfg.preprocessing;
  p.replications = cfg.R;
  p.sim_length = cfg.T_sim;
  p.base_seed = cfg.seeds.ensemble;
  p.mdn = cfg.mdn;
  p.mdn.train.seed = cfg.seeds.train;
  p.kde_discard = cfg.kde_discard;
  return p;
}

Suite load_suite(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  const std::string root = path.string();
  check_keys(doc, root, {"experiments"});
  const json& list = require(doc, root, "experiments");
  if (!list.is_array()) fail(root + ".experiments", "expected an array");
  Suite suite;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = root + ".experiments[" + std::to_string(i) + "]";
    check_keys(list[i], where, {"label", "config"});
    SuiteEntry e;
    e.config = get_string(list[i], where, "config", "");
    if (e.config.empty()) fail(where + ".config", "missing required field");
    if (e.config.is_relative()) e.config = path.parent_path() / e.config;
    e.label = get_string(list[i], where, "label", e.config.stem().string());
    suite.experiments.push_back(e);
  }
  return suite;
}

}  // namespace simest
