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

#include "simest/models.hpp"

#include "simest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>

namespace simest {

namespace {

inline bool runaway(double v) { return !std::isfinite(v) || std::abs(v) > kDivergenceLimit; }

[[noreturn]] void diverged(const char* model, long step) {
  throw SimulationDiverged(std::string(model) + " simulation diverged at step " +
                               std::to_string(step),
                           step);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

ParameterVector::ParameterVector(std::vector<std::string> names, VectorXd values,
                                 std::vector<Bound> bounds, bool out_of_support)
    : names_(std::move(names)),
      values_(std::move(values)),
      bounds_(std::move(bounds)),
      out_of_support_(out_of_support) {
  require(static_cast<Eigen::Index>(names_.size()) == values_.size() &&
              names_.size() == bounds_.size(),
          "ParameterVector: names, values and bounds must have equal length");
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    require(bounds_[i].lower < bounds_[i].upper,
            "ParameterVector: bound for '" + names_[i] + "' must satisfy lower < upper");
  }
  if (!out_of_support_) {
    for (std::size_t i = 0; i < bounds_.size(); ++i) {
      require(bounds_[i].contains(values_[static_cast<Eigen::Index>(i)]),
              "ParameterVector: '" + names_[i] + "' lies outside its bounds");
    }
  }
}

ParameterVector ParameterVector::proposal(const ParameterVector& like, const VectorXd& values) {
  return ParameterVector(like.names_, values, like.bounds_, true);
}

double ParameterVector::at(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return values_[it - names_.begin()];
}

bool ParameterVector::inside_bounds() const {
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    if (!bounds_[i].contains(values_[static_cast<Eigen::Index>(i)])) return false;
  }
  return true;
}

std::string model_id(const ModelConfig& cfg) {
  struct Visitor {
    std::string operator()(const BrockHommesConfig&) const { return "brock_hommes"; }
    std::string operator()(const RandomWalkBreakConfig&) const { return "random_walk_break"; }
    std::string operator()(const FrankeWesterhoffConfig&) const { return "franke_westerhoff"; }
    std::string operator()(const LogNormalIidConfig&) const { return "lognormal_iid"; }
    std::string operator()(const Ar2Config&) const { return "ar2"; }
  };
  return std::visit(Visitor{}, cfg);
}

BrockHommesTrace trace_brock_hommes(const BrockHommesConfig& cfg, long T, std::uint64_t seed) {
  const std::size_t H = cfg.strategies();
  require(T >= 4, "brock_hommes: T must be at least 4");
  require(H >= 1 && cfg.b.size() == H, "brock_hommes: g and b must have the same nonzero length");
  require(cfg.beta >= 0.0, "brock_hommes: beta must be nonnegative");
  require(cfg.r > 0.0, "brock_hommes: r must be positive");
  require(cfg.sigma >= 0.0, "brock_hommes: sigma must be nonnegative");
  require(cfg.warmup >= 0, "brock_hommes: warmup must be nonnegative");

  const double R = 1.0 + cfg.r;
  Philox rng(seed);
  double y2 = cfg.y_init[0];  // y_{t-2}
  double y1 = cfg.y_init[1];  // y_{t-1}
  double y0 = cfg.y_init[2];  // y_t

  BrockHommesTrace out;
  out.series.seed = seed;
  out.series.data.resize(T, 1);
  out.fractions.resize(T, static_cast<Eigen::Index>(H));

  VectorXd logits(static_cast<Eigen::Index>(H));
  VectorXd n(static_cast<Eigen::Index>(H));
  const long total = cfg.warmup + T;
  for (long step = 1; step <= total; ++step) {
    for (std::size_t h = 0; h < H; ++h) {
      const double u = (y0 - R * y1) * (cfg.g[h] * y2 + cfg.b[h] - R * y1);
      logits[static_cast<Eigen::Index>(h)] = cfg.beta * u;
    }
    // Shifted softmax; the max-logit strategy contributes exp(0) = 1.
    n = (logits.array() - logits.maxCoeff()).exp();
    n /= n.sum();

    double mean = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      mean += n[static_cast<Eigen::Index>(h)] * (cfg.g[h] * y0 + cfg.b[h]);
    }
    const double eps = rng.normal();
    const double next = mean / R + cfg.sigma * eps;
    if (runaway(next) || !n.allFinite()) diverged("brock_hommes", step);

    y2 = y1;
    y1 = y0;
    y0 = next;
    if (step > cfg.warmup) {
      const long t = step - cfg.warmup - 1;
      out.series.data(t, 0) = next;
      out.fractions.row(t) = n.transpose();
    }
  }
  return out;
}

TimeSeriesMatrix simulate_brock_hommes(const BrockHommesConfig& cfg, long T, std::uint64_t seed) {
  return trace_brock_hommes(cfg, T, seed).series;
}

TimeSeriesMatrix simulate_random_walk_break(const RandomWalkBreakConfig& cfg, long T,
                                            std::uint64_t seed) {
  require(cfg.tau >= 1 && T > cfg.tau, "random_walk_break: need 1 <= tau < T");
  require(cfg.sigma1 >= 0.0 && cfg.sigma2 >= 0.0,
          "random_walk_break: volatilities must be nonnegative");

  Philox rng(seed);
  TimeSeriesMatrix out;
  out.seed = seed;
  out.data.resize(T, 1);
  double x = cfg.x_init;
  for (long t = 1; t <= T; ++t) {
    const bool before = t <= cfg.tau;
    const double d = before ? cfg.d1 : cfg.d2;
    const double s = before ? cfg.sigma1 : cfg.sigma2;
    x = x + d + s * rng.normal();
    if (runaway(x)) diverged("random_walk_break", t);
    out.data(t - 1, 0) = x;
  }
  return out;
}

FrankeWesterhoffTrace trace_franke_westerhoff(const FrankeWesterhoffConfig& cfg, long T,
                                              std::uint64_t seed) {
  require(T >= 4, "franke_westerhoff: T must be at least 4");
  require(cfg.sigma_f >= 0.0 && cfg.sigma_c >= 0.0,
          "franke_westerhoff: noise scales must be nonnegative");
  require(cfg.eta >= 0.0 && cfg.eta <= 1.0, "franke_westerhoff: eta must lie in [0, 1]");
  require(cfg.warmup >= 0, "franke_westerhoff: warmup must be nonnegative");

  Philox rng(seed);
  const bool wp = cfg.variant == FwVariant::wp;

  // State at t = 0.
  double p = cfg.p_star;
  double df = 0.0, dc = 0.0;            // d_{t}
  double df_prev = 0.0, dc_prev = 0.0;  // d_{t-1}
  double wf = 0.0, wc = 0.0;
  double a = 0.0;
  double nf = 0.5;

  FrankeWesterhoffTrace out;
  out.returns.seed = seed;
  out.returns.data.resize(T, 1);
  out.fundamentalist_share.resize(T);
  out.chartist_share.resize(T);

  const long total = cfg.warmup + T + 1;
  for (long t = 1; t <= total; ++t) {
    const double p_prev = p;
    p = p_prev + cfg.mu * (nf * df + (1.0 - nf) * dc);

    const double df_before = df_prev;  // d_{t-2} once shifted below
    const double dc_before = dc_prev;
    df_prev = df;
    dc_prev = dc;
    df = cfg.phi * (cfg.p_star - p) + cfg.sigma_f * rng.normal();
    dc = cfg.chi * (p - p_prev) + cfg.sigma_c * rng.normal();

    nf = 1.0 / (1.0 + std::exp(-cfg.beta * a));
    const double nc = 1.0 - nf;

    if (wp) {
      const double gain = std::exp(p) - std::exp(p_prev);
      wf = cfg.eta * wf + (1.0 - cfg.eta) * gain * df_before;
      wc = cfg.eta * wc + (1.0 - cfg.eta) * gain * dc_before;
      a = cfg.alpha_w * (wf - wc) + cfg.alpha_0;
    } else {
      const double mis = p - cfg.p_star;
      a = cfg.alpha_n * (nf - nc) + cfg.alpha_0 + cfg.alpha_p * mis * mis;
    }

    if (runaway(p) || runaway(df) || runaway(dc) || runaway(a) || runaway(wf) || runaway(wc)) {
      diverged("franke_westerhoff", t);
    }
    if (t > cfg.warmup + 1) {
      const long i = t - cfg.warmup - 2;
      out.returns.data(i, 0) = p - p_prev;
      out.fundamentalist_share[i] = nf;
      out.chartist_share[i] = nc;
    }
  }
  return out;
}

TimeSeriesMatrix simulate_franke_westerhoff(const FrankeWesterhoffConfig& cfg, long T,
                                            std::uint64_t seed) {
  return trace_franke_westerhoff(cfg, T, seed).returns;
}

TimeSeriesMatrix simulate_lognormal_iid(const LogNormalIidConfig& cfg, long T, std::uint64_t seed) {
  require(T >= 1, "lognormal_iid: T must be positive");
  require(cfg.sigma >= 0.0, "lognormal_iid: sigma must be nonnegative");
  Philox rng(seed);
  TimeSeriesMatrix out;
  out.seed = seed;
  out.data.resize(T, 1);
  for (long t = 0; t < T; ++t) out.data(t, 0) = std::exp(cfg.mu + cfg.sigma * rng.normal());
  return out;
}

TimeSeriesMatrix simulate_ar2(const Ar2Config& cfg, long T, std::uint64_t seed) {
  require(T >= 1, "ar2: T must be positive");
  require(cfg.sigma >= 0.0, "ar2: sigma must be nonnegative");
  Philox rng(seed);
  TimeSeriesMatrix out;
  out.seed = seed;
  out.data.resize(T, 1);
  double x1 = 0.0, x0 = 0.0;
  const long total = cfg.warmup + T;
  for (long step = 1; step <= total; ++step) {
    const double next = cfg.phi1 * x0 + cfg.phi2 * x1 + cfg.sigma * rng.normal();
    if (runaway(next)) diverged("ar2", step);
    x1 = x0;
    x0 = next;
    if (step > cfg.warmup) out.data(step - cfg.warmup - 1, 0) = next;
  }
  return out;
}

TimeSeriesMatrix simulate(const ModelConfig& cfg, long T, std::uint64_t seed) {
  struct Visitor {
    long T;
    std::uint64_t seed;
    TimeSeriesMatrix operator()(const BrockHommesConfig& c) const {
      return simulate_brock_hommes(c, T, seed);
    }
    TimeSeriesMatrix operator()(const RandomWalkBreakConfig& c) const {
      return simulate_random_walk_break(c, T, seed);
    }
    TimeSeriesMatrix operator()(const FrankeWesterhoffConfig& c) const {
      return simulate_franke_westerhoff(c, T, seed);
    }
    TimeSeriesMatrix operator()(const LogNormalIidConfig& c) const {
      return simulate_lognormal_iid(c, T, seed);
    }
    TimeSeriesMatrix operator()(const Ar2Config& c) const { return simulate_ar2(c, T, seed); }
  };
  return std::visit(Visitor{T, seed}, cfg);
}

namespace {

using Setter = std::function<void(double)>;

Setter strategy_setter(BrockHommesConfig& c, const std::string& name) {
  if (name.size() < 2 || (name[0] != 'g' && name[0] != 'b')) return {};
  std::size_t h = 0;
  try {
    std::size_t used = 0;
    h = std::stoul(name.substr(1), &used);
    if (used != name.size() - 1) return {};
  } catch (const std::exception&) {
    return {};
  }
  if (h < 1 || h > c.strategies()) return {};
  auto& vec = name[0] == 'g' ? c.g : c.b;
  return [&vec, h](double v) { vec[h - 1] = v; };
}

Setter field_setter(ModelConfig& cfg, const std::string& name) {
  if (auto* c = std::get_if<BrockHommesConfig>(&cfg)) {
    if (name == "beta") return [c](double v) { c->beta = v; };
    if (name == "r") return [c](double v) { c->r = v; };
    if (name == "sigma") return [c](double v) { c->sigma = v; };
    return strategy_setter(*c, name);
  }
  if (auto* c = std::get_if<RandomWalkBreakConfig>(&cfg)) {
    const std::map<std::string, double*> fields = {{"d1", &c->d1},         {"d2", &c->d2},
                                                   {"sigma1", &c->sigma1}, {"sigma2", &c->sigma2},
                                                   {"x_init", &c->x_init}};
    if (auto it = fields.find(name); it != fields.end()) {
      double* p = it->second;
      return [p](double v) { *p = v; };
    }
    return {};
  }
  if (auto* c = std::get_if<FrankeWesterhoffConfig>(&cfg)) {
    const std::map<std::string, double*> fields = {
        {"mu", &c->mu},           {"beta", &c->beta},       {"phi", &c->phi},
        {"chi", &c->chi},         {"sigma_f", &c->sigma_f}, {"sigma_c", &c->sigma_c},
        {"alpha_0", &c->alpha_0}, {"alpha_n", &c->alpha_n}, {"alpha_p", &c->alpha_p},
        {"alpha_w", &c->alpha_w}, {"eta", &c->eta},         {"p_star", &c->p_star}};
    if (auto it = fields.find(name); it != fields.end()) {
      double* p = it->second;
      return [p](double v) { *p = v; };
    }
    return {};
  }
  if (auto* c = std::get_if<LogNormalIidConfig>(&cfg)) {
    if (name == "mu") return [c](double v) { c->mu = v; };
    if (name == "sigma") return [c](double v) { c->sigma = v; };
    return {};
  }
  auto* c = std::get_if<Ar2Config>(&cfg);
  if (name == "phi1") return [c](double v) { c->phi1 = v; };
  if (name == "phi2") return [c](double v) { c->phi2 = v; };
  if (name == "sigma") return [c](double v) { c->sigma = v; };
  return {};
}

}  // namespace

ModelConfig apply_parameters(const ModelConfig& fixed, const ParameterVector& theta) {
  ModelConfig cfg = fixed;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const auto& name = theta.names()[static_cast<std::size_t>(i)];
    Setter set = field_setter(cfg, name);
    if (!set) {
      throw std::invalid_argument("model '" + model_id(fixed) + "' has no parameter '" + name +
                                  "'");
    }
    set(theta[i]);
  }
  return cfg;
}

Ensemble generate_ensemble(const ModelConfig& fixed, const ParameterVector& theta, long R, long T,
                           std::uint64_t base_seed) {
  require(R >= 1, "generate_ensemble: R must be at least 1");
  require(theta.inside_bounds(), "generate_ensemble: theta lies outside its bounds");
  const ModelConfig cfg = apply_parameters(fixed, theta);

  Ensemble ens;
  ens.base_seed = base_seed;
  ens.theta = theta;
  ens.replications.reserve(static_cast<std::size_t>(R));
  for (long i = 0; i < R; ++i) {
    try {
      ens.replications.push_back(simulate(cfg, T, base_seed + static_cast<std::uint64_t>(i)));
    } catch (const SimulationDiverged& e) {
      throw SimulationDiverged(std::string(e.what()) + " (replication " + std::to_string(i) + ")",
                               e.step(), i);
    }
  }
  return ens;
}

TimeSeriesMatrix first_difference(const TimeSeriesMatrix& series) {
  require(series.length() >= 2, "first_difference: series needs at least two rows");
  const Eigen::Index T = series.length();
  TimeSeriesMatrix out;
  out.seed = series.seed;
  out.data = series.data.bottomRows(T - 1) - series.data.topRows(T - 1);
  return out;
}

}  // namespace simest
