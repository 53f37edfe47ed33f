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

#pragma once

#include "simest/types.hpp"

#include <array>
#include <string>
#include <variant>

namespace simest {

/// Values above this magnitude count as a diverged simulation.
inline constexpr double kDivergenceLimit = 1e12;
inline constexpr int kDefaultWarmup = 50;

/// Heterogeneous-beliefs asset pricing model in price deviations y_t.
struct BrockHommesConfig {
  std::vector<double> g;  // trend component per strategy
  std::vector<double> b;  // bias per strategy
  double beta = 10.0;     // intensity of choice
  double r = 0.01;        // interest rate, R = 1 + r
  double sigma = 0.04;
  std::array<double, 3> y_init{0.0, 0.0, 0.0};  // y_{-2}, y_{-1}, y_0
  int warmup = kDefaultWarmup;

  std::size_t strategies() const { return g.size(); }
};

/// Random walk whose drift and volatility switch after step tau.
struct RandomWalkBreakConfig {
  double d1 = 0.0;
  double d2 = 0.0;
  double sigma1 = 1.0;
  double sigma2 = 1.0;
  long tau = 1;
  double x_init = 0.0;
};

enum class FwVariant { hpm, wp };

/// Fundamentalist/chartist model; emits log returns.
struct FrankeWesterhoffConfig {
  FwVariant variant = FwVariant::hpm;
  double mu = 0.01;
  double beta = 1.0;
  double phi = 0.12;
  double chi = 1.5;
  double sigma_f = 0.758;
  double sigma_c = 2.087;
  double alpha_0 = -0.327;
  double alpha_n = 1.79;
  double alpha_p = 18.43;
  double alpha_w = 2668.0;
  double eta = 0.987;
  double p_star = 0.0;
  int warmup = kDefaultWarmup;
};

/// i.i.d. log-normal draws exp(mu + sigma * z); a known-lag (zero) reference.
struct LogNormalIidConfig {
  double mu = 0.0;
  double sigma = 0.5;
};

/// x_{t+1} = phi1 x_t + phi2 x_{t-1} + sigma * eps; a known-lag (two) reference.
struct Ar2Config {
  double phi1 = 0.45;
  double phi2 = 0.45;
  double sigma = 1.0;
  int warmup = kDefaultWarmup;
};

using ModelConfig = std::variant<BrockHommesConfig, RandomWalkBreakConfig, FrankeWesterhoffConfig,
                                 LogNormalIidConfig, Ar2Config>;

/// Canonical identifiers: brock_hommes, random_walk_break, franke_westerhoff,
/// lognormal_iid, ar2.
std::string model_id(const ModelConfig& cfg);

TimeSeriesMatrix simulate_brock_hommes(const BrockHommesConfig& cfg, long T, std::uint64_t seed);
TimeSeriesMatrix simulate_random_walk_break(const RandomWalkBreakConfig& cfg, long T,
                                            std::uint64_t seed);
TimeSeriesMatrix simulate_franke_westerhoff(const FrankeWesterhoffConfig& cfg, long T,
                                            std::uint64_t seed);
TimeSeriesMatrix simulate_lognormal_iid(const LogNormalIidConfig& cfg, long T, std::uint64_t seed);
TimeSeriesMatrix simulate_ar2(const Ar2Config& cfg, long T, std::uint64_t seed);

/// Series plus the strategy fractions used at each returned step.
struct BrockHommesTrace {
  TimeSeriesMatrix series;
  MatrixXd fractions;  // T x H, row t holds n_{h,t}
};
BrockHommesTrace trace_brock_hommes(const BrockHommesConfig& cfg, long T, std::uint64_t seed);

struct FrankeWesterhoffTrace {
  TimeSeriesMatrix returns;
  VectorXd fundamentalist_share;  // n^f_t
  VectorXd chartist_share;        // n^c_t
};
FrankeWesterhoffTrace trace_franke_westerhoff(const FrankeWesterhoffConfig& cfg, long T,
                                              std::uint64_t seed);

TimeSeriesMatrix simulate(const ModelConfig& cfg, long T, std::uint64_t seed);

/// Copies `theta` into the named fields of `fixed`. Brock-Hommes strategy
/// parameters are addressed as g1..gH / b1..bH. Unknown names throw
/// std::invalid_argument.
ModelConfig apply_parameters(const ModelConfig& fixed, const ParameterVector& theta);

/// R replications with seeds base_seed .. base_seed + R - 1.
Ensemble generate_ensemble(const ModelConfig& fixed, const ParameterVector& theta, long R, long T,
                           std::uint64_t base_seed);

/// Row t of the result is x_{t+1} - x_t.
TimeSeriesMatrix first_difference(const TimeSeriesMatrix& series);

}  // namespace simest
