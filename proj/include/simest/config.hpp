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

#include "simest/likelihood.hpp"
#include "simest/models.hpp"
#include "simest/sampler.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace simest {

/// Schema violation; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Seeds {
  std::uint64_t empirical = 1;
  std::uint64_t ensemble = 2;
  std::uint64_t mcmc = 3;
  std::uint64_t train = 4;
};

struct LagScanSpec {
  std::vector<long> lags{1, 2, 3};
  VectorXd window;
  long replications = 50;
  long length = 500;
  long grid_points = 2001;
  double grid_width = 4.0;
};

struct RunConfig {
  std::string name;
  ModelConfig fixed;
  std::vector<std::string> free_names;
  std::vector<Bound> bounds;
  std::optional<VectorXd> truth;

  long T_emp = 1000;
  long R = 100;
  long T_sim = 1000;
  Preprocessing preprocessing = Preprocessing::none;
  std::optional<std::filesystem::path> series;  // external empirical series

  Method method = Method::mdn;
  MdnSettings mdn;
  long kde_discard = 0;

  McmcConfig mcmc;
  Seeds seeds;
  std::optional<LagScanSpec> lag_scan;
  std::string output = "out";
  double scale = 1.0;

  /// FNV-1a of the canonical JSON text of the parsed document.
  std::string hash;
};

/// Parses and validates a config document; `source` prefixes error messages.
RunConfig parse_run_config(const std::string& text, const std::string& source = "config");
RunConfig load_run_config(const std::filesystem::path& path);

/// Divides S, burn_in, R, T_emp and T_sim by `scale`, keeping every value
/// usable. A random-walk break time shrinks with T.
void apply_scale(RunConfig& cfg, double scale);
/// Replaces every seed with mix_seed(seed, tag).
void override_seeds(RunConfig& cfg, std::uint64_t seed);

ParameterVector prior_box(const RunConfig& cfg);
/// Truth inserted into the fixed config and simulated with seeds.empirical.
TimeSeriesMatrix simulate_empirical(const RunConfig& cfg);
/// Reads cfg.series when set, otherwise simulates it.
TimeSeriesMatrix empirical_series(const RunConfig& cfg);
EstimationProblem make_problem(const RunConfig& cfg, const TimeSeriesMatrix& empirical);

struct SuiteEntry {
  std::string label;
  std::filesystem::path config;
};

struct Suite {
  std::vector<SuiteEntry> experiments;
};

/// Config paths are resolved relative to the suite file.
Suite load_suite(const std::filesystem::path& path);

}  // namespace simest
