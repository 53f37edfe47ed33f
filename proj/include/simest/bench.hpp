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
#include "simest/types.hpp"

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace simest {

/// (theta_j - a_j) / (b_j - a_j); values outside the box map outside [0, 1].
VectorXd normalize_params(const VectorXd& theta, const std::vector<Bound>& bounds);

/// Euclidean distance between the box-normalized vectors.
double loss_ls(const VectorXd& theta_true, const VectorXd& theta_hat,
               const std::vector<Bound>& bounds);

struct PosteriorSummary {
  std::vector<std::string> names;
  std::vector<Bound> bounds;
  VectorXd mu;
  VectorXd sigma;
  std::optional<VectorXd> sigma_sampling;  // absent with a single restart
  std::optional<VectorXd> theta_true;
  std::optional<double> ls;

  Eigen::Index size() const { return mu.size(); }
  double mean_of(const std::string& name) const;
};

/// Posterior moments, n-1 std of the restart means and LS when truth is known.
PosteriorSummary summarize(const PosteriorSample& sample, const std::vector<std::string>& names,
                           const std::vector<Bound>& bounds,
                           const std::optional<VectorXd>& theta_true);

/// mu(after) - mu(before), the post-minus-pre break shift.
double break_shift(const PosteriorSummary& s, const std::string& after, const std::string& before);

struct ExperimentPair {
  std::string label;
  PosteriorSummary mdn;
  PosteriorSummary kde;
};

struct AggregateMetrics {
  double ls_percent = 0.0;     // experiments with LS_mdn < LS_kde
  double error_percent = 0.0;  // parameters with |mu_mdn - true| < |mu_kde - true|
  double std_percent = 0.0;    // parameters with sigma_mdn < sigma_kde
  long experiments = 0;
  long parameters = 0;
};

/// Strict comparisons throughout; throws on misaligned pairs.
AggregateMetrics aggregate_metrics(const std::vector<ExperimentPair>& pairs);

/// experiment,parameter,true,mdn_mu,mdn_sigma,mdn_sigma_sampling,kde_mu,kde_sigma,
/// kde_sigma_sampling plus one LS row per experiment.
void write_summary_table(std::ostream& os, const std::vector<ExperimentPair>& pairs);
void write_aggregate_table(std::ostream& os, const AggregateMetrics& m);

/// 0.5 sum |f1 - f2| dy on a shared uniform grid.
double total_variation(const VectorXd& f1, const VectorXd& f2, double dy);

struct LagScanConfig {
  ModelConfig model;
  long replications = 50;
  long length = 500;
  std::uint64_t seed = 0;
  Preprocessing preprocessing = Preprocessing::none;
  std::vector<long> lags{1, 2, 3};
  VectorXd window;  // conditioning values, oldest first
  std::vector<long> hidden{32, 32, 32};
  long components = 16;
  TrainConfig train;
  long grid_points = 2001;
  double grid_width = 4.0;  // grid spans mean +- width * std of the pooled ensemble
};

struct LagCurve {
  long lag = 0;
  VectorXd density;
  std::string status;  // ok or the training failure
};

struct LagScanResult {
  VectorXd grid;
  std::vector<LagCurve> curves;
  MatrixXd tv;  // pairwise, NaN where a curve failed
};

/// One ensemble, one MDN per lag, densities conditioned on the last L window values.
LagScanResult lag_scan(const LagScanConfig& cfg);

/// L,y,density
void write_lag_curves_csv(std::ostream& os, const LagScanResult& r);
/// L_a,L_b,tv
void write_tv_table(std::ostream& os, const LagScanResult& r);

}  // namespace simest
