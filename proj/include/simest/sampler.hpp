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

#include "simest/rng.hpp"
#include "simest/types.hpp"

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace simest {

using LogDensityFn = std::function<double(const VectorXd&)>;

/// The N evolving members (one per row) and their cached log posteriors.
struct SampleSet {
  MatrixXd members;  // N x d
  VectorXd log_post;
  long s = 1;

  Eigen::Index size() const { return members.rows(); }
};

struct McmcConfig {
  long S = 5000;
  long N = 70;
  long burn_in = 1500;
  long restarts = 5;
  double bandwidth_factor = 1.06;  // h_d = factor * std_d * N^(-1/5)
  std::uint64_t seed = 0;
  int jobs = 1;

  void validate() const;
};

/// One row per MH iteration: the proposal, where it would go and its fate.
struct TraceRow {
  long restart = 0;
  long s = 0;
  bool accepted = false;
  long n = 0;  // 1-based replacement slot
  VectorXd z;
  double log_post = kNegInf;
};

struct PosteriorSample {
  std::vector<MatrixXd> restarts;    // retained members per restart, (S - burn_in) N x d
  std::vector<MatrixXd> set_means;   // per restart, (S - burn_in) x d
  std::vector<double> acceptance;    // accepted / iterations per restart
  std::vector<TraceRow> trace;

  Eigen::Index size() const;
  Eigen::Index dim() const;
  MatrixXd flattened() const;
  std::vector<Eigen::Index> counts() const;
};

/// N i.i.d. uniform draws from the box; log posteriors left at -inf.
SampleSet init_sample_set(const std::vector<Bound>& box, long N, Philox& rng);

/// factor * std_d * N^(-1/5) with the n-1 std, floored at 1e-6 of the box width.
VectorXd proposal_bandwidth(const MatrixXd& members, const std::vector<Bound>& box,
                            double factor = 1.06);

/// log (1/N) sum_n prod_d N(z_d | members(n, d), h_d^2).
double proposal_log_density(const MatrixXd& members, const VectorXd& h, const VectorXd& z);
double proposal_density(const MatrixXd& members, const VectorXd& h, const VectorXd& z);

struct Proposal {
  VectorXd z;
  Eigen::Index replace = 0;  // slot the proposal would take
  Eigen::Index source = 0;   // member the kernel was centred on
};

Proposal propose(const MatrixXd& members, const VectorXd& h, Philox& rng);

/// min(1, exp(log_post_z + log_q_old - log_post_old - log_q_z)) with the
/// -inf conventions: new -inf gives 0, old -inf with finite new gives 1.
double acceptance_prob(double log_post_z, double log_post_old, double log_q_old_given_swapped,
                       double log_q_z_given_set);

/// Evolves cfg.restarts independent sets for S iterations each and keeps
/// sets s > burn_in. Restart r draws from Philox(cfg.seed, r).
PosteriorSample run_chain(const LogDensityFn& log_post, const std::vector<Bound>& box,
                          const McmcConfig& cfg);

/// Mean of g over every retained member.
VectorXd expectation(const PosteriorSample& sample,
                     const std::function<VectorXd(const VectorXd&)>& g);
VectorXd posterior_mean(const PosteriorSample& sample);
/// Population std over every retained member.
VectorXd posterior_std(const PosteriorSample& sample);
/// Batch-means standard error of the posterior mean from the set-mean traces.
VectorXd monte_carlo_standard_error(const PosteriorSample& sample, long batches = 15);

/// restart,s,accepted,n,theta_1..theta_d,log_post
void write_trace_csv(std::ostream& os, const PosteriorSample& sample);
/// restart,theta_1..theta_d, one row per retained member.
void write_sample_csv(std::ostream& os, const PosteriorSample& sample);

}  // namespace simest
