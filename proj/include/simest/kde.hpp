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

#include <ostream>
#include <vector>

namespace simest {

/// Ensemble observations pooled into one i.i.d. sample, m x n, in
/// replication-major order.
struct PooledSample {
  MatrixXd values;
  std::uint64_t source_seed = 0;

  Eigen::Index size() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }
};

/// Concatenates every replication, dropping the first `discard` rows of each.
PooledSample pool_samples(const Ensemble& ens, long discard = 0);

/// Type-7 (linear interpolation) sample quantile of sorted data, p in [0, 1].
double sorted_quantile(const Eigen::Ref<const VectorXd>& sorted, double p);

/// 0.9 min(std, IQR / 1.34) m^(-1/5) with the n-1 std. Falls back to std
/// when the IQR is zero; throws DegenerateSample when the std is zero too.
double silverman_bandwidth(const Eigen::Ref<const VectorXd>& values);

/// Fitted product-Gaussian KDE: one sorted column and bandwidth per dimension.
class GaussianKde {
 public:
  explicit GaussianKde(const PooledSample& sample);
  GaussianKde(const PooledSample& sample, const VectorXd& bandwidth);

  Eigen::Index size() const { return m_; }
  Eigen::Index dim() const { return bandwidth_.size(); }
  const VectorXd& bandwidth() const { return bandwidth_; }

  /// log f_d(x) for one dimension.
  double log_density(Eigen::Index d, double x) const;
  /// sum_d log f_d(x_d).
  double log_density(const Eigen::Ref<const VectorXd>& x) const;
  double density(const Eigen::Ref<const VectorXd>& x) const;

  /// Sum of log densities over the rows of a T x n series, accumulated per
  /// dimension in sorted order so row order never matters.
  double log_likelihood(const MatrixXd& series) const;

 private:
  std::vector<VectorXd> sorted_;
  VectorXd bandwidth_;
  Eigen::Index m_ = 0;
};

/// (1 / (m h)) sum_j phi((x - v_j) / h) for a univariate sample.
double gaussian_kde_density(const PooledSample& sample, double h, double x);

/// Pools the ensemble, fits Silverman bandwidths and returns sum_t log f(x_t).
/// DegenerateSample propagates.
double kde_log_likelihood(const Ensemble& ens, const TimeSeriesMatrix& series, long discard = 0);

/// Header `x,density`, one row per grid point of dimension 0.
void write_density_csv(std::ostream& os, const GaussianKde& kde, const VectorXd& grid);

}  // namespace simest
