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


#include "simest/kde.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace simest {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
// exp(-z^2 / 2) is exactly zero in double precision beyond this many bandwidths.
constexpr double kKernelReach = 40.0;

VectorXd sorted_copy(const Eigen::Ref<const VectorXd>& v) {
  VectorXd s = v;
  std::sort(s.data(), s.data() + s.size());
  return s;
}

double log_kernel_sum(const VectorXd& sorted, double h, double x) {
  const double* begin = sorted.data();
  const double* end = begin + sorted.size();
  const double* lo = std::lower_bound(begin, end, x - kKernelReach * h);
  const double* hi = std::upper_bound(lo, end, x + kKernelReach * h);
  if (hi > lo) {
    const Eigen::Map<const VectorXd> seg(lo, hi - lo);
    const double s = (-0.5 * ((seg.array() - x) / h).square()).exp().sum();
    if (s > 0.0) return std::log(s);
  }
  const Eigen::ArrayXd log_terms = -0.5 * ((sorted.array() - x) / h).square();
  const double top = log_terms.maxCoeff();
  return top + std::log((log_terms - top).exp().sum());
}

}  // namespace

PooledSample pool_samples(const Ensemble& ens, long discard) {
  if (ens.replications.empty()) throw std::invalid_argument("pool_samples: empty ensemble");
  if (discard < 0) throw std::invalid_argument("pool_samples: discard must be nonnegative");
  const Eigen::Index n = ens.replications.front().dim();
  Eigen::Index m = 0;
  for (const auto& rep : ens.replications) {
    if (rep.dim() != n) throw std::invalid_argument("pool_samples: replications differ in dim");
    if (rep.length() <= discard) {
      throw std::invalid_argument("pool_samples: discard removes every observation");
    }
    m += rep.length() - discard;
  }
  PooledSample out;
  out.source_seed = ens.base_seed;
  out.values.resize(m, n);
  Eigen::Index row = 0;
  for (const auto& rep : ens.replications) {
    const Eigen::Index keep = rep.length() - discard;
    out.values.middleRows(row, keep) = rep.data.bottomRows(keep);
    row += keep;
  }
  return out;
}

double sorted_quantile(const Eigen::Ref<const VectorXd>& sorted, double p) {
  if (sorted.size() == 0) throw std::invalid_argument("sorted_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sorted_quantile: p outside [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<Eigen::Index>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted[sorted.size() - 1];
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

double silverman_bandwidth(const Eigen::Ref<const VectorXd>& values) {
  const Eigen::Index m = values.size();
  if (m < 2) throw std::invalid_argument("silverman_bandwidth: need at least 2 observations");
  if (!values.allFinite()) throw std::invalid_argument("silverman_bandwidth: non-finite sample");
  const double mean = values.mean();
  const double sd =
      std::sqrt((values.array() - mean).square().sum() / static_cast<double>(m - 1));
  if (!(sd > 0.0)) throw DegenerateSample("kernel density sample has zero spread");
  const VectorXd s = sorted_copy(values);
  const double iqr = sorted_quantile(s, 0.75) - sorted_quantile(s, 0.25);
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(m), -0.2);
}

GaussianKde::GaussianKde(const PooledSample& sample) : m_(sample.size()) {
  bandwidth_.resize(sample.dim());
  for (Eigen::Index d = 0; d < sample.dim(); ++d) {
    bandwidth_[d] = silverman_bandwidth(sample.values.col(d));
    sorted_.push_back(sorted_copy(sample.values.col(d)));
  }
}

GaussianKde::GaussianKde(const PooledSample& sample, const VectorXd& bandwidth)
    : bandwidth_(bandwidth), m_(sample.size()) {
  if (sample.size() < 1) throw std::invalid_argument("GaussianKde: empty sample");
  if (bandwidth.size() != sample.dim()) {
    throw std::invalid_argument("GaussianKde: one bandwidth per dimension required");
  }
  if (!(bandwidth.array() > 0.0).all()) {
    throw std::invalid_argument("GaussianKde: bandwidths must be positive");
  }
  for (Eigen::Index d = 0; d < sample.dim(); ++d) sorted_.push_back(sorted_copy(sample.values.col(d)));
}

double GaussianKde::log_density(Eigen::Index d, double x) const {
  const double h = bandwidth_[d];
  return log_kernel_sum(sorted_[static_cast<std::size_t>(d)], h, x) -
         std::log(static_cast<double>(m_) * h) - kLogSqrt2Pi;
}

double GaussianKde::log_density(const Eigen::Ref<const VectorXd>& x) const {
  if (x.size() != dim()) throw std::invalid_argument("GaussianKde: query has the wrong dimension");
  double total = 0.0;
  for (Eigen::Index d = 0; d < dim(); ++d) total += log_density(d, x[d]);
  return total;
}

double GaussianKde::density(const Eigen::Ref<const VectorXd>& x) const {
  return std::exp(log_density(x));
}

double GaussianKde::log_likelihood(const MatrixXd& series) const {
  if (series.cols() != dim()) {
    throw std::invalid_argument("GaussianKde: series dimension does not match the sample");
  }
  if (!series.allFinite()) return kNegInf;
  double total = 0.0;
  for (Eigen::Index d = 0; d < dim(); ++d) {
    const VectorXd q = sorted_copy(series.col(d));
    for (Eigen::Index t = 0; t < q.size(); ++t) total += log_density(d, q[t]);
  }
  return total;
}

double gaussian_kde_density(const PooledSample& sample, double h, double x) {
  if (sample.dim() != 1) throw std::invalid_argument("gaussian_kde_density: univariate only");
  const GaussianKde kde(sample, VectorXd::Constant(1, h));
  return std::exp(kde.log_density(0, x));
}

double kde_log_likelihood(const Ensemble& ens, const TimeSeriesMatrix& series, long discard) {
  if (series.length() == 0) throw std::invalid_argument("kde_log_likelihood: empty series");
  const GaussianKde kde(pool_samples(ens, discard));
  return kde.log_likelihood(series.data);
}

void write_density_csv(std::ostream& os, const GaussianKde& kde, const VectorXd& grid) {
  os << "x,density\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    os << grid[i] << ',' << std::exp(kde.log_density(0, grid[i])) << '\n';
  }
}

}  // namespace simest
