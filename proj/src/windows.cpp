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

#include "simest/windows.hpp"

#include <iomanip>
#include <limits>
#include <string>

namespace simest {

NormStats NormStats::identity(Eigen::Index input_dim, Eigen::Index target_dim) {
  NormStats s;
  s.mu_x = VectorXd::Zero(input_dim);
  s.sigma_x = VectorXd::Ones(input_dim);
  s.mu_y = VectorXd::Zero(target_dim);
  s.sigma_y = VectorXd::Ones(target_dim);
  return s;
}

namespace {

void append_windows(const MatrixXd& x, long L, WindowedDataset& ds, Eigen::Index& col) {
  const Eigen::Index T = x.rows();
  const Eigen::Index n = x.cols();
  for (Eigen::Index t = 0; t + L < T; ++t, ++col) {
    for (long l = 0; l < L; ++l) {
      ds.inputs.col(col).segment(l * n, n) = x.row(t + l).transpose();
    }
    ds.targets.col(col) = x.row(t + L).transpose();
  }
}

}  // namespace

WindowedDataset build_windows(const Ensemble& ens, long L) {
  if (L < 1) throw std::invalid_argument("build_windows: lag must be at least 1");
  if (ens.replications.empty()) throw std::invalid_argument("build_windows: empty ensemble");

  const Eigen::Index n = ens.replications.front().dim();
  Eigen::Index M = 0;
  for (const auto& rep : ens.replications) {
    if (rep.dim() != n) throw std::invalid_argument("build_windows: replications differ in dim");
    if (rep.length() <= L) {
      throw std::invalid_argument("build_windows: series length must exceed the lag");
    }
    M += rep.length() - L;
  }

  WindowedDataset ds;
  ds.lag = L;
  ds.dim = n;
  ds.inputs.resize(L * n, M);
  ds.targets.resize(n, M);
  Eigen::Index col = 0;
  for (const auto& rep : ens.replications) append_windows(rep.data, L, ds, col);
  return ds;
}

WindowedDataset build_windows(const TimeSeriesMatrix& series, long L) {
  Ensemble ens;
  ens.replications.push_back(series);
  return build_windows(ens, L);
}

NormStats compute_norm_stats(const WindowedDataset& ds) {
  if (ds.size() < 2) throw std::invalid_argument("compute_norm_stats: need at least 2 examples");

  NormStats s;
  const double M = static_cast<double>(ds.size());
  auto fill = [&](const MatrixXd& data, VectorXd& mu, VectorXd& sigma) {
    mu = data.rowwise().mean();
    sigma = ((data.colwise() - mu).array().square().rowwise().sum() / M).sqrt();
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
      if (!(sigma[i] >= kDegenerateSigma)) {
        sigma[i] = 1.0;
        s.degenerate = true;
      }
    }
  };
  fill(ds.inputs, s.mu_x, s.sigma_x);
  fill(ds.targets, s.mu_y, s.sigma_y);
  return s;
}

namespace {

void check_dims(const WindowedDataset& ds, const NormStats& stats) {
  if (stats.mu_x.size() != ds.inputs.rows() || stats.sigma_x.size() != ds.inputs.rows() ||
      stats.mu_y.size() != ds.targets.rows() || stats.sigma_y.size() != ds.targets.rows()) {
    throw std::invalid_argument("normalization stats do not match dataset dimensions");
  }
}

}  // namespace

WindowedDataset normalize(const WindowedDataset& ds, const NormStats& stats) {
  check_dims(ds, stats);
  WindowedDataset out = ds;
  out.inputs = (ds.inputs.colwise() - stats.mu_x).array().colwise() / stats.sigma_x.array();
  out.targets = (ds.targets.colwise() - stats.mu_y).array().colwise() / stats.sigma_y.array();
  return out;
}

WindowedDataset denormalize(const WindowedDataset& ds, const NormStats& stats) {
  check_dims(ds, stats);
  WindowedDataset out = ds;
  out.inputs = (ds.inputs.array().colwise() * stats.sigma_x.array()).matrix().colwise() +
               stats.mu_x;
  out.targets = (ds.targets.array().colwise() * stats.sigma_y.array()).matrix().colwise() +
                stats.mu_y;
  return out;
}

void apply_noise(Eigen::Ref<MatrixXd> inputs, Eigen::Ref<MatrixXd> targets, double eta_x,
                 double eta_y, Philox& rng) {
  if (eta_x < 0.0 || eta_y < 0.0) {
    throw std::invalid_argument("apply_noise: noise scales must be nonnegative");
  }
  if (eta_x > 0.0) {
    for (Eigen::Index c = 0; c < inputs.cols(); ++c)
      for (Eigen::Index r = 0; r < inputs.rows(); ++r) inputs(r, c) += eta_x * rng.normal();
  }
  if (eta_y > 0.0) {
    for (Eigen::Index c = 0; c < targets.cols(); ++c)
      for (Eigen::Index r = 0; r < targets.rows(); ++r) targets(r, c) += eta_y * rng.normal();
  }
}

void write_dataset_csv(std::ostream& os, const WindowedDataset& ds) {
  const Eigen::Index nx = ds.inputs.rows();
  const Eigen::Index ny = ds.targets.rows();
  for (Eigen::Index i = 0; i < nx; ++i) os << (i ? "," : "") << "x_" << i + 1;
  for (Eigen::Index j = 0; j < ny; ++j) os << ",y_" << j + 1;
  os << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index m = 0; m < ds.size(); ++m) {
    for (Eigen::Index i = 0; i < nx; ++i) os << (i ? "," : "") << ds.inputs(i, m);
    for (Eigen::Index j = 0; j < ny; ++j) os << ',' << ds.targets(j, m);
    os << '\n';
  }
}

}  // namespace simest
