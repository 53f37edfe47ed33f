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

#include <ostream>

namespace simest {

/// Rolling lag windows and next-step targets, one example per column.
///
/// Column m of `inputs` stacks (x_t, ..., x_{t+L-1}) oldest first, each
/// observation contributing `dim` consecutive rows; column m of `targets`
/// holds x_{t+L}. Replications are concatenated in seed order.
struct WindowedDataset {
  MatrixXd inputs;   // (L * dim) x M
  MatrixXd targets;  // dim x M
  long lag = 1;
  long dim = 1;

  Eigen::Index size() const { return inputs.cols(); }
};

/// Per-dimension location/scale used to bring a dataset to zero mean and
/// unit variance.
struct NormStats {
  VectorXd mu_x;
  VectorXd sigma_x;
  VectorXd mu_y;
  VectorXd sigma_y;
  bool degenerate = false;  // some sigma was replaced by 1

  static NormStats identity(Eigen::Index input_dim, Eigen::Index target_dim);
};

/// Sigmas below this are treated as zero variance and replaced by 1.
inline constexpr double kDegenerateSigma = 1e-12;

WindowedDataset build_windows(const Ensemble& ens, long L);
/// Windows from a single series (used for likelihood evaluation).
WindowedDataset build_windows(const TimeSeriesMatrix& series, long L);

NormStats compute_norm_stats(const WindowedDataset& ds);
WindowedDataset normalize(const WindowedDataset& ds, const NormStats& stats);
WindowedDataset denormalize(const WindowedDataset& ds, const NormStats& stats);

/// Adds N(0, eta_x^2) to every input entry and N(0, eta_y^2) to every target
/// entry, drawing inputs column by column and then targets.
void apply_noise(Eigen::Ref<MatrixXd> inputs, Eigen::Ref<MatrixXd> targets, double eta_x,
                 double eta_y, Philox& rng);

/// CSV dump: header x_1..x_{L*n},y_1..y_n then one row per example.
void write_dataset_csv(std::ostream& os, const WindowedDataset& ds);

}  // namespace simest
