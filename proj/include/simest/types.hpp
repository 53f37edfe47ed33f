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

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace simest {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Raised when a simulator produces a non-finite or runaway value.
class SimulationDiverged : public std::runtime_error {
 public:
  SimulationDiverged(const std::string& what, long step, long replication = -1)
      : std::runtime_error(what), step_(step), replication_(replication) {}

  long step() const noexcept { return step_; }
  /// -1 when the failure was not raised from inside an ensemble.
  long replication() const noexcept { return replication_; }

 private:
  long step_;
  long replication_;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, long epoch, long batch)
      : std::runtime_error(what), epoch_(epoch), batch_(batch) {}

  long epoch() const noexcept { return epoch_; }
  long batch() const noexcept { return batch_; }

 private:
  long epoch_;
  long batch_;
};

/// A pooled sample with no spread cannot carry a kernel density.
class DegenerateSample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed interval [lower, upper] with lower < upper.
struct Bound {
  double lower = 0.0;
  double upper = 1.0;

  double width() const { return upper - lower; }
  bool contains(double v) const { return v >= lower && v <= upper; }
};

/// Ordered, named free parameters with a uniform-prior box.
class ParameterVector {
 public:
  ParameterVector() = default;
  ParameterVector(std::vector<std::string> names, VectorXd values, std::vector<Bound> bounds,
                  bool out_of_support = false);

  /// A proposal that may lie outside its bounds.
  static ParameterVector proposal(const ParameterVector& like, const VectorXd& values);

  const std::vector<std::string>& names() const { return names_; }
  const VectorXd& values() const { return values_; }
  const std::vector<Bound>& bounds() const { return bounds_; }
  Eigen::Index size() const { return values_.size(); }
  bool out_of_support_allowed() const { return out_of_support_; }

  double operator[](Eigen::Index i) const { return values_[i]; }
  /// Throws std::out_of_range for unknown names.
  double at(const std::string& name) const;
  bool inside_bounds() const;

 private:
  std::vector<std::string> names_;
  VectorXd values_;
  std::vector<Bound> bounds_;
  bool out_of_support_ = false;
};

/// T x n series in model units, tagged with the seed that produced it.
struct TimeSeriesMatrix {
  MatrixXd data;
  std::uint64_t seed = 0;

  Eigen::Index length() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

struct Ensemble {
  std::vector<TimeSeriesMatrix> replications;
  std::uint64_t base_seed = 0;
  ParameterVector theta;

  std::size_t size() const { return replications.size(); }
};

}  // namespace simest
