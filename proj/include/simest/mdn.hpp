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
#include "simest/windows.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace simest {

/// Mixture variances are floored here, in training and evaluation alike.
inline constexpr double kVarianceFloor = 1e-8;

/// Feedforward ReLU trunk with a K-component diagonal Gaussian mixture head.
struct MdnArchitecture {
  long input_dim = 3;
  std::vector<long> hidden{32, 32, 32};
  long components = 16;
  long target_dim = 1;

  void validate() const;
  bool operator==(const MdnArchitecture&) const = default;
};

/// Network weights. Blocks are stored in a fixed order: one (W, b) pair per
/// hidden layer, then the mixture-weight head, the mean head and the
/// log-variance head. Head rows for component k and target dim j sit at
/// k * target_dim + j.
template <typename Scalar>
struct MdnParams {
  MdnArchitecture arch;
  std::vector<Matrix<Scalar>> weights;
  std::vector<Vector<Scalar>> biases;

  static MdnParams zeros(const MdnArchitecture& arch);

  std::size_t hidden_layers() const { return arch.hidden.size(); }
  Matrix<Scalar>& alpha_weight() { return weights[hidden_layers()]; }
  Vector<Scalar>& alpha_bias() { return biases[hidden_layers()]; }
  Matrix<Scalar>& mean_weight() { return weights[hidden_layers() + 1]; }
  Vector<Scalar>& mean_bias() { return biases[hidden_layers() + 1]; }
  Matrix<Scalar>& log_var_weight() { return weights[hidden_layers() + 2]; }
  Vector<Scalar>& log_var_bias() { return biases[hidden_layers() + 2]; }
  const Matrix<Scalar>& alpha_weight() const { return weights[hidden_layers()]; }
  const Vector<Scalar>& alpha_bias() const { return biases[hidden_layers()]; }
  const Matrix<Scalar>& mean_weight() const { return weights[hidden_layers() + 1]; }
  const Vector<Scalar>& mean_bias() const { return biases[hidden_layers() + 1]; }
  const Matrix<Scalar>& log_var_weight() const { return weights[hidden_layers() + 2]; }
  const Vector<Scalar>& log_var_bias() const { return biases[hidden_layers() + 2]; }

  Eigen::Index parameter_count() const;
  /// Every weight block followed by its bias, in block order.
  Vector<Scalar> flatten() const;
  void assign(const Vector<Scalar>& flat);
  bool all_finite() const;

  template <typename Other>
  MdnParams<Other> cast() const {
    MdnParams<Other> out;
    out.arch = arch;
    for (const auto& w : weights) out.weights.push_back(w.template cast<Other>());
    for (const auto& b : biases) out.biases.push_back(b.template cast<Other>());
    return out;
  }
};

/// Mixture parameters for one conditioning window.
struct MixtureOutput {
  VectorXd alpha;    // K
  MatrixXd mean;     // K x n
  MatrixXd log_var;  // K x n
};

struct TrainConfig {
  long epochs = 12;
  long batch_size = 512;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double eta_x = 0.2;
  double eta_y = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

template <typename Scalar>
struct AdamState {
  MdnParams<Scalar> m;
  MdnParams<Scalar> v;
  long step = 0;

  static AdamState fresh(const MdnArchitecture& arch);
};

template <typename Scalar>
struct TrainedMdn {
  MdnParams<Scalar> params;
  NormStats stats;
  long lag = 1;
  std::vector<double> epoch_loss;  // mean batch loss per epoch, normalized units

  const MdnArchitecture& arch() const { return params.arch; }
};

/// Weights uniform on +-1/sqrt(fan_in), biases zero.
template <typename Scalar>
MdnParams<Scalar> init_network(const MdnArchitecture& arch, std::uint64_t seed);

/// Mixture parameters for a single window of arch.input_dim values.
template <typename Scalar>
MixtureOutput forward(const MdnParams<Scalar>& params, const Eigen::Ref<const VectorXd>& window);

/// log sum_k alpha_k N(y | mean_k, diag(max(exp(log_var_k), floor))).
double mixture_log_density(const MixtureOutput& mix, const Eigen::Ref<const VectorXd>& y);

/// Per-column log mixture density for a batch (inputs one window per column).
template <typename Scalar>
Vector<Scalar> batch_log_density(const MdnParams<Scalar>& params,
                                 const Eigen::Ref<const Matrix<Scalar>>& inputs,
                                 const Eigen::Ref<const Matrix<Scalar>>& targets);

template <typename Scalar>
struct LossAndGradients {
  Scalar loss;
  MdnParams<Scalar> grads;
};

/// Mean negative log density over the batch and its exact gradient.
/// Throws TrainingDiverged (epoch/batch -1) on a non-finite loss.
template <typename Scalar>
LossAndGradients<Scalar> nll_and_gradients(const MdnParams<Scalar>& params,
                                           const Eigen::Ref<const Matrix<Scalar>>& inputs,
                                           const Eigen::Ref<const Matrix<Scalar>>& targets);

/// Bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, MdnParams<Scalar>& params,
               const MdnParams<Scalar>& grads, const TrainConfig& cfg);

/// normalize -> per-epoch shuffle -> per-batch noise -> gradient -> Adam.
/// The final partial batch of each epoch is kept.
template <typename Scalar>
TrainedMdn<Scalar> train(const WindowedDataset& ds, const MdnArchitecture& arch,
                         const TrainConfig& cfg);

/// Log density of y given window x in model units, including the
/// 1 / prod(sigma_y) change-of-variables factor.
template <typename Scalar>
double eval_log_density(const TrainedMdn<Scalar>& model, const Eigen::Ref<const VectorXd>& x,
                        const Eigen::Ref<const VectorXd>& y);

template <typename Scalar>
double eval_density(const TrainedMdn<Scalar>& model, const Eigen::Ref<const VectorXd>& x,
                    const Eigen::Ref<const VectorXd>& y);

/// Sum over t of log f(x_t..x_{t+L-1}, x_{t+L}); -inf if any term is not finite.
template <typename Scalar>
double mdn_log_likelihood(const TrainedMdn<Scalar>& model, const TimeSeriesMatrix& series);

/// JSON document with architecture, lag, normalization stats and every
/// weight block with its shape. Weights round-trip bit-exactly.
template <typename Scalar>
std::string serialize_model(const TrainedMdn<Scalar>& model);

template <typename Scalar>
TrainedMdn<Scalar> deserialize_model(const std::string& text);

#define SIMEST_MDN_EXTERN(S)                                                                    \
  extern template struct MdnParams<S>;                                                          \
  extern template struct AdamState<S>;                                                          \
  extern template MdnParams<S> init_network<S>(const MdnArchitecture&, std::uint64_t);          \
  extern template MixtureOutput forward<S>(const MdnParams<S>&, const Eigen::Ref<const VectorXd>&); \
  extern template Vector<S> batch_log_density<S>(const MdnParams<S>&,                           \
                                                 const Eigen::Ref<const Matrix<S>>&,            \
                                                 const Eigen::Ref<const Matrix<S>>&);           \
  extern template LossAndGradients<S> nll_and_gradients<S>(                                     \
      const MdnParams<S>&, const Eigen::Ref<const Matrix<S>>&,                                  \
      const Eigen::Ref<const Matrix<S>>&);                                                      \
  extern template void adam_step<S>(AdamState<S>&, MdnParams<S>&, const MdnParams<S>&,         \
                                    const TrainConfig&);                                        \
  extern template TrainedMdn<S> train<S>(const WindowedDataset&, const MdnArchitecture&,        \
                                         const TrainConfig&);                                   \
  extern template double eval_log_density<S>(const TrainedMdn<S>&,                              \
                                             const Eigen::Ref<const VectorXd>&,                 \
                                             const Eigen::Ref<const VectorXd>&);                \
  extern template double eval_density<S>(const TrainedMdn<S>&, const Eigen::Ref<const VectorXd>&, \
                                         const Eigen::Ref<const VectorXd>&);                    \
  extern template double mdn_log_likelihood<S>(const TrainedMdn<S>&, const TimeSeriesMatrix&);  \
  extern template std::string serialize_model<S>(const TrainedMdn<S>&);                         \
  extern template TrainedMdn<S> deserialize_model<S>(const std::string&);

SIMEST_MDN_EXTERN(float)
SIMEST_MDN_EXTERN(double)
#undef SIMEST_MDN_EXTERN

}  // namespace simest
