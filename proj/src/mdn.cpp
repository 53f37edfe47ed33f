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

#include "simest/mdn.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>

namespace simest {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

template <typename Scalar>
constexpr const char* scalar_name() {
  return std::is_same_v<Scalar, float> ? "float32" : "float64";
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void MdnArchitecture::validate() const {
  if (input_dim < 1) throw std::invalid_argument("MdnArchitecture: input_dim must be positive");
  if (target_dim < 1) throw std::invalid_argument("MdnArchitecture: target_dim must be positive");
  if (components < 1) throw std::invalid_argument("MdnArchitecture: need at least one component");
  if (hidden.empty()) throw std::invalid_argument("MdnArchitecture: need at least one hidden layer");
  for (long w : hidden) {
    if (w < 1) throw std::invalid_argument("MdnArchitecture: hidden widths must be positive");
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be at least 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("TrainConfig: Adam betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon must be > 0");
  if (eta_x < 0.0 || eta_y < 0.0) throw std::invalid_argument("TrainConfig: eta must be >= 0");
}

// ---------------------------------------------------------------------------
// Parameters

template <typename Scalar>
MdnParams<Scalar> MdnParams<Scalar>::zeros(const MdnArchitecture& arch) {
  arch.validate();
  MdnParams p;
  p.arch = arch;
  long fan_in = arch.input_dim;
  for (long width : arch.hidden) {
    p.weights.push_back(Matrix<Scalar>::Zero(width, fan_in));
    p.biases.push_back(Vector<Scalar>::Zero(width));
    fan_in = width;
  }
  const long kn = arch.components * arch.target_dim;
  p.weights.push_back(Matrix<Scalar>::Zero(arch.components, fan_in));
  p.biases.push_back(Vector<Scalar>::Zero(arch.components));
  p.weights.push_back(Matrix<Scalar>::Zero(kn, fan_in));
  p.biases.push_back(Vector<Scalar>::Zero(kn));
  p.weights.push_back(Matrix<Scalar>::Zero(kn, fan_in));
  p.biases.push_back(Vector<Scalar>::Zero(kn));
  return p;
}

template <typename Scalar>
Eigen::Index MdnParams<Scalar>::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
  return n;
}

template <typename Scalar>
Vector<Scalar> MdnParams<Scalar>::flatten() const {
  Vector<Scalar> flat(parameter_count());
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    flat.segment(at, weights[i].size()) = weights[i].reshaped();
    at += weights[i].size();
    flat.segment(at, biases[i].size()) = biases[i];
    at += biases[i].size();
  }
  return flat;
}

template <typename Scalar>
void MdnParams<Scalar>::assign(const Vector<Scalar>& flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("MdnParams::assign: size mismatch");
  }
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i].reshaped() = flat.segment(at, weights[i].size());
    at += weights[i].size();
    biases[i] = flat.segment(at, biases[i].size());
    at += biases[i].size();
  }
}

template <typename Scalar>
bool MdnParams<Scalar>::all_finite() const {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!weights[i].allFinite() || !biases[i].allFinite()) return false;
  }
  return true;
}

template <typename Scalar>
AdamState<Scalar> AdamState<Scalar>::fresh(const MdnArchitecture& arch) {
  return AdamState{MdnParams<Scalar>::zeros(arch), MdnParams<Scalar>::zeros(arch), 0};
}

template <typename Scalar>
MdnParams<Scalar> init_network(const MdnArchitecture& arch, std::uint64_t seed) {
  MdnParams<Scalar> p = MdnParams<Scalar>::zeros(arch);
  Philox rng(seed);
  for (auto& w : p.weights) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        w(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

/// Activations of one batch pass, kept for the backward sweep.
template <typename Scalar>
struct Activations {
  std::vector<Matrix<Scalar>> pre;   // W h + b per hidden layer
  std::vector<Matrix<Scalar>> post;  // relu(pre)
  Matrix<Scalar> logits;             // K x B
  Matrix<Scalar> mean;               // Kn x B
  Matrix<Scalar> log_var;            // Kn x B
};

template <typename Scalar>
void run_network(const MdnParams<Scalar>& p, const Eigen::Ref<const Matrix<Scalar>>& inputs,
                 Activations<Scalar>& a) {
  const std::size_t L = p.hidden_layers();
  a.pre.resize(L);
  a.post.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (l == 0) {
      a.pre[l].noalias() = p.weights[l] * inputs;
    } else {
      a.pre[l].noalias() = p.weights[l] * a.post[l - 1];
    }
    a.pre[l].colwise() += p.biases[l];
    a.post[l] = a.pre[l].cwiseMax(Scalar(0));
  }
  const Matrix<Scalar>& h = a.post[L - 1];
  a.logits.noalias() = p.alpha_weight() * h;
  a.logits.colwise() += p.alpha_bias();
  a.mean.noalias() = p.mean_weight() * h;
  a.mean.colwise() += p.mean_bias();
  a.log_var.noalias() = p.log_var_weight() * h;
  a.log_var.colwise() += p.log_var_bias();
}

/// Column-wise log-sum-exp with max shift.
template <typename Scalar>
RowVector<Scalar> log_sum_exp_cols(const Matrix<Scalar>& x) {
  const RowVector<Scalar> m = x.colwise().maxCoeff();
  Matrix<Scalar> shifted = x.rowwise() - m;
  shifted.array() = shifted.array().exp();
  return m.array() + shifted.colwise().sum().array().log();
}

/// Quantities of the mixture head evaluated at the targets.
template <typename Scalar>
struct MixtureTerms {
  Matrix<Scalar> log_alpha;   // K x B
  Matrix<Scalar> variance;    // Kn x B, floored
  Matrix<Scalar> residual;    // Kn x B, y - mean
  Matrix<Scalar> unfloored;   // Kn x B, 1 where exp(log_var) >= floor
  Matrix<Scalar> log_joint;   // K x B, log alpha_k + log N_k
  RowVector<Scalar> log_density;
};

template <typename Scalar>
MixtureTerms<Scalar> mixture_terms(const Activations<Scalar>& a,
                                   const Eigen::Ref<const Matrix<Scalar>>& targets, long K,
                                   long n) {
  const Scalar floor = static_cast<Scalar>(kVarianceFloor);
  const Eigen::Index B = targets.cols();
  MixtureTerms<Scalar> t;

  t.log_alpha = a.logits.rowwise() - log_sum_exp_cols<Scalar>(a.logits);

  const Matrix<Scalar> raw = a.log_var.array().exp().matrix();
  t.variance = raw.cwiseMax(floor);
  t.unfloored = (raw.array() >= floor).template cast<Scalar>().matrix();
  const Matrix<Scalar> log_variance =
      (raw.array() >= floor).select(a.log_var.array(), std::log(floor)).matrix();

  t.residual.resize(K * n, B);
  for (long k = 0; k < K; ++k) t.residual.middleRows(k * n, n) = targets;
  t.residual -= a.mean;

  const Matrix<Scalar> per_dim =
      (Scalar(-0.5) * (log_variance.array() + t.residual.array().square() / t.variance.array() +
                       static_cast<Scalar>(kLog2Pi)))
          .matrix();
  if (n == 1) {
    t.log_joint = t.log_alpha + per_dim;
  } else {
    t.log_joint = t.log_alpha;
    for (long k = 0; k < K; ++k) t.log_joint.row(k) += per_dim.middleRows(k * n, n).colwise().sum();
  }
  t.log_density = log_sum_exp_cols<Scalar>(t.log_joint);
  return t;
}

template <typename Scalar>
Matrix<Scalar> as_scalar(const Eigen::Ref<const VectorXd>& v) {
  return v.cast<Scalar>();
}

}  // namespace

template <typename Scalar>
Vector<Scalar> batch_log_density(const MdnParams<Scalar>& params,
                                 const Eigen::Ref<const Matrix<Scalar>>& inputs,
                                 const Eigen::Ref<const Matrix<Scalar>>& targets) {
  if (inputs.rows() != params.arch.input_dim || targets.rows() != params.arch.target_dim ||
      inputs.cols() != targets.cols()) {
    throw std::invalid_argument("batch_log_density: shape mismatch");
  }
  Activations<Scalar> a;
  run_network(params, inputs, a);
  const auto t = mixture_terms<Scalar>(a, targets, params.arch.components, params.arch.target_dim);
  return t.log_density.transpose();
}

template <typename Scalar>
MixtureOutput forward(const MdnParams<Scalar>& params, const Eigen::Ref<const VectorXd>& window) {
  if (window.size() != params.arch.input_dim) {
    throw std::invalid_argument("forward: window length does not match input_dim");
  }
  if (!window.allFinite()) throw std::invalid_argument("forward: window has non-finite values");

  Activations<Scalar> a;
  run_network<Scalar>(params, as_scalar<Scalar>(window), a);
  const long K = params.arch.components;
  const long n = params.arch.target_dim;

  MixtureOutput out;
  const VectorXd logits = a.logits.col(0).template cast<double>();
  out.alpha = (logits.array() - logits.maxCoeff()).exp();
  out.alpha /= out.alpha.sum();
  out.mean.resize(K, n);
  out.log_var.resize(K, n);
  for (long k = 0; k < K; ++k) {
    for (long j = 0; j < n; ++j) {
      out.mean(k, j) = static_cast<double>(a.mean(k * n + j, 0));
      out.log_var(k, j) = static_cast<double>(a.log_var(k * n + j, 0));
    }
  }
  return out;
}

double mixture_log_density(const MixtureOutput& mix, const Eigen::Ref<const VectorXd>& y) {
  const Eigen::Index K = mix.alpha.size();
  if (mix.mean.rows() != K || mix.log_var.rows() != K || mix.mean.cols() != y.size()) {
    throw std::invalid_argument("mixture_log_density: shape mismatch");
  }
  VectorXd log_terms(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    double s = std::log(mix.alpha[k]);
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      const double raw = std::exp(mix.log_var(k, j));
      const double var = std::max(raw, kVarianceFloor);
      const double log_var = raw >= kVarianceFloor ? mix.log_var(k, j) : std::log(kVarianceFloor);
      const double r = y[j] - mix.mean(k, j);
      s += -0.5 * (kLog2Pi + log_var + r * r / var);
    }
    log_terms[k] = s;
  }
  const double m = log_terms.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((log_terms.array() - m).exp().sum());
}

template <typename Scalar>
LossAndGradients<Scalar> nll_and_gradients(const MdnParams<Scalar>& params,
                                           const Eigen::Ref<const Matrix<Scalar>>& inputs,
                                           const Eigen::Ref<const Matrix<Scalar>>& targets) {
  const Eigen::Index B = inputs.cols();
  if (B == 0) throw std::invalid_argument("nll_and_gradients: empty batch");
  if (inputs.rows() != params.arch.input_dim || targets.rows() != params.arch.target_dim ||
      targets.cols() != B) {
    throw std::invalid_argument("nll_and_gradients: shape mismatch");
  }
  const long K = params.arch.components;
  const long n = params.arch.target_dim;

  Activations<Scalar> a;
  run_network(params, inputs, a);
  const auto t = mixture_terms<Scalar>(a, targets, K, n);

  LossAndGradients<Scalar> out{Scalar(0), MdnParams<Scalar>::zeros(params.arch)};
  out.loss = -t.log_density.sum() / static_cast<Scalar>(B);
  if (!std::isfinite(static_cast<double>(out.loss))) {
    throw TrainingDiverged("non-finite training loss", -1, -1);
  }

  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(B);
  // Posterior responsibility of each component for each example.
  Matrix<Scalar> gamma = t.log_joint.rowwise() - t.log_density;
  gamma.array() = gamma.array().exp();
  const Matrix<Scalar> d_logits = (t.log_alpha.array().exp() - gamma.array()).matrix() * inv_b;

  Matrix<Scalar> gamma_rep(K * n, B);
  for (long k = 0; k < K; ++k) gamma_rep.middleRows(k * n, n) = gamma.row(k).replicate(n, 1);
  const Matrix<Scalar> scaled = (t.residual.array() / t.variance.array()).matrix();
  const Matrix<Scalar> d_mean = (-gamma_rep.array() * scaled.array() * inv_b).matrix();
  const Matrix<Scalar> d_log_var =
      (-gamma_rep.array() * Scalar(0.5) * (scaled.array() * t.residual.array() - Scalar(1)) *
       t.unfloored.array() * inv_b)
          .matrix();

  const std::size_t L = params.hidden_layers();
  const Matrix<Scalar>& h = a.post[L - 1];
  out.grads.alpha_weight().noalias() = d_logits * h.transpose();
  out.grads.alpha_bias() = d_logits.rowwise().sum();
  out.grads.mean_weight().noalias() = d_mean * h.transpose();
  out.grads.mean_bias() = d_mean.rowwise().sum();
  out.grads.log_var_weight().noalias() = d_log_var * h.transpose();
  out.grads.log_var_bias() = d_log_var.rowwise().sum();

  Matrix<Scalar> d_h;
  d_h.noalias() = params.alpha_weight().transpose() * d_logits;
  d_h.noalias() += params.mean_weight().transpose() * d_mean;
  d_h.noalias() += params.log_var_weight().transpose() * d_log_var;

  for (std::size_t l = L; l-- > 0;) {
    const Matrix<Scalar> d_pre =
        (a.pre[l].array() > Scalar(0)).select(d_h.array(), Scalar(0)).matrix();
    if (l == 0) {
      out.grads.weights[l].noalias() = d_pre * inputs.transpose();
    } else {
      out.grads.weights[l].noalias() = d_pre * a.post[l - 1].transpose();
    }
    out.grads.biases[l] = d_pre.rowwise().sum();
    if (l > 0) d_h.noalias() = params.weights[l].transpose() * d_pre;
  }
  return out;
}

template <typename Scalar>
void adam_step(AdamState<Scalar>& state, MdnParams<Scalar>& params,
               const MdnParams<Scalar>& grads, const TrainConfig& cfg) {
  if (state.m.weights.size() != params.weights.size() ||
      grads.weights.size() != params.weights.size()) {
    throw std::invalid_argument("adam_step: state, params and grads disagree in shape");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const Scalar b1 = static_cast<Scalar>(cfg.beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.beta2);
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  const Scalar eps = static_cast<Scalar>(cfg.epsilon);
  const Scalar inv_c1 = static_cast<Scalar>(1.0 / c1);
  const Scalar inv_c2 = static_cast<Scalar>(1.0 / c2);

  auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m.array() = b1 * m.array() + (Scalar(1) - b1) * g.array();
    v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
    p.array() -= lr * (m.array() * inv_c1) / ((v.array() * inv_c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    update(params.weights[i], state.m.weights[i], state.v.weights[i], grads.weights[i]);
    update(params.biases[i], state.m.biases[i], state.v.biases[i], grads.biases[i]);
  }
}

// ---------------------------------------------------------------------------
// Training and evaluation

template <typename Scalar>
TrainedMdn<Scalar> train(const WindowedDataset& ds, const MdnArchitecture& arch,
                         const TrainConfig& cfg) {
  cfg.validate();
  arch.validate();
  if (arch.input_dim != ds.inputs.rows() || arch.target_dim != ds.targets.rows()) {
    throw std::invalid_argument("train: architecture does not match dataset dimensions");
  }

  TrainedMdn<Scalar> model;
  model.lag = ds.lag;
  model.stats = compute_norm_stats(ds);
  const WindowedDataset data = normalize(ds, model.stats);
  model.params = init_network<Scalar>(arch, mix_seed(cfg.seed, 1));
  auto adam = AdamState<Scalar>::fresh(arch);

  Philox rng(cfg.seed, 2);
  const Eigen::Index M = data.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(M));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  MatrixXd xb, yb;
  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (Eigen::Index i = M - 1; i > 0; --i) {
      const auto j = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    double loss_sum = 0.0;
    long batches = 0;
    for (Eigen::Index start = 0; start < M; start += cfg.batch_size, ++batches) {
      const Eigen::Index count = std::min<Eigen::Index>(cfg.batch_size, M - start);
      xb.resize(data.inputs.rows(), count);
      yb.resize(data.targets.rows(), count);
      for (Eigen::Index c = 0; c < count; ++c) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + c)];
        xb.col(c) = data.inputs.col(src);
        yb.col(c) = data.targets.col(src);
      }
      apply_noise(xb, yb, cfg.eta_x, cfg.eta_y, rng);
      const Matrix<Scalar> xs = xb.cast<Scalar>();
      const Matrix<Scalar> ys = yb.cast<Scalar>();
      try {
        auto lg = nll_and_gradients<Scalar>(model.params, xs, ys);
        adam_step(adam, model.params, lg.grads, cfg);
        loss_sum += static_cast<double>(lg.loss);
      } catch (const TrainingDiverged&) {
        throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batches),
                               epoch, batches);
      }
    }
    model.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
  }
  if (!model.params.all_finite()) {
    throw TrainingDiverged("non-finite weights after training", cfg.epochs - 1, -1);
  }
  return model;
}

template <typename Scalar>
double eval_log_density(const TrainedMdn<Scalar>& model, const Eigen::Ref<const VectorXd>& x,
                        const Eigen::Ref<const VectorXd>& y) {
  const NormStats& s = model.stats;
  if (x.size() != s.mu_x.size() || y.size() != s.mu_y.size()) {
    throw std::invalid_argument("eval_density: window or target has the wrong length");
  }
  const Matrix<Scalar> xn = ((x - s.mu_x).array() / s.sigma_x.array()).matrix().cast<Scalar>();
  const Matrix<Scalar> yn = ((y - s.mu_y).array() / s.sigma_y.array()).matrix().cast<Scalar>();
  const double g = static_cast<double>(batch_log_density<Scalar>(model.params, xn, yn)[0]);
  return g - s.sigma_y.array().log().sum();
}

template <typename Scalar>
double eval_density(const TrainedMdn<Scalar>& model, const Eigen::Ref<const VectorXd>& x,
                    const Eigen::Ref<const VectorXd>& y) {
  return std::exp(eval_log_density(model, x, y));
}

template <typename Scalar>
double mdn_log_likelihood(const TrainedMdn<Scalar>& model, const TimeSeriesMatrix& series) {
  if (series.length() <= model.lag) {
    throw std::invalid_argument("mdn_log_likelihood: series length must exceed the lag");
  }
  const WindowedDataset ds = normalize(build_windows(series, model.lag), model.stats);
  const Matrix<Scalar> xs = ds.inputs.cast<Scalar>();
  const Matrix<Scalar> ys = ds.targets.cast<Scalar>();
  const Vector<Scalar> logs = batch_log_density<Scalar>(model.params, xs, ys);

  double total = 0.0;
  for (Eigen::Index i = 0; i < logs.size(); ++i) {
    const double v = static_cast<double>(logs[i]);
    if (!std::isfinite(v)) return kNegInf;
    total += v;
  }
  return total - static_cast<double>(ds.size()) * model.stats.sigma_y.array().log().sum();
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

template <typename Derived>
json matrix_to_json(const std::string& name, const Eigen::MatrixBase<Derived>& m) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  Eigen::Index i = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) data[static_cast<std::size_t>(i++)] = m(r, c);
  return json{{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

template <typename Scalar>
Matrix<Scalar> matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (j.at("rows").get<Eigen::Index>() != rows || j.at("cols").get<Eigen::Index>() != cols) {
    throw std::invalid_argument("model document: block '" + j.at("name").get<std::string>() +
                                "' has an unexpected shape");
  }
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw std::invalid_argument("model document: block data length mismatch");
  }
  Matrix<Scalar> m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = static_cast<Scalar>(data[i++]);
  return m;
}

std::string block_name(std::size_t i, std::size_t hidden, const char* part) {
  static const char* heads[] = {"alpha", "mean", "log_var"};
  const std::string base = i < hidden ? "hidden" + std::to_string(i) : heads[i - hidden];
  return base + "." + part;
}

json vec_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd vec_from(const json& j) {
  const auto d = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
}

}  // namespace

template <typename Scalar>
std::string serialize_model(const TrainedMdn<Scalar>& model) {
  const auto& arch = model.params.arch;
  json doc;
  doc["format"] = "simest-mdn";
  doc["version"] = 1;
  doc["scalar"] = scalar_name<Scalar>();
  doc["arch"] = {{"input_dim", arch.input_dim},
                 {"hidden", arch.hidden},
                 {"components", arch.components},
                 {"target_dim", arch.target_dim},
                 {"activation", "relu"}};
  doc["lag"] = model.lag;
  doc["norm_stats"] = {{"mu_x", vec_json(model.stats.mu_x)},
                       {"sigma_x", vec_json(model.stats.sigma_x)},
                       {"mu_y", vec_json(model.stats.mu_y)},
                       {"sigma_y", vec_json(model.stats.sigma_y)},
                       {"degenerate", model.stats.degenerate}};
  doc["epoch_loss"] = model.epoch_loss;
  json blocks = json::array();
  const std::size_t hidden = model.params.hidden_layers();
  for (std::size_t i = 0; i < model.params.weights.size(); ++i) {
    blocks.push_back(matrix_to_json(block_name(i, hidden, "weight"), model.params.weights[i]));
    blocks.push_back(matrix_to_json(block_name(i, hidden, "bias"), model.params.biases[i]));
  }
  doc["blocks"] = blocks;
  return doc.dump();
}

template <typename Scalar>
TrainedMdn<Scalar> deserialize_model(const std::string& text) {
  const json doc = json::parse(text);
  if (doc.at("format") != "simest-mdn") throw std::invalid_argument("not a simest-mdn document");
  if (doc.at("scalar") != scalar_name<Scalar>()) {
    throw std::invalid_argument("model document scalar type does not match");
  }
  MdnArchitecture arch;
  arch.input_dim = doc.at("arch").at("input_dim").get<long>();
  arch.hidden = doc.at("arch").at("hidden").get<std::vector<long>>();
  arch.components = doc.at("arch").at("components").get<long>();
  arch.target_dim = doc.at("arch").at("target_dim").get<long>();

  TrainedMdn<Scalar> model;
  model.params = MdnParams<Scalar>::zeros(arch);
  model.lag = doc.at("lag").get<long>();
  const json& ns = doc.at("norm_stats");
  model.stats.mu_x = vec_from(ns.at("mu_x"));
  model.stats.sigma_x = vec_from(ns.at("sigma_x"));
  model.stats.mu_y = vec_from(ns.at("mu_y"));
  model.stats.sigma_y = vec_from(ns.at("sigma_y"));
  model.stats.degenerate = ns.at("degenerate").get<bool>();
  model.epoch_loss = doc.value("epoch_loss", std::vector<double>{});

  const json& blocks = doc.at("blocks");
  if (blocks.size() != 2 * model.params.weights.size()) {
    throw std::invalid_argument("model document: wrong number of weight blocks");
  }
  for (std::size_t i = 0; i < model.params.weights.size(); ++i) {
    auto& w = model.params.weights[i];
    auto& b = model.params.biases[i];
    w = matrix_from_json<Scalar>(blocks[2 * i], w.rows(), w.cols());
    b = matrix_from_json<Scalar>(blocks[2 * i + 1], b.rows(), 1);
  }
  return model;
}

#define SIMEST_MDN_INSTANTIATE(S)                                                               \
  template struct MdnParams<S>;                                                                 \
  template struct AdamState<S>;                                                                 \
  template MdnParams<S> init_network<S>(const MdnArchitecture&, std::uint64_t);                 \
  template MixtureOutput forward<S>(const MdnParams<S>&, const Eigen::Ref<const VectorXd>&);    \
  template Vector<S> batch_log_density<S>(const MdnParams<S>&,                                  \
                                          const Eigen::Ref<const Matrix<S>>&,                   \
                                          const Eigen::Ref<const Matrix<S>>&);                  \
  template LossAndGradients<S> nll_and_gradients<S>(const MdnParams<S>&,                        \
                                                    const Eigen::Ref<const Matrix<S>>&,         \
                                                    const Eigen::Ref<const Matrix<S>>&);        \
  template void adam_step<S>(AdamState<S>&, MdnParams<S>&, const MdnParams<S>&,                \
                             const TrainConfig&);                                               \
  template TrainedMdn<S> train<S>(const WindowedDataset&, const MdnArchitecture&,               \
                                  const TrainConfig&);                                          \
  template double eval_log_density<S>(const TrainedMdn<S>&, const Eigen::Ref<const VectorXd>&, \
                                      const Eigen::Ref<const VectorXd>&);                       \
  template double eval_density<S>(const TrainedMdn<S>&, const Eigen::Ref<const VectorXd>&,     \
                                  const Eigen::Ref<const VectorXd>&);                           \
  template double mdn_log_likelihood<S>(const TrainedMdn<S>&, const TimeSeriesMatrix&);         \
  template std::string serialize_model<S>(const TrainedMdn<S>&);                                \
  template TrainedMdn<S> deserialize_model<S>(const std::string&);

SIMEST_MDN_INSTANTIATE(float)
SIMEST_MDN_INSTANTIATE(double)

}  // namespace simest
