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
#include "simest/models.hpp"

#include <doctest.h>

#include <cmath>

using namespace simest;

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;

MdnArchitecture small_arch() {
  MdnArchitecture a;
  a.input_dim = 3;
  a.hidden = {8, 8};
  a.components = 4;
  return a;
}

MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Philox& rng, double scale = 1.0) {
  MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = scale * rng.normal();
  return m;
}

TimeSeriesMatrix iid_normal(long T, std::uint64_t seed) {
  Philox rng(seed);
  TimeSeriesMatrix s;
  s.data.resize(T, 1);
  for (long t = 0; t < T; ++t) s.data(t, 0) = rng.normal();
  return s;
}

}  // namespace

TEST_CASE("parameter count of the default network") {
  const MdnArchitecture a;
  const long hand = (3 * 32 + 32) + 2 * (32 * 32 + 32) + (16 + 16 + 16) * (32 + 1);
  CHECK(hand == 3824);
  CHECK(init_network<double>(a, 0).parameter_count() == hand);
}

TEST_CASE("initialization is seeded and fan-in scaled") {
  const auto a = init_network<double>(MdnArchitecture{}, 1);
  const auto b = init_network<double>(MdnArchitecture{}, 1);
  const auto c = init_network<double>(MdnArchitecture{}, 0);
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(3.0));
  CHECK(a.weights[1].cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(32.0));
  for (const auto& bias : a.biases) CHECK(bias.isZero(0.0));
  MdnArchitecture bad;
  bad.hidden = {};
  CHECK_THROWS_AS(init_network<double>(bad, 0), std::invalid_argument);
}

TEST_CASE("zero head gives a uniform standard mixture") {
  auto p = init_network<double>(MdnArchitecture{}, 3);
  for (std::size_t i = p.hidden_layers(); i < p.weights.size(); ++i) {
    p.weights[i].setZero();
    p.biases[i].setZero();
  }
  const auto mix = forward(p, VectorXd::Constant(3, 0.7));
  CHECK(((mix.alpha.array() - 1.0 / 16).abs() < 1e-15).all());
  CHECK(mix.mean.isZero(0.0));
  CHECK(mix.log_var.isZero(0.0));
  CHECK(mixture_log_density(mix, VectorXd::Zero(1)) == doctest::Approx(-kHalfLog2Pi).epsilon(1e-14));

  const MatrixXd x = MatrixXd::Constant(3, 5, 0.7);
  const MatrixXd y = MatrixXd::Zero(1, 5);
  const auto lg = nll_and_gradients<double>(p, x, y);
  CHECK(lg.loss == doctest::Approx(-mixture_log_density(mix, VectorXd::Zero(1))).epsilon(1e-14));
}

TEST_CASE("softmax is shift invariant and normalized") {
  Philox rng(4);
  auto p = init_network<double>(MdnArchitecture{}, 4);
  p.alpha_bias() = random_matrix(16, 1, rng);
  const VectorXd w = random_matrix(3, 1, rng);
  const auto a = forward(p, w);
  p.alpha_bias().array() += 123.0;
  const auto b = forward(p, w);
  CHECK((a.alpha - b.alpha).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < 1000; ++i) {
    const auto m = forward(p, random_matrix(3, 1, rng, 3.0));
    CHECK(std::abs(m.alpha.sum() - 1.0) < 1e-9);
    CHECK((m.alpha.array() > 0).all());
  }
  VectorXd bad = VectorXd::Zero(3);
  bad[1] = std::nan("");
  CHECK_THROWS_AS(forward(p, bad), std::invalid_argument);
}

TEST_CASE("mixture log density") {
  MixtureOutput two;
  two.alpha = (VectorXd(2) << 0.5, 0.5).finished();
  two.mean = (MatrixXd(2, 1) << -1, 1).finished();
  two.log_var = MatrixXd::Zero(2, 1);
  const double naive = std::log(0.5 * std::exp(-0.5) / std::sqrt(2 * M_PI) * 2);
  CHECK(std::abs(mixture_log_density(two, VectorXd::Zero(1)) - naive) < 1e-10);

  MixtureOutput dup;
  dup.alpha = (VectorXd(3) << 0.25, 0.25, 0.5).finished();
  dup.mean = (MatrixXd(3, 1) << -1, -1, 1).finished();
  dup.log_var = MatrixXd::Zero(3, 1);
  for (double y : {-3.0, 0.0, 0.4, 5.0}) {
    CHECK(std::abs(mixture_log_density(dup, VectorXd::Constant(1, y)) -
                   mixture_log_density(two, VectorXd::Constant(1, y))) < 1e-12);
  }

  MixtureOutput spike;
  spike.alpha = VectorXd::Ones(1);
  spike.mean = MatrixXd::Zero(1, 1);
  spike.log_var = MatrixXd::Constant(1, 1, -100.0);
  CHECK(mixture_log_density(spike, VectorXd::Zero(1)) ==
        doctest::Approx(-kHalfLog2Pi - 0.5 * std::log(kVarianceFloor)).epsilon(1e-14));
}

TEST_CASE("analytic gradients match finite differences") {
  Philox rng(8);
  for (int net = 0; net < 3; ++net) {
    auto p = init_network<double>(small_arch(), 100 + net);
    // Nonzero biases keep pre-activations off the ReLU kink.
    for (auto& b : p.biases) b = random_matrix(b.size(), 1, rng, 0.1);
    const MatrixXd x = random_matrix(3, 6, rng);
    const MatrixXd y = random_matrix(1, 6, rng);
    const auto lg = nll_and_gradients<double>(p, x, y);
    const VectorXd g = lg.grads.flatten();
    VectorXd theta = p.flatten();
    const double step = 1e-5;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      auto q = p;
      VectorXd t = theta;
      t[i] += step;
      q.assign(t);
      const double up = nll_and_gradients<double>(q, x, y).loss;
      t[i] -= 2 * step;
      q.assign(t);
      const double down = nll_and_gradients<double>(q, x, y).loss;
      const double fd = (up - down) / (2 * step);
      CHECK(std::abs(g[i] - fd) <= 1e-4 * std::max({std::abs(g[i]), std::abs(fd), 1e-5}));
    }
  }
}

TEST_CASE("duplicated batch leaves loss and gradients unchanged") {
  Philox rng(9);
  const auto p = init_network<double>(small_arch(), 5);
  const MatrixXd x = random_matrix(3, 7, rng);
  const MatrixXd y = random_matrix(1, 7, rng);
  MatrixXd x2(3, 14), y2(1, 14);
  x2 << x, x;
  y2 << y, y;
  const auto a = nll_and_gradients<double>(p, x, y);
  const auto b = nll_and_gradients<double>(p, x2, y2);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-13));
  CHECK((a.grads.flatten() - b.grads.flatten()).cwiseAbs().maxCoeff() < 1e-13);
  CHECK_THROWS_AS(nll_and_gradients<double>(p, MatrixXd(3, 0), MatrixXd(1, 0)), std::invalid_argument);
}

TEST_CASE("adam update") {
  MdnArchitecture a;
  a.input_dim = 1;
  a.hidden = {1};
  a.components = 1;
  auto p = init_network<double>(a, 1);
  auto zero = MdnParams<double>::zeros(a);
  auto st = AdamState<double>::fresh(a);
  TrainConfig cfg;
  const VectorXd before = p.flatten();
  adam_step(st, p, zero, cfg);
  CHECK(p.flatten() == before);

  auto ones = MdnParams<double>::zeros(a);
  for (auto& w : ones.weights) w.setOnes();
  for (auto& b : ones.biases) b.setOnes();
  auto st2 = AdamState<double>::fresh(a);
  auto p2 = init_network<double>(a, 1);
  cfg.learning_rate = 0.1;
  adam_step(st2, p2, ones, cfg);
  // Hand-rolled first step: m_hat = g, v_hat = g^2.
  const double m_hat = (1 - 0.9) * 1.0 / (1 - 0.9);
  const double v_hat = (1 - 0.999) * 1.0 / (1 - 0.999);
  const double expected = 0.1 * m_hat / (std::sqrt(v_hat) + 1e-8);
  CHECK(((before - p2.flatten()).array() - expected).abs().maxCoeff() < 1e-15);

  auto p3 = init_network<double>(a, 1);
  auto st3 = AdamState<double>::fresh(a);
  adam_step(st3, p3, ones, cfg);
  CHECK(p3.flatten() == p2.flatten());
}

TEST_CASE("training learns a standard normal") {
  WindowedDataset ds;
  ds.lag = 1;
  ds.inputs = MatrixXd::Constant(1, 10000, 1.5);
  Philox rng(21);
  ds.targets.resize(1, 10000);
  for (Eigen::Index i = 0; i < 10000; ++i) ds.targets(0, i) = rng.normal();
  MdnArchitecture a;
  a.input_dim = 1;
  TrainConfig cfg;
  cfg.seed = 5;
  const auto model = train<double>(ds, a, cfg);
  CHECK(model.stats.degenerate);
  CHECK(model.epoch_loss.size() == 12);
  double total = 0;
  const int held = 20000;
  for (int i = 0; i < held; ++i) {
    total += eval_log_density(model, VectorXd::Constant(1, 1.5), VectorXd::Constant(1, rng.normal()));
  }
  CHECK(std::abs(total / held + 1.4189385) < 0.05);

  const auto again = train<double>(ds, a, cfg);
  CHECK(again.params.flatten() == model.params.flatten());

  TrainConfig bad;
  bad.epochs = 0;
  CHECK_THROWS_AS(train<double>(ds, a, bad), std::invalid_argument);
}

TEST_CASE("density rescaling and normalization") {
  auto p = init_network<double>(small_arch(), 12);
  TrainedMdn<double> m;
  m.params = p;
  m.lag = 3;
  m.stats = NormStats::identity(3, 1);
  const VectorXd x = (VectorXd(3) << 0.2, -0.1, 0.5).finished();
  const VectorXd y = VectorXd::Constant(1, 0.3);
  CHECK(eval_density(m, x, y) == doctest::Approx(std::exp(mixture_log_density(forward(p, x), y))).epsilon(1e-12));

  auto scaled = m;
  scaled.stats.sigma_y[0] = 2.0;
  CHECK(eval_density(scaled, x, VectorXd::Constant(1, 0.6)) ==
        doctest::Approx(0.5 * eval_density(m, x, y)).epsilon(1e-12));

  for (const auto* model : {&m, &scaled}) {
    const double s = model->stats.sigma_y[0];
    const int n = 4001;
    const double lo = -10 * s, hi = 10 * s, dy = (hi - lo) / (n - 1);
    double integral = 0;
    for (int i = 0; i < n; ++i) {
      const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      integral += w * eval_density(*model, x, VectorXd::Constant(1, lo + i * dy));
    }
    CHECK(std::abs(integral * dy - 1.0) < 1e-3);
  }
}

TEST_CASE("likelihood decomposes over windows") {
  auto p = init_network<double>(small_arch(), 13);
  TrainedMdn<double> m;
  m.params = p;
  m.lag = 3;
  m.stats = NormStats::identity(3, 1);
  m.stats.mu_y[0] = 0.1;
  m.stats.sigma_y[0] = 1.3;
  const auto s = iid_normal(30, 2);
  double manual = 0;
  for (Eigen::Index t = 0; t + 3 < 30; ++t) {
    manual += eval_log_density(m, s.data.col(0).segment(t, 3), s.data.col(0).segment(t + 3, 1));
  }
  CHECK(mdn_log_likelihood(m, s) == doctest::Approx(manual).epsilon(1e-12));

  TimeSeriesMatrix four;
  four.data = s.data.topRows(4);
  CHECK(mdn_log_likelihood(m, four) ==
        doctest::Approx(eval_log_density(m, four.data.col(0).head(3), four.data.col(0).tail(1))).epsilon(1e-13));
  TimeSeriesMatrix three;
  three.data = s.data.topRows(3);
  CHECK_THROWS_AS(mdn_log_likelihood(m, three), std::invalid_argument);
}

TEST_CASE("an AR(2)-trained network prefers AR(2) data") {
  Ar2Config ar;
  const ParameterVector none({}, VectorXd(0), {});
  const Ensemble e = generate_ensemble(ar, none, 20, 500, 100);
  TrainConfig cfg;
  cfg.seed = 1;
  MdnArchitecture a;
  a.input_dim = 2;
  const auto model = train<double>(build_windows(e, 2), a, cfg);
  const auto test = simulate_ar2(ar, 500, 999);
  const double var = (test.data.array() - test.data.mean()).square().mean();
  auto noise = iid_normal(500, 77);
  noise.data *= std::sqrt(var);
  CHECK(mdn_log_likelihood(model, test) > mdn_log_likelihood(model, noise));
}

TEST_CASE("serialization round trips bit-exactly") {
  WindowedDataset ds = build_windows(iid_normal(300, 3), 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  MdnArchitecture a;
  a.hidden = {8};
  a.components = 3;
  const auto m = train<double>(ds, a, cfg);
  const auto back = deserialize_model<double>(serialize_model(m));
  CHECK(back.params.flatten() == m.params.flatten());
  CHECK(back.stats.sigma_y == m.stats.sigma_y);
  CHECK(back.lag == m.lag);
  CHECK(back.arch() == m.arch());
  CHECK_THROWS_AS(deserialize_model<float>(serialize_model(m)), std::invalid_argument);

  const auto f = train<float>(ds, a, cfg);
  const auto fb = deserialize_model<float>(serialize_model(f));
  CHECK(fb.params.flatten() == f.params.flatten());
  CHECK(std::isfinite(mdn_log_likelihood(f, iid_normal(50, 4))));
}
