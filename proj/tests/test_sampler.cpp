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


#include "simest/sampler.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace simest;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Kolmogorov distance between sorted draws and a reference CDF.
template <typename Cdf>
double ks_distance(std::vector<double> v, Cdf cdf) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

const std::vector<Bound> kBox{{-10, 10}, {-10, 10}};

double std_normal_2d(const VectorXd& x) { return -0.5 * x.squaredNorm(); }

}  // namespace

TEST_CASE("initial sets are uniform in the box") {
  Philox rng(1);
  const std::vector<Bound> box{{0, 1}, {-5, 5}};
  const auto set = init_sample_set(box, 5000, rng);
  CHECK(set.members.col(0).minCoeff() > 0);
  CHECK(set.members.col(0).maxCoeff() < 1);
  CHECK(set.members.col(1).minCoeff() > -5);
  CHECK(set.members.col(1).maxCoeff() < 5);
  CHECK(std::abs(set.members.col(1).mean()) < 0.15);
  CHECK((set.log_post.array() == kNegInf).all());
  CHECK_THROWS_AS(init_sample_set({{1, 1}}, 3, rng), std::invalid_argument);
}

TEST_CASE("proposal bandwidth") {
  const MatrixXd m = (MatrixXd(4, 2) << 0, 1, 1, 1, 2, 1, 3, 1).finished();
  const auto h = proposal_bandwidth(m, {{0, 10}, {0, 10}}, 1.06);
  CHECK(h[0] == doctest::Approx(1.06 * std::sqrt(5.0 / 3.0) * std::pow(4.0, -0.2)).epsilon(1e-14));
  CHECK(h[1] == doctest::Approx(1e-5));
  const auto one = proposal_bandwidth(MatrixXd::Zero(1, 1), {{0, 2}}, 1.06);
  CHECK(one[0] == doctest::Approx(2e-6));
}

TEST_CASE("proposal density brute force") {
  const MatrixXd one = (MatrixXd(1, 2) << 0.5, -1).finished();
  const VectorXd h = (VectorXd(2) << 0.3, 2.0).finished();
  const VectorXd z = (VectorXd(2) << 0.1, 0.4).finished();
  const double single = std::exp(-0.5 * std::pow(0.4 / 0.3, 2)) / (std::sqrt(2 * M_PI) * 0.3) *
                        std::exp(-0.5 * std::pow(1.4 / 2.0, 2)) / (std::sqrt(2 * M_PI) * 2.0);
  CHECK(proposal_density(one, h, z) == doctest::Approx(single).epsilon(1e-12));

  const MatrixXd two = (MatrixXd(2, 2) << 0.5, -1, 0.0, 1.0).finished();
  const double other = std::exp(-0.5 * std::pow(0.1 / 0.3, 2)) / (std::sqrt(2 * M_PI) * 0.3) *
                       std::exp(-0.5 * std::pow(0.6 / 2.0, 2)) / (std::sqrt(2 * M_PI) * 2.0);
  CHECK(std::abs(proposal_density(two, h, z) - 0.5 * (single + other)) < 1e-12);

  // A far-away point keeps a finite log density.
  CHECK(std::isfinite(proposal_log_density(two, h, VectorXd::Constant(2, 1e3))));
}

TEST_CASE("proposal density integrates to one") {
  const MatrixXd m = (MatrixXd(3, 1) << -1, 0.2, 2).finished();
  const VectorXd h = VectorXd::Constant(1, 0.4);
  const int n = 8001;
  const double lo = -8, hi = 8, dz = (hi - lo) / (n - 1);
  double integral = 0;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    integral += w * proposal_density(m, h, VectorXd::Constant(1, lo + i * dz));
  }
  CHECK(std::abs(integral * dz - 1.0) < 1e-6);
}

TEST_CASE("proposals follow the kernel mixture") {
  const MatrixXd m = (MatrixXd(4, 1) << -3, -1, 0.5, 4).finished();
  const VectorXd h = VectorXd::Constant(1, 0.7);
  Philox rng(5);
  std::vector<double> z;
  std::vector<int> slots(4, 0), sources(4, 0);
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const auto p = propose(m, h, rng);
    z.push_back(p.z[0]);
    ++slots[static_cast<std::size_t>(p.replace)];
    ++sources[static_cast<std::size_t>(p.source)];
  }
  auto chi2 = [&](const std::vector<int>& c) {
    double s = 0;
    for (int k : c) s += std::pow(k - draws / 4.0, 2) / (draws / 4.0);
    return s;
  };
  // 3 degrees of freedom, p = 0.001.
  CHECK(chi2(slots) < 16.27);
  CHECK(chi2(sources) < 16.27);
  const double d = ks_distance(z, [&](double x) {
    double f = 0;
    for (Eigen::Index n = 0; n < 4; ++n) f += normal_cdf((x - m(n, 0)) / 0.7);
    return f / 4;
  });
  CHECK(d * std::sqrt(static_cast<double>(draws)) < 1.95);
}

TEST_CASE("acceptance probability conventions") {
  CHECK(acceptance_prob(kNegInf, 0.0, 0.0, 0.0) == 0.0);
  CHECK(acceptance_prob(std::nan(""), 0.0, 0.0, 0.0) == 0.0);
  CHECK(acceptance_prob(-5.0, kNegInf, 0.0, 0.0) == 1.0);
  CHECK(acceptance_prob(kNegInf, kNegInf, 0.0, 0.0) == 0.0);
  CHECK(acceptance_prob(1.0, 0.0, 0.0, 0.0) == 1.0);
  CHECK(acceptance_prob(0.0, 1.0, 0.5, 0.0) == doctest::Approx(std::exp(-0.5)));
  CHECK(acceptance_prob(0.0, 0.0, -1.0, -1.0) == 1.0);
}

TEST_CASE("chain bookkeeping") {
  McmcConfig cfg;
  cfg.S = 50;
  cfg.N = 6;
  cfg.burn_in = 49;
  cfg.restarts = 2;
  cfg.seed = 3;
  const auto s = run_chain(std_normal_2d, kBox, cfg);
  CHECK(s.restarts.size() == 2);
  CHECK(s.size() == 2 * 6);
  CHECK(s.dim() == 2);
  CHECK(s.trace.size() == 2 * 49);
  CHECK(s.counts() == std::vector<Eigen::Index>{6, 6});
  CHECK(s.trace.front().s == 2);
  CHECK(s.trace.back().restart == 1);

  cfg.burn_in = 0;
  const auto all = run_chain(std_normal_2d, kBox, cfg);
  CHECK(all.set_means[0].rows() == 50);
  CHECK(all.restarts[0].bottomRows(6) == s.restarts[0]);

  cfg.burn_in = 50;
  CHECK_THROWS_AS(run_chain(std_normal_2d, kBox, cfg), std::invalid_argument);
}

TEST_CASE("chain moves, stays in the box and is reproducible") {
  McmcConfig cfg;
  cfg.S = 400;
  cfg.N = 10;
  cfg.burn_in = 100;
  cfg.restarts = 3;
  cfg.seed = 9;
  const std::vector<Bound> box{{-1, 1}, {0, 3}};
  const auto a = run_chain(std_normal_2d, box, cfg);
  for (double acc : a.acceptance) {
    CHECK(acc > 0.0);
    CHECK(acc < 1.0);
  }
  const MatrixXd all = a.flattened();
  CHECK(all.col(0).minCoeff() >= -1);
  CHECK(all.col(1).maxCoeff() <= 3);

  cfg.jobs = 3;
  const auto b = run_chain(std_normal_2d, box, cfg);
  CHECK(a.flattened() == b.flattened());
  std::ostringstream ta, tb;
  write_trace_csv(ta, a);
  write_trace_csv(tb, b);
  CHECK(ta.str() == tb.str());
  CHECK(ta.str().rfind("restart,s,accepted,n,theta_1,theta_2,log_post\n", 0) == 0);

  // Box-rejected proposals are logged with -inf and never accepted.
  for (const auto& row : a.trace) {
    const bool outside = !box[0].contains(row.z[0]) || !box[1].contains(row.z[1]);
    if (outside) {
      CHECK_FALSE(row.accepted);
      CHECK(row.log_post == kNegInf);
    }
  }
}

TEST_CASE("posterior summaries") {
  PosteriorSample s;
  s.restarts.push_back((MatrixXd(2, 1) << 1, 3).finished());
  s.restarts.push_back((MatrixXd(2, 1) << 5, 7).finished());
  CHECK(posterior_mean(s)[0] == 4.0);
  CHECK(posterior_std(s)[0] == doctest::Approx(std::sqrt(5.0)));
  const auto sq = expectation(s, [](const VectorXd& x) { return VectorXd(x.array().square()); });
  CHECK(sq[0] == doctest::Approx(21.0));
  const auto two = expectation(s, [](const VectorXd& x) { return (VectorXd(2) << x[0], 1.0).finished(); });
  CHECK(two[1] == 1.0);

  std::ostringstream os;
  write_sample_csv(os, s);
  CHECK(os.str() == "restart,theta_1\n0,1\n0,3\n1,5\n1,7\n");
}

TEST_CASE("batch-means standard error") {
  PosteriorSample s;
  MatrixXd trace(30, 1);
  for (int i = 0; i < 30; ++i) trace(i, 0) = i % 2 == 0 ? 1.0 : -1.0;
  s.set_means = {trace};
  s.restarts = {trace};
  CHECK(monte_carlo_standard_error(s, 15)[0] == doctest::Approx(0.0));

  MatrixXd ramp(4, 1);
  ramp << 0, 0, 2, 2;
  s.set_means = {ramp, ramp};
  s.restarts = {ramp, ramp};
  // Batch means 0 and 2: variance 2, so var / B = 1 per restart.
  CHECK(monte_carlo_standard_error(s, 2)[0] == doctest::Approx(std::sqrt(2.0 / 4.0)));
}

TEST_CASE("uniform target marginals") {
  McmcConfig cfg;
  cfg.S = 2000;
  cfg.N = 30;
  cfg.burn_in = 500;
  cfg.restarts = 2;
  cfg.seed = 17;
  const std::vector<Bound> box{{0, 1}};
  const auto s = run_chain([](const VectorXd&) { return 0.0; }, box, cfg);
  std::vector<double> thin;
  for (const auto& m : s.restarts)
    for (Eigen::Index i = 0; i < m.rows(); i += 30 * 50) thin.push_back(m(i, 0));
  const double d = ks_distance(thin, [](double x) { return x; });
  CHECK(d * std::sqrt(static_cast<double>(thin.size())) < 1.95);
}
