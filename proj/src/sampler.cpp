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

#include "simest/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace simest {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;
constexpr double kMinBandwidthFraction = 1e-6;

bool in_box(const VectorXd& z, const std::vector<Bound>& box) {
  for (Eigen::Index d = 0; d < z.size(); ++d) {
    if (!box[static_cast<std::size_t>(d)].contains(z[d])) return false;
  }
  return true;
}

struct RestartResult {
  MatrixXd retained;
  MatrixXd set_means;
  double acceptance = 0.0;
  std::vector<TraceRow> trace;
};

RestartResult run_restart(const LogDensityFn& log_post, const std::vector<Bound>& box,
                          const McmcConfig& cfg, long r) {
  Philox rng(cfg.seed, static_cast<std::uint64_t>(r));
  SampleSet set = init_sample_set(box, cfg.N, rng);
  for (Eigen::Index n = 0; n < set.size(); ++n) set.log_post[n] = log_post(set.members.row(n).transpose());

  const Eigen::Index d = set.members.cols();
  const long kept = cfg.S - cfg.burn_in;
  RestartResult out;
  out.retained.resize(kept * cfg.N, d);
  out.set_means.resize(kept, d);
  out.trace.reserve(static_cast<std::size_t>(cfg.S - 1));

  auto retain = [&](long s) {
    if (s <= cfg.burn_in) return;
    const long k = s - cfg.burn_in - 1;
    out.retained.middleRows(k * cfg.N, cfg.N) = set.members;
    out.set_means.row(k) = set.members.colwise().mean();
  };
  retain(1);

  long accepted = 0;
  for (long s = 2; s <= cfg.S; ++s) {
    const VectorXd h = proposal_bandwidth(set.members, box, cfg.bandwidth_factor);
    Proposal p = propose(set.members, h, rng);
    TraceRow row;
    row.restart = r;
    row.s = s;
    row.n = static_cast<long>(p.replace) + 1;
    if (in_box(p.z, box)) {
      const double lp_z = log_post(p.z);
      const double log_q_z = proposal_log_density(set.members, h, p.z);
      MatrixXd swapped = set.members;
      swapped.row(p.replace) = p.z.transpose();
      const VectorXd h_swapped = proposal_bandwidth(swapped, box, cfg.bandwidth_factor);
      const double log_q_old =
          proposal_log_density(swapped, h_swapped, set.members.row(p.replace).transpose());
      const double alpha = acceptance_prob(lp_z, set.log_post[p.replace], log_q_old, log_q_z);
      row.log_post = lp_z;
      if (rng.uniform() < alpha) {
        set.members = std::move(swapped);
        set.log_post[p.replace] = lp_z;
        row.accepted = true;
        ++accepted;
      }
    }
    row.z = std::move(p.z);
    out.trace.push_back(std::move(row));
    set.s = s;
    retain(s);
  }
  out.acceptance = cfg.S > 1 ? static_cast<double>(accepted) / static_cast<double>(cfg.S - 1) : 0.0;
  return out;
}

}  // namespace

void McmcConfig::validate() const {
  if (S < 1) throw std::invalid_argument("McmcConfig: S must be >= 1");
  if (N < 1) throw std::invalid_argument("McmcConfig: N must be >= 1");
  if (burn_in < 0 || burn_in >= S) throw std::invalid_argument("McmcConfig: need 0 <= burn_in < S");
  if (restarts < 1) throw std::invalid_argument("McmcConfig: restarts must be >= 1");
  if (!(bandwidth_factor > 0.0)) throw std::invalid_argument("McmcConfig: bandwidth factor must be > 0");
  if (jobs < 1) throw std::invalid_argument("McmcConfig: jobs must be >= 1");
}

Eigen::Index PosteriorSample::size() const {
  Eigen::Index n = 0;
  for (const auto& m : restarts) n += m.rows();
  return n;
}

Eigen::Index PosteriorSample::dim() const { return restarts.empty() ? 0 : restarts.front().cols(); }

MatrixXd PosteriorSample::flattened() const {
  MatrixXd out(size(), dim());
  Eigen::Index row = 0;
  for (const auto& m : restarts) {
    out.middleRows(row, m.rows()) = m;
    row += m.rows();
  }
  return out;
}

std::vector<Eigen::Index> PosteriorSample::counts() const {
  std::vector<Eigen::Index> c;
  for (const auto& m : restarts) c.push_back(m.rows());
  return c;
}

SampleSet init_sample_set(const std::vector<Bound>& box, long N, Philox& rng) {
  if (box.empty()) throw std::invalid_argument("init_sample_set: empty box");
  if (N < 1) throw std::invalid_argument("init_sample_set: N must be >= 1");
  for (const auto& b : box) {
    if (!(b.lower < b.upper)) throw std::invalid_argument("init_sample_set: invalid bound");
  }
  SampleSet set;
  const auto d = static_cast<Eigen::Index>(box.size());
  set.members.resize(N, d);
  for (Eigen::Index n = 0; n < N; ++n)
    for (Eigen::Index j = 0; j < d; ++j) {
      const Bound& b = box[static_cast<std::size_t>(j)];
      set.members(n, j) = rng.uniform(b.lower, b.upper);
    }
  set.log_post = VectorXd::Constant(N, kNegInf);
  return set;
}

VectorXd proposal_bandwidth(const MatrixXd& members, const std::vector<Bound>& box, double factor) {
  const Eigen::Index N = members.rows();
  const Eigen::Index d = members.cols();
  if (static_cast<std::size_t>(d) != box.size()) {
    throw std::invalid_argument("proposal_bandwidth: box dimension mismatch");
  }
  VectorXd h(d);
  const double scale = factor * std::pow(static_cast<double>(N), -0.2);
  for (Eigen::Index j = 0; j < d; ++j) {
    double sd = 0.0;
    if (N > 1) {
      const auto col = members.col(j).array();
      sd = std::sqrt((col - col.mean()).square().sum() / static_cast<double>(N - 1));
    }
    h[j] = std::max(scale * sd, kMinBandwidthFraction * box[static_cast<std::size_t>(j)].width());
  }
  return h;
}

double proposal_log_density(const MatrixXd& members, const VectorXd& h, const VectorXd& z) {
  if (members.cols() != z.size() || h.size() != z.size()) {
    throw std::invalid_argument("proposal_density: dimension mismatch");
  }
  if (!(h.array() > 0.0).all()) throw std::invalid_argument("proposal_density: h must be > 0");
  const Eigen::ArrayXd log_k =
      -0.5 * ((members.rowwise() - z.transpose()).array().rowwise() / h.transpose().array())
                 .square()
                 .rowwise()
                 .sum();
  const double top = log_k.maxCoeff();
  const double norm = static_cast<double>(z.size()) * kLogSqrt2Pi + h.array().log().sum() +
                      std::log(static_cast<double>(members.rows()));
  return top + std::log((log_k - top).exp().sum()) - norm;
}

double proposal_density(const MatrixXd& members, const VectorXd& h, const VectorXd& z) {
  return std::exp(proposal_log_density(members, h, z));
}

Proposal propose(const MatrixXd& members, const VectorXd& h, Philox& rng) {
  const auto N = static_cast<std::uint64_t>(members.rows());
  Proposal p;
  p.source = static_cast<Eigen::Index>(rng.uniform_index(N));
  p.z = members.row(p.source).transpose();
  for (Eigen::Index j = 0; j < p.z.size(); ++j) p.z[j] += h[j] * rng.normal();
  p.replace = static_cast<Eigen::Index>(rng.uniform_index(N));
  return p;
}

double acceptance_prob(double log_post_z, double log_post_old, double log_q_old_given_swapped,
                       double log_q_z_given_set) {
  if (std::isnan(log_post_z) || log_post_z == kNegInf) return 0.0;
  if (log_post_old == kNegInf) return 1.0;
  const double log_ratio =
      (log_post_z + log_q_old_given_swapped) - (log_post_old + log_q_z_given_set);
  if (std::isnan(log_ratio)) return 0.0;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

PosteriorSample run_chain(const LogDensityFn& log_post, const std::vector<Bound>& box,
                          const McmcConfig& cfg) {
  cfg.validate();
  std::vector<RestartResult> results(static_cast<std::size_t>(cfg.restarts));
  std::vector<std::exception_ptr> errors(results.size());
  std::atomic<long> next{0};
  auto worker = [&] {
    for (long r; (r = next.fetch_add(1)) < cfg.restarts;) {
      try {
        results[static_cast<std::size_t>(r)] = run_restart(log_post, box, cfg, r);
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };
  const long threads = std::min<long>(cfg.jobs, cfg.restarts);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (long i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PosteriorSample out;
  for (auto& r : results) {
    out.restarts.push_back(std::move(r.retained));
    out.set_means.push_back(std::move(r.set_means));
    out.acceptance.push_back(r.acceptance);
    out.trace.insert(out.trace.end(), std::make_move_iterator(r.trace.begin()),
                     std::make_move_iterator(r.trace.end()));
  }
  return out;
}

VectorXd expectation(const PosteriorSample& sample,
                     const std::function<VectorXd(const VectorXd&)>& g) {
  if (sample.size() == 0) throw std::invalid_argument("expectation: empty sample");
  VectorXd sum;
  for (const auto& m : sample.restarts) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const VectorXd v = g(m.row(i).transpose());
      if (sum.size() == 0) {
        sum = v;
      } else {
        sum += v;
      }
    }
  }
  return sum / static_cast<double>(sample.size());
}

VectorXd posterior_mean(const PosteriorSample& sample) {
  if (sample.size() == 0) throw std::invalid_argument("posterior_mean: empty sample");
  return sample.flattened().colwise().mean().transpose();
}

VectorXd posterior_std(const PosteriorSample& sample) {
  const MatrixXd all = sample.flattened();
  const VectorXd mu = all.colwise().mean().transpose();
  return ((all.rowwise() - mu.transpose()).array().square().colwise().sum() /
          static_cast<double>(all.rows()))
      .sqrt()
      .transpose();
}

VectorXd monte_carlo_standard_error(const PosteriorSample& sample, long batches) {
  if (batches < 2) throw std::invalid_argument("monte_carlo_standard_error: need >= 2 batches");
  const Eigen::Index d = sample.dim();
  VectorXd var_sum = VectorXd::Zero(d);
  for (const auto& trace : sample.set_means) {
    const Eigen::Index len = trace.rows() / batches;
    if (len < 1) throw std::invalid_argument("monte_carlo_standard_error: trace too short");
    MatrixXd means(batches, d);
    for (long b = 0; b < batches; ++b) means.row(b) = trace.middleRows(b * len, len).colwise().mean();
    const RowVector<double> mu = means.colwise().mean();
    const VectorXd var = ((means.rowwise() - mu).array().square().colwise().sum() /
                          static_cast<double>(batches - 1))
                             .transpose();
    var_sum += var / static_cast<double>(batches);
  }
  const double R = static_cast<double>(sample.set_means.size());
  return (var_sum / (R * R)).cwiseSqrt();
}

void write_trace_csv(std::ostream& os, const PosteriorSample& sample) {
  os << "restart,s,accepted,n";
  for (Eigen::Index j = 0; j < sample.dim(); ++j) os << ",theta_" << j + 1;
  os << ",log_post\n";
  for (const auto& r : sample.trace) {
    os << r.restart << ',' << r.s << ',' << (r.accepted ? 1 : 0) << ',' << r.n << ','
       << csv_row(r.z) << ',' << format_double(r.log_post) << '\n';
  }
}

void write_sample_csv(std::ostream& os, const PosteriorSample& sample) {
  os << "restart";
  for (Eigen::Index j = 0; j < sample.dim(); ++j) os << ",theta_" << j + 1;
  os << '\n';
  for (std::size_t r = 0; r < sample.restarts.size(); ++r) {
    const auto& m = sample.restarts[r];
    for (Eigen::Index i = 0; i < m.rows(); ++i) os << r << ',' << csv_row(m.row(i).transpose()) << '\n';
  }
}

}  // namespace simest
