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


#include "simest/likelihood.hpp"

#include "simest/io.hpp"
#include "simest/kde.hpp"
#include "simest/rng.hpp"
#include "simest/windows.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace simest {

std::string to_string(Method m) { return m == Method::mdn ? "mdn" : "kde"; }

std::string to_string(Preprocessing p) {
  return p == Preprocessing::none ? "none" : "first_difference";
}

Preprocessing default_preprocessing(const ModelConfig& model) {
  return std::holds_alternative<RandomWalkBreakConfig>(model) ? Preprocessing::first_difference
                                                              : Preprocessing::none;
}

TimeSeriesMatrix preprocess(const TimeSeriesMatrix& series, Preprocessing p) {
  return p == Preprocessing::first_difference ? first_difference(series) : series;
}

MdnArchitecture MdnSettings::architecture(long dim) const {
  MdnArchitecture a;
  a.input_dim = lag * dim;
  a.hidden = hidden;
  a.components = components;
  a.target_dim = dim;
  return a;
}

void EstimationProblem::validate() const {
  if (prior.size() == 0) throw std::invalid_argument("EstimationProblem: no free parameters");
  for (const auto& b : prior.bounds()) {
    if (!(b.lower < b.upper)) throw std::invalid_argument("EstimationProblem: invalid bounds");
  }
  if (empirical.length() == 0 || !empirical.data.allFinite()) {
    throw std::invalid_argument("EstimationProblem: empirical series must be nonempty and finite");
  }
  if (replications < 1) throw std::invalid_argument("EstimationProblem: replications must be >= 1");
  const long min_len = preprocessing == Preprocessing::first_difference ? 2 : 1;
  if (sim_length < min_len) throw std::invalid_argument("EstimationProblem: sim_length too short");
  if (method == Method::mdn) {
    if (mdn.lag < 1) throw std::invalid_argument("EstimationProblem: lag must be >= 1");
    mdn.architecture(empirical.dim()).validate();
    mdn.train.validate();
    const long usable = static_cast<long>(empirical.length()) - (min_len - 1);
    if (usable <= mdn.lag) {
      throw std::invalid_argument("EstimationProblem: empirical series shorter than the lag");
    }
  } else if (kde_discard < 0) {
    throw std::invalid_argument("EstimationProblem: discard must be >= 0");
  }
  // Surfaces unknown parameter names before any compute.
  (void)apply_parameters(fixed, prior);
}

double EstimationProblem::log_prior() const {
  double lp = 0.0;
  for (const auto& b : prior.bounds()) lp -= std::log(b.width());
  return lp;
}

ParameterVector EstimationProblem::candidate(const VectorXd& values) const {
  if (values.size() != prior.size()) {
    throw std::invalid_argument("theta has " + std::to_string(values.size()) + " entries, expected " +
                                std::to_string(prior.size()));
  }
  return ParameterVector::proposal(prior, values);
}

std::string quantize_theta(const VectorXd& theta) {
  std::string key;
  char buf[40];
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12e", theta[i]);
    if (i) key += ',';
    key += buf;
  }
  return key;
}

std::uint64_t training_seed(const EstimationProblem& problem, const VectorXd& theta) {
  return mix_seed(mix_seed(problem.base_seed, problem.mdn.train.seed),
                  fnv1a64(quantize_theta(theta)));
}

namespace {

template <typename Scalar>
double mdn_pipeline(const EstimationProblem& p, const Ensemble& ens, const TimeSeriesMatrix& emp,
                    std::uint64_t seed) {
  TrainConfig tc = p.mdn.train;
  tc.seed = seed;
  const auto model = train<Scalar>(build_windows(ens, p.mdn.lag), p.mdn.architecture(emp.dim()), tc);
  return mdn_log_likelihood(model, emp);
}

}  // namespace

Evaluation evaluate(const EstimationProblem& problem, const VectorXd& theta) {
  const auto start = std::chrono::steady_clock::now();
  Evaluation out;
  const ParameterVector cand = problem.candidate(theta);
  if (!cand.inside_bounds()) {
    out.status = "out_of_support";
    return out;
  }
  try {
    const ParameterVector inside(cand.names(), cand.values(), cand.bounds());
    Ensemble ens = generate_ensemble(problem.fixed, inside, problem.replications,
                                     problem.sim_length, problem.base_seed);
    for (auto& rep : ens.replications) rep = preprocess(rep, problem.preprocessing);
    const TimeSeriesMatrix emp = preprocess(problem.empirical, problem.preprocessing);
    if (problem.method == Method::kde) {
      out.log_likelihood = kde_log_likelihood(ens, emp, problem.kde_discard);
    } else {
      const std::uint64_t seed = training_seed(problem, theta);
      out.log_likelihood = problem.mdn.precision == Precision::float32
                               ? mdn_pipeline<float>(problem, ens, emp, seed)
                               : mdn_pipeline<double>(problem, ens, emp, seed);
    }
    out.status = "ok";
  } catch (const SimulationDiverged&) {
    out.status = "simulation_diverged";
    out.log_likelihood = kNegInf;
  } catch (const TrainingDiverged&) {
    out.status = "training_diverged";
    out.log_likelihood = kNegInf;
  } catch (const DegenerateSample&) {
    out.status = "degenerate_sample";
    out.log_likelihood = kNegInf;
  }
  if (std::isnan(out.log_likelihood)) out.log_likelihood = kNegInf;
  out.log_posterior = out.log_likelihood == kNegInf ? kNegInf : out.log_likelihood + problem.log_prior();
  out.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double log_posterior(const EstimationProblem& problem, const VectorXd& theta) {
  return evaluate(problem, theta).log_posterior;
}

PosteriorEvaluator::PosteriorEvaluator(EstimationProblem problem, bool memoize)
    : problem_(std::move(problem)), memoize_(memoize) {
  problem_.validate();
}

Evaluation PosteriorEvaluator::evaluate(const VectorXd& theta) {
  const std::string key = quantize_theta(theta);
  if (memoize_) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  Evaluation e = simest::evaluate(problem_, theta);
  std::lock_guard<std::mutex> lock(mutex_);
  if (memoize_) cache_.emplace(key, e);
  log_.push_back({theta, e});
  return e;
}

double PosteriorEvaluator::operator()(const VectorXd& theta) { return evaluate(theta).log_posterior; }

std::size_t PosteriorEvaluator::evaluations() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return log_.size();
}

std::size_t PosteriorEvaluator::cache_hits() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return hits_;
}

void PosteriorEvaluator::write_log_csv(std::ostream& os) const {
  std::lock_guard<std::mutex> lock(mutex_);
  for (Eigen::Index i = 0; i < problem_.prior.size(); ++i) os << "theta_" << i + 1 << ',';
  os << "log_likelihood,wall_ms,status\n";
  for (const auto& r : log_) {
    os << csv_row(r.theta) << ',' << format_double(r.eval.log_likelihood) << ','
       << format_double(r.eval.wall_ms) << ',' << r.eval.status << '\n';
  }
}

}  // namespace simest
