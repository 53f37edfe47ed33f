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

#include "simest/mdn.hpp"
#include "simest/models.hpp"
#include "simest/types.hpp"

#include <cstdint>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

namespace simest {

enum class Method { mdn, kde };
enum class Preprocessing { none, first_difference };
enum class Precision { float32, float64 };

std::string to_string(Method m);
std::string to_string(Preprocessing p);

/// first_difference for the random-walk model, none otherwise.
Preprocessing default_preprocessing(const ModelConfig& model);
TimeSeriesMatrix preprocess(const TimeSeriesMatrix& series, Preprocessing p);

struct MdnSettings {
  long lag = 3;
  std::vector<long> hidden{32, 32, 32};
  long components = 16;
  TrainConfig train;
  Precision precision = Precision::float64;

  MdnArchitecture architecture(long dim) const;
};

/// Everything needed to map a candidate theta to a log posterior.
struct EstimationProblem {
  ModelConfig fixed;
  ParameterVector prior;       // free names and their uniform-prior box
  TimeSeriesMatrix empirical;  // raw series; preprocessing is applied on use
  Method method = Method::mdn;
  Preprocessing preprocessing = Preprocessing::none;
  long replications = 100;
  long sim_length = 1000;
  std::uint64_t base_seed = 0;
  MdnSettings mdn;
  long kde_discard = 0;

  void validate() const;
  /// -sum log(upper - lower).
  double log_prior() const;
  ParameterVector candidate(const VectorXd& values) const;
};

/// "%.12e" per coordinate, comma-joined: the memo key.
std::string quantize_theta(const VectorXd& theta);
/// Training seed for theta, a function of (base seed, train seed, theta key).
std::uint64_t training_seed(const EstimationProblem& problem, const VectorXd& theta);

struct Evaluation {
  double log_likelihood = kNegInf;
  double log_posterior = kNegInf;
  std::string status;  // ok, out_of_support, simulation_diverged, training_diverged, degenerate_sample
  double wall_ms = 0.0;
};

/// One uncached evaluation; never throws for model failures.
Evaluation evaluate(const EstimationProblem& problem, const VectorXd& theta);

/// log p(X | theta) + log p(theta); -inf outside the box or on failure.
double log_posterior(const EstimationProblem& problem, const VectorXd& theta);

/// Memoizing, logging wrapper around evaluate(). Safe for concurrent callers.
class PosteriorEvaluator {
 public:
  explicit PosteriorEvaluator(EstimationProblem problem, bool memoize = true);

  double operator()(const VectorXd& theta);
  Evaluation evaluate(const VectorXd& theta);

  const EstimationProblem& problem() const { return problem_; }
  std::size_t evaluations() const;
  std::size_t cache_hits() const;

  /// theta_1..theta_d,log_likelihood,wall_ms,status in call order.
  void write_log_csv(std::ostream& os) const;

 private:
  struct Record {
    VectorXd theta;
    Evaluation eval;
  };

  EstimationProblem problem_;
  bool memoize_;
  mutable std::mutex mutex_;
  std::map<std::string, Evaluation> cache_;
  std::vector<Record> log_;
  std::size_t hits_ = 0;
};

}  // namespace simest
