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

#include "simest/bench.hpp"
#include "simest/config.hpp"
#include "simest/sampler.hpp"

#include <filesystem>
#include <map>
#include <string>

namespace simest {

struct EstimationResult {
  PosteriorSample sample;
  PosteriorSummary summary;
  std::size_t evaluations = 0;
  std::size_t cache_hits = 0;
  std::string eval_log_csv;  // filled when requested
};

EstimationResult run_estimation(const RunConfig& cfg, const TimeSeriesMatrix& empirical, int jobs = 1,
                                bool keep_eval_log = false);

/// Lag-scan settings from the config's lag_scan block, with the true
/// parameters applied to the model. Throws ConfigError without that block.
LagScanConfig lag_scan_config(const RunConfig& cfg);

/// Post-minus-pre shifts (d2 - d1, sigma2 - sigma1) for whichever pairs are free.
std::map<std::string, double> break_shifts(const PosteriorSummary& s);

/// Summary document: mu_posterior, sigma_posterior, sigma_sampling, LS and friends.
std::string summary_json(const RunConfig& cfg, const EstimationResult& r);
PosteriorSummary summary_from_json(const std::string& text);

/// Sidecar describing how an artifact was produced. No timestamps.
std::string metadata_json(const RunConfig& cfg, const std::string& command,
                          const std::string& artifact);

/// atomic_write plus the .meta.json sidecar.
void write_artifact(const std::filesystem::path& path, const std::string& content,
                    const RunConfig& cfg, const std::string& command);

}  // namespace simest
