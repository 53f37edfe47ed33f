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

#include "simest/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace simest {

inline constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a64(std::string_view bytes);
/// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Comma-joined row of format_double values.
std::string csv_row(const Eigen::Ref<const VectorXd>& values);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Writes to a sibling temporary file and renames it into place.
void atomic_write(const std::filesystem::path& path, const std::string& content);

/// Sidecar path: <path>.meta.json
std::filesystem::path metadata_path(const std::filesystem::path& path);

/// Header t,x_1..x_n with t counted from 1.
std::string series_csv(const TimeSeriesMatrix& series);
/// Reads a numeric CSV with one header line. A leading `t` column is dropped;
/// every other column becomes a dimension.
TimeSeriesMatrix read_series_csv(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace simest
