// Copyright 2026 The covfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON and CSV serialization. Formats are described in docs/formats.md.
// Matrices are arrays of rows. Config readers reject unknown keys.

#pragma once

#include "covfuse/core.hpp"
#include "covfuse/eval.hpp"
#include "covfuse/sdp.hpp"
#include "covfuse/sim.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

namespace covfuse::io {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

Json to_json(const Matrix& m);
Json to_json(const Vector& v);
Matrix matrix_from_json(const Json& j, const std::string& field);
Vector vector_from_json(const Json& j, const std::string& field);

/// {"labels": [...], "mean": [...], "covariance": [[...], ...]}.
Json to_json(const GaussianEstimate& e);
GaussianEstimate estimate_from_json(const Json& j);

/// {"dim_a": n, "dim_b": m, "zeros": [[i, j], ...]}.
Json to_json(const CrossSparsityPattern& p);
CrossSparsityPattern pattern_from_json(const Json& j);

/// Array of index arrays.
Json to_json(const BlockPartition& p);
BlockPartition partition_from_json(const Json& j, std::size_t dim);

Json to_json(const FusionResult& r);

/// Problem dump: marginals and the sampled cross terms.
Json to_json(const SampledFusionProblem& p);
SampledFusionProblem problem_from_json(const Json& j);
Json to_json(const SdpSolution& s);

/// Settings of the bound-deviation sweep.
SweepConfig sweep_config_from_json(const Json& j);
Json to_json(const SweepConfig& c);

ScenarioConfig scenario_from_json(const Json& j);
Json to_json(const ScenarioConfig& c);

Json read_json_file(const std::filesystem::path& path);
/// Writes `text`; throws IoError if the file already exists.
void write_new_file(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal text that round-trips the double.
std::string format_double(double v);

}  // namespace covfuse::io
