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


#include "covfuse/errors.hpp"
#include "covfuse/fusion.hpp"
#include "covfuse/io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>

namespace covfuse::io {
namespace {

namespace fs = std::filesystem;
using covfuse::testing::diag;
using covfuse::testing::random_spd;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("covfuse_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Json, DoublesRoundTripExactly) {
  Rng rng(60);
  const Matrix m = random_spd(rng, 4);
  const Json j = Json::parse(to_json(m).dump());
  EXPECT_EQ(matrix_from_json(j, "m"), m);
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17,
                   std::numeric_limits<double>::denorm_min()}) {
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Json, MatrixErrors) {
  EXPECT_THROW(matrix_from_json(Json::parse("[[1, 2], [3]]"), "m"),
               ConfigError);
  EXPECT_THROW(matrix_from_json(Json::parse("[]"), "m"), ConfigError);
  EXPECT_THROW(matrix_from_json(Json::parse("[[1, \"x\"]]"), "m"),
               ConfigError);
}

TEST(Json, EstimateRoundTrip) {
  Rng rng(61);
  const GaussianEstimate e(testing::random_vector(rng, 3), random_spd(rng, 3),
                           {"a", "b", "c"});
  const GaussianEstimate back =
      estimate_from_json(Json::parse(to_json(e).dump()));
  EXPECT_EQ(back.mean(), e.mean());
  EXPECT_EQ(back.covariance(), e.covariance());
  EXPECT_EQ(back.labels(), e.labels());
}

TEST(Json, EstimateErrors) {
  EXPECT_THROW(estimate_from_json(Json::parse(
                   R"({"mean": [0], "covariance": [[1]], "extra": 1})")),
               ConfigError);
  EXPECT_THROW(estimate_from_json(Json::parse(R"({"mean": [0]})")),
               ConfigError);
  EXPECT_THROW(estimate_from_json(Json::parse(
                   R"({"mean": [0], "covariance": [[-1]]})")),
               ConfigError);
  EXPECT_THROW(estimate_from_json(Json::parse(
                   R"({"mean": [0, 1], "covariance": [[1]]})")),
               ConfigError);
}

TEST(Json, PatternAndPartitionRoundTrip) {
  const CrossSparsityPattern p(3, 2, {{0, 1}, {2, 0}});
  EXPECT_EQ(pattern_from_json(Json::parse(to_json(p).dump())), p);
  const BlockPartition part({{0, 2}, {1}}, 3);
  EXPECT_EQ(partition_from_json(to_json(part), 3).blocks(), part.blocks());
  EXPECT_THROW(partition_from_json(Json::parse("[[0], [0, 1]]"), 2),
               ConfigError);
  EXPECT_THROW(pattern_from_json(Json::parse(
                   R"({"dim_a": 1, "dim_b": 1, "zeros": [[0, 1]]})")),
               ConfigError);
}

TEST(Json, FusionResultFields) {
  const FusionResult r = nmci_fuse(GaussianEstimate(Vector::Zero(2), diag({3, 1})),
                                   GaussianEstimate(Vector::Zero(2), diag({1, 4})),
                                   BlockPartition::singletons(2));
  const Json j = to_json(r);
  EXPECT_EQ(j.at("method"), "nmci");
  EXPECT_EQ(matrix_from_json(j.at("bound"), "bound"), r.bound);
  EXPECT_EQ(vector_from_json(j.at("omega"), "omega"), *r.omega);
  EXPECT_TRUE(j.at("diagnostics").contains("gain_sum_error"));
  EXPECT_FALSE(j.at("diagnostics").contains("samples"));
}

TEST(Json, ProblemRoundTrip) {
  const auto set = sample_set(diag({3, 1}), diag({1, 4}),
                              CrossSparsityPattern::dense(2, 2), 5, 2);
  const SampledFusionProblem p = build_problem(diag({3, 1}), diag({1, 4}), set);
  const SampledFusionProblem back =
      problem_from_json(Json::parse(to_json(p).dump()));
  ASSERT_EQ(back.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(back.crosses[i], p.crosses[i]);
  }
  Json bad = to_json(p);
  bad["schema_version"] = 2;
  EXPECT_THROW(problem_from_json(bad), ConfigError);
}

TEST(Json, SweepConfigRoundTripAndErrors) {
  const Json j = Json::parse(R"({
    "schema_version": 1, "p_a": [[3, 0], [0, 1]], "p_b": [[1, 0], [0, 4]],
    "partition": [[0], [1]], "pattern": "partition",
    "n_values": [10, 50], "mc_runs": 7, "seed": 9,
    "solver": {"tol": 1e-6}})");
  const SweepConfig c = sweep_config_from_json(j);
  EXPECT_EQ(c.n_values, (std::vector<std::size_t>{10, 50}));
  EXPECT_EQ(c.mc_runs, 7u);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.solver.tol, 1e-6);
  EXPECT_EQ(c.pattern, partition_to_sparsity(c.partition));
  const SweepConfig back = sweep_config_from_json(to_json(c));
  EXPECT_EQ(back.pattern, c.pattern);
  EXPECT_EQ(back.p_b, c.p_b);
  EXPECT_EQ(back.n_values, c.n_values);

  Json typo = j;
  typo["mc_run"] = 3;
  EXPECT_THROW(sweep_config_from_json(typo), ConfigError);
  Json zero = j;
  zero["n_values"] = Json::array({0});
  EXPECT_THROW(sweep_config_from_json(zero), ConfigError);
  Json no_schema = j;
  no_schema.erase("schema_version");
  EXPECT_THROW(sweep_config_from_json(no_schema), ConfigError);
}

TEST(Json, ScenarioPresetMatchesBuiltIn) {
  const ScenarioConfig c =
      scenario_from_json(read_json_file(fs::path(COVFUSE_PRESET_DIR) /
                                        "track_desk.json"));
  const ScenarioConfig d = desk_scenario();
  EXPECT_EQ(c.state_dim(), 24u);
  EXPECT_EQ(c.edges, d.edges);
  EXPECT_EQ(c.assignments, d.assignments);
  EXPECT_EQ(c.report_agent, 3u);
  EXPECT_EQ(c.mc_runs, 15u);
  const ScenarioConfig full = scenario_from_json(
      read_json_file(fs::path(COVFUSE_PRESET_DIR) / "track_full.json"));
  EXPECT_EQ(full.state_dim(), 112u);
  EXPECT_EQ(full.report_agent, 6u);
}

TEST(Json, ScenarioRoundTrip) {
  ScenarioConfig c = full_scenario();
  c.q = 0.05;
  c.methods = {TrackMethod::kCI, TrackMethod::kNone};
  c.exchange = ExchangeMode::kOneWay;
  c.partition = PartitionScheme::kGroup;
  const ScenarioConfig back = scenario_from_json(Json::parse(to_json(c).dump()));
  EXPECT_EQ(back.groups, c.groups);
  EXPECT_EQ(back.group_targets, c.group_targets);
  EXPECT_EQ(back.assignments, c.assignments);
  EXPECT_EQ(back.edges, c.edges);
  EXPECT_EQ(back.q, c.q);
  EXPECT_EQ(back.methods, c.methods);
  EXPECT_EQ(back.exchange, c.exchange);
  EXPECT_EQ(back.partition, c.partition);
  EXPECT_EQ(back.report_agent, c.report_agent);
}

TEST(Json, ScenarioErrors) {
  const Json base = read_json_file(fs::path(COVFUSE_PRESET_DIR) /
                                   "track_desk.json");
  Json typo = base;
  typo["n_step"] = 3;
  EXPECT_THROW(scenario_from_json(typo), ConfigError);
  Json agent = base;
  agent["report_agent"] = 0;
  EXPECT_THROW(scenario_from_json(agent), ConfigError);
  Json method = base;
  method["methods"] = Json::array({"kalman"});
  EXPECT_THROW(scenario_from_json(method), ConfigError);
  Json prior = base;
  prior["prior"]["pos"] = 1;
  EXPECT_THROW(scenario_from_json(prior), ConfigError);
  Json mixed = base;
  mixed["groups"] = Json::array({Json::array({1, 2})});
  EXPECT_THROW(scenario_from_json(mixed), ConfigError);
  Json sdp = base;
  sdp["methods"] = Json::array({"sdp"});
  EXPECT_THROW(scenario_from_json(sdp), ConfigError);
}

TEST(Files, WriteNewRefusesOverwrite) {
  const fs::path dir = scratch_dir("write");
  const fs::path file = dir / "nested" / "a.txt";
  write_new_file(file, "one");
  EXPECT_THROW(write_new_file(file, "two"), IoError);
  std::ifstream in(file);
  std::string text;
  std::getline(in, text);
  EXPECT_EQ(text, "one");
  fs::remove_all(dir);
}

TEST(Files, ReadErrors) {
  const fs::path dir = scratch_dir("read");
  EXPECT_THROW(read_json_file(dir / "missing.json"), IoError);
  write_new_file(dir / "bad.json", "{ not json");
  EXPECT_THROW(read_json_file(dir / "bad.json"), ConfigError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace covfuse::io
