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

#include "covfuse/io.hpp"

#include "covfuse/errors.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace covfuse::io {
namespace {

void check_keys(const Json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

const Json& need(const Json& j, const std::string& key,
                 const std::string& where) {
  if (!j.contains(key)) {
    throw ConfigError(where + ": missing key '" + key + "'");
  }
  return j.at(key);
}

template <typename T>
T get(const Json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    throw ConfigError("field '" + field + "' has the wrong type");
  }
}

template <typename T>
void read_opt(const Json& j, const std::string& key, T& out,
              const std::string& where) {
  if (j.contains(key)) out = get<T>(j.at(key), where + "." + key);
}

void check_schema(const Json& j, const std::string& where) {
  if (!j.contains("schema_version")) {
    throw ConfigError(where + ": missing key 'schema_version'");
  }
  const int v = get<int>(j.at("schema_version"), "schema_version");
  if (v != kSchemaVersion) {
    throw ConfigError(where + ": unsupported schema_version " +
                      std::to_string(v));
  }
}

std::vector<std::vector<std::size_t>> one_based_lists(
    const Json& j, const std::string& field, std::size_t limit) {
  auto lists = get<std::vector<std::vector<std::size_t>>>(j, field);
  for (auto& list : lists) {
    for (auto& id : list) {
      if (id < 1 || id > limit) {
        throw ConfigError("field '" + field + "': id " + std::to_string(id) +
                          " out of range 1.." + std::to_string(limit));
      }
      --id;
    }
  }
  return lists;
}

Json one_based(const std::vector<std::vector<std::size_t>>& lists) {
  Json out = Json::array();
  for (const auto& list : lists) {
    Json row = Json::array();
    for (std::size_t id : list) row.push_back(id + 1);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Matrix matrix_from_json(const Json& j, const std::string& field) {
  const auto rows = get<std::vector<std::vector<double>>>(j, field);
  if (rows.empty()) throw ConfigError("field '" + field + "' is empty");
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw ConfigError("field '" + field + "' has ragged rows");
    }
    for (std::size_t k = 0; k < rows[i].size(); ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          rows[i][k];
    }
  }
  return m;
}

Vector vector_from_json(const Json& j, const std::string& field) {
  const auto values = get<std::vector<double>>(j, field);
  Vector v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = values[i];
  }
  return v;
}

Json to_json(const GaussianEstimate& e) {
  return Json{{"labels", e.labels()},
              {"mean", to_json(e.mean())},
              {"covariance", to_json(e.covariance())}};
}

GaussianEstimate estimate_from_json(const Json& j) {
  check_keys(j, {"labels", "mean", "covariance"}, "estimate");
  Vector mean = vector_from_json(need(j, "mean", "estimate"), "mean");
  Matrix cov =
      matrix_from_json(need(j, "covariance", "estimate"), "covariance");
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    labels = get<std::vector<std::string>>(j.at("labels"), "labels");
  }
  try {
    return GaussianEstimate(std::move(mean), std::move(cov),
                            std::move(labels));
  } catch (const Error& e) {
    throw ConfigError(std::string("estimate: ") + e.what());
  }
}

Json to_json(const CrossSparsityPattern& p) {
  Json zeros = Json::array();
  for (const auto& [i, k] : p.zeros()) zeros.push_back({i, k});
  return Json{{"dim_a", p.dim_a()}, {"dim_b", p.dim_b()}, {"zeros", zeros}};
}

CrossSparsityPattern pattern_from_json(const Json& j) {
  check_keys(j, {"dim_a", "dim_b", "zeros"}, "pattern");
  const auto da = get<std::size_t>(need(j, "dim_a", "pattern"), "dim_a");
  const auto db = get<std::size_t>(need(j, "dim_b", "pattern"), "dim_b");
  std::set<CrossSparsityPattern::Index> zeros;
  if (j.contains("zeros")) {
    for (const auto& pair :
         get<std::vector<std::vector<std::size_t>>>(j.at("zeros"), "zeros")) {
      if (pair.size() != 2) {
        throw ConfigError("pattern.zeros entries must be [row, col]");
      }
      zeros.insert({pair[0], pair[1]});
    }
  }
  try {
    return CrossSparsityPattern(da, db, std::move(zeros));
  } catch (const Error& e) {
    throw ConfigError(std::string("pattern: ") + e.what());
  }
}

Json to_json(const BlockPartition& p) { return Json(p.blocks()); }

BlockPartition partition_from_json(const Json& j, std::size_t dim) {
  auto blocks = get<std::vector<std::vector<std::size_t>>>(j, "partition");
  try {
    return BlockPartition(std::move(blocks), dim);
  } catch (const Error& e) {
    throw ConfigError(std::string("partition: ") + e.what());
  }
}

Json to_json(const FusionResult& r) {
  Json out{{"method", std::string(to_string(r.method))},
           {"fused_mean", to_json(r.fused_mean)},
           {"bound", to_json(r.bound)},
           {"gain_a", to_json(r.gain_a)},
           {"gain_b", to_json(r.gain_b)},
           {"omega", r.omega ? to_json(*r.omega) : Json(nullptr)}};
  const FusionDiagnostics& d = r.diagnostics;
  Json diag{{"gain_sum_error", r.gain_sum_error()},
            {"projected", d.projected},
            {"dropped_cross_norm", d.dropped_cross_norm}};
  if (d.samples) diag["samples"] = *d.samples;
  if (d.seed) diag["seed"] = *d.seed;
  if (d.solver_status) diag["solver_status"] = *d.solver_status;
  if (d.gap) diag["gap"] = *d.gap;
  if (d.iterations) diag["iterations"] = *d.iterations;
  out["diagnostics"] = std::move(diag);
  return out;
}

Json to_json(const SampledFusionProblem& p) {
  Json crosses = Json::array();
  for (const Matrix& c : p.crosses) crosses.push_back(to_json(c));
  return Json{{"schema_version", kSchemaVersion},
              {"p_a", to_json(p.p_a)},
              {"p_b", to_json(p.p_b)},
              {"crosses", crosses}};
}

SampledFusionProblem problem_from_json(const Json& j) {
  check_keys(j, {"schema_version", "p_a", "p_b", "crosses"}, "problem");
  check_schema(j, "problem");
  const Matrix pa = matrix_from_json(need(j, "p_a", "problem"), "p_a");
  const Matrix pb = matrix_from_json(need(j, "p_b", "problem"), "p_b");
  std::vector<Matrix> crosses;
  for (const auto& c : need(j, "crosses", "problem")) {
    crosses.push_back(matrix_from_json(c, "crosses[]"));
  }
  return build_problem(pa, pb, crosses);
}

Json to_json(const SdpSolution& s) {
  return Json{{"status", std::string(to_string(s.status))},
              {"objective", s.objective},
              {"gap", s.gap},
              {"iterations", s.iterations},
              {"gain_a", to_json(s.gain_a)},
              {"gain_b", to_json(s.gain_b)},
              {"bound", to_json(s.bound)}};
}

SweepConfig sweep_config_from_json(const Json& j) {
  const std::string w = "compare config";
  check_keys(j,
             {"schema_version", "name", "p_a", "p_b", "partition", "pattern",
              "n_values", "mc_runs", "seed", "solver"},
             w);
  check_schema(j, w);
  SweepConfig c;
  c.p_a = matrix_from_json(need(j, "p_a", w), "p_a");
  c.p_b = matrix_from_json(need(j, "p_b", w), "p_b");
  const auto d = static_cast<std::size_t>(c.p_a.rows());
  if (c.p_b.rows() != c.p_a.rows()) {
    throw ConfigError(w + ": p_a and p_b differ in size");
  }
  c.partition = j.contains("partition")
                    ? partition_from_json(j.at("partition"), d)
                    : BlockPartition::single(d);
  c.pattern = partition_to_sparsity(c.partition);
  if (j.contains("pattern")) {
    const Json& p = j.at("pattern");
    if (p.is_string()) {
      const auto s = p.get<std::string>();
      if (s == "dense") {
        c.pattern = CrossSparsityPattern::dense(d, d);
      } else if (s == "all_zero") {
        c.pattern = CrossSparsityPattern::all_zero(d, d);
      } else if (s != "partition") {
        throw ConfigError(w + ": pattern must be partition, dense, all_zero "
                              "or an object");
      }
    } else {
      c.pattern = pattern_from_json(p);
    }
  }
  c.n_values = get<std::vector<std::size_t>>(need(j, "n_values", w),
                                             "n_values");
  if (c.n_values.empty()) throw ConfigError(w + ": n_values is empty");
  for (std::size_t n : c.n_values) {
    if (n == 0) throw ConfigError(w + ": n_values entries must be >= 1");
  }
  read_opt(j, "mc_runs", c.mc_runs, w);
  if (c.mc_runs == 0) throw ConfigError(w + ": mc_runs must be >= 1");
  read_opt(j, "seed", c.seed, w);
  if (j.contains("solver")) {
    const Json& s = j.at("solver");
    check_keys(s, {"tol", "max_iters", "mu_reduction"}, w + ".solver");
    read_opt(s, "tol", c.solver.tol, w + ".solver");
    read_opt(s, "max_iters", c.solver.max_iters, w + ".solver");
    read_opt(s, "mu_reduction", c.solver.mu_reduction, w + ".solver");
    if (!(c.solver.tol > 0.0) || !(c.solver.mu_reduction > 0.0 &&
                                   c.solver.mu_reduction < 1.0)) {
      throw ConfigError(w + ".solver: tol > 0 and 0 < mu_reduction < 1");
    }
  }
  return c;
}

Json to_json(const SweepConfig& c) {
  return Json{{"schema_version", kSchemaVersion},
              {"p_a", to_json(c.p_a)},
              {"p_b", to_json(c.p_b)},
              {"partition", to_json(c.partition)},
              {"pattern", to_json(c.pattern)},
              {"n_values", c.n_values},
              {"mc_runs", c.mc_runs},
              {"seed", c.seed},
              {"solver",
               {{"tol", c.solver.tol},
                {"max_iters", c.solver.max_iters},
                {"mu_reduction", c.solver.mu_reduction}}}};
}

ScenarioConfig scenario_from_json(const Json& j) {
  const std::string w = "scenario";
  check_keys(j,
             {"schema_version", "name", "layout", "topology", "groups",
              "group_targets", "assignments", "edges", "dt", "q", "bias_max",
              "r_target", "r_landmark", "prior", "n_steps", "mc_runs", "seed",
              "methods", "partition", "exchange", "report_agent",
              "nees_states", "sdp"},
             w);
  check_schema(j, w);
  ScenarioConfig c;
  if (j.contains("layout")) {
    const Json& l = j.at("layout");
    check_keys(l, {"n_groups", "agents_per_group", "targets_per_group"},
               w + ".layout");
    c = grouped_gateway_scenario(
        get<std::size_t>(need(l, "n_groups", w + ".layout"), "n_groups"),
        get<std::size_t>(need(l, "agents_per_group", w + ".layout"),
                         "agents_per_group"),
        get<std::size_t>(need(l, "targets_per_group", w + ".layout"),
                         "targets_per_group"));
    if (j.contains("topology")) {
      const auto t = get<std::string>(j.at("topology"), "topology");
      if (t != "grouped_gateway") {
        throw ConfigError(w + ": unknown topology '" + t + "'");
      }
      if (j.contains("edges")) {
        throw ConfigError(w + ": give either topology or edges, not both");
      }
    }
  } else {
    if (j.contains("topology")) {
      throw ConfigError(w + ": topology presets need a layout");
    }
    const Json& groups = need(j, "groups", w);
    std::size_t n_agents = 0;
    for (const auto& g : get<std::vector<std::vector<std::size_t>>>(
             groups, "groups")) {
      n_agents += g.size();
    }
    std::size_t n_targets = 0;
    for (const auto& g : get<std::vector<std::vector<std::size_t>>>(
             need(j, "group_targets", w), "group_targets")) {
      n_targets += g.size();
    }
    c.n_agents = n_agents;
    c.n_targets = n_targets;
    c.groups = one_based_lists(groups, "groups", n_agents);
    c.group_targets =
        one_based_lists(j.at("group_targets"), "group_targets", n_targets);
    c.assignments =
        one_based_lists(need(j, "assignments", w), "assignments", n_targets);
    need(j, "edges", w);
    c.report_agent = 0;
  }
  if (j.contains("layout") &&
      (j.contains("groups") || j.contains("group_targets") ||
       j.contains("assignments"))) {
    throw ConfigError(
        w + ": give either layout or groups/group_targets/assignments");
  }
  if (j.contains("edges")) {
    c.edges.clear();
    for (const auto& e :
         one_based_lists(j.at("edges"), "edges", c.n_agents)) {
      if (e.size() != 2) throw ConfigError(w + ": edges must be [u, v] pairs");
      c.edges.emplace_back(e[0], e[1]);
    }
  }
  read_opt(j, "name", c.name, w);
  read_opt(j, "dt", c.dt, w);
  read_opt(j, "q", c.q, w);
  read_opt(j, "bias_max", c.bias_max, w);
  if (j.contains("r_target")) {
    c.r_target = matrix_from_json(j.at("r_target"), "r_target");
  }
  if (j.contains("r_landmark")) {
    c.r_landmark = matrix_from_json(j.at("r_landmark"), "r_landmark");
  }
  if (j.contains("prior")) {
    const Json& p = j.at("prior");
    check_keys(p, {"pos_var", "vel_var", "bias_var"}, w + ".prior");
    read_opt(p, "pos_var", c.prior_pos_var, w + ".prior");
    read_opt(p, "vel_var", c.prior_vel_var, w + ".prior");
    read_opt(p, "bias_var", c.prior_bias_var, w + ".prior");
  }
  read_opt(j, "n_steps", c.n_steps, w);
  read_opt(j, "mc_runs", c.mc_runs, w);
  read_opt(j, "seed", c.seed, w);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : get<std::vector<std::string>>(j.at("methods"),
                                                       "methods")) {
      c.methods.push_back(parse_track_method(m));
    }
  }
  if (j.contains("partition")) {
    c.partition =
        parse_partition_scheme(get<std::string>(j.at("partition"), "partition"));
  }
  if (j.contains("exchange")) {
    c.exchange =
        parse_exchange_mode(get<std::string>(j.at("exchange"), "exchange"));
  }
  if (j.contains("report_agent")) {
    const auto r = get<std::size_t>(j.at("report_agent"), "report_agent");
    if (r < 1 || r > c.n_agents) {
      throw ConfigError(w + ": report_agent out of range");
    }
    c.report_agent = r - 1;
  }
  if (j.contains("nees_states")) {
    c.nees_states =
        parse_nees_states(get<std::string>(j.at("nees_states"), "nees_states"));
  }
  if (j.contains("sdp")) {
    const Json& s = j.at("sdp");
    check_keys(s, {"samples", "tol"}, w + ".sdp");
    read_opt(s, "samples", c.sdp_samples, w + ".sdp");
    read_opt(s, "tol", c.sdp_tol, w + ".sdp");
  }
  c.validate();
  return c;
}

Json to_json(const ScenarioConfig& c) {
  Json edges = Json::array();
  for (const auto& [u, v] : c.edges) edges.push_back({u + 1, v + 1});
  Json methods = Json::array();
  for (TrackMethod m : c.methods) methods.push_back(std::string(to_string(m)));
  return Json{{"schema_version", kSchemaVersion},
              {"name", c.name},
              {"groups", one_based(c.groups)},
              {"group_targets", one_based(c.group_targets)},
              {"assignments", one_based(c.assignments)},
              {"edges", edges},
              {"dt", c.dt},
              {"q", c.q},
              {"bias_max", c.bias_max},
              {"r_target", to_json(c.r_target)},
              {"r_landmark", to_json(c.r_landmark)},
              {"prior",
               {{"pos_var", c.prior_pos_var},
                {"vel_var", c.prior_vel_var},
                {"bias_var", c.prior_bias_var}}},
              {"n_steps", c.n_steps},
              {"mc_runs", c.mc_runs},
              {"seed", c.seed},
              {"methods", methods},
              {"partition", std::string(to_string(c.partition))},
              {"exchange", std::string(to_string(c.exchange))},
              {"report_agent", c.report_agent + 1},
              {"nees_states", std::string(to_string(c.nees_states))},
              {"sdp", {{"samples", c.sdp_samples}, {"tol", c.sdp_tol}}}};
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_new_file(const std::filesystem::path& path,
                    const std::string& text) {
  if (std::filesystem::exists(path)) {
    throw IoError(path.string() + " already exists; refusing to overwrite");
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace covfuse::io
