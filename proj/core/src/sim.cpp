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

#include "covfuse/sim.hpp"

#include "covfuse/errors.hpp"
#include "covfuse/sdp.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

namespace covfuse {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

bool spd2(const Matrix& m) {
  return m.rows() == 2 && m.cols() == 2 && relative_asymmetry(m) <= 1e-10 &&
         is_spd(m);
}

std::vector<std::size_t> nees_indices(const ScenarioConfig& config,
                                      const StateLayout& layout) {
  if (config.nees_states == NeesStates::kAll) {
    std::vector<std::size_t> all(layout.dim());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  return layout.target_indices();
}

}  // namespace

std::string_view to_string(TrackMethod m) {
  switch (m) {
    case TrackMethod::kNone:
      return "none";
    case TrackMethod::kCI:
      return "ci";
    case TrackMethod::kNmCI:
      return "nmci";
    case TrackMethod::kSdp:
      return "sdp";
    case TrackMethod::kCentralized:
      return "centralized";
  }
  return "?";
}

TrackMethod parse_track_method(std::string_view s) {
  const std::string v = lower(s);
  if (v == "none") return TrackMethod::kNone;
  if (v == "ci") return TrackMethod::kCI;
  if (v == "nmci") return TrackMethod::kNmCI;
  if (v == "sdp") return TrackMethod::kSdp;
  if (v == "centralized") return TrackMethod::kCentralized;
  throw ConfigError("unknown tracking method '" + std::string(s) + "'");
}

std::string_view to_string(PartitionScheme s) {
  switch (s) {
    case PartitionScheme::kGroupAxis:
      return "group_axis";
    case PartitionScheme::kGroup:
      return "group";
    case PartitionScheme::kGroupTargetsBiases:
      return "group_targets_biases";
    case PartitionScheme::kSingle:
      return "single";
  }
  return "?";
}

PartitionScheme parse_partition_scheme(std::string_view s) {
  const std::string v = lower(s);
  if (v == "group_axis") return PartitionScheme::kGroupAxis;
  if (v == "group") return PartitionScheme::kGroup;
  if (v == "group_targets_biases") return PartitionScheme::kGroupTargetsBiases;
  if (v == "single") return PartitionScheme::kSingle;
  throw ConfigError("unknown partition scheme '" + std::string(s) + "'");
}

std::string_view to_string(ExchangeMode m) {
  return m == ExchangeMode::kSymmetric ? "symmetric" : "one_way";
}

ExchangeMode parse_exchange_mode(std::string_view s) {
  const std::string v = lower(s);
  if (v == "symmetric") return ExchangeMode::kSymmetric;
  if (v == "one_way") return ExchangeMode::kOneWay;
  throw ConfigError("unknown exchange mode '" + std::string(s) + "'");
}

std::string_view to_string(NeesStates s) {
  return s == NeesStates::kTargets ? "targets" : "all";
}

NeesStates parse_nees_states(std::string_view s) {
  const std::string v = lower(s);
  if (v == "targets") return NeesStates::kTargets;
  if (v == "all") return NeesStates::kAll;
  throw ConfigError("unknown nees_states '" + std::string(s) + "'");
}

void ScenarioConfig::validate() const {
  require(n_agents >= 1, "n_agents must be >= 1");
  require(n_targets >= 1, "n_targets must be >= 1");
  require(!groups.empty(), "at least one group is required");
  require(group_targets.size() == groups.size(),
          "group_targets must have one entry per group");
  require(assignments.size() == n_agents,
          "assignments must have one entry per agent");

  std::vector<std::size_t> group_of_agent(n_agents, groups.size());
  std::vector<std::size_t> group_of_target(n_targets, groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    require(!groups[g].empty(), "group " + std::to_string(g + 1) + " is empty");
    for (std::size_t a : groups[g]) {
      require(a < n_agents, "group member out of range");
      require(group_of_agent[a] == groups.size(),
              "agent " + std::to_string(a + 1) + " is in two groups");
      group_of_agent[a] = g;
    }
    for (std::size_t t : group_targets[g]) {
      require(t < n_targets, "group target out of range");
      require(group_of_target[t] == groups.size(),
              "target " + std::to_string(t + 1) + " is in two groups");
      group_of_target[t] = g;
    }
  }
  for (std::size_t a = 0; a < n_agents; ++a) {
    require(group_of_agent[a] < groups.size(),
            "agent " + std::to_string(a + 1) + " is in no group");
  }
  for (std::size_t t = 0; t < n_targets; ++t) {
    require(group_of_target[t] < groups.size(),
            "target " + std::to_string(t + 1) + " is in no group");
  }
  for (std::size_t a = 0; a < n_agents; ++a) {
    require(!assignments[a].empty(),
            "agent " + std::to_string(a + 1) + " has no assigned target");
    for (std::size_t t : assignments[a]) {
      require(t < n_targets, "assigned target out of range");
      require(group_of_target[t] == group_of_agent[a],
              "agent " + std::to_string(a + 1) +
                  " is assigned a target of another group");
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [u, v] : edges) {
    require(u < n_agents && v < n_agents, "edge endpoint out of range");
    require(u != v, "self-loop edge");
    require(seen.insert({std::min(u, v), std::max(u, v)}).second,
            "duplicate edge " + std::to_string(u + 1) + "-" +
                std::to_string(v + 1));
  }
  require(dt > 0.0, "dt must be positive");
  require(q >= 0.0, "q must be nonnegative");
  require(bias_max >= 0.0, "bias_max must be nonnegative");
  require(spd2(r_target), "r_target must be a symmetric PD 2x2 matrix");
  require(spd2(r_landmark), "r_landmark must be a symmetric PD 2x2 matrix");
  require(prior_pos_var > 0.0 && prior_vel_var > 0.0 && prior_bias_var > 0.0,
          "prior variances must be positive");
  require(n_steps >= 1, "n_steps must be >= 1");
  require(mc_runs >= 1, "mc_runs must be >= 1");
  require(!methods.empty(), "methods must not be empty");
  require(report_agent < n_agents, "report_agent out of range");
  require(sdp_samples >= 1, "sdp.samples must be >= 1");
  require(sdp_tol > 0.0, "sdp.tol must be positive");
  if (std::find(methods.begin(), methods.end(), TrackMethod::kSdp) !=
      methods.end()) {
    require(state_dim() <= kSdpMaxStateDim,
            "the sdp method needs a state dimension <= " +
                std::to_string(kSdpMaxStateDim) + " (scenario has " +
                std::to_string(state_dim()) + ")");
  }
}

ScenarioConfig grouped_gateway_scenario(std::size_t n_groups,
                                        std::size_t agents_per_group,
                                        std::size_t targets_per_group) {
  if (n_groups == 0 || agents_per_group == 0 || targets_per_group == 0) {
    throw ConfigError("layout sizes must be positive");
  }
  ScenarioConfig c;
  c.n_agents = n_groups * agents_per_group;
  c.n_targets = n_groups * targets_per_group;
  c.assignments.resize(c.n_agents);
  std::vector<std::size_t> gateways;
  for (std::size_t g = 0; g < n_groups; ++g) {
    std::vector<std::size_t> agents;
    std::vector<std::size_t> targets;
    for (std::size_t j = 0; j < agents_per_group; ++j) {
      agents.push_back(g * agents_per_group + j);
    }
    for (std::size_t j = 0; j < targets_per_group; ++j) {
      targets.push_back(g * targets_per_group + j);
    }
    for (std::size_t j = 0; j < agents_per_group; ++j) {
      const std::size_t first = std::min(j, targets_per_group - 1);
      auto& assigned = c.assignments[agents[j]];
      assigned.push_back(targets[first]);
      if (first + 1 < targets_per_group) assigned.push_back(targets[first + 1]);
    }
    for (std::size_t j = 0; j + 1 < agents_per_group; ++j) {
      c.edges.emplace_back(agents[j], agents[j + 1]);
    }
    if (agents_per_group >= 3) {
      c.edges.emplace_back(agents.back(), agents.front());
    }
    gateways.push_back(agents[std::min<std::size_t>(2, agents_per_group - 1)]);
    c.groups.push_back(std::move(agents));
    c.group_targets.push_back(std::move(targets));
  }
  for (std::size_t g = 0; g + 1 < n_groups; ++g) {
    c.edges.emplace_back(gateways[g], gateways[g + 1]);
  }
  c.report_agent = gateways[n_groups > 1 ? 1 : 0];
  c.name = "grouped_gateway_" + std::to_string(n_groups) + "x" +
           std::to_string(agents_per_group) + "x" +
           std::to_string(targets_per_group);
  return c;
}

ScenarioConfig desk_scenario() {
  ScenarioConfig c = grouped_gateway_scenario(2, 2, 2);
  c.name = "desk";
  return c;
}

ScenarioConfig full_scenario() {
  ScenarioConfig c = grouped_gateway_scenario(4, 4, 5);
  c.name = "full";
  return c;
}

std::vector<std::string> StateLayout::labels() const {
  std::vector<std::string> out;
  out.reserve(dim());
  static const char* kTarget[] = {"x", "vx", "y", "vy"};
  for (std::size_t t = 0; t < n_targets; ++t) {
    for (const char* c : kTarget) {
      out.push_back("T" + std::to_string(t + 1) + "." + c);
    }
  }
  for (std::size_t a = 0; a < n_agents; ++a) {
    out.push_back("A" + std::to_string(a + 1) + ".bx");
    out.push_back("A" + std::to_string(a + 1) + ".by");
  }
  return out;
}

std::vector<std::size_t> StateLayout::target_indices() const {
  std::vector<std::size_t> out(4 * n_targets);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
  return out;
}

std::vector<std::size_t> StateLayout::position_indices() const {
  std::vector<std::size_t> out;
  out.reserve(2 * n_targets);
  for (std::size_t t = 0; t < n_targets; ++t) {
    out.push_back(target_x(t));
    out.push_back(target_y(t));
  }
  return out;
}

BlockPartition make_partition(const ScenarioConfig& config,
                              PartitionScheme scheme) {
  const StateLayout layout{config.n_targets, config.n_agents};
  if (scheme == PartitionScheme::kSingle) {
    return BlockPartition::single(layout.dim());
  }
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t g = 0; g < config.groups.size(); ++g) {
    std::vector<std::size_t> x;
    std::vector<std::size_t> y;
    std::vector<std::size_t> biases;
    for (std::size_t t : config.group_targets[g]) {
      x.push_back(layout.target(t));
      x.push_back(layout.target(t) + 1);
      y.push_back(layout.target(t) + 2);
      y.push_back(layout.target(t) + 3);
    }
    for (std::size_t a : config.groups[g]) {
      biases.push_back(layout.bias(a));
      biases.push_back(layout.bias(a) + 1);
    }
    switch (scheme) {
      case PartitionScheme::kGroupAxis: {
        for (std::size_t a : config.groups[g]) {
          x.push_back(layout.bias(a));
          y.push_back(layout.bias(a) + 1);
        }
        blocks.push_back(std::move(x));
        blocks.push_back(std::move(y));
        break;
      }
      case PartitionScheme::kGroup: {
        x.insert(x.end(), y.begin(), y.end());
        x.insert(x.end(), biases.begin(), biases.end());
        blocks.push_back(std::move(x));
        break;
      }
      case PartitionScheme::kGroupTargetsBiases: {
        x.insert(x.end(), y.begin(), y.end());
        blocks.push_back(std::move(x));
        blocks.push_back(std::move(biases));
        break;
      }
      case PartitionScheme::kSingle:
        break;
    }
  }
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  return BlockPartition(std::move(blocks), layout.dim());
}

Matrix ncv_transition(double dt) {
  Matrix f = Matrix::Identity(4, 4);
  f(0, 1) = dt;
  f(2, 3) = dt;
  return f;
}

Matrix ncv_process_noise(double dt, double q) {
  Matrix block(2, 2);
  block << dt * dt * dt / 3.0, dt * dt / 2.0, dt * dt / 2.0, dt;
  Matrix out = Matrix::Zero(4, 4);
  out.block(0, 0, 2, 2) = q * block;
  out.block(2, 2, 2, 2) = q * block;
  return out;
}

Vector propagate_truth(const Vector& state, const StateLayout& layout,
                       double dt, double q, Rng& rng) {
  if (static_cast<std::size_t>(state.size()) != layout.dim()) {
    throw DimensionError("propagate_truth: state dimension");
  }
  const Matrix f = ncv_transition(dt);
  const Matrix noise = ncv_process_noise(dt, q);
  Vector out = state;
  for (std::size_t t = 0; t < layout.n_targets; ++t) {
    const auto i = static_cast<Eigen::Index>(layout.target(t));
    Vector next = f * state.segment(i, 4);
    if (q > 0.0) next += rng.gaussian(noise);
    out.segment(i, 4) = next;
  }
  return out;
}

AgentMeasurement measure(const ScenarioConfig& config,
                         const StateLayout& layout, std::size_t agent,
                         const Vector& truth, Rng& rng) {
  AgentMeasurement m;
  m.agent = agent;
  const Vector bias =
      truth.segment(static_cast<Eigen::Index>(layout.bias(agent)), 2);
  for (std::size_t t : config.assignments.at(agent)) {
    Vector z(2);
    z << truth(static_cast<Eigen::Index>(layout.target_x(t))),
        truth(static_cast<Eigen::Index>(layout.target_y(t)));
    z += bias + rng.gaussian(config.r_target);
    m.targets.emplace_back(t, std::move(z));
  }
  m.landmark = bias + rng.gaussian(config.r_landmark);
  return m;
}

AgentBelief initial_belief(const ScenarioConfig& config) {
  const StateLayout layout{config.n_targets, config.n_agents};
  const auto d = static_cast<Eigen::Index>(layout.dim());
  AgentBelief b;
  b.mean = Vector::Zero(d);
  Vector var(d);
  for (std::size_t t = 0; t < layout.n_targets; ++t) {
    const auto i = static_cast<Eigen::Index>(layout.target(t));
    var.segment(i, 4) << config.prior_pos_var, config.prior_vel_var,
        config.prior_pos_var, config.prior_vel_var;
  }
  for (std::size_t a = 0; a < layout.n_agents; ++a) {
    var.segment(static_cast<Eigen::Index>(layout.bias(a)), 2)
        .setConstant(config.prior_bias_var);
  }
  b.covariance = var.asDiagonal();
  return b;
}

void predict(AgentBelief& belief, const StateLayout& layout, double dt,
             double q) {
  const Matrix noise = ncv_process_noise(dt, q);
  Matrix& p = belief.covariance;
  for (std::size_t t = 0; t < layout.n_targets; ++t) {
    for (std::size_t axis = 0; axis < 2; ++axis) {
      const auto pos = static_cast<Eigen::Index>(layout.target(t) + 2 * axis);
      const auto vel = pos + 1;
      belief.mean(pos) += dt * belief.mean(vel);
      p.row(pos) += dt * p.row(vel);
      p.col(pos) += dt * p.col(vel);
    }
    const auto i = static_cast<Eigen::Index>(layout.target(t));
    p.block(i, i, 4, 4) += noise;
  }
}

void update(AgentBelief& belief, const StateLayout& layout,
            const std::vector<AgentMeasurement>& measurements,
            const Matrix& r_target, const Matrix& r_landmark) {
  Eigen::Index m = 0;
  for (const auto& meas : measurements) {
    m += 2 * static_cast<Eigen::Index>(meas.targets.size()) + 2;
  }
  if (m == 0) return;
  const auto d = static_cast<Eigen::Index>(layout.dim());
  Matrix h = Matrix::Zero(m, d);
  Matrix r = Matrix::Zero(m, m);
  Vector z(m);
  Eigen::Index row = 0;
  for (const auto& meas : measurements) {
    const auto b = static_cast<Eigen::Index>(layout.bias(meas.agent));
    for (const auto& [t, zt] : meas.targets) {
      h(row, static_cast<Eigen::Index>(layout.target_x(t))) = 1.0;
      h(row + 1, static_cast<Eigen::Index>(layout.target_y(t))) = 1.0;
      h(row, b) = 1.0;
      h(row + 1, b + 1) = 1.0;
      r.block(row, row, 2, 2) = r_target;
      z.segment(row, 2) = zt;
      row += 2;
    }
    h(row, b) = 1.0;
    h(row + 1, b + 1) = 1.0;
    r.block(row, row, 2, 2) = r_landmark;
    z.segment(row, 2) = meas.landmark;
    row += 2;
  }
  const Matrix& p = belief.covariance;
  const Matrix pht = p * h.transpose();
  const Matrix s = symmetrize(h * pht + r);
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericError("filter update: innovation covariance not PD");
  }
  const Matrix gain = llt.solve(pht.transpose()).transpose();
  belief.mean += gain * (z - h * belief.mean);
  Matrix post = symmetrize(p - gain * pht.transpose());
  Eigen::LLT<Matrix> check(post);
  if (check.info() != Eigen::Success) {
    throw NumericError("filter update: posterior covariance lost PD");
  }
  belief.covariance = std::move(post);
}

void local_filter_step(AgentBelief& belief, const ScenarioConfig& config,
                       const StateLayout& layout,
                       const AgentMeasurement& measurement) {
  predict(belief, layout, config.dt, config.q);
  update(belief, layout, {measurement}, config.r_target, config.r_landmark);
}

void fusion_round(std::vector<AgentBelief>& beliefs,
                  const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                  const FusionContext& context, std::size_t step,
                  std::vector<OmegaRecord>* omega_log) {
  if (context.method == TrackMethod::kNone ||
      context.method == TrackMethod::kCentralized) {
    return;
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto [u, v] = edges[e];
    const std::size_t receiver = v;
    if (v == context.report_agent) std::swap(u, v);
    const AgentBelief& a = beliefs.at(u);
    const AgentBelief& b = beliefs.at(v);
    FusionResult r;
    try {
      switch (context.method) {
        case TrackMethod::kCI:
          r = ci_fuse_moments(a.mean, a.covariance, b.mean, b.covariance);
          break;
        case TrackMethod::kNmCI:
          r = nmci_fuse_moments(a.mean, a.covariance, b.mean, b.covariance,
                                context.partition, context.check);
          break;
        case TrackMethod::kSdp: {
          const std::vector<std::string> labels =
              context.labels ? *context.labels
                             : default_labels(static_cast<std::size_t>(
                                   a.mean.size()));
          const std::uint64_t seed = derive_seed(
              context.sdp_seed, "edge", step * edges.size() + e);
          SdpOptions options;
          options.tol = context.sdp_tol;
          r = robust_fuse_blockwise(a.estimate(labels), b.estimate(labels),
                                    context.partition, context.sdp_samples,
                                    seed, options);
          break;
        }
        default:
          return;
      }
    } catch (const Error& err) {
      throw NumericError("fusion failed on edge " + std::to_string(u + 1) +
                         "-" + std::to_string(v + 1) + " at step " +
                         std::to_string(step) + ": " + err.what());
    }
    if (omega_log && r.omega &&
        (u == context.report_agent || v == context.report_agent)) {
      for (Eigen::Index k = 0; k < r.omega->size(); ++k) {
        omega_log->push_back({context.run, step, u, v,
                              static_cast<std::size_t>(k), (*r.omega)(k)});
      }
    }
    AgentBelief fused{std::move(r.fused_mean), std::move(r.bound)};
    if (context.exchange == ExchangeMode::kSymmetric) {
      beliefs[u] = fused;
      beliefs[v] = std::move(fused);
    } else {
      beliefs[receiver] = std::move(fused);
    }
  }
}

RunRealization realize_run(const ScenarioConfig& config, std::size_t run) {
  const StateLayout layout{config.n_targets, config.n_agents};
  Rng truth_rng(derive_seed(config.seed, "truth", run));
  Rng meas_rng(derive_seed(config.seed, "measurement", run));

  RunRealization out;
  Vector x = Vector::Zero(static_cast<Eigen::Index>(layout.dim()));
  const double pos_sd = std::sqrt(config.prior_pos_var);
  const double vel_sd = std::sqrt(config.prior_vel_var);
  for (std::size_t t = 0; t < layout.n_targets; ++t) {
    const auto i = static_cast<Eigen::Index>(layout.target(t));
    x(i) = pos_sd * truth_rng.normal();
    x(i + 1) = vel_sd * truth_rng.normal();
    x(i + 2) = pos_sd * truth_rng.normal();
    x(i + 3) = vel_sd * truth_rng.normal();
  }
  for (std::size_t a = 0; a < layout.n_agents; ++a) {
    const auto i = static_cast<Eigen::Index>(layout.bias(a));
    x(i) = truth_rng.uniform(-config.bias_max, config.bias_max);
    x(i + 1) = truth_rng.uniform(-config.bias_max, config.bias_max);
  }
  out.initial_truth = x;
  out.truth.reserve(config.n_steps);
  out.measurements.reserve(config.n_steps);
  for (std::size_t k = 0; k < config.n_steps; ++k) {
    x = propagate_truth(x, layout, config.dt, config.q, truth_rng);
    std::vector<AgentMeasurement> step;
    step.reserve(config.n_agents);
    for (std::size_t a = 0; a < config.n_agents; ++a) {
      step.push_back(measure(config, layout, a, x, meas_rng));
    }
    out.truth.push_back(x);
    out.measurements.push_back(std::move(step));
  }
  return out;
}

namespace {

void record_step(const StateLayout& layout,
                 const std::vector<std::size_t>& nees_idx,
                 const AgentBelief& belief, const Vector& truth,
                 MethodRun& out) {
  out.metrics.nees.push_back(nees(select(belief.mean, nees_idx),
                                  select(belief.covariance, nees_idx, nees_idx),
                                  select(truth, nees_idx)));
  double sq = 0.0;
  double var = 0.0;
  for (std::size_t t = 0; t < layout.n_targets; ++t) {
    const auto ix = static_cast<Eigen::Index>(layout.target_x(t));
    const auto iy = static_cast<Eigen::Index>(layout.target_y(t));
    const double ex = belief.mean(ix) - truth(ix);
    const double ey = belief.mean(iy) - truth(iy);
    sq += ex * ex + ey * ey;
    var += belief.covariance(ix, ix) + belief.covariance(iy, iy);
  }
  const auto nt = static_cast<double>(layout.n_targets);
  out.metrics.pos_sq_err.push_back(sq / nt);
  out.metrics.pos_var.push_back(var / (2.0 * nt));
  double trace = 0.0;
  for (std::size_t i : layout.target_indices()) {
    trace += belief.covariance(static_cast<Eigen::Index>(i),
                               static_cast<Eigen::Index>(i));
  }
  out.metrics.cov_trace.push_back(trace);
  out.report_means.push_back(belief.mean);
  out.report_variances.push_back(belief.covariance.diagonal());
}

}  // namespace

MethodRun run_method(const ScenarioConfig& config,
                     const RunRealization& realization, TrackMethod method,
                     std::size_t run) {
  return run_method_traced(config, realization, method, run, nullptr);
}

MethodRun run_method_traced(const ScenarioConfig& config,
                            const RunRealization& realization,
                            TrackMethod method, std::size_t run,
                            BeliefTrace* trace) {
  const StateLayout layout{config.n_targets, config.n_agents};
  const std::vector<std::size_t> nees_idx = nees_indices(config, layout);
  const std::vector<std::string> labels = layout.labels();
  MethodRun out;
  out.method = method;

  if (method == TrackMethod::kCentralized) {
    AgentBelief belief = initial_belief(config);
    for (std::size_t k = 0; k < realization.truth.size(); ++k) {
      predict(belief, layout, config.dt, config.q);
      update(belief, layout, realization.measurements[k], config.r_target,
             config.r_landmark);
      record_step(layout, nees_idx, belief, realization.truth[k], out);
      if (trace) trace->push_back({belief});
    }
    return out;
  }

  FusionContext ctx;
  ctx.method = method;
  ctx.partition = make_partition(config, config.partition);
  ctx.check = config.partition == PartitionScheme::kGroupTargetsBiases
                  ? BlockCheck::kLenient
                  : BlockCheck::kStrict;
  ctx.exchange = config.exchange;
  ctx.report_agent = config.report_agent;
  ctx.run = run;
  ctx.sdp_seed = derive_seed(config.seed, "sdp", run);
  ctx.sdp_samples = config.sdp_samples;
  ctx.sdp_tol = config.sdp_tol;
  ctx.labels = &labels;

  std::vector<AgentBelief> beliefs(config.n_agents, initial_belief(config));
  for (std::size_t k = 0; k < realization.truth.size(); ++k) {
    for (std::size_t a = 0; a < config.n_agents; ++a) {
      local_filter_step(beliefs[a], config, layout,
                        realization.measurements[k][a]);
    }
    fusion_round(beliefs, config.edges, ctx, k, &out.metrics.omega_log);
    record_step(layout, nees_idx, beliefs[config.report_agent],
                realization.truth[k], out);
    if (trace) trace->push_back(beliefs);
  }
  return out;
}

TrackResult run_tracking(const ScenarioConfig& config, std::size_t jobs) {
  config.validate();
  const StateLayout layout{config.n_targets, config.n_agents};
  TrackResult result;
  result.config = config;
  result.nees_dof = nees_indices(config, layout).size();
  result.runs.resize(config.mc_runs);
  result.realizations.resize(config.mc_runs);
  parallel_for(config.mc_runs, jobs, [&](std::size_t run) {
    RunRealization realization = realize_run(config, run);
    std::vector<MethodRun> per_method;
    per_method.reserve(config.methods.size());
    for (TrackMethod m : config.methods) {
      per_method.push_back(run_method(config, realization, m, run));
    }
    result.runs[run] = std::move(per_method);
    result.realizations[run] = std::move(realization);
  });
  for (std::size_t m = 0; m < config.methods.size(); ++m) {
    std::vector<RunMetrics> metrics;
    metrics.reserve(config.mc_runs);
    for (const auto& run : result.runs) metrics.push_back(run[m].metrics);
    result.statistics.push_back(aggregate(std::string(to_string(
                                              config.methods[m])),
                                          metrics, result.nees_dof));
  }
  return result;
}

}  // namespace covfuse
