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

// Multi-agent multi-target tracking simulator.
//
// Every agent estimates the full global state: 4 components per target
// [x, vx, y, vy] followed by 2 bias components per agent [bx, by]. Targets
// move with a nearly-constant-velocity model per axis; agents measure the
// position of their assigned targets offset by their own bias, and observe
// the bias directly through a landmark. One step is predict, local update,
// then one pairwise fusion per topology edge.

#pragma once

#include "covfuse/core.hpp"
#include "covfuse/eval.hpp"
#include "covfuse/fusion.hpp"
#include "covfuse/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace covfuse {

enum class TrackMethod { kNone, kCI, kNmCI, kSdp, kCentralized };

std::string_view to_string(TrackMethod m);
/// Accepts none, ci, nmci, sdp, centralized (case-insensitive).
TrackMethod parse_track_method(std::string_view s);

/// How the global state is cut into independent blocks for nmCI.
enum class PartitionScheme {
  /// Per group and per axis: {x, vx of the group's targets, bx of the
  /// group's agents}, and the same for y. Exactly block diagonal.
  kGroupAxis,
  /// One block per group (targets and agent biases together).
  kGroup,
  /// Per group: targets in one block, agent biases in another. Not block
  /// diagonal once biases are estimated, so nmCI runs in lenient mode.
  kGroupTargetsBiases,
  kSingle,
};

std::string_view to_string(PartitionScheme s);
PartitionScheme parse_partition_scheme(std::string_view s);

/// kSymmetric: both endpoints adopt the fused estimate. kOneWay: only the
/// second endpoint of each edge does.
enum class ExchangeMode { kSymmetric, kOneWay };

std::string_view to_string(ExchangeMode m);
ExchangeMode parse_exchange_mode(std::string_view s);

/// Which states enter the NEES of the reporting agent.
enum class NeesStates { kTargets, kAll };

std::string_view to_string(NeesStates s);
NeesStates parse_nees_states(std::string_view s);

/// Indices are 0-based here; config files use 1-based agent and target ids.
struct ScenarioConfig {
  std::string name = "scenario";
  std::size_t n_agents = 0;
  std::size_t n_targets = 0;
  /// Agent ids per group.
  std::vector<std::vector<std::size_t>> groups;
  /// Target ids per group (mutually exclusive).
  std::vector<std::vector<std::size_t>> group_targets;
  /// Target ids per agent.
  std::vector<std::vector<std::size_t>> assignments;
  /// Undirected edges, fused in this order every step.
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  double dt = 1.0;
  /// White-noise acceleration intensity (m^2/s^3).
  double q = 0.01;
  /// Biases are drawn uniform in [-bias_max, bias_max] per run.
  double bias_max = 2.0;
  Matrix r_target = Matrix::Identity(2, 2);
  Matrix r_landmark = 0.25 * Matrix::Identity(2, 2);
  double prior_pos_var = 100.0;
  double prior_vel_var = 25.0;
  double prior_bias_var = 4.0;

  std::size_t n_steps = 100;
  std::size_t mc_runs = 15;
  std::uint64_t seed = 1;
  std::vector<TrackMethod> methods = {TrackMethod::kCentralized,
                                      TrackMethod::kCI, TrackMethod::kNmCI};
  PartitionScheme partition = PartitionScheme::kGroupAxis;
  ExchangeMode exchange = ExchangeMode::kSymmetric;
  std::size_t report_agent = 0;
  NeesStates nees_states = NeesStates::kTargets;
  std::size_t sdp_samples = 200;
  double sdp_tol = 1e-7;

  std::size_t state_dim() const { return 4 * n_targets + 2 * n_agents; }
  /// Throws ConfigError on any inconsistency.
  void validate() const;
};

/// Largest state dimension accepted for the SDP fusion method.
inline constexpr std::size_t kSdpMaxStateDim = 8;

/// Groups of `agents_per_group` agents, each tracking `targets_per_group`
/// targets; ring inside every group (a single edge for two agents) and a
/// chain through one gateway agent per group. The agent at in-group
/// position j tracks targets j and j + 1 of its group (only j for the last
/// position). The reporting agent is the gateway of the second group when
/// there is one, else of the first.
ScenarioConfig grouped_gateway_scenario(std::size_t n_groups,
                                        std::size_t agents_per_group,
                                        std::size_t targets_per_group);

/// 4 agents in 2 groups, 4 targets: 24 states.
ScenarioConfig desk_scenario();
/// 16 agents in 4 groups, 20 targets: 112 states.
ScenarioConfig full_scenario();

/// Index arithmetic of the global state vector.
struct StateLayout {
  std::size_t n_targets = 0;
  std::size_t n_agents = 0;

  std::size_t dim() const { return 4 * n_targets + 2 * n_agents; }
  std::size_t target(std::size_t t) const { return 4 * t; }
  std::size_t target_x(std::size_t t) const { return 4 * t; }
  std::size_t target_y(std::size_t t) const { return 4 * t + 2; }
  std::size_t bias(std::size_t a) const { return 4 * n_targets + 2 * a; }
  /// "T1.x", "T1.vx", ..., "A1.bx", "A1.by" (1-based).
  std::vector<std::string> labels() const;
  std::vector<std::size_t> target_indices() const;
  std::vector<std::size_t> position_indices() const;
};

BlockPartition make_partition(const ScenarioConfig& config,
                              PartitionScheme scheme);

/// 4x4 transition and process noise of one target, block diagonal in the
/// (x, vx) and (y, vy) sub-systems.
Matrix ncv_transition(double dt);
Matrix ncv_process_noise(double dt, double q);

/// Full-state transition with biases held constant.
Vector propagate_truth(const Vector& state, const StateLayout& layout,
                       double dt, double q, Rng& rng);

/// Measurements of one agent at one step.
struct AgentMeasurement {
  std::size_t agent = 0;
  /// (target id, H chi_t + s_a + v).
  std::vector<std::pair<std::size_t, Vector>> targets;
  /// s_a + v.
  Vector landmark;
};

AgentMeasurement measure(const ScenarioConfig& config,
                         const StateLayout& layout, std::size_t agent,
                         const Vector& truth, Rng& rng);

/// Mean and covariance over the global state.
struct AgentBelief {
  Vector mean;
  Matrix covariance;

  GaussianEstimate estimate(const std::vector<std::string>& labels) const {
    return GaussianEstimate(mean, covariance, labels);
  }
};

AgentBelief initial_belief(const ScenarioConfig& config);

void predict(AgentBelief& belief, const StateLayout& layout, double dt,
             double q);

/// Kalman update with every measurement in `measurements`. Throws
/// NumericError if the posterior covariance is not positive definite.
void update(AgentBelief& belief, const StateLayout& layout,
            const std::vector<AgentMeasurement>& measurements,
            const Matrix& r_target, const Matrix& r_landmark);

void local_filter_step(AgentBelief& belief, const ScenarioConfig& config,
                       const StateLayout& layout,
                       const AgentMeasurement& measurement);

struct FusionContext {
  TrackMethod method = TrackMethod::kNone;
  BlockPartition partition = BlockPartition::single(1);
  BlockCheck check = BlockCheck::kStrict;
  ExchangeMode exchange = ExchangeMode::kSymmetric;
  /// Agent whose edges are logged; the logged omega weighs its estimate.
  std::size_t report_agent = 0;
  std::size_t run = 0;
  std::uint64_t sdp_seed = 0;
  std::size_t sdp_samples = 200;
  double sdp_tol = 1e-7;
  const std::vector<std::string>* labels = nullptr;
};

/// One pass over the edges. Omega values of edges touching the reporting
/// agent are appended to `omega_log`. Failures are rethrown as Error with
/// the edge and step in the message.
void fusion_round(std::vector<AgentBelief>& beliefs,
                  const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                  const FusionContext& context, std::size_t step,
                  std::vector<OmegaRecord>* omega_log);

/// Truth and measurements of one MC run; shared by all methods.
struct RunRealization {
  /// truth[k] is the state after step k (k = 0 .. n_steps - 1).
  std::vector<Vector> truth;
  Vector initial_truth;
  /// measurements[k][a].
  std::vector<std::vector<AgentMeasurement>> measurements;
};

RunRealization realize_run(const ScenarioConfig& config, std::size_t run);

struct MethodRun {
  TrackMethod method = TrackMethod::kNone;
  RunMetrics metrics;
  /// Reporting agent mean per step.
  std::vector<Vector> report_means;
  /// Reporting agent covariance diagonal per step.
  std::vector<Vector> report_variances;
};

/// Runs one method on a realization. For kCentralized the single filter
/// consumes all measurements and stands in for the reporting agent.
MethodRun run_method(const ScenarioConfig& config,
                     const RunRealization& realization, TrackMethod method,
                     std::size_t run);

/// Every agent belief at every step, for tests.
using BeliefTrace = std::vector<std::vector<AgentBelief>>;
MethodRun run_method_traced(const ScenarioConfig& config,
                            const RunRealization& realization,
                            TrackMethod method, std::size_t run,
                            BeliefTrace* trace);

struct TrackResult {
  ScenarioConfig config;
  /// runs[r][m] follows config.methods.
  std::vector<std::vector<MethodRun>> runs;
  std::vector<RunRealization> realizations;
  std::vector<McStatistics> statistics;
  std::size_t nees_dof = 0;
};

/// All runs, all methods, up to `jobs` concurrent runs.
TrackResult run_tracking(const ScenarioConfig& config, std::size_t jobs);

}  // namespace covfuse
