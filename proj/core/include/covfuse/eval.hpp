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

// Estimator-quality metrics and Monte Carlo aggregation.

#pragma once

#include "covfuse/core.hpp"
#include "covfuse/sdp.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace covfuse {

/// e^T P^-1 e with e = mean - truth.
double nees(const GaussianEstimate& estimate, const Vector& truth);
double nees(const Vector& mean, const Matrix& covariance, const Vector& truth);

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Quantile of the chi-square distribution with `dof` degrees of freedom.
double chi2_quantile(double p, double dof);

struct Chi2Band {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return v >= lower && v <= upper; }
};

/// Two-sided `level` interval of chi2(runs * dof) / runs, the distribution
/// of the run-averaged NEES of a consistent estimator.
Chi2Band chi2_band(std::size_t dof, std::size_t runs, double level);

/// sqrt of the mean over steps of ||estimate_k - truth_k||^2.
double rmse(const std::vector<Vector>& estimates,
            const std::vector<Vector>& truths);

/// "Average 2-sigma" of one step: 2 sqrt(mean of the position variances).
double two_sigma(const Vector& position_variances);

struct Summary {
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

Summary summarize(std::vector<double> values);

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Exceptions
/// are rethrown (the one with the lowest index wins).
void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// Bound-deviation / conservativeness sweep over sample-set cardinalities.

struct SweepConfig {
  Matrix p_a;
  Matrix p_b;
  /// Independence structure used by nmCI.
  BlockPartition partition = BlockPartition::single(1);
  /// Known zeros used by the sampler and the SDP.
  CrossSparsityPattern pattern = CrossSparsityPattern::dense(1, 1);
  std::vector<std::size_t> n_values;
  std::size_t mc_runs = 100;
  std::uint64_t seed = 1;
  SdpOptions solver;
  std::size_t jobs = 1;
};

struct SweepRecord {
  std::size_t n = 0;
  std::size_t run = 0;
  /// ||P_nmCI - P_opt||_2.
  double deviation = 0.0;
  /// min eig(bound - realized) under the run's true cross-covariance.
  double mineig_nmci = 0.0;
  double mineig_sdp = 0.0;
  double objective = 0.0;
  SdpStatus status = SdpStatus::kOptimal;
  std::size_t iterations = 0;
};

struct SweepPoint {
  std::size_t n = 0;
  Summary deviation;
  Summary mineig_nmci;
  Summary mineig_sdp;
  std::size_t non_optimal = 0;
};

struct SweepResult {
  Matrix nmci_bound;
  Vector nmci_omega;
  std::vector<SweepPoint> points;
  /// Ordered by (n, run).
  std::vector<SweepRecord> records;
};

/// For every MC run r: draws one nested sample stream and one true
/// cross-covariance (both from sub-streams of `seed` indexed by r), solves
/// the sampled problem for every n on prefixes of that stream, and compares
/// against nmCI under the true cross-covariance.
SweepResult conservativeness_sweep(const SweepConfig& config);

// ---------------------------------------------------------------------------
// Tracking Monte Carlo aggregation.

struct OmegaRecord {
  std::size_t run = 0;
  std::size_t step = 0;
  std::size_t agent_a = 0;
  std::size_t agent_b = 0;
  std::size_t block = 0;
  double omega = 0.0;
};

/// Per-step metrics of one run of one method, for the reporting agent.
struct RunMetrics {
  std::vector<double> nees;
  /// ||position error||^2 averaged over targets.
  std::vector<double> pos_sq_err;
  /// Mean of the position-coordinate variances.
  std::vector<double> pos_var;
  /// Trace of the reporting agent's covariance over the target states.
  std::vector<double> cov_trace;
  std::vector<OmegaRecord> omega_log;
};

struct McStatistics {
  std::string method;
  std::size_t dof = 0;
  std::size_t runs = 0;
  std::vector<double> nees_series;
  Chi2Band chi2_bounds;
  double fraction_in_band = 0.0;
  double nees_steady = 0.0;
  double trace_steady = 0.0;
  double rmse_mean = 0.0;
  double sigma2_mean = 0.0;
  std::vector<OmegaRecord> omega_log;
};

/// Steady state is the last quarter of the steps.
McStatistics aggregate(std::string method, const std::vector<RunMetrics>& runs,
                       std::size_t dof, double level = 0.95);

}  // namespace covfuse
