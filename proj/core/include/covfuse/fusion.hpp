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

// Closed-form pairwise fusion rules.
//
//   ci_fuse      covariance intersection with one (monolithic) weight
//   nmci_fuse    covariance intersection per independent state block
//   exact_fuse   best linear unbiased fusion for a known cross-covariance;
//                evaluation oracle only
//   realized_cov true error covariance of a linear fusion rule

#pragma once

#include "covfuse/core.hpp"

#include <optional>

namespace covfuse {

/// Convergence tolerance (in omega) of the golden-section search.
inline constexpr double kOmegaTol = 1e-8;

/// f(omega) = trace((omega Pa^-1 + (1 - omega) Pb^-1)^-1).
///
/// The two information matrices are diagonalized simultaneously once, so
/// each evaluation is O(d).
class CiTraceObjective {
 public:
  CiTraceObjective(const Matrix& p_a, const Matrix& p_b);
  /// From the information matrices Pa^-1, Pb^-1 (not validated).
  static CiTraceObjective from_information(const Matrix& info_a,
                                           const Matrix& info_b);
  double operator()(double omega) const;
  /// Golden-section argmin with tie handling (see optimize_ci_omega).
  double argmin(double tol = kOmegaTol) const;

 private:
  CiTraceObjective() = default;
  void init(const Matrix& info_a, const Matrix& info_b);

  Vector lambda_;  // generalized eigenvalues of (Pa^-1, Pb^-1)
  Vector weight_;  // squared column norms of the eigenvector basis
};

/// Argmin over [0, 1] of CiTraceObjective. The objective is convex, so a
/// golden-section search is exact up to `tol`. Exact ties resolve to 0.5,
/// then to an endpoint.
double optimize_ci_omega(const Matrix& p_a, const Matrix& p_b,
                         double tol = kOmegaTol);

/// Covariance intersection. With `omega` unset the trace-optimal weight is
/// used. At omega in {0, 1} the surviving estimate is returned verbatim.
FusionResult ci_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                     std::optional<double> omega = std::nullopt);

enum class BlockCheck {
  /// Reject operands with cross-block covariance entries.
  kStrict,
  /// Zero cross-block entries of both operands before fusing and record the
  /// dropped mass in the diagnostics.
  kLenient,
};

/// Largest |P_ij| / sqrt(P_ii P_jj) accepted across blocks in strict mode.
inline constexpr double kBlockLeakTol = 1e-9;

/// Non-monolithic covariance intersection: an independently optimized
/// weight per block of `partition`; the bound is block diagonal.
FusionResult nmci_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                       const BlockPartition& partition,
                       BlockCheck mode = BlockCheck::kStrict);

/// Moment-level forms of ci_fuse / nmci_fuse. They skip the eigenvalue
/// validation performed by GaussianEstimate; callers guarantee SPD inputs of
/// equal dimension. Used by the simulator's inner loop.
FusionResult ci_fuse_moments(const Vector& mean_a, const Matrix& p_a,
                             const Vector& mean_b, const Matrix& p_b,
                             std::optional<double> omega = std::nullopt);
FusionResult nmci_fuse_moments(const Vector& mean_a, const Matrix& p_a,
                               const Vector& mean_b, const Matrix& p_b,
                               const BlockPartition& partition,
                               BlockCheck mode = BlockCheck::kStrict);

/// Minimum-trace unbiased fusion for a known cross-covariance p_ab; the
/// returned bound is the realized covariance. A singular innovation
/// covariance (duplicated information) is handled with a pseudo-inverse.
FusionResult exact_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                        const Matrix& p_ab);

/// Ka Pa Ka^T + Ka Pab Kb^T + Kb Pab^T Ka^T + Kb Pb Kb^T.
Matrix realized_cov(const Matrix& gain_a, const Matrix& gain_b,
                    const JointCovariance& joint);

/// Max over cross-block (i, j) of |P_ij| / sqrt(P_ii P_jj).
double max_block_leak(const Matrix& p, const BlockPartition& partition);

}  // namespace covfuse
