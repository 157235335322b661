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

// Sampled robust fusion as a semidefinite program.
//
// Given marginals Pa, Pb and sampled joints P'_1..P'_n, find gains
// K = [Ka, Kb] with Ka + Kb = I and a bound Pf minimizing trace(Pf) s.t.
//
//     [[ Pf , K       ],
//      [ K^T, P'_i^-1 ]]  >= 0        for every sample i.
//
// Kb = I - Ka is substituted, so the unknowns are Ka (d*d entries) and the
// upper triangle of Pf. The embedded solver is a primal log-barrier
// path-following method. Because det of the LMI block equals
// det(P'_i^-1) * det(Pf - K P'_i K^T), the barrier is evaluated on the d x d
// Schur complement S_i = Pf - K P'_i K^T, whose gradient and Hessian have
// closed forms in Ka; each sample costs O(m^2 d) per Newton step with
// m = d^2 + d(d+1)/2 unknowns, and the n LMIs are never stacked.

#pragma once

#include "covfuse/core.hpp"
#include "covfuse/sampler.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace covfuse {

struct SampledFusionProblem {
  Matrix p_a;
  Matrix p_b;
  /// Cross terms of the samples.
  std::vector<Matrix> crosses;
  /// Assembled joints P'_i (2d x 2d) and their inverses.
  std::vector<Matrix> joints;
  std::vector<Matrix> joint_inverses;

  std::size_t dim() const { return static_cast<std::size_t>(p_a.rows()); }
  std::size_t size() const { return joints.size(); }
  std::size_t lmi_size() const { return 3 * dim(); }
};

/// Smallest LDL^T pivot (of the correlation-scaled joint) accepted when
/// inverting a sample.
inline constexpr double kMinPivot = 1e-10;

/// False when the correlation-scaled joint has an LDL^T pivot below
/// kMinPivot.
bool well_conditioned_joint(const Matrix& joint);

SampledFusionProblem build_problem(const Matrix& p_a, const Matrix& p_b,
                                   const std::vector<Matrix>& crosses);
SampledFusionProblem build_problem(const Matrix& p_a, const Matrix& p_b,
                                   const std::vector<UncertaintySample>& samples);

enum class SdpStatus { kOptimal, kMaxIterations, kInfeasibleNumerics };

std::string_view to_string(SdpStatus s);

struct SdpOptions {
  /// Relative optimality gap (barrier certificate n*d / (t * objective)).
  double tol = 1e-7;
  /// Newton steps over all centering phases.
  std::size_t max_iters = 200;
  /// Barrier weight multiplier per outer step is 1 / mu_reduction.
  double mu_reduction = 0.2;
};

struct SdpSolution {
  Matrix gain_a;
  Matrix gain_b;
  Matrix bound;
  double objective = 0.0;
  SdpStatus status = SdpStatus::kInfeasibleNumerics;
  double gap = 0.0;
  std::size_t iterations = 0;
};

SdpSolution solve(const SampledFusionProblem& problem,
                  const SdpOptions& options = {});

/// The (3d x 3d) constraint matrix of sample i at (gain_a, bound).
Matrix lmi_matrix(const SampledFusionProblem& problem, std::size_t i,
                  const Matrix& gain_a, const Matrix& bound);

/// min over samples of the min eigenvalue of lmi_matrix.
double min_lmi_eigenvalue(const SampledFusionProblem& problem,
                          const Matrix& gain_a, const Matrix& bound);

/// min over samples of min eig(bound - K P'_i K^T).
double min_schur_eigenvalue(const SampledFusionProblem& problem,
                            const Matrix& gain_a, const Matrix& bound);

/// sample -> build -> solve. Samples whose joint fails
/// well_conditioned_joint are redrawn from the same stream. Throws
/// NumericError when the solver reports infeasible numerics.
FusionResult robust_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                         const CrossSparsityPattern& pattern, std::size_t n,
                         std::uint64_t rng_seed, double tol = 1e-7);

/// Same with full solver options and the solution returned alongside.
FusionResult robust_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                         const CrossSparsityPattern& pattern, std::size_t n,
                         std::uint64_t rng_seed, const SdpOptions& options,
                         SampledFusionProblem* problem_out);

/// Robust fusion of independent blocks. With block-diagonal marginals and a
/// cross pattern that is zero across blocks, the problem is invariant under
/// flipping the sign of any block, so block-diagonal gains are optimal and
/// each block is sampled and solved on its own (dense pattern inside the
/// block, seed derived from `rng_seed` and the block index). The sampler
/// then needs per-block rather than joint acceptance.
FusionResult robust_fuse_blockwise(const GaussianEstimate& a,
                                   const GaussianEstimate& b,
                                   const BlockPartition& partition,
                                   std::size_t n, std::uint64_t rng_seed,
                                   const SdpOptions& options = {});

}  // namespace covfuse
