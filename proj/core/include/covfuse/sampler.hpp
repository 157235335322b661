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

// Rejection sampler over the set of admissible cross-covariances
//
//   U = { Pab : [[Pa, Pab], [Pab^T, Pb]] > 0, Pab_ij = 0 for known zeros }.
//
// Sampling happens in correlation space, where every free entry lies in
// [-1, 1]: each free entry of the correlation cross block is drawn uniformly
// from [-1, 1] and the proposal is accepted iff the joint correlation matrix
// is positive definite with margin kAcceptMargin.

#pragma once

#include "covfuse/core.hpp"
#include "covfuse/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace covfuse {

/// Minimum eigenvalue of the joint correlation matrix for acceptance.
inline constexpr double kAcceptMargin = 1e-9;
/// Proposals per sample before giving up.
inline constexpr std::size_t kRetryBudget = 1'000'000;

struct UncertaintySample {
  Matrix p_ab;
  /// Proposals consumed, including the accepted one.
  std::size_t attempts = 0;
};

/// Draws one admissible cross-covariance from `rng`.
UncertaintySample sample_cross(const Matrix& p_a, const Matrix& p_b,
                               const CrossSparsityPattern& pattern, Rng& rng);

/// Same, seeded from `rng_seed`.
UncertaintySample sample_cross(const Matrix& p_a, const Matrix& p_b,
                               const CrossSparsityPattern& pattern,
                               std::uint64_t rng_seed);

/// n independent samples from one stream seeded with `rng_seed`. The first
/// k samples of sample_set(..., n, s) equal sample_set(..., k, s) for k < n,
/// so growing n yields nested sample sets.
std::vector<UncertaintySample> sample_set(const Matrix& p_a, const Matrix& p_b,
                                          const CrossSparsityPattern& pattern,
                                          std::size_t n,
                                          std::uint64_t rng_seed);

}  // namespace covfuse
