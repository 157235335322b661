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

// Domain types shared by every module: Gaussian estimates, independence
// partitions of the state, the sparsity pattern of an unknown
// cross-covariance, and the result of a pairwise fusion.

#pragma once

#include "covfuse/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace covfuse {

/// Mean and SPD covariance over an ordered list of labelled state
/// components. Immutable after construction; the constructor validates
/// every invariant.
class GaussianEstimate {
 public:
  /// Labels default to "s0", "s1", ... when empty.
  GaussianEstimate(Vector mean, Matrix covariance,
                   std::vector<std::string> labels = {});

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }

  /// The same estimate with components permuted into `order`. Every label
  /// in `order` must exist and `order` must be a permutation of labels().
  GaussianEstimate reindexed(const std::vector<std::string>& order) const;

  /// Marginal over the given component indices.
  GaussianEstimate marginal(std::span<const std::size_t> idx) const;

 private:
  Vector mean_;
  Matrix covariance_;
  std::vector<std::string> labels_;
};

/// Labels "s0".."s{d-1}".
std::vector<std::string> default_labels(std::size_t dim);

/// Disjoint, non-empty index blocks that exactly cover 0..dim-1. Each block
/// is a set of mutually dependent components; different blocks are
/// independent.
class BlockPartition {
 public:
  BlockPartition(std::vector<std::vector<std::size_t>> blocks,
                 std::size_t dim);

  static BlockPartition single(std::size_t dim);
  static BlockPartition singletons(std::size_t dim);

  const std::vector<std::vector<std::size_t>>& blocks() const {
    return blocks_;
  }
  std::size_t size() const { return blocks_.size(); }
  std::size_t dim() const { return block_of_.size(); }
  std::size_t block_of(std::size_t index) const { return block_of_.at(index); }

 private:
  std::vector<std::vector<std::size_t>> blocks_;
  std::vector<std::size_t> block_of_;
};

/// Known-zero entries of a dim_a x dim_b cross-covariance.
class CrossSparsityPattern {
 public:
  using Index = std::pair<std::size_t, std::size_t>;

  CrossSparsityPattern(std::size_t dim_a, std::size_t dim_b,
                       std::set<Index> zeros = {});

  /// No known zeros: correlation fully unknown.
  static CrossSparsityPattern dense(std::size_t dim_a, std::size_t dim_b);
  /// Every entry known to be zero: estimates are uncorrelated.
  static CrossSparsityPattern all_zero(std::size_t dim_a, std::size_t dim_b);

  std::size_t dim_a() const { return dim_a_; }
  std::size_t dim_b() const { return dim_b_; }
  const std::set<Index>& zeros() const { return zeros_; }
  bool is_zero(std::size_t i, std::size_t j) const {
    return zeros_.contains({i, j});
  }
  std::size_t free_count() const { return dim_a_ * dim_b_ - zeros_.size(); }

  /// Free (row, col) positions in row-major order.
  std::vector<Index> free_entries() const;

  bool operator==(const CrossSparsityPattern&) const = default;

 private:
  std::size_t dim_a_;
  std::size_t dim_b_;
  std::set<Index> zeros_;
};

/// Marginals plus a candidate cross term.
struct JointCovariance {
  Matrix p_a;
  Matrix p_b;
  Matrix p_ab;

  Matrix assembled() const { return assemble_joint(p_a, p_b, p_ab); }

  /// Positive definite (min eig > rel_margin * max eig) and exactly zero at
  /// every known-zero index.
  bool is_member(const CrossSparsityPattern& pattern,
                 double rel_margin = 0.0) const;
};

enum class FusionMethod { kCI, kNmCI, kSdp, kExact };

std::string_view to_string(FusionMethod m);
/// Accepts "ci", "nmci", "sdp", "exact" (case-insensitive).
FusionMethod parse_fusion_method(std::string_view s);

struct FusionDiagnostics {
  /// nmCI lenient mode: Frobenius norm of the cross-block entries that were
  /// zeroed in each operand before fusing.
  bool projected = false;
  double dropped_cross_norm = 0.0;
  /// SDP path.
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> solver_status;
  std::optional<double> gap;
  std::optional<std::size_t> iterations;
};

/// Output of a pairwise fusion: chi_f = gain_a chi_a + gain_b chi_b with
/// covariance bound `bound`.
struct FusionResult {
  Matrix gain_a;
  Matrix gain_b;
  Matrix bound;
  Vector fused_mean;
  std::optional<Vector> omega;
  FusionMethod method = FusionMethod::kCI;
  FusionDiagnostics diagnostics;

  /// ||gain_a + gain_b - I||_F.
  double gain_sum_error() const;
};

/// True iff min eig(bound - actual) >= -tol. The difference is symmetrized
/// before the eigen-decomposition.
bool is_conservative(const Matrix& bound, const Matrix& actual, double tol);

/// min eig of the symmetrized (bound - actual).
double conservativeness_margin(const Matrix& bound, const Matrix& actual);

struct Correlation {
  Matrix corr;
  Vector scales;
};

/// corr = D^{-1/2} P D^{-1/2}, scales = sqrt(diag(P)).
Correlation cov_to_corr(const Matrix& p);
/// diag(scales) corr diag(scales).
Matrix corr_to_cov(const Matrix& corr, const Vector& scales);

/// Zero entries implied by block independence: (i, j) is zero iff i and j
/// lie in different blocks.
CrossSparsityPattern partition_to_sparsity(const BlockPartition& p);

}  // namespace covfuse
