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

#include "covfuse/core.hpp"

#include "covfuse/errors.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

namespace covfuse {

std::vector<std::string> default_labels(std::size_t dim) {
  std::vector<std::string> out;
  out.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) out.push_back("s" + std::to_string(i));
  return out;
}

GaussianEstimate::GaussianEstimate(Vector mean, Matrix covariance,
                                   std::vector<std::string> labels)
    : mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      labels_(std::move(labels)) {
  if (labels_.empty()) labels_ = default_labels(dim());
  if (covariance_.rows() != mean_.size() ||
      covariance_.cols() != mean_.size() ||
      labels_.size() != static_cast<std::size_t>(mean_.size())) {
    throw DimensionError("estimate: mean, covariance and labels disagree");
  }
  if (mean_.size() == 0) throw DimensionError("estimate: empty state");
  if (!mean_.allFinite()) throw InvalidArgument("estimate: non-finite mean");
  std::unordered_set<std::string> unique(labels_.begin(), labels_.end());
  if (unique.size() != labels_.size()) {
    throw InvalidArgument("estimate: duplicate labels");
  }
  require_spd(covariance_, "estimate covariance");
  covariance_ = symmetrize(covariance_);
}

GaussianEstimate GaussianEstimate::reindexed(
    const std::vector<std::string>& order) const {
  if (order.size() != labels_.size()) {
    throw DimensionError("reindex: label count mismatch");
  }
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < labels_.size(); ++i) pos.emplace(labels_[i], i);
  std::vector<std::size_t> idx;
  idx.reserve(order.size());
  std::vector<bool> seen(labels_.size(), false);
  for (const auto& l : order) {
    auto it = pos.find(l);
    if (it == pos.end()) throw InvalidArgument("reindex: unknown label " + l);
    if (seen[it->second]) throw InvalidArgument("reindex: duplicate label " + l);
    seen[it->second] = true;
    idx.push_back(it->second);
  }
  return GaussianEstimate(select(mean_, idx), select(covariance_, idx, idx),
                          order);
}

GaussianEstimate GaussianEstimate::marginal(
    std::span<const std::size_t> idx) const {
  std::vector<std::string> labels;
  for (auto i : idx) labels.push_back(labels_.at(i));
  return GaussianEstimate(select(mean_, idx), select(covariance_, idx, idx),
                          std::move(labels));
}

BlockPartition::BlockPartition(std::vector<std::vector<std::size_t>> blocks,
                               std::size_t dim)
    : blocks_(std::move(blocks)), block_of_(dim, dim) {
  if (dim == 0) throw InvalidArgument("partition: zero dimension");
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    if (blocks_[b].empty()) throw InvalidArgument("partition: empty block");
    for (auto i : blocks_[b]) {
      if (i >= dim) {
        throw InvalidArgument("partition: index " + std::to_string(i) +
                              " out of range");
      }
      if (block_of_[i] != dim) {
        throw InvalidArgument("partition: index " + std::to_string(i) +
                              " appears in two blocks");
      }
      block_of_[i] = b;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    if (block_of_[i] == dim) {
      throw InvalidArgument("partition: index " + std::to_string(i) +
                            " not covered");
    }
  }
}

BlockPartition BlockPartition::single(std::size_t dim) {
  std::vector<std::size_t> all(dim);
  for (std::size_t i = 0; i < dim; ++i) all[i] = i;
  return BlockPartition({std::move(all)}, dim);
}

BlockPartition BlockPartition::singletons(std::size_t dim) {
  std::vector<std::vector<std::size_t>> blocks;
  for (std::size_t i = 0; i < dim; ++i) blocks.push_back({i});
  return BlockPartition(std::move(blocks), dim);
}

CrossSparsityPattern::CrossSparsityPattern(std::size_t dim_a,
                                           std::size_t dim_b,
                                           std::set<Index> zeros)
    : dim_a_(dim_a), dim_b_(dim_b), zeros_(std::move(zeros)) {
  for (const auto& [i, j] : zeros_) {
    if (i >= dim_a_ || j >= dim_b_) {
      throw InvalidArgument("sparsity pattern: index (" + std::to_string(i) +
                            "," + std::to_string(j) + ") out of range");
    }
  }
}

CrossSparsityPattern CrossSparsityPattern::dense(std::size_t dim_a,
                                                 std::size_t dim_b) {
  return CrossSparsityPattern(dim_a, dim_b);
}

CrossSparsityPattern CrossSparsityPattern::all_zero(std::size_t dim_a,
                                                    std::size_t dim_b) {
  std::set<Index> z;
  for (std::size_t i = 0; i < dim_a; ++i)
    for (std::size_t j = 0; j < dim_b; ++j) z.emplace(i, j);
  return CrossSparsityPattern(dim_a, dim_b, std::move(z));
}

std::vector<CrossSparsityPattern::Index> CrossSparsityPattern::free_entries()
    const {
  std::vector<Index> out;
  out.reserve(free_count());
  for (std::size_t i = 0; i < dim_a_; ++i)
    for (std::size_t j = 0; j < dim_b_; ++j)
      if (!is_zero(i, j)) out.emplace_back(i, j);
  return out;
}

bool JointCovariance::is_member(const CrossSparsityPattern& pattern,
                                double rel_margin) const {
  if (static_cast<std::size_t>(p_ab.rows()) != pattern.dim_a() ||
      static_cast<std::size_t>(p_ab.cols()) != pattern.dim_b()) {
    throw DimensionError("joint covariance and pattern shapes differ");
  }
  for (const auto& [i, j] : pattern.zeros()) {
    if (p_ab(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) !=
        0.0) {
      return false;
    }
  }
  const Vector ev = sym_eigenvalues(assembled());
  const double hi = ev.maxCoeff();
  return hi > 0.0 && ev.minCoeff() > rel_margin * hi;
}

std::string_view to_string(FusionMethod m) {
  switch (m) {
    case FusionMethod::kCI:
      return "ci";
    case FusionMethod::kNmCI:
      return "nmci";
    case FusionMethod::kSdp:
      return "sdp";
    case FusionMethod::kExact:
      return "exact";
  }
  return "?";
}

FusionMethod parse_fusion_method(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "ci") return FusionMethod::kCI;
  if (lower == "nmci") return FusionMethod::kNmCI;
  if (lower == "sdp") return FusionMethod::kSdp;
  if (lower == "exact") return FusionMethod::kExact;
  throw InvalidArgument("unknown fusion method '" + std::string(s) + "'");
}

double FusionResult::gain_sum_error() const {
  return (gain_a + gain_b - Matrix::Identity(gain_a.rows(), gain_a.cols()))
      .norm();
}

double conservativeness_margin(const Matrix& bound, const Matrix& actual) {
  if (bound.rows() != actual.rows() || bound.cols() != actual.cols()) {
    throw DimensionError("conservativeness: dimension mismatch");
  }
  require_symmetric(bound, "bound");
  require_symmetric(actual, "actual");
  return min_eigenvalue(symmetrize(bound - actual));
}

bool is_conservative(const Matrix& bound, const Matrix& actual, double tol) {
  return conservativeness_margin(bound, actual) >= -tol;
}

Correlation cov_to_corr(const Matrix& p) {
  require_symmetric(p, "covariance");
  const Vector d = p.diagonal();
  if ((d.array() <= 0.0).any()) {
    throw InvalidArgument("cov_to_corr: non-positive diagonal entry");
  }
  const Vector scales = d.array().sqrt();
  const Vector inv = scales.cwiseInverse();
  Matrix corr = inv.asDiagonal() * p * inv.asDiagonal();
  corr = symmetrize(corr);
  corr.diagonal().setOnes();
  return {std::move(corr), scales};
}

Matrix corr_to_cov(const Matrix& corr, const Vector& scales) {
  if (corr.rows() != scales.size() || corr.cols() != scales.size()) {
    throw DimensionError("corr_to_cov: dimension mismatch");
  }
  return scales.asDiagonal() * corr * scales.asDiagonal();
}

CrossSparsityPattern partition_to_sparsity(const BlockPartition& p) {
  const std::size_t d = p.dim();
  std::set<CrossSparsityPattern::Index> zeros;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      if (p.block_of(i) != p.block_of(j)) zeros.emplace(i, j);
  return CrossSparsityPattern(d, d, std::move(zeros));
}

}  // namespace covfuse
