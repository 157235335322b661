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

#include "covfuse/sampler.hpp"

#include "covfuse/errors.hpp"

#include <string>

namespace covfuse {
namespace {

struct Prepared {
  Matrix corr_a;
  Matrix corr_b;
  Vector scale_a;
  Vector scale_b;
  std::vector<CrossSparsityPattern::Index> free;
};

Prepared prepare(const Matrix& p_a, const Matrix& p_b,
                 const CrossSparsityPattern& pattern) {
  require_spd(p_a, "P_a");
  require_spd(p_b, "P_b");
  if (static_cast<std::size_t>(p_a.rows()) != pattern.dim_a() ||
      static_cast<std::size_t>(p_b.rows()) != pattern.dim_b()) {
    throw DimensionError("sampler: pattern does not match marginals");
  }
  auto ca = cov_to_corr(p_a);
  auto cb = cov_to_corr(p_b);
  return {std::move(ca.corr), std::move(cb.corr), std::move(ca.scales),
          std::move(cb.scales), pattern.free_entries()};
}

UncertaintySample draw(const Prepared& p, Rng& rng) {
  const Eigen::Index na = p.corr_a.rows();
  const Eigen::Index nb = p.corr_b.rows();
  if (p.free.empty()) return {Matrix::Zero(na, nb), 1};

  // joint - margin * I is factored first; Cholesky fails fast on the
  // (typical) rejected proposal, the eigen check confirms acceptances.
  Matrix joint = assemble_joint(p.corr_a, p.corr_b, Matrix::Zero(na, nb));
  joint.diagonal().array() -= kAcceptMargin;
  Matrix c_ab = Matrix::Zero(na, nb);
  Eigen::LLT<Matrix> llt(na + nb);
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  for (std::size_t attempt = 1; attempt <= kRetryBudget; ++attempt) {
    for (const auto& [i, j] : p.free) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(j);
      const double v = rng.uniform(-1.0, 1.0);
      c_ab(r, c) = v;
      joint(r, na + c) = v;
      joint(na + c, r) = v;
    }
    llt.compute(joint);
    if (llt.info() != Eigen::Success) continue;
    es.compute(joint, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) > 0.0) {
      return {p.scale_a.asDiagonal() * c_ab * p.scale_b.asDiagonal(), attempt};
    }
  }
  throw NumericError(
      "sampler: retry budget of " + std::to_string(kRetryBudget) +
      " proposals exhausted (" + std::to_string(p.free.size()) +
      " free entries; marginals may be near-degenerate)");
}

}  // namespace

UncertaintySample sample_cross(const Matrix& p_a, const Matrix& p_b,
                               const CrossSparsityPattern& pattern, Rng& rng) {
  return draw(prepare(p_a, p_b, pattern), rng);
}

UncertaintySample sample_cross(const Matrix& p_a, const Matrix& p_b,
                               const CrossSparsityPattern& pattern,
                               std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return sample_cross(p_a, p_b, pattern, rng);
}

std::vector<UncertaintySample> sample_set(const Matrix& p_a, const Matrix& p_b,
                                          const CrossSparsityPattern& pattern,
                                          std::size_t n,
                                          std::uint64_t rng_seed) {
  if (n == 0) throw InvalidArgument("sample_set: n must be at least 1");
  const Prepared p = prepare(p_a, p_b, pattern);
  Rng rng(rng_seed);
  std::vector<UncertaintySample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(draw(p, rng));
  return out;
}

}  // namespace covfuse
