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
#include "test_util.hpp"

#include <gtest/gtest.h>

namespace covfuse {
namespace {

using testing::diag;
using testing::oracle_min_eig;
using testing::random_spd;

TEST(GaussianEstimate, ValidatesInvariants) {
  EXPECT_NO_THROW(GaussianEstimate(Vector::Zero(2), Matrix::Identity(2, 2)));
  EXPECT_THROW(GaussianEstimate(Vector::Zero(3), Matrix::Identity(2, 2)),
               DimensionError);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.1;
  EXPECT_THROW(GaussianEstimate(Vector::Zero(2), asym), InvalidArgument);
  EXPECT_THROW(GaussianEstimate(Vector::Zero(2), diag({1.0, -1.0})),
               InvalidArgument);
  EXPECT_THROW(GaussianEstimate(Vector::Zero(2), diag({1.0, 1e-14})),
               InvalidArgument);
  EXPECT_THROW(GaussianEstimate(Vector::Zero(2), Matrix::Identity(2, 2),
                                {"x"}),
               DimensionError);
  EXPECT_THROW(GaussianEstimate(Vector::Zero(2), Matrix::Identity(2, 2),
                                {"x", "x"}),
               InvalidArgument);
}

TEST(GaussianEstimate, AcceptsRoundOffAsymmetry) {
  Matrix p = diag({2.0, 3.0});
  p(0, 1) = 1e-13;
  const GaussianEstimate e(Vector::Zero(2), p);
  EXPECT_EQ(e.covariance()(0, 1), e.covariance()(1, 0));
}

TEST(GaussianEstimate, ReindexPermutesConsistently) {
  Matrix p(3, 3);
  p << 4, 1, 0.5, 1, 3, 0.2, 0.5, 0.2, 2;
  Vector m(3);
  m << 1, 2, 3;
  const GaussianEstimate e(m, p, {"a", "b", "c"});
  const GaussianEstimate r = e.reindexed({"c", "a", "b"});
  EXPECT_EQ(r.labels(), (std::vector<std::string>{"c", "a", "b"}));
  EXPECT_DOUBLE_EQ(r.mean()(0), 3.0);
  EXPECT_DOUBLE_EQ(r.covariance()(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(r.covariance()(1, 2), 1.0);
  EXPECT_THROW(e.reindexed({"a", "b", "z"}), InvalidArgument);
  EXPECT_THROW(e.reindexed({"a", "b"}), DimensionError);
}

TEST(BlockPartition, RejectsInvalid) {
  EXPECT_THROW(BlockPartition({{0}, {0, 1}}, 2), InvalidArgument);
  EXPECT_THROW(BlockPartition({{0}}, 2), InvalidArgument);
  EXPECT_THROW(BlockPartition({{0}, {}}, 1), InvalidArgument);
  EXPECT_THROW(BlockPartition({{0, 5}}, 2), InvalidArgument);
  const BlockPartition p({{2, 0}, {1}}, 3);
  EXPECT_EQ(p.block_of(0), 0u);
  EXPECT_EQ(p.block_of(1), 1u);
  EXPECT_EQ(p.block_of(2), 0u);
}

TEST(IsConservative, Examples) {
  EXPECT_TRUE(is_conservative(diag({2, 2}), diag({1, 1}), 0.0));
  EXPECT_TRUE(is_conservative(Matrix::Identity(2, 2),
                              Matrix::Identity(2, 2), 0.0));
  EXPECT_FALSE(is_conservative(diag({1, 1}), diag({3, 1}), 0.0));
  EXPECT_NEAR(conservativeness_margin(diag({1, 1}), diag({3, 1})), -2.0,
              1e-12);
  EXPECT_TRUE(is_conservative(diag({1, 1}), diag({3, 1}), 2.0));
}

TEST(IsConservative, Errors) {
  EXPECT_THROW(is_conservative(Matrix::Identity(2, 2),
                               Matrix::Identity(3, 3), 0.0),
               DimensionError);
  Matrix asym = Matrix::Identity(2, 2);
  asym(1, 0) = 0.5;
  EXPECT_THROW(is_conservative(Matrix::Identity(2, 2), asym, 0.0),
               InvalidArgument);
}

TEST(IsConservative, MatchesEigensolverOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + trial % 5;
    const Matrix a = random_spd(rng, d);
    const Matrix b = random_spd(rng, d);
    const double oracle = oracle_min_eig(a - b);
    EXPECT_NEAR(conservativeness_margin(a, b), oracle, 1e-9);
    if (std::abs(oracle) > 1e-8) {
      EXPECT_EQ(is_conservative(a, b, 0.0), oracle >= 0.0);
    }
  }
}

TEST(IsConservative, AntisymmetryOfPsdOrder) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + trial % 4;
    const Matrix a = random_spd(rng, d);
    Matrix b = random_spd(rng, d);
    if (trial % 3 == 0) b = a;
    if (is_conservative(a, b, 0.0) && is_conservative(b, a, 0.0)) {
      EXPECT_LE((a - b).norm(), 1e-9);
    }
  }
}

TEST(CovToCorr, Examples) {
  const Correlation c1 = cov_to_corr(diag({4, 9}));
  EXPECT_TRUE(c1.corr.isApprox(Matrix::Identity(2, 2)));
  EXPECT_DOUBLE_EQ(c1.scales(0), 2.0);
  EXPECT_DOUBLE_EQ(c1.scales(1), 3.0);

  const Correlation c2 = cov_to_corr(Matrix::Identity(3, 3));
  EXPECT_TRUE(c2.corr.isApprox(Matrix::Identity(3, 3)));
  EXPECT_TRUE(c2.scales.isApprox(Vector::Ones(3)));

  Matrix p(2, 2);
  p << 4, 2, 2, 4;
  const Correlation c3 = cov_to_corr(p);
  EXPECT_DOUBLE_EQ(c3.corr(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(c3.corr(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(c3.scales(0), 2.0);

  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = 0.0;
  EXPECT_THROW(cov_to_corr(bad), InvalidArgument);
}

TEST(CovToCorr, RoundTripProperty) {
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 1 + trial % 8;
    const Matrix p = random_spd(rng, d, 1e-3, 1e3);
    const Correlation c = cov_to_corr(p);
    EXPECT_TRUE(c.corr.diagonal().isApprox(Vector::Ones(c.corr.rows())));
    const Matrix back = corr_to_cov(c.corr, c.scales);
    EXPECT_LE((back - p).norm() / p.norm(), 1e-12);
  }
}

TEST(PartitionToSparsity, Examples) {
  const auto z1 = partition_to_sparsity(BlockPartition::singletons(2));
  EXPECT_EQ(z1.zeros(), (std::set<CrossSparsityPattern::Index>{{0, 1},
                                                                {1, 0}}));
  EXPECT_TRUE(partition_to_sparsity(BlockPartition::single(2)).zeros().empty());
  const auto z3 = partition_to_sparsity(BlockPartition({{0, 1}, {2}}, 3));
  EXPECT_EQ(z3.zeros(), (std::set<CrossSparsityPattern::Index>{
                            {0, 2}, {1, 2}, {2, 0}, {2, 1}}));
}

TEST(PartitionToSparsity, SizeProperty) {
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + trial % 9;
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t k = static_cast<std::size_t>(
          rng.uniform() * static_cast<double>(blocks.size() + 1));
      if (k == blocks.size()) blocks.emplace_back();
      blocks[k].push_back(i);
    }
    const BlockPartition p(blocks, d);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      for (std::size_t j = i + 1; j < blocks.size(); ++j) {
        expected += 2 * blocks[i].size() * blocks[j].size();
      }
    }
    const CrossSparsityPattern z = partition_to_sparsity(p);
    EXPECT_EQ(z.zeros().size(), expected);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        EXPECT_EQ(z.is_zero(i, j), p.block_of(i) != p.block_of(j));
      }
    }
  }
}

TEST(CrossSparsityPattern, RangeAndFreeEntries) {
  EXPECT_THROW(CrossSparsityPattern(2, 2, {{2, 0}}), InvalidArgument);
  const CrossSparsityPattern p(2, 3, {{0, 1}, {1, 2}});
  EXPECT_EQ(p.free_count(), 4u);
  const auto free = p.free_entries();
  ASSERT_EQ(free.size(), 4u);
  EXPECT_EQ(free[0], (CrossSparsityPattern::Index{0, 0}));
  EXPECT_EQ(free[1], (CrossSparsityPattern::Index{0, 2}));
  EXPECT_EQ(CrossSparsityPattern::all_zero(2, 2).free_count(), 0u);
  EXPECT_EQ(CrossSparsityPattern::dense(2, 2).zeros().size(), 0u);
}

TEST(JointCovariance, Membership) {
  const CrossSparsityPattern diag_pattern =
      partition_to_sparsity(BlockPartition::singletons(2));
  JointCovariance j{diag({3, 1}), diag({1, 4}), diag({1, 1})};
  EXPECT_TRUE(j.is_member(diag_pattern));
  j.p_ab(0, 1) = 0.1;
  EXPECT_FALSE(j.is_member(diag_pattern));
  JointCovariance big{diag({3, 1}), diag({1, 4}), diag({2, 0})};
  EXPECT_FALSE(big.is_member(diag_pattern));
  EXPECT_TRUE(j.assembled().isApprox(j.assembled().transpose()));
}

TEST(FusionMethod, ParseRoundTrip) {
  for (FusionMethod m : {FusionMethod::kCI, FusionMethod::kNmCI,
                         FusionMethod::kSdp, FusionMethod::kExact}) {
    EXPECT_EQ(parse_fusion_method(to_string(m)), m);
  }
  EXPECT_EQ(parse_fusion_method("nmci"), FusionMethod::kNmCI);
  EXPECT_THROW(parse_fusion_method("ici"), InvalidArgument);
}

}  // namespace
}  // namespace covfuse
