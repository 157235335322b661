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

#include "covfuse/fusion.hpp"

#include "covfuse/errors.hpp"

#include <algorithm>
#include <cmath>

namespace covfuse {
namespace {

void require_compatible(const GaussianEstimate& a, const GaussianEstimate& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("fusion operands have different dimensions");
  }
  if (a.labels() != b.labels()) {
    throw InvalidArgument(
        "fusion operands have different label order; reindex first");
  }
}

// Relative tie tolerance for the omega search.
constexpr double kTieRel = 1e-11;

}  // namespace

CiTraceObjective::CiTraceObjective(const Matrix& p_a, const Matrix& p_b) {
  require_spd(p_a, "P_a");
  require_spd(p_b, "P_b");
  if (p_a.rows() != p_b.rows()) throw DimensionError("P_a and P_b differ");
  init(spd_inverse(p_a), spd_inverse(p_b));
}

CiTraceObjective CiTraceObjective::from_information(const Matrix& info_a,
                                                    const Matrix& info_b) {
  CiTraceObjective f;
  f.init(info_a, info_b);
  return f;
}

void CiTraceObjective::init(const Matrix& info_a, const Matrix& info_b) {
  // info_a V = info_b V diag(lambda), V^T info_b V = I, hence
  // (w info_a + (1-w) info_b)^-1 = V diag(1 / (1 + w (lambda - 1))) V^T.
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(info_a, info_b);
  if (ges.info() != Eigen::Success) {
    throw NumericError("simultaneous diagonalization failed");
  }
  lambda_ = ges.eigenvalues();
  weight_ = ges.eigenvectors().colwise().squaredNorm().transpose();
}

double CiTraceObjective::operator()(double omega) const {
  return (weight_.array() / (1.0 + omega * (lambda_.array() - 1.0))).sum();
}

double CiTraceObjective::argmin(double tol) const {
  if (!(tol > 0.0)) throw InvalidArgument("omega tolerance must be positive");
  const CiTraceObjective& f = *this;
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0;
  double hi = 1.0;
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  const double w_search = 0.5 * (lo + hi);
  const double f_search = f(w_search);
  const double f0 = f(0.0);
  const double f1_end = f(1.0);
  const double f_half = f(0.5);
  const double best = std::min({f_search, f0, f1_end});
  const double eps = kTieRel * std::max(1.0, std::abs(best));

  if (f_half <= best + eps) return 0.5;
  if (f0 <= best + eps && f0 <= f1_end) return 0.0;
  if (f1_end <= best + eps) return 1.0;
  return w_search;
}

double optimize_ci_omega(const Matrix& p_a, const Matrix& p_b, double tol) {
  return CiTraceObjective(p_a, p_b).argmin(tol);
}

FusionResult ci_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                     std::optional<double> omega) {
  require_compatible(a, b);
  return ci_fuse_moments(a.mean(), a.covariance(), b.mean(), b.covariance(),
                         omega);
}

FusionResult ci_fuse_moments(const Vector& mean_a, const Matrix& p_a,
                             const Vector& mean_b, const Matrix& p_b,
                             std::optional<double> omega) {
  const Eigen::Index d = p_a.rows();
  if (p_b.rows() != d || mean_a.size() != d || mean_b.size() != d) {
    throw DimensionError("CI: operand dimensions differ");
  }
  if (omega && !(*omega >= 0.0 && *omega <= 1.0)) {
    throw InvalidArgument("omega must lie in [0, 1]");
  }
  const Matrix eye = Matrix::Identity(d, d);
  Matrix info_a;
  Matrix info_b;
  double w = 0.0;
  if (omega) {
    w = *omega;
  } else {
    info_a = spd_inverse(p_a);
    info_b = spd_inverse(p_b);
    w = CiTraceObjective::from_information(info_a, info_b).argmin();
  }

  FusionResult r;
  r.method = FusionMethod::kCI;
  r.omega = Vector::Constant(1, w);
  if (w == 1.0) {
    r.gain_a = eye;
    r.gain_b = Matrix::Zero(d, d);
    r.bound = p_a;
    r.fused_mean = mean_a;
    return r;
  }
  if (w == 0.0) {
    r.gain_a = Matrix::Zero(d, d);
    r.gain_b = eye;
    r.bound = p_b;
    r.fused_mean = mean_b;
    return r;
  }
  if (info_a.size() == 0) {
    info_a = spd_inverse(p_a);
    info_b = spd_inverse(p_b);
  }
  const Matrix info = w * info_a + (1.0 - w) * info_b;
  Eigen::LLT<Matrix> llt(symmetrize(info));
  if (llt.info() != Eigen::Success) {
    throw NumericError("CI: combined information matrix is singular");
  }
  r.bound = symmetrize(llt.solve(eye));
  r.gain_a = r.bound * (w * info_a);
  r.gain_b = eye - r.gain_a;
  r.fused_mean = r.gain_a * mean_a + r.gain_b * mean_b;
  return r;
}

double max_block_leak(const Matrix& p, const BlockPartition& partition) {
  if (static_cast<std::size_t>(p.rows()) != partition.dim()) {
    throw DimensionError("partition does not match covariance dimension");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < p.cols(); ++j) {
      if (partition.block_of(static_cast<std::size_t>(i)) ==
          partition.block_of(static_cast<std::size_t>(j))) {
        continue;
      }
      const double scale = std::sqrt(p(i, i) * p(j, j));
      const double leak = std::max(std::abs(p(i, j)), std::abs(p(j, i)));
      if (leak == 0.0) continue;
      worst = std::max(worst, scale > 0.0 ? leak / scale : HUGE_VAL);
    }
  }
  return worst;
}

namespace {

double project_block_diagonal(Matrix& p, const BlockPartition& partition) {
  double dropped = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      if (partition.block_of(static_cast<std::size_t>(i)) !=
          partition.block_of(static_cast<std::size_t>(j))) {
        dropped += p(i, j) * p(i, j);
        p(i, j) = 0.0;
      }
    }
  }
  return std::sqrt(dropped);
}

}  // namespace

FusionResult nmci_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                       const BlockPartition& partition, BlockCheck mode) {
  require_compatible(a, b);
  return nmci_fuse_moments(a.mean(), a.covariance(), b.mean(), b.covariance(),
                           partition, mode);
}

FusionResult nmci_fuse_moments(const Vector& mean_a, const Matrix& p_a,
                               const Vector& mean_b, const Matrix& p_b,
                               const BlockPartition& partition,
                               BlockCheck mode) {
  const Eigen::Index d = p_a.rows();
  if (p_b.rows() != d || mean_a.size() != d || mean_b.size() != d) {
    throw DimensionError("nmCI: operand dimensions differ");
  }
  if (partition.dim() != static_cast<std::size_t>(d)) {
    throw DimensionError("partition does not match state dimension");
  }
  Matrix pa = p_a;
  Matrix pb = p_b;
  FusionDiagnostics diag;
  const double leak =
      std::max(max_block_leak(pa, partition), max_block_leak(pb, partition));
  if (leak > kBlockLeakTol && mode == BlockCheck::kStrict) {
    throw InvalidArgument(
        "nmCI: covariance is not block diagonal w.r.t. the partition "
        "(relative leak " + std::to_string(leak) + ")");
  }
  if (mode == BlockCheck::kLenient && leak > 0.0) {
    diag.projected = true;
    diag.dropped_cross_norm = project_block_diagonal(pa, partition) +
                              project_block_diagonal(pb, partition);
  }

  FusionResult r;
  r.method = FusionMethod::kNmCI;
  r.diagnostics = diag;
  r.gain_a = Matrix::Zero(d, d);
  r.bound = Matrix::Zero(d, d);
  r.fused_mean = Vector::Zero(d);
  Vector omega(static_cast<Eigen::Index>(partition.size()));

  for (std::size_t k = 0; k < partition.size(); ++k) {
    const auto& idx = partition.blocks()[k];
    const FusionResult block =
        ci_fuse_moments(select(mean_a, idx), select(pa, idx, idx),
                        select(mean_b, idx), select(pb, idx, idx));
    omega(static_cast<Eigen::Index>(k)) = (*block.omega)(0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto gi = static_cast<Eigen::Index>(idx[i]);
      const auto li = static_cast<Eigen::Index>(i);
      r.fused_mean(gi) = block.fused_mean(li);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto gj = static_cast<Eigen::Index>(idx[j]);
        const auto lj = static_cast<Eigen::Index>(j);
        r.bound(gi, gj) = block.bound(li, lj);
        r.gain_a(gi, gj) = block.gain_a(li, lj);
      }
    }
  }
  r.gain_b = Matrix::Identity(d, d) - r.gain_a;
  r.omega = std::move(omega);
  return r;
}

FusionResult exact_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                        const Matrix& p_ab) {
  require_compatible(a, b);
  const auto d = static_cast<Eigen::Index>(a.dim());
  if (p_ab.rows() != d || p_ab.cols() != d) {
    throw DimensionError("exact fusion: cross term has wrong shape");
  }
  const JointCovariance joint{a.covariance(), b.covariance(), p_ab};
  const Vector ev = sym_eigenvalues(joint.assembled());
  if (ev.minCoeff() < -1e-12 * std::max(1.0, ev.maxCoeff())) {
    throw InvalidArgument("exact fusion: joint covariance is not PSD");
  }
  // Kb = (Pa - Pab) V^+, V = Pa + Pb - Pab - Pab^T = cov(e_b - e_a).
  const Matrix v = symmetrize(a.covariance() + b.covariance() - p_ab -
                              p_ab.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(v);
  const Vector& lam = es.eigenvalues();
  const double cutoff =
      1e-12 * std::max(1.0, lam.cwiseAbs().maxCoeff()) * static_cast<double>(d);
  Vector inv_lam(d);
  for (Eigen::Index i = 0; i < d; ++i)
    inv_lam(i) = lam(i) > cutoff ? 1.0 / lam(i) : 0.0;
  const Matrix v_pinv =
      es.eigenvectors() * inv_lam.asDiagonal() * es.eigenvectors().transpose();

  FusionResult r;
  r.method = FusionMethod::kExact;
  r.gain_b = (a.covariance() - p_ab) * v_pinv;
  r.gain_a = Matrix::Identity(d, d) - r.gain_b;
  r.bound = realized_cov(r.gain_a, r.gain_b, joint);
  r.fused_mean = r.gain_a * a.mean() + r.gain_b * b.mean();
  return r;
}

Matrix realized_cov(const Matrix& gain_a, const Matrix& gain_b,
                    const JointCovariance& joint) {
  const Eigen::Index na = joint.p_a.rows();
  const Eigen::Index nb = joint.p_b.rows();
  if (joint.p_a.cols() != na || joint.p_b.cols() != nb ||
      joint.p_ab.rows() != na || joint.p_ab.cols() != nb ||
      gain_a.cols() != na || gain_b.cols() != nb ||
      gain_a.rows() != gain_b.rows()) {
    throw DimensionError("realized_cov: dimension mismatch");
  }
  const Matrix cross = gain_a * joint.p_ab * gain_b.transpose();
  const Matrix out = gain_a * joint.p_a * gain_a.transpose() + cross +
                     cross.transpose() +
                     gain_b * joint.p_b * gain_b.transpose();
  return symmetrize(out);
}

}  // namespace covfuse
