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

#include "covfuse/sdp.hpp"

#include "covfuse/errors.hpp"
#include "covfuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace covfuse {

bool well_conditioned_joint(const Matrix& joint) {
  const Vector d = joint.diagonal();
  if ((d.array() <= 0.0).any()) return false;
  const Vector inv = d.cwiseSqrt().cwiseInverse();
  const Matrix corr = inv.asDiagonal() * joint * inv.asDiagonal();
  Eigen::LDLT<Matrix> ldlt(symmetrize(corr));
  if (ldlt.info() != Eigen::Success) return false;
  return ldlt.vectorD().minCoeff() >= kMinPivot;
}

SampledFusionProblem build_problem(const Matrix& p_a, const Matrix& p_b,
                                   const std::vector<Matrix>& crosses) {
  require_spd(p_a, "P_a");
  require_spd(p_b, "P_b");
  if (p_a.rows() != p_b.rows()) {
    throw DimensionError("build_problem: marginals differ in dimension");
  }
  if (crosses.empty()) {
    throw InvalidArgument("build_problem: at least one sample is required");
  }
  SampledFusionProblem prob;
  prob.p_a = symmetrize(p_a);
  prob.p_b = symmetrize(p_b);
  prob.crosses.reserve(crosses.size());
  prob.joints.reserve(crosses.size());
  prob.joint_inverses.reserve(crosses.size());
  for (std::size_t i = 0; i < crosses.size(); ++i) {
    const Matrix& c = crosses[i];
    if (c.rows() != p_a.rows() || c.cols() != p_b.rows()) {
      throw DimensionError("build_problem: sample " + std::to_string(i) +
                           " has the wrong shape");
    }
    Matrix joint = assemble_joint(prob.p_a, prob.p_b, c);
    if (!well_conditioned_joint(joint)) {
      throw NumericError("build_problem: sample " + std::to_string(i) +
                         " joint covariance is not (well-conditioned) PD");
    }
    Eigen::LDLT<Matrix> ldlt(joint);
    Matrix inv = symmetrize(
        ldlt.solve(Matrix::Identity(joint.rows(), joint.cols())));
    prob.crosses.push_back(c);
    prob.joints.push_back(std::move(joint));
    prob.joint_inverses.push_back(std::move(inv));
  }
  return prob;
}

SampledFusionProblem build_problem(
    const Matrix& p_a, const Matrix& p_b,
    const std::vector<UncertaintySample>& samples) {
  std::vector<Matrix> crosses;
  crosses.reserve(samples.size());
  for (const auto& s : samples) crosses.push_back(s.p_ab);
  return build_problem(p_a, p_b, crosses);
}

std::string_view to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::kOptimal:
      return "optimal";
    case SdpStatus::kMaxIterations:
      return "max_iterations";
    case SdpStatus::kInfeasibleNumerics:
      return "infeasible_numerics";
  }
  return "?";
}

Matrix lmi_matrix(const SampledFusionProblem& problem, std::size_t i,
                  const Matrix& gain_a, const Matrix& bound) {
  const auto d = static_cast<Eigen::Index>(problem.dim());
  Matrix k(d, 2 * d);
  k.leftCols(d) = gain_a;
  k.rightCols(d) = Matrix::Identity(d, d) - gain_a;
  Matrix m(3 * d, 3 * d);
  m.topLeftCorner(d, d) = bound;
  m.topRightCorner(d, 2 * d) = k;
  m.bottomLeftCorner(2 * d, d) = k.transpose();
  m.bottomRightCorner(2 * d, 2 * d) = problem.joint_inverses.at(i);
  return m;
}

double min_lmi_eigenvalue(const SampledFusionProblem& problem,
                          const Matrix& gain_a, const Matrix& bound) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < problem.size(); ++i)
    worst = std::min(worst,
                     min_eigenvalue(lmi_matrix(problem, i, gain_a, bound)));
  return worst;
}

double min_schur_eigenvalue(const SampledFusionProblem& problem,
                            const Matrix& gain_a, const Matrix& bound) {
  const auto d = static_cast<Eigen::Index>(problem.dim());
  const Matrix gain_b = Matrix::Identity(d, d) - gain_a;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const JointCovariance j{problem.p_a, problem.p_b, problem.crosses[i]};
    worst = std::min(worst,
                     min_eigenvalue(bound - realized_cov(gain_a, gain_b, j)));
  }
  return worst;
}

namespace {

// Barrier for one problem. Unknown vector x = [row-major Ka ; upper
// triangle of Pf]. For Ka = X the realized covariance of sample i is
//   R_i(X) = X V_i X^T + X W_i + W_i^T X^T + Pb,
//   V_i = Pa + Pb - C_i - C_i^T,  W_i = C_i - Pb,
// and S_i = Pf - R_i(X). Each coordinate direction perturbs S_i by a
// symmetric rank-2 matrix u v^T + v u^T:
//   Pf(p,q), p<q : u = e_p, v = e_q
//   Pf(p,p)      : u = e_p, v = e_p / 2
//   Ka(r,c)      : u = e_r, v = -N_i(c,:)^T,  N_i = V_i X^T + W_i
// With U = S^-1 this gives
//   grad_j   = -2 v_j^T U u_j
//   hess_jk  =  2 [(v_j U u_k)(u_j U v_k) + (v_j U v_k)(u_j U u_k)]
//             + 2 U(r,r') V(c,c')   for Ka(r,c), Ka(r',c').
class Barrier {
 public:
  explicit Barrier(const SampledFusionProblem& prob)
      : d_(static_cast<Eigen::Index>(prob.dim())),
        nk_(d_ * d_),
        m_(d_ * d_ + d_ * (d_ + 1) / 2),
        p_b_(prob.p_b) {
    v_.reserve(prob.size());
    w_.reserve(prob.size());
    for (const auto& c : prob.crosses) {
      v_.push_back(symmetrize(prob.p_a + prob.p_b - c - c.transpose()));
      w_.push_back(c - prob.p_b);
    }
    umat_ = Matrix::Zero(d_, m_);
    vconst_ = Matrix::Zero(d_, m_);
    cost_ = Vector::Zero(m_);
    for (Eigen::Index r = 0; r < d_; ++r)
      for (Eigen::Index c = 0; c < d_; ++c) umat_(r, r * d_ + c) = 1.0;
    Eigen::Index j = nk_;
    for (Eigen::Index p = 0; p < d_; ++p) {
      for (Eigen::Index q = p; q < d_; ++q, ++j) {
        umat_(p, j) = 1.0;
        vconst_(q, j) = (p == q) ? 0.5 : 1.0;
        if (p == q) cost_(j) = 1.0;
      }
    }
    logdet_.resize(prob.size());
    logdet_trial_.resize(prob.size());
  }

  Eigen::Index vars() const { return m_; }
  double barrier_parameter() const {
    return static_cast<double>(d_) * static_cast<double>(v_.size());
  }
  const Vector& cost() const { return cost_; }

  Vector pack(const Matrix& gain_a, const Matrix& bound) const {
    Vector x(m_);
    for (Eigen::Index r = 0; r < d_; ++r)
      for (Eigen::Index c = 0; c < d_; ++c) x(r * d_ + c) = gain_a(r, c);
    Eigen::Index j = nk_;
    for (Eigen::Index p = 0; p < d_; ++p)
      for (Eigen::Index q = p; q < d_; ++q, ++j) x(j) = bound(p, q);
    return x;
  }

  void unpack(const Vector& x, Matrix& gain_a, Matrix& bound) const {
    gain_a.resize(d_, d_);
    bound.resize(d_, d_);
    for (Eigen::Index r = 0; r < d_; ++r)
      for (Eigen::Index c = 0; c < d_; ++c) gain_a(r, c) = x(r * d_ + c);
    Eigen::Index j = nk_;
    for (Eigen::Index p = 0; p < d_; ++p) {
      for (Eigen::Index q = p; q < d_; ++q, ++j) {
        bound(p, q) = x(j);
        bound(q, p) = x(j);
      }
    }
  }

  // Fills logdet_trial_ with log det S_i(x); false if any S_i is not PD.
  bool evaluate(const Vector& x) {
    unpack(x, xa_, pf_);
    for (std::size_t i = 0; i < v_.size(); ++i) {
      schur(i);
      llt_.compute(s_);
      if (llt_.info() != Eigen::Success) return false;
      const auto diag = llt_.matrixLLT().diagonal();
      if ((diag.array() <= 0.0).any() || !diag.allFinite()) return false;
      logdet_trial_[i] = 2.0 * diag.array().log().sum();
    }
    return true;
  }

  void accept_trial() { logdet_.swap(logdet_trial_); }

  // F(trial) - F(current) for barrier weight t, after evaluate(trial).
  double delta(double t, const Vector& dx_scaled) const {
    double df = t * cost_.dot(dx_scaled);
    for (std::size_t i = 0; i < logdet_.size(); ++i)
      df -= logdet_trial_[i] - logdet_[i];
    return df;
  }

  // Barrier gradient and Hessian at x (barrier part only).
  bool derivatives(const Vector& x, Vector& grad, Matrix& hess) {
    unpack(x, xa_, pf_);
    grad.setZero(m_);
    hess.setZero(m_, m_);
    const Matrix eye = Matrix::Identity(d_, d_);
    for (std::size_t i = 0; i < v_.size(); ++i) {
      schur(i);
      llt_.compute(s_);
      if (llt_.info() != Eigen::Success) return false;
      u_.noalias() = llt_.solve(eye);
      u_ = symmetrize(u_);
      n_.noalias() = v_[i] * xa_.transpose();
      n_ += w_[i];
      vmat_ = vconst_;
      for (Eigen::Index r = 0; r < d_; ++r)
        for (Eigen::Index c = 0; c < d_; ++c)
          vmat_.col(r * d_ + c) = -n_.row(c).transpose();
      uu_.noalias() = u_ * umat_;
      uv_.noalias() = u_ * vmat_;
      gvu_.noalias() = vmat_.transpose() * uu_;
      gvv_.noalias() = vmat_.transpose() * uv_;
      guu_.noalias() = umat_.transpose() * uu_;
      grad -= 2.0 * gvu_.diagonal();
      hess.array() += 2.0 * (gvu_.array() * gvu_.transpose().array() +
                             gvv_.array() * guu_.array());
      const Matrix& v = v_[i];
      for (Eigen::Index r = 0; r < d_; ++r)
        for (Eigen::Index rr = 0; rr < d_; ++rr) {
          const double urr = 2.0 * u_(r, rr);
          hess.block(r * d_, rr * d_, d_, d_) += urr * v;
        }
    }
    return true;
  }

  std::vector<double>& logdet() { return logdet_; }

 private:
  void schur(std::size_t i) {
    // S = Pf - (X V X^T + X W + W^T X^T + Pb)
    xw_.noalias() = xa_ * w_[i];
    tmp_.noalias() = xa_ * v_[i];
    s_.noalias() = -tmp_ * xa_.transpose();
    s_ += pf_ - xw_ - xw_.transpose() - p_b_;
  }

  Eigen::Index d_;
  Eigen::Index nk_;
  Eigen::Index m_;
  Matrix p_b_;
  std::vector<Matrix> v_;
  std::vector<Matrix> w_;
  Matrix umat_;
  Matrix vconst_;
  Vector cost_;
  std::vector<double> logdet_;
  std::vector<double> logdet_trial_;
  // workspace
  Matrix xa_, pf_, s_, u_, n_, xw_, tmp_, vmat_, uu_, uv_, gvu_, gvv_, guu_;
  Eigen::LLT<Matrix> llt_;
};

constexpr double kCenterTol = 1e-9;  // Newton decrement^2 / 2
constexpr double kArmijo = 0.25;
constexpr double kBacktrack = 0.5;
constexpr double kMinStep = 1e-12;
// Below this decrement a full Newton step that fails the sufficient
// decrease test has hit the round-off floor of the barrier value.
constexpr double kRoundoffDec2 = 1e-4;

bool solve_newton(const Matrix& hess, const Vector& rhs, Vector& step) {
  Eigen::LDLT<Matrix> ldlt(hess);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    step = ldlt.solve(rhs);
    if (step.allFinite()) return true;
  }
  const double reg = 1e-12 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
  Matrix h = hess;
  h.diagonal().array() += reg;
  Eigen::LDLT<Matrix> retry(h);
  if (retry.info() != Eigen::Success) return false;
  step = retry.solve(rhs);
  return step.allFinite();
}

}  // namespace

SdpSolution solve(const SampledFusionProblem& problem,
                  const SdpOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("solve: tol must be > 0");
  if (!(options.mu_reduction > 0.0 && options.mu_reduction < 1.0)) {
    throw InvalidArgument("solve: mu_reduction must lie in (0, 1)");
  }
  if (problem.size() == 0) throw InvalidArgument("solve: empty problem");
  const auto d = static_cast<Eigen::Index>(problem.dim());
  Barrier barrier(problem);

  SdpSolution sol;
  Matrix gain_a = 0.5 * Matrix::Identity(d, d);
  Matrix bound = 2.0 * (problem.p_a + problem.p_b);
  Vector x = barrier.pack(gain_a, bound);
  int inflations = 0;
  while (!barrier.evaluate(x)) {
    // Strict feasibility of the start point holds analytically; numerical
    // round-off is absorbed by inflating the bound.
    if (++inflations > 60) {
      sol.status = SdpStatus::kInfeasibleNumerics;
      return sol;
    }
    bound *= 2.0;
    x = barrier.pack(gain_a, bound);
  }
  barrier.accept_trial();

  auto finish = [&](SdpStatus status, double gap) {
    barrier.unpack(x, sol.gain_a, sol.bound);
    sol.gain_b = Matrix::Identity(d, d) - sol.gain_a;
    sol.objective = sol.bound.trace();
    sol.status = status;
    sol.gap = gap;
    return sol;
  };

  const double nu = barrier.barrier_parameter();
  const Vector& c = barrier.cost();
  Vector grad;
  Matrix hess;
  Vector step;

  // Initial weight: best fit of t c + grad = 0 in the Newton metric.
  if (!barrier.derivatives(x, grad, hess)) {
    return finish(SdpStatus::kInfeasibleNumerics, HUGE_VAL);
  }
  double t = nu / std::max(c.dot(x), 1e-300);
  {
    Vector hc;
    Vector hg;
    if (solve_newton(hess, c, hc) && solve_newton(hess, grad, hg)) {
      const double fit = -c.dot(hg) / c.dot(hc);
      if (std::isfinite(fit) && fit > t * 1e-6) t = fit;
    }
  }

  std::size_t iters = 0;
  for (;;) {
    // Centering.
    for (;;) {
      if (!barrier.derivatives(x, grad, hess)) {
        return finish(SdpStatus::kInfeasibleNumerics, HUGE_VAL);
      }
      const Vector g = t * c + grad;
      if (!solve_newton(hess, -g, step)) {
        return finish(SdpStatus::kInfeasibleNumerics, HUGE_VAL);
      }
      const double dec2 = -g.dot(step);
      if (dec2 * 0.5 <= kCenterTol) break;
      if (iters >= options.max_iters) {
        return finish(SdpStatus::kMaxIterations,
                      nu / (t * std::max(c.dot(x), 1e-300)));
      }
      double s = 1.0;
      bool moved = false;
      while (s >= kMinStep) {
        const Vector trial = x + s * step;
        if (barrier.evaluate(trial) &&
            barrier.delta(t, s * step) <= -kArmijo * s * dec2) {
          x = trial;
          barrier.accept_trial();
          moved = true;
          break;
        }
        s *= kBacktrack;
      }
      ++iters;
      sol.iterations = iters;
      if (!moved) break;  // no further progress representable at this t
      if (s < 1.0 && dec2 <= kRoundoffDec2) break;
    }
    const double obj = std::max(c.dot(x), 1e-300);
    const double gap = nu / (t * obj);
    if (gap <= options.tol) return finish(SdpStatus::kOptimal, gap);
    if (iters >= options.max_iters) {
      return finish(SdpStatus::kMaxIterations, gap);
    }
    t /= options.mu_reduction;
  }
}

FusionResult robust_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                         const CrossSparsityPattern& pattern, std::size_t n,
                         std::uint64_t rng_seed, const SdpOptions& options,
                         SampledFusionProblem* problem_out) {
  if (a.dim() != b.dim()) throw DimensionError("robust_fuse: dimension mismatch");
  if (a.labels() != b.labels()) {
    throw InvalidArgument("robust_fuse: label order differs; reindex first");
  }
  if (n == 0) throw InvalidArgument("robust_fuse: n must be at least 1");
  Rng rng(rng_seed);
  std::vector<Matrix> crosses;
  crosses.reserve(n);
  while (crosses.size() < n) {
    UncertaintySample s =
        sample_cross(a.covariance(), b.covariance(), pattern, rng);
    if (well_conditioned_joint(
            assemble_joint(a.covariance(), b.covariance(), s.p_ab))) {
      crosses.push_back(std::move(s.p_ab));
    }
  }
  SampledFusionProblem prob =
      build_problem(a.covariance(), b.covariance(), crosses);
  const SdpSolution sol = solve(prob, options);
  if (sol.status == SdpStatus::kInfeasibleNumerics) {
    throw NumericError("robust_fuse: SDP solver failed (infeasible_numerics)");
  }
  FusionResult r;
  r.method = FusionMethod::kSdp;
  r.gain_a = sol.gain_a;
  r.gain_b = sol.gain_b;
  r.bound = sol.bound;
  r.fused_mean = sol.gain_a * a.mean() + sol.gain_b * b.mean();
  r.diagnostics.samples = n;
  r.diagnostics.seed = rng_seed;
  r.diagnostics.solver_status = std::string(to_string(sol.status));
  r.diagnostics.gap = sol.gap;
  r.diagnostics.iterations = sol.iterations;
  if (problem_out) *problem_out = std::move(prob);
  return r;
}

FusionResult robust_fuse(const GaussianEstimate& a, const GaussianEstimate& b,
                         const CrossSparsityPattern& pattern, std::size_t n,
                         std::uint64_t rng_seed, double tol) {
  SdpOptions options;
  options.tol = tol;
  return robust_fuse(a, b, pattern, n, rng_seed, options, nullptr);
}

FusionResult robust_fuse_blockwise(const GaussianEstimate& a,
                                   const GaussianEstimate& b,
                                   const BlockPartition& partition,
                                   std::size_t n, std::uint64_t rng_seed,
                                   const SdpOptions& options) {
  if (a.dim() != b.dim() || partition.dim() != a.dim()) {
    throw DimensionError("robust_fuse_blockwise: dimension mismatch");
  }
  const auto d = static_cast<Eigen::Index>(a.dim());
  FusionResult r;
  r.method = FusionMethod::kSdp;
  r.gain_a = Matrix::Zero(d, d);
  r.bound = Matrix::Zero(d, d);
  r.fused_mean = Vector::Zero(d);
  SdpStatus worst = SdpStatus::kOptimal;
  double gap = 0.0;
  std::size_t iterations = 0;
  for (std::size_t k = 0; k < partition.size(); ++k) {
    const auto& idx = partition.blocks()[k];
    const GaussianEstimate ak = a.marginal(idx);
    const GaussianEstimate bk = b.marginal(idx);
    const FusionResult rk = robust_fuse(
        ak, bk, CrossSparsityPattern::dense(idx.size(), idx.size()), n,
        derive_seed(rng_seed, "block", k), options, nullptr);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto gi = static_cast<Eigen::Index>(idx[i]);
      const auto li = static_cast<Eigen::Index>(i);
      r.fused_mean(gi) = rk.fused_mean(li);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        const auto gj = static_cast<Eigen::Index>(idx[j]);
        const auto lj = static_cast<Eigen::Index>(j);
        r.gain_a(gi, gj) = rk.gain_a(li, lj);
        r.bound(gi, gj) = rk.bound(li, lj);
      }
    }
    if (*rk.diagnostics.solver_status != "optimal") {
      worst = SdpStatus::kMaxIterations;
    }
    gap = std::max(gap, *rk.diagnostics.gap);
    iterations += *rk.diagnostics.iterations;
  }
  r.gain_b = Matrix::Identity(d, d) - r.gain_a;
  r.diagnostics.samples = n;
  r.diagnostics.seed = rng_seed;
  r.diagnostics.solver_status = std::string(to_string(worst));
  r.diagnostics.gap = gap;
  r.diagnostics.iterations = iterations;
  return r;
}

}  // namespace covfuse
