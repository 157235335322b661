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

#include "covfuse/eval.hpp"

#include "covfuse/errors.hpp"
#include "covfuse/fusion.hpp"
#include "covfuse/rng.hpp"
#include "covfuse/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace covfuse {

double nees(const Vector& mean, const Matrix& covariance, const Vector& truth) {
  if (mean.size() != truth.size() || covariance.rows() != mean.size() ||
      covariance.cols() != mean.size()) {
    throw DimensionError("nees: dimension mismatch");
  }
  Eigen::LLT<Matrix> llt(symmetrize(covariance));
  if (llt.info() != Eigen::Success) {
    throw NumericError("nees: covariance is singular");
  }
  const Vector e = mean - truth;
  return std::max(0.0, e.dot(llt.solve(e)));
}

double nees(const GaussianEstimate& estimate, const Vector& truth) {
  return nees(estimate.mean(), estimate.covariance(), truth);
}

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0)) throw InvalidArgument("regularized_gamma_p: a must be > 0");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  constexpr double kEps = 1e-16;
  constexpr int kMaxIter = 100000;
  const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
  if (x < a + 1.0) {
    // Series.
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * kEps) break;
    }
    return std::min(1.0, sum * std::exp(log_prefix));
  }
  // Continued fraction for Q(a, x) (modified Lentz).
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return std::max(0.0, 1.0 - std::exp(log_prefix) * h);
}

double chi2_quantile(double p, double dof) {
  if (!(dof > 0.0)) throw InvalidArgument("chi2_quantile: dof must be > 0");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InvalidArgument("chi2_quantile: p must lie in [0, 1]");
  }
  if (p == 0.0) return 0.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  const auto cdf = [dof](double x) {
    return regularized_gamma_p(0.5 * dof, 0.5 * x);
  };
  double lo = 0.0;
  double hi = std::max(1.0, dof);
  while (cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 300 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Chi2Band chi2_band(std::size_t dof, std::size_t runs, double level) {
  if (dof == 0 || runs == 0) {
    throw InvalidArgument("chi2_band: dof and runs must be >= 1");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("chi2_band: level must lie in (0, 1)");
  }
  const double k = static_cast<double>(dof * runs);
  const double r = static_cast<double>(runs);
  const double tail = 0.5 * (1.0 - level);
  return {chi2_quantile(tail, k) / r, chi2_quantile(1.0 - tail, k) / r};
}

double rmse(const std::vector<Vector>& estimates,
            const std::vector<Vector>& truths) {
  if (estimates.empty()) throw InvalidArgument("rmse: empty trajectory");
  if (estimates.size() != truths.size()) {
    throw DimensionError("rmse: trajectories have different lengths");
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < estimates.size(); ++k) {
    if (estimates[k].size() != truths[k].size()) {
      throw DimensionError("rmse: state size mismatch at step " +
                           std::to_string(k));
    }
    acc += (estimates[k] - truths[k]).squaredNorm();
  }
  return std::sqrt(acc / static_cast<double>(estimates.size()));
}

double two_sigma(const Vector& position_variances) {
  if (position_variances.size() == 0) {
    throw InvalidArgument("two_sigma: no variances");
  }
  return 2.0 * std::sqrt(position_variances.mean());
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("summarize: no values");
  std::sort(values.begin(), values.end());
  Summary s;
  const std::size_t n = values.size();
  s.median = (n % 2 == 1) ? values[n / 2]
                          : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  s.min = values.front();
  s.max = values.back();
  double acc = 0.0;
  for (double v : values) acc += v;
  s.mean = acc / static_cast<double>(n);
  return s;
}

void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first_error;
  std::size_t first_index = count;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < first_index) {
          first_index = i;
          first_error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

double spectral_norm_sym(const Matrix& m) {
  return sym_eigenvalues(m).cwiseAbs().maxCoeff();
}

}  // namespace

SweepResult conservativeness_sweep(const SweepConfig& config) {
  if (config.n_values.empty()) {
    throw InvalidArgument("sweep: n_values must not be empty");
  }
  if (config.mc_runs == 0) throw InvalidArgument("sweep: mc_runs must be >= 1");
  const std::size_t d = static_cast<std::size_t>(config.p_a.rows());
  if (config.partition.dim() != d || config.pattern.dim_a() != d ||
      config.pattern.dim_b() != d) {
    throw DimensionError("sweep: partition/pattern do not match marginals");
  }
  const GaussianEstimate a(Vector::Zero(config.p_a.rows()), config.p_a);
  const GaussianEstimate b(Vector::Zero(config.p_b.rows()), config.p_b);
  const FusionResult nm = nmci_fuse(a, b, config.partition);

  const std::size_t n_max =
      *std::max_element(config.n_values.begin(), config.n_values.end());
  const std::size_t nn = config.n_values.size();
  std::vector<SweepRecord> records(nn * config.mc_runs);

  parallel_for(config.mc_runs, config.jobs, [&](std::size_t run) {
    Rng sample_rng(derive_seed(config.seed, "sweep-samples", run));
    std::vector<Matrix> crosses;
    crosses.reserve(n_max);
    while (crosses.size() < n_max) {
      UncertaintySample s =
          sample_cross(config.p_a, config.p_b, config.pattern, sample_rng);
      if (well_conditioned_joint(
              assemble_joint(config.p_a, config.p_b, s.p_ab))) {
        crosses.push_back(std::move(s.p_ab));
      }
    }
    const UncertaintySample truth =
        sample_cross(config.p_a, config.p_b, config.pattern,
                     derive_seed(config.seed, "sweep-truth", run));
    const JointCovariance joint{config.p_a, config.p_b, truth.p_ab};
    const double mineig_nmci = conservativeness_margin(
        nm.bound, realized_cov(nm.gain_a, nm.gain_b, joint));

    for (std::size_t k = 0; k < nn; ++k) {
      const std::size_t n = config.n_values[k];
      const std::vector<Matrix> prefix(crosses.begin(),
                                       crosses.begin() +
                                           static_cast<std::ptrdiff_t>(n));
      const SampledFusionProblem prob =
          build_problem(config.p_a, config.p_b, prefix);
      const SdpSolution sol = solve(prob, config.solver);
      if (sol.status == SdpStatus::kInfeasibleNumerics) {
        throw NumericError("sweep: solver failed at n=" + std::to_string(n) +
                           ", run " + std::to_string(run));
      }
      SweepRecord& rec = records[k * config.mc_runs + run];
      rec.n = n;
      rec.run = run;
      rec.deviation = spectral_norm_sym(nm.bound - sol.bound);
      rec.mineig_nmci = mineig_nmci;
      rec.mineig_sdp = conservativeness_margin(
          sol.bound, realized_cov(sol.gain_a, sol.gain_b, joint));
      rec.objective = sol.objective;
      rec.status = sol.status;
      rec.iterations = sol.iterations;
    }
  });

  SweepResult out;
  out.nmci_bound = nm.bound;
  out.nmci_omega = *nm.omega;
  out.records = std::move(records);
  for (std::size_t k = 0; k < nn; ++k) {
    std::vector<double> dev;
    std::vector<double> me_nm;
    std::vector<double> me_sdp;
    SweepPoint pt;
    pt.n = config.n_values[k];
    for (std::size_t r = 0; r < config.mc_runs; ++r) {
      const SweepRecord& rec = out.records[k * config.mc_runs + r];
      dev.push_back(rec.deviation);
      me_nm.push_back(rec.mineig_nmci);
      me_sdp.push_back(rec.mineig_sdp);
      if (rec.status != SdpStatus::kOptimal) ++pt.non_optimal;
    }
    pt.deviation = summarize(std::move(dev));
    pt.mineig_nmci = summarize(std::move(me_nm));
    pt.mineig_sdp = summarize(std::move(me_sdp));
    out.points.push_back(pt);
  }
  return out;
}

McStatistics aggregate(std::string method, const std::vector<RunMetrics>& runs,
                       std::size_t dof, double level) {
  if (runs.empty()) throw InvalidArgument("aggregate: no runs");
  const std::size_t steps = runs.front().nees.size();
  if (steps == 0) throw InvalidArgument("aggregate: empty runs");
  for (const auto& r : runs) {
    if (r.nees.size() != steps || r.pos_sq_err.size() != steps ||
        r.pos_var.size() != steps || r.cov_trace.size() != steps) {
      throw DimensionError("aggregate: runs have different lengths");
    }
  }
  McStatistics s;
  s.method = std::move(method);
  s.dof = dof;
  s.runs = runs.size();
  s.chi2_bounds = chi2_band(dof, runs.size(), level);
  s.nees_series.assign(steps, 0.0);
  std::vector<double> trace_series(steps, 0.0);
  const double nr = static_cast<double>(runs.size());
  double rmse_acc = 0.0;
  double sigma_acc = 0.0;
  for (const auto& r : runs) {
    double sq = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      s.nees_series[k] += r.nees[k] / nr;
      trace_series[k] += r.cov_trace[k] / nr;
      sq += r.pos_sq_err[k];
      sigma_acc += 2.0 * std::sqrt(r.pos_var[k]);
    }
    rmse_acc += std::sqrt(sq / static_cast<double>(steps));
    s.omega_log.insert(s.omega_log.end(), r.omega_log.begin(),
                       r.omega_log.end());
  }
  s.rmse_mean = rmse_acc / nr;
  s.sigma2_mean = sigma_acc / (nr * static_cast<double>(steps));
  std::size_t inside = 0;
  for (double v : s.nees_series)
    if (s.chi2_bounds.contains(v)) ++inside;
  s.fraction_in_band = static_cast<double>(inside) / static_cast<double>(steps);
  const std::size_t first = steps - std::max<std::size_t>(1, steps / 4);
  double nees_acc = 0.0;
  double tr_acc = 0.0;
  for (std::size_t k = first; k < steps; ++k) {
    nees_acc += s.nees_series[k];
    tr_acc += trace_series[k];
  }
  s.nees_steady = nees_acc / static_cast<double>(steps - first);
  s.trace_steady = tr_acc / static_cast<double>(steps - first);
  return s;
}

}  // namespace covfuse
