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


// Acceptance suite: one PASS/FAIL line per criterion. The exit status is
// zero when every failing line is a documented known deviation.

#include "commands.hpp"
#include "covfuse/errors.hpp"
#include "covfuse/eval.hpp"
#include "covfuse/fusion.hpp"
#include "covfuse/io.hpp"
#include "covfuse/sampler.hpp"
#include "covfuse/sdp.hpp"
#include "covfuse/sim.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace covfuse;
using covfuse::testing::diag;
using covfuse::testing::random_spd;
namespace fs = std::filesystem;

// Criterion ids whose failure is analysed in the decisions ledger and the
// README. Monolithic CI is over-conservative on the desk scenario.
const std::set<std::string> kKnownDeviations = {"5a-ci"};

struct Line {
  std::string id;
  bool pass;
  std::string detail;
};

std::vector<Line> g_lines;

void report(const std::string& id, bool pass, const std::string& detail) {
  g_lines.push_back({id, pass, detail});
  std::cout << (pass ? "PASS " : "FAIL ") << id << "  " << detail;
  if (!pass && kKnownDeviations.count(id)) std::cout << "  [known deviation]";
  std::cout << std::endl;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

GaussianEstimate est(const Matrix& p) {
  return GaussianEstimate(Vector::Zero(p.rows()), p);
}

void criterion1() {
  Timer timer;
  const FusionResult r = nmci_fuse(est(diag({3, 1})), est(diag({1, 4})),
                                   BlockPartition::singletons(2));
  const double bound_err = (r.bound - diag({1, 1})).cwiseAbs().maxCoeff();
  const double omega_err = std::max(std::abs((*r.omega)(0) - 0.0),
                                    std::abs((*r.omega)(1) - 1.0));
  report("1", bound_err <= 1e-6 && omega_err <= 1e-6,
         "nmCI bound error " + fmt(bound_err) + ", omega error " +
             fmt(omega_err) + ", " + fmt(timer.seconds() * 1e3) + " ms");
}

void criteria2and3() {
  Timer timer;
  SweepConfig c = io::sweep_config_from_json(io::read_json_file(
      fs::path(COVFUSE_PRESET_DIR) / "compare_default.json"));
  // n = 1 extends the nested sample sets without changing the larger n.
  c.n_values.insert(c.n_values.begin(), 1);
  const SweepResult r = conservativeness_sweep(c);
  const double secs = timer.seconds();

  bool monotone = true;
  std::string medians;
  for (std::size_t k = 1; k < r.points.size(); ++k) {
    const SweepPoint& p = r.points[k];
    medians += (k > 1 ? " " : "") + fmt(p.deviation.median);
    if (k > 1 &&
        p.deviation.median > r.points[k - 1].deviation.median + 1e-6) {
      monotone = false;
    }
  }
  const SweepPoint& last = r.points.back();
  std::size_t non_optimal = 0;
  for (const SweepPoint& p : r.points) non_optimal += p.non_optimal;
  report("2", monotone && last.deviation.median <= 0.05 && secs < 600.0,
         "median deviation over n {10..2000}: " + medians +
             "; non-optimal solves " + std::to_string(non_optimal) + ", " +
             fmt(secs) + " s");

  double nmci_min = 0.0;
  for (const SweepPoint& p : r.points) {
    nmci_min = std::min(nmci_min, p.mineig_nmci.min);
  }
  report("3-nmci", nmci_min >= -1e-9,
         "min nmCI eigenvalue margin over all n " + fmt(nmci_min));
  const SweepPoint& first = r.points.front();
  report("3-sdp",
         first.mineig_sdp.min < 0.0 && last.mineig_sdp.median >= 0.0,
         "SDP min margin at n=1 " + fmt(first.mineig_sdp.min) +
             ", median margin at n=" + std::to_string(last.n) + " " +
             fmt(last.mineig_sdp.median));
}

double oracle_margin(const SampledFusionProblem& prob, const Matrix& ka,
                     const Matrix& bound) {
  const Eigen::Index d = ka.rows();
  Matrix k(d, 2 * d);
  k << ka, Matrix::Identity(d, d) - ka;
  double worst = HUGE_VAL;
  for (const Matrix& joint : prob.joints) {
    const Matrix s = bound - k * joint * k.transpose();
    worst = std::min(worst, Eigen::SelfAdjointEigenSolver<Matrix>(
                                0.5 * (s + s.transpose()),
                                Eigen::EigenvaluesOnly)
                                .eigenvalues()(0));
    if (worst < 0.0) break;
  }
  return worst;
}

void criterion4() {
  Rng rng(404);
  // (a) all-zero pattern against exact fusion with p_ab = 0.
  double worst_a = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + trial % 3;
    const GaussianEstimate a = est(random_spd(rng, d));
    const GaussianEstimate b = est(random_spd(rng, d));
    const auto n = static_cast<Eigen::Index>(d);
    const double exact = exact_fuse(a, b, Matrix::Zero(n, n)).bound.trace();
    for (std::size_t samples : {1, 20, 200}) {
      const FusionResult r = robust_fuse(
          a, b, CrossSparsityPattern::all_zero(d, d), samples, rng.next_u64());
      worst_a = std::max(worst_a, std::abs(r.bound.trace() - exact));
    }
  }
  report("4a", worst_a <= 1e-4, "max trace error " + fmt(worst_a));

  // (b) scalar, fully unknown correlation, against min(P_a, P_b). The
  // bound scales linearly with the marginals, so the error is measured
  // relative to min(P_a, P_b). A sample set counts as boundary covering
  // when its correlations reach within 0.01 of -1 and 1; equal pairs put
  // the worst case on that boundary.
  double worst_b = 0.0;
  double worst_b_abs = 0.0;
  std::size_t covering = 0;
  std::size_t total = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const double pa = 0.1 + 10.0 * rng.uniform();
    const double pb = trial % 4 == 0 ? pa : 0.1 + 10.0 * rng.uniform();
    for (std::size_t samples : {200, 1000}) {
      SampledFusionProblem prob;
      const FusionResult r = robust_fuse(
          est(diag({pa})), est(diag({pb})), CrossSparsityPattern::dense(1, 1),
          samples, rng.next_u64(), SdpOptions{}, &prob);
      ++total;
      double lo = 1.0;
      double hi = -1.0;
      for (const Matrix& j : prob.joints) {
        const double c = j(0, 1) / std::sqrt(pa * pb);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      if (lo > -0.99 || hi < 0.99) continue;
      ++covering;
      const double err = std::abs(r.bound(0, 0) - std::min(pa, pb));
      worst_b_abs = std::max(worst_b_abs, err);
      worst_b = std::max(worst_b, err / std::min(pa, pb));
    }
  }
  report("4b", worst_b <= 1e-2 && covering > 0,
         "max |bound - min(P_a, P_b)| / min(P_a, P_b) " + fmt(worst_b) +
             " (absolute " + fmt(worst_b_abs) + ") over " +
             std::to_string(covering) + " of " + std::to_string(total) +
             " boundary-covering sets");

  // (c) random perturbations of the reported optimum.
  double worst_c = HUGE_VAL;
  std::size_t feasible = 0;
  std::size_t non_optimal = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + trial % 3;
    const auto samples = static_cast<std::size_t>(1 + rng.uniform() * 20);
    const Matrix pa = random_spd(rng, d);
    const Matrix pb = random_spd(rng, d);
    const auto set = sample_set(pa, pb, CrossSparsityPattern::dense(d, d),
                                samples, rng.next_u64());
    const SampledFusionProblem prob = build_problem(pa, pb, set);
    const SdpSolution sol = solve(prob);
    if (sol.status != SdpStatus::kOptimal) ++non_optimal;
    const auto dd = static_cast<Eigen::Index>(d);
    for (int k = 0; k < 10000; ++k) {
      const double scale = std::pow(10.0, -1.0 - 5.0 * rng.uniform());
      Matrix ka = sol.gain_a;
      Matrix dp(dd, dd);
      for (Eigen::Index i = 0; i < dd; ++i) {
        for (Eigen::Index j = 0; j < dd; ++j) {
          ka(i, j) += scale * rng.normal();
          dp(i, j) = scale * rng.normal();
        }
      }
      const Matrix bound = sol.bound + 0.5 * (dp + dp.transpose());
      if (oracle_margin(prob, ka, bound) < 0.0) continue;
      ++feasible;
      worst_c = std::min(worst_c, bound.trace() / sol.objective - 1.0);
    }
  }
  report("4c", worst_c >= -1e-6 && non_optimal == 0 && feasible > 0,
         "best feasible perturbation relative to optimum " + fmt(worst_c) +
             " over " + std::to_string(feasible) + " feasible points");
}

void criterion5() {
  Timer timer;
  const ScenarioConfig c = io::scenario_from_json(
      io::read_json_file(fs::path(COVFUSE_PRESET_DIR) / "track_desk.json"));
  const TrackResult r = run_tracking(c, 1);
  const double secs = timer.seconds();
  const auto stats = [&](const std::string& name) -> const McStatistics& {
    return *std::find_if(r.statistics.begin(), r.statistics.end(),
                         [&](const McStatistics& s) { return s.method == name; });
  };
  for (const char* m : {"centralized", "ci", "nmci"}) {
    const McStatistics& s = stats(m);
    report(std::string("5a-") + m, s.fraction_in_band >= 0.9,
           "average NEES in 95% band [" + fmt(s.chi2_bounds.lower) + ", " +
               fmt(s.chi2_bounds.upper) + "] in " +
               fmt(100.0 * s.fraction_in_band) + "% of steps (steady NEES " +
               fmt(s.nees_steady) + ", dof " + std::to_string(s.dof) + ")");
  }
  const McStatistics& ci = stats("ci");
  const McStatistics& nm = stats("nmci");
  report("5b", nm.rmse_mean < ci.rmse_mean && nm.sigma2_mean < ci.sigma2_mean,
         "RMSE nmCI " + fmt(nm.rmse_mean) + " vs CI " + fmt(ci.rmse_mean) +
             "; 2-sigma nmCI " + fmt(nm.sigma2_mean) + " vs CI " +
             fmt(ci.sigma2_mean));
  report("5c", nm.nees_steady >= ci.nees_steady && secs < 300.0,
         "steady NEES nmCI " + fmt(nm.nees_steady) + " vs CI " +
             fmt(ci.nees_steady) + ", " + fmt(secs) + " s");
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

void criterion6() {
  Timer timer;
  const fs::path out = fs::temp_directory_path() / "covfuse_acceptance";
  fs::remove_all(out);
  cli::TrackOptions o;
  o.config = fs::path(COVFUSE_PRESET_DIR) / "track_full.json";
  o.mc = 2;
  o.out = out;
  std::ostringstream log;
  std::string problem;
  std::size_t state_dim = 0;
  try {
    const fs::path dir = cli::cmd_track(o, log);
    const io::Json summary = io::read_json_file(dir / "summary.json");
    state_dim = summary.at("state_dim").get<std::size_t>();
    const std::size_t methods = summary.at("statistics").size();
    const std::size_t steps =
        summary.at("scenario").at("n_steps").get<std::size_t>();
    const auto metrics = read_csv(dir / "metrics.csv");
    if (metrics.size() != 1 + methods * 2 * steps) {
      problem = "metrics.csv has " + std::to_string(metrics.size()) + " rows";
    }
    for (std::size_t i = 1; i < metrics.size() && problem.empty(); ++i) {
      if (metrics[i].size() != metrics[0].size()) problem = "ragged metrics";
      for (std::size_t j = 3; j < metrics[i].size(); ++j) {
        if (!std::isfinite(std::stod(metrics[i][j]))) problem = "non-finite";
      }
    }
    const auto truth = read_csv(dir / "truth.csv");
    if (truth.size() != 1 + 2 * steps * state_dim) problem = "truth.csv rows";
    if (!fs::exists(dir / "manifest.json")) problem = "missing manifest";
  } catch (const std::exception& e) {
    problem = e.what();
  }
  fs::remove_all(out);
  const double secs = timer.seconds();
  report("6", problem.empty() && state_dim == 112 && secs < 1800.0,
         "full preset, 2 runs: state dimension " + std::to_string(state_dim) +
             (problem.empty() ? ", outputs well formed" : ", " + problem) +
             ", " + fmt(secs) + " s");
}

JointCovariance random_joint(Rng& rng, std::size_t d) {
  const auto n = static_cast<Eigen::Index>(d);
  const Matrix j = random_spd(rng, 2 * d, 0.05, 10.0);
  return {j.topLeftCorner(n, n), j.bottomRightCorner(n, n),
          j.topRightCorner(n, n)};
}

void criterion7() {
  Timer timer;
  Rng rng(707);
  const std::size_t dims[] = {1, 2, 4};

  // CI: any weight, any feasible cross-covariance.
  std::size_t ci_fail = 0;
  double gain_err = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const JointCovariance j = random_joint(rng, dims[t % 3]);
    const std::optional<double> w =
        t % 2 ? std::optional<double>(rng.uniform()) : std::nullopt;
    const FusionResult r = ci_fuse(est(j.p_a), est(j.p_b), w);
    if (!is_conservative(r.bound, realized_cov(r.gain_a, r.gain_b, j), 1e-9))
      ++ci_fail;
    gain_err = std::max(gain_err, r.gain_sum_error());
  }
  report("7-ci", ci_fail == 0,
         "1000 CI trials, " + std::to_string(ci_fail) + " non-conservative");

  // nmCI: cross-covariance restricted to a random block pattern.
  std::size_t nm_fail = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t d = dims[t % 3];
    std::vector<std::vector<std::size_t>> blocks;
    for (std::size_t i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(
          rng.uniform() * static_cast<double>(blocks.size() + 1));
      if (k == blocks.size()) blocks.emplace_back();
      blocks[k].push_back(i);
    }
    const BlockPartition part(blocks, d);
    const auto n = static_cast<Eigen::Index>(d);
    JointCovariance j{Matrix::Zero(n, n), Matrix::Zero(n, n),
                      Matrix::Zero(n, n)};
    for (const auto& blk : part.blocks()) {
      const JointCovariance jb = random_joint(rng, blk.size());
      for (std::size_t r = 0; r < blk.size(); ++r) {
        for (std::size_t c = 0; c < blk.size(); ++c) {
          const auto gr = static_cast<Eigen::Index>(blk[r]);
          const auto gc = static_cast<Eigen::Index>(blk[c]);
          const auto lr = static_cast<Eigen::Index>(r);
          const auto lc = static_cast<Eigen::Index>(c);
          j.p_a(gr, gc) = jb.p_a(lr, lc);
          j.p_b(gr, gc) = jb.p_b(lr, lc);
          j.p_ab(gr, gc) = jb.p_ab(lr, lc);
        }
      }
    }
    const FusionResult r = nmci_fuse(est(j.p_a), est(j.p_b), part);
    if (!is_conservative(r.bound, realized_cov(r.gain_a, r.gain_b, j), 1e-9))
      ++nm_fail;
    gain_err = std::max(gain_err, r.gain_sum_error());
  }
  report("7-nmci", nm_fail == 0,
         "1000 nmCI trials, " + std::to_string(nm_fail) + " non-conservative");
  report("7-gain-sum", gain_err <= 1e-9,
         "max ||K_a + K_b - I|| " + fmt(gain_err));

  // Sampler support and determinism.
  const auto scalar = sample_set(diag({1}), diag({1}),
                                 CrossSparsityPattern::dense(1, 1), 10000, 9);
  double lo = 1.0;
  double hi = -1.0;
  for (const auto& s : scalar) {
    lo = std::min(lo, s.p_ab(0, 0));
    hi = std::max(hi, s.p_ab(0, 0));
  }
  const auto again = sample_set(diag({1}), diag({1}),
                                CrossSparsityPattern::dense(1, 1), 10000, 9);
  bool identical = true;
  for (std::size_t k = 0; k < scalar.size(); ++k) {
    identical = identical && scalar[k].p_ab == again[k].p_ab;
  }
  report("7-sampler", lo < -0.99 && hi > 0.99 && identical,
         "scalar support [" + fmt(lo) + ", " + fmt(hi) + "], repeat " +
             (identical ? "identical" : "differs"));

  // Chi-square quantiles against a Monte Carlo sampler.
  double worst = 0.0;
  for (std::size_t dof : {2, 4, 24}) {
    const std::size_t runs = 15;
    std::vector<double> v(100000);
    for (double& x : v) {
      double acc = 0.0;
      for (std::size_t i = 0; i < dof * runs; ++i) {
        const double z = rng.normal();
        acc += z * z;
      }
      x = acc / static_cast<double>(runs);
    }
    std::sort(v.begin(), v.end());
    const Chi2Band b = chi2_band(dof, runs, 0.95);
    worst = std::max(worst, std::abs(v[2500] / b.lower - 1.0));
    worst = std::max(worst, std::abs(v[97500] / b.upper - 1.0));
  }
  const double secs = timer.seconds();
  report("7-chi2", worst <= 0.01 && secs < 300.0,
         "max relative quantile error " + fmt(worst) + ", suites " +
             fmt(secs) + " s");
}

}  // namespace

int main() {
  try {
    criterion1();
    criteria2and3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
  } catch (const std::exception& e) {
    std::cout << "FAIL aborted  " << e.what() << std::endl;
    return 1;
  }
  std::size_t unexpected = 0;
  std::size_t known = 0;
  for (const Line& l : g_lines) {
    if (l.pass) continue;
    if (kKnownDeviations.count(l.id)) {
      ++known;
    } else {
      ++unexpected;
    }
  }
  std::cout << g_lines.size() << " criteria, " << unexpected
            << " unexpected failures, " << known << " known deviations"
            << std::endl;
  return unexpected == 0 ? 0 : 1;
}
