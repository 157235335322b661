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

#include "commands.hpp"

#include "covfuse/errors.hpp"
#include "covfuse/eval.hpp"
#include "covfuse/fusion.hpp"
#include "covfuse/io.hpp"
#include "covfuse/sdp.hpp"
#include "covfuse/sim.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace covfuse::cli {
namespace {

using io::format_double;
using io::Json;
namespace fs = std::filesystem;

std::string utc_now(const char* fmt) {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, fmt);
  return s.str();
}

/// Creates <parent>/<command>-<timestamp>, adding -2, -3, ... on collision.
fs::path fresh_run_dir(const fs::path& parent, const std::string& command) {
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create " + parent.string());
  const std::string stem = command + "-" + utc_now("%Y%m%dT%H%M%SZ");
  for (int k = 1; k < 10000; ++k) {
    const fs::path dir =
        parent / (k == 1 ? stem : stem + "-" + std::to_string(k));
    if (fs::create_directory(dir, ec)) return dir;
    if (ec) throw IoError("cannot create " + dir.string());
  }
  throw IoError("no free run directory under " + parent.string());
}

class Manifest {
 public:
  Manifest(std::string command, fs::path dir)
      : dir_(std::move(dir)), started_(utc_now("%Y-%m-%dT%H:%M:%SZ")) {
    json_["command"] = std::move(command);
    json_["tool_version"] = kToolVersion;
    json_["outputs"] = Json::array();
  }

  void set(const std::string& key, Json value) { json_[key] = std::move(value); }

  void write_output(const std::string& name, const std::string& text) {
    io::write_new_file(dir_ / name, text);
    json_["outputs"].push_back(name);
  }

  void finish() {
    json_["started"] = started_;
    json_["finished"] = utc_now("%Y-%m-%dT%H:%M:%SZ");
    io::write_new_file(dir_ / "manifest.json", json_.dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::string started_;
  Json json_;
};

std::string config_path_string(const std::optional<fs::path>& p) {
  return p ? p->string() : std::string();
}

CrossSparsityPattern sdp_pattern(const FuseOptions& o, std::size_t d,
                                 const std::optional<BlockPartition>& part) {
  if (o.pattern) return io::pattern_from_json(io::read_json_file(*o.pattern));
  if (part) return partition_to_sparsity(*part);
  return CrossSparsityPattern::dense(d, d);
}

SweepConfig default_sweep() {
  SweepConfig c;
  c.p_a = Vector::Map(std::vector<double>{3.0, 1.0}.data(), 2).asDiagonal();
  c.p_b = Vector::Map(std::vector<double>{1.0, 4.0}.data(), 2).asDiagonal();
  c.partition = BlockPartition::singletons(2);
  c.pattern = partition_to_sparsity(c.partition);
  c.n_values = {10, 50, 200, 1000, 2000};
  c.mc_runs = 100;
  c.seed = 1;
  return c;
}

Json summary_json(const Summary& s) {
  return Json{{"median", s.median}, {"min", s.min}, {"max", s.max},
              {"mean", s.mean}};
}

}  // namespace

std::vector<std::vector<std::size_t>> parse_blocks(const std::string& text) {
  std::vector<std::vector<std::size_t>> blocks;
  std::stringstream outer(text);
  std::string block;
  while (std::getline(outer, block, ';')) {
    std::vector<std::size_t> indices;
    std::stringstream inner(block);
    std::string item;
    while (std::getline(inner, item, ',')) {
      const auto first = item.find_first_not_of(" \t");
      if (first == std::string::npos) continue;
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(item, &used);
      } catch (const std::exception&) {
        throw ConfigError("partition: '" + item + "' is not an index");
      }
      if (item.find_first_not_of(" \t", used) != std::string::npos ||
          item[first] == '-') {
        throw ConfigError("partition: '" + item + "' is not an index");
      }
      indices.push_back(static_cast<std::size_t>(v));
    }
    if (indices.empty()) throw ConfigError("partition: empty block");
    blocks.push_back(std::move(indices));
  }
  if (blocks.empty()) throw ConfigError("partition: no blocks");
  return blocks;
}

fs::path cmd_fuse(const FuseOptions& o, std::ostream& log) {
  const GaussianEstimate a = io::estimate_from_json(io::read_json_file(o.a));
  const GaussianEstimate b = io::estimate_from_json(io::read_json_file(o.b));
  const std::size_t d = a.dim();
  std::optional<BlockPartition> part;
  if (o.partition) {
    try {
      part.emplace(parse_blocks(*o.partition), d);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("partition: ") + e.what());
    }
  }
  BlockCheck check = BlockCheck::kStrict;
  if (o.block_check == "lenient") {
    check = BlockCheck::kLenient;
  } else if (o.block_check != "strict") {
    throw ConfigError("block-check must be strict or lenient");
  }

  const FusionMethod method = parse_fusion_method(o.method);
  FusionResult result;
  std::optional<SampledFusionProblem> problem;
  switch (method) {
    case FusionMethod::kCI:
      result = ci_fuse(a, b, o.omega);
      break;
    case FusionMethod::kNmCI:
      result = nmci_fuse(a, b, part ? *part : BlockPartition::single(d), check);
      break;
    case FusionMethod::kSdp: {
      SdpOptions opts;
      opts.tol = o.tol;
      problem.emplace();
      result = robust_fuse(a, b, sdp_pattern(o, d, part), o.n, o.seed, opts,
                           &*problem);
      break;
    }
    case FusionMethod::kExact: {
      if (!o.cross) throw ConfigError("method exact needs --cross");
      const Matrix p_ab =
          io::matrix_from_json(io::read_json_file(*o.cross), "cross");
      result = exact_fuse(a, b, p_ab);
      break;
    }
  }

  const fs::path dir = fresh_run_dir(o.out, "fuse");
  Manifest manifest("fuse", dir);
  Json out = io::to_json(result);
  out["labels"] = a.labels();
  manifest.write_output("result.json", out.dump(2) + "\n");
  if (problem) {
    manifest.write_output("problem.json", io::to_json(*problem).dump() + "\n");
  }
  manifest.set("config_path", "");
  manifest.set("inputs", Json{{"a", o.a.string()}, {"b", o.b.string()}});
  manifest.set("method", std::string(to_string(method)));
  manifest.set("seed", o.seed);
  manifest.finish();
  log << "fuse: method " << to_string(method) << ", trace(bound) "
      << format_double(result.bound.trace()) << "\n";
  if (method == FusionMethod::kSdp && result.diagnostics.solver_status &&
      *result.diagnostics.solver_status != "optimal") {
    throw NumericError("solver status " + *result.diagnostics.solver_status +
                       " (output written to " + dir.string() + ")");
  }
  return dir;
}

fs::path cmd_compare(const CompareOptions& o, std::ostream& log) {
  SweepConfig c = o.config ? io::sweep_config_from_json(
                                 io::read_json_file(*o.config))
                           : default_sweep();
  if (o.seed) c.seed = *o.seed;
  if (o.mc) {
    if (*o.mc == 0) throw ConfigError("--mc must be >= 1");
    c.mc_runs = *o.mc;
  }
  if (!o.n.empty()) {
    for (std::size_t n : o.n) {
      if (n == 0) throw ConfigError("--n entries must be >= 1");
    }
    c.n_values = o.n;
  }
  c.jobs = o.jobs;

  const SweepResult r = conservativeness_sweep(c);

  std::ostringstream records;
  records << "n,run,deviation,mineig_nmci,mineig_sdp,objective,status,"
             "iterations\n";
  for (const SweepRecord& rec : r.records) {
    records << rec.n << ',' << rec.run << ',' << format_double(rec.deviation)
            << ',' << format_double(rec.mineig_nmci) << ','
            << format_double(rec.mineig_sdp) << ','
            << format_double(rec.objective) << ',' << to_string(rec.status)
            << ',' << rec.iterations << '\n';
  }
  std::ostringstream summary;
  summary << "n,metric,median,min,max,mean\n";
  Json points = Json::array();
  for (const SweepPoint& p : r.points) {
    const std::pair<const char*, const Summary*> metrics[] = {
        {"deviation", &p.deviation},
        {"mineig_nmci", &p.mineig_nmci},
        {"mineig_sdp", &p.mineig_sdp}};
    for (const auto& [name, s] : metrics) {
      summary << p.n << ',' << name << ',' << format_double(s->median) << ','
              << format_double(s->min) << ',' << format_double(s->max) << ','
              << format_double(s->mean) << '\n';
    }
    points.push_back(Json{{"n", p.n},
                          {"deviation", summary_json(p.deviation)},
                          {"mineig_nmci", summary_json(p.mineig_nmci)},
                          {"mineig_sdp", summary_json(p.mineig_sdp)},
                          {"non_optimal", p.non_optimal}});
  }
  Json js{{"config", io::to_json(c)},
          {"nmci_bound", io::to_json(r.nmci_bound)},
          {"nmci_omega", io::to_json(r.nmci_omega)},
          {"points", points}};

  const fs::path dir = fresh_run_dir(o.out, "compare");
  Manifest manifest("compare", dir);
  manifest.write_output("sweep_runs.csv", records.str());
  manifest.write_output("sweep_summary.csv", summary.str());
  manifest.write_output("summary.json", js.dump(2) + "\n");
  manifest.set("config_path", config_path_string(o.config));
  manifest.set("seed", c.seed);
  manifest.finish();
  const SweepPoint& last = r.points.back();
  log << "compare: n=" << last.n << " median deviation "
      << format_double(last.deviation.median) << "\n";
  return dir;
}

fs::path cmd_track(const TrackOptions& o, std::ostream& log) {
  ScenarioConfig c;
  if (o.config) {
    c = io::scenario_from_json(io::read_json_file(*o.config));
  } else if (o.preset == "desk") {
    c = desk_scenario();
  } else if (o.preset == "full") {
    c = full_scenario();
  } else {
    throw ConfigError("unknown preset '" + o.preset + "' (desk or full)");
  }
  if (o.seed) c.seed = *o.seed;
  if (o.mc) c.mc_runs = *o.mc;
  if (o.steps) c.n_steps = *o.steps;
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& m : o.methods) c.methods.push_back(parse_track_method(m));
  }
  c.validate();
  const TrackResult r = run_tracking(c, o.jobs);
  const StateLayout layout{c.n_targets, c.n_agents};
  const std::vector<std::string> labels = layout.labels();

  std::ostringstream metrics;
  metrics << "method,run,step,nees,pos_sq_err,pos_var,cov_trace\n";
  std::ostringstream estimates;
  estimates << "method,run,step,state,mean,variance\n";
  std::ostringstream omega;
  omega << "method,run,step,agent_a,agent_b,block,omega\n";
  for (std::size_t m = 0; m < c.methods.size(); ++m) {
    const std::string name(to_string(c.methods[m]));
    for (std::size_t run = 0; run < c.mc_runs; ++run) {
      const MethodRun& mr = r.runs[run][m];
      for (std::size_t k = 0; k < mr.metrics.nees.size(); ++k) {
        metrics << name << ',' << run << ',' << k << ','
                << format_double(mr.metrics.nees[k]) << ','
                << format_double(mr.metrics.pos_sq_err[k]) << ','
                << format_double(mr.metrics.pos_var[k]) << ','
                << format_double(mr.metrics.cov_trace[k]) << '\n';
        for (std::size_t i = 0; i < labels.size(); ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          estimates << name << ',' << run << ',' << k << ',' << labels[i]
                    << ',' << format_double(mr.report_means[k](ii)) << ','
                    << format_double(mr.report_variances[k](ii)) << '\n';
        }
      }
      for (const OmegaRecord& w : mr.metrics.omega_log) {
        omega << name << ',' << w.run << ',' << w.step << ','
              << w.agent_a + 1 << ',' << w.agent_b + 1 << ',' << w.block
              << ',' << format_double(w.omega) << '\n';
      }
    }
  }
  std::ostringstream truth;
  truth << "run,step,state,value\n";
  for (std::size_t run = 0; run < c.mc_runs; ++run) {
    const RunRealization& re = r.realizations[run];
    for (std::size_t k = 0; k < re.truth.size(); ++k) {
      for (std::size_t i = 0; i < labels.size(); ++i) {
        truth << run << ',' << k << ',' << labels[i] << ','
              << format_double(re.truth[k](static_cast<Eigen::Index>(i)))
              << '\n';
      }
    }
  }
  std::ostringstream series;
  series << "method,step,avg_nees,chi2_lower,chi2_upper\n";
  std::ostringstream summary;
  summary << "method,dof,runs,chi2_lower,chi2_upper,fraction_in_band,"
             "nees_steady,trace_steady,rmse_mean,sigma2_mean\n";
  Json stats = Json::array();
  for (const McStatistics& s : r.statistics) {
    for (std::size_t k = 0; k < s.nees_series.size(); ++k) {
      series << s.method << ',' << k << ',' << format_double(s.nees_series[k])
             << ',' << format_double(s.chi2_bounds.lower) << ','
             << format_double(s.chi2_bounds.upper) << '\n';
    }
    summary << s.method << ',' << s.dof << ',' << s.runs << ','
            << format_double(s.chi2_bounds.lower) << ','
            << format_double(s.chi2_bounds.upper) << ','
            << format_double(s.fraction_in_band) << ','
            << format_double(s.nees_steady) << ','
            << format_double(s.trace_steady) << ','
            << format_double(s.rmse_mean) << ','
            << format_double(s.sigma2_mean) << '\n';
    stats.push_back(Json{{"method", s.method},
                         {"dof", s.dof},
                         {"runs", s.runs},
                         {"chi2_lower", s.chi2_bounds.lower},
                         {"chi2_upper", s.chi2_bounds.upper},
                         {"fraction_in_band", s.fraction_in_band},
                         {"nees_steady", s.nees_steady},
                         {"trace_steady", s.trace_steady},
                         {"rmse_mean", s.rmse_mean},
                         {"sigma2_mean", s.sigma2_mean}});
  }
  Json js{{"scenario", io::to_json(c)},
          {"state_dim", c.state_dim()},
          {"nees_dof", r.nees_dof},
          {"statistics", stats}};

  const fs::path dir = fresh_run_dir(o.out, "track");
  Manifest manifest("track", dir);
  manifest.write_output("metrics.csv", metrics.str());
  manifest.write_output("nees_series.csv", series.str());
  manifest.write_output("estimates.csv", estimates.str());
  manifest.write_output("truth.csv", truth.str());
  manifest.write_output("omega.csv", omega.str());
  manifest.write_output("summary.csv", summary.str());
  manifest.write_output("summary.json", js.dump(2) + "\n");
  manifest.set("config_path", config_path_string(o.config));
  manifest.set("seed", c.seed);
  manifest.finish();
  log << "track: " << c.name << ", state dimension " << c.state_dim()
      << ", " << c.mc_runs << " runs\n";
  for (const McStatistics& s : r.statistics) {
    log << "  " << s.method << ": in-band " << format_double(s.fraction_in_band)
        << ", rmse " << format_double(s.rmse_mean) << ", 2sigma "
        << format_double(s.sigma2_mean) << "\n";
  }
  return dir;
}

int run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Conservative fusion of Gaussian estimates", "covfuse"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  FuseOptions fuse;
  CLI::App* f = app.add_subcommand("fuse", "Fuse two estimates");
  f->add_option("--a", fuse.a, "First estimate (JSON)")->required();
  f->add_option("--b", fuse.b, "Second estimate (JSON)")->required();
  f->add_option("--method", fuse.method, "ci | nmci | sdp | exact")
      ->capture_default_str();
  f->add_option("--partition", fuse.partition,
                "Blocks as \"0,1;2\" (0-based indices)");
  f->add_option("--pattern", fuse.pattern, "Cross sparsity pattern (JSON)");
  f->add_option("--cross", fuse.cross, "Known cross-covariance for exact");
  f->add_option("--omega", fuse.omega, "Fixed CI weight in [0, 1]");
  f->add_option("--block-check", fuse.block_check, "strict | lenient")
      ->capture_default_str();
  f->add_option("--n", fuse.n, "SDP sample count")->capture_default_str();
  f->add_option("--seed", fuse.seed, "SDP sampler seed")->capture_default_str();
  f->add_option("--tol", fuse.tol, "SDP gap tolerance")->capture_default_str();
  f->add_option("--out", fuse.out, "Parent of the run directory")
      ->capture_default_str();

  CompareOptions compare;
  CLI::App* c = app.add_subcommand("compare", "nmCI vs sampled SDP sweep");
  c->add_option("--config", compare.config, "Sweep config (JSON)");
  c->add_option("--seed", compare.seed, "Master seed");
  c->add_option("--mc", compare.mc, "Monte Carlo runs");
  c->add_option("--n", compare.n, "Sample counts, comma separated")
      ->delimiter(',');
  c->add_option("--jobs", compare.jobs, "Concurrent runs")
      ->capture_default_str();
  c->add_option("--out", compare.out, "Parent of the run directory")
      ->capture_default_str();

  TrackOptions track;
  CLI::App* t = app.add_subcommand("track", "Tracking Monte Carlo study");
  t->add_option("--config", track.config, "Scenario (JSON)");
  t->add_option("--preset", track.preset, "desk | full (without --config)")
      ->capture_default_str();
  t->add_option("--seed", track.seed, "Master seed");
  t->add_option("--mc", track.mc, "Monte Carlo runs");
  t->add_option("--steps", track.steps, "Time steps");
  t->add_option("--method", track.methods,
                "none | ci | nmci | sdp | centralized (comma separated)")
      ->delimiter(',');
  t->add_option("--jobs", track.jobs, "Concurrent runs")->capture_default_str();
  t->add_option("--out", track.out, "Parent of the run directory")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    fs::path dir;
    if (*f) {
      dir = cmd_fuse(fuse, err);
    } else if (*c) {
      dir = cmd_compare(compare, err);
    } else {
      dir = cmd_track(track, err);
    }
    out << dir.string() << "\n";
    return kExitOk;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace covfuse::cli
