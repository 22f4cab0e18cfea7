#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "zonesim/baselines.hpp"
#include "zonesim/config.hpp"
#include "zonesim/graph.hpp"
#include "zonesim/metrics.hpp"
#include "zonesim/problems.hpp"
#include "zonesim/zone_m.hpp"
#include "zonesim/zone_s.hpp"

namespace zonesim {

inline Problem build_problem(const ExperimentConfig& cfg) {
  switch (cfg.problem) {
    case ProblemKind::kSigmoidLog:
      return make_sigmoid_log(cfg.n_agents, cfg.problem_seed);
    case ProblemKind::kSparseQuadratic:
      return make_sparse_quadratic(cfg.n_agents, cfg.dim, cfg.l1_radius,
                                   cfg.problem_seed);
  }
  throw UnsupportedKind("problem kind");
}

inline Topology build_topology(const ExperimentConfig& cfg) {
  if (cfg.topology != TopologyKind::kMesh)
    throw ValidationError("only mesh topologies have a graph realization");
  return random_geometric(cfg.n_agents, cfg.dim, cfg.radius, cfg.topology_seed);
}

// Per-trial oracle cost: two calls per estimator sample, with the
// star-network scheme paying one full estimation round to initialize duals,
// and the centralized baselines touching every agent (or a single one) per
// round.
inline long expected_oracle_calls_per_trial(const ExperimentConfig& cfg) {
  const long n = cfg.n_agents;
  const long j = cfg.resolved_batch();
  const long t = cfg.horizon;
  switch (cfg.algorithm) {
    case AlgorithmKind::kZoneM:
    case AlgorithmKind::kZoneMInc:
    case AlgorithmKind::kRgf:
      return 2 * n * j * t;
    case AlgorithmKind::kZoneS:
    case AlgorithmKind::kZoneSInc:
      return 2 * n * j + 2 * j * t;
    case AlgorithmKind::kZoGd: {
      const long iters = cfg.budget > 0 ? cfg.budget / (2 * n * j) : t;
      return 2 * n * j * iters;
    }
    case AlgorithmKind::kZoSgd: {
      const long iters = cfg.budget > 0 ? cfg.budget / 2 : t;
      return 2 * iters;
    }
  }
  return 0;
}

struct TrialOutcome {
  std::vector<TraceRecord> rows;
  long oracle_calls = 0;
  bool aborted = false;
  std::string abort_reason;
  double wall_seconds = 0.0;
};

namespace detail {

inline double snet_beta_metric(const Problem& problem) {
  Vec l(problem.n_agents);
  for (int i = 0; i < problem.n_agents; ++i) l[i] = problem.locals[i].smoothness;
  return sampling_params(l).beta;
}

inline TrialOutcome run_trial(const ExperimentConfig& cfg,
                              const Problem& problem, const GraphOperators* ops,
                              int trial) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = rng::trial_seed(cfg.master_seed, trial);
  TrialOutcome out;

  switch (cfg.algorithm) {
    case AlgorithmKind::kZoneM:
    case AlgorithmKind::kZoneMInc: {
      MnetConfig mc;
      mc.schedule = cfg.algorithm == AlgorithmKind::kZoneMInc
                        ? PenaltySchedule::kIncreasing
                        : (cfg.rho > 0.0 ? PenaltySchedule::kConstant
                                         : PenaltySchedule::kTheoretical);
      mc.rho = cfg.rho;
      mc.c = cfg.c;
      mc.mu = cfg.resolved_mu();
      mc.batch = cfg.resolved_batch();
      mc.horizon = cfg.horizon;
      mc.noise_std = cfg.noise_std;
      mc.coupling = cfg.coupling;
      mc.metric_stride = cfg.stride;
      mc = resolve_mnet_config(mc, problem, *ops);
      auto res = mnet_run(problem, *ops, mc,
                          cfg.distributed ? MnetMode::kDistributed
                                          : MnetMode::kMatrix,
                          seed, trial);
      out.rows = std::move(res.trace);
      out.oracle_calls = res.oracle_calls;
      out.aborted = res.aborted;
      out.abort_reason = res.abort_reason;
      break;
    }
    case AlgorithmKind::kZoneS:
    case AlgorithmKind::kZoneSInc: {
      SnetConfig sc;
      sc.horizon = cfg.horizon;
      sc.batch = cfg.resolved_batch();
      sc.mu = cfg.resolved_mu();
      sc.noise_std = cfg.noise_std;
      sc.coupling = cfg.coupling;
      sc.increasing = cfg.algorithm == AlgorithmKind::kZoneSInc;
      sc.metric_stride = cfg.stride;
      sc = resolve_snet_config(sc, problem);
      auto res = snet_run(problem, sc, seed, trial);
      out.rows = std::move(res.trace);
      out.oracle_calls = res.oracle_calls;
      out.aborted = res.aborted;
      out.abort_reason = res.abort_reason;
      break;
    }
    case AlgorithmKind::kRgf: {
      RgfConfig rc;
      rc.horizon = cfg.horizon;
      rc.batch = cfg.resolved_batch();
      rc.mu = cfg.resolved_mu();
      rc.noise_std = cfg.noise_std;
      rc.coupling = cfg.coupling;
      rc.metric_stride = cfg.stride;
      auto res = rgf_run(problem, *ops, rc, seed, trial);
      out.rows = std::move(res.trace);
      out.oracle_calls = res.oracle_calls;
      out.aborted = res.aborted;
      out.abort_reason = res.abort_reason;
      break;
    }
    case AlgorithmKind::kZoGd: {
      ZoGdConfig gc;
      gc.batch = cfg.resolved_batch();
      gc.horizon = cfg.budget > 0
                       ? cfg.budget / (2L * cfg.n_agents * gc.batch)
                       : cfg.horizon;
      gc.mu = cfg.resolved_mu();
      gc.noise_std = cfg.noise_std;
      gc.coupling = cfg.coupling;
      gc.stepsize = cfg.stepsize;
      gc.metric_stride = cfg.stride;
      gc.beta_metric = snet_beta_metric(problem);
      auto res = zo_gd_run(problem, gc, seed, trial);
      out.rows = std::move(res.trace);
      out.oracle_calls = res.oracle_calls;
      out.aborted = res.aborted;
      out.abort_reason = res.abort_reason;
      break;
    }
    case AlgorithmKind::kZoSgd: {
      ZoSgdConfig sc;
      sc.horizon = cfg.budget > 0 ? cfg.budget / 2 : cfg.horizon;
      sc.mu = cfg.resolved_mu();
      sc.noise_std = cfg.noise_std;
      sc.coupling = cfg.coupling;
      sc.stepsize = cfg.stepsize;
      sc.metric_stride = cfg.stride;
      sc.beta_metric = snet_beta_metric(problem);
      auto res = zo_sgd_run(problem, sc, seed, trial);
      out.rows = std::move(res.trace);
      out.oracle_calls = res.oracle_calls;
      out.aborted = res.aborted;
      out.abort_reason = res.abort_reason;
      break;
    }
  }

  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (cfg.timings)
    for (auto& row : out.rows) row.wall_seconds = out.wall_seconds;
  return out;
}

inline std::string summary_path_for(const std::string& output) {
  const std::string suffix = ".csv";
  if (output.size() > suffix.size() &&
      output.compare(output.size() - suffix.size(), suffix.size(), suffix) == 0)
    return output.substr(0, output.size() - suffix.size()) + "_summary.csv";
  return output + "_summary.csv";
}

}  // namespace detail

struct ExperimentSummary {
  int trials = 0;
  int aborted = 0;
  long total_oracle_calls = 0;
  long final_iter = 0;
  std::optional<double> final_opt_gap;
  std::optional<double> final_cons_vio;
  std::optional<double> final_phi;
  std::optional<double> final_psi;
  std::optional<double> final_potential;
  std::string csv_path;
  std::string summary_path;
  double wall_seconds = 0.0;
};

inline int thread_count_from_env() {
  if (const char* env = std::getenv("ZONESIM_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs all trials (in parallel when allowed; results are identical either
// way), writes the trace CSV in trial order and a per-iteration trial-mean
// summary CSV next to it.
inline ExperimentSummary run_experiment(const ExperimentConfig& cfg,
                                        int threads = 0) {
  const auto t0 = std::chrono::steady_clock::now();
  const Problem problem = build_problem(cfg);
  GraphOperators ops;
  const bool mesh = cfg.topology == TopologyKind::kMesh;
  if (mesh) ops = derive_operators(build_topology(cfg));

  std::vector<TrialOutcome> outcomes(cfg.trials);
  const int workers =
      std::min(cfg.trials, threads > 0 ? threads : thread_count_from_env());
  if (workers <= 1) {
    for (int t = 0; t < cfg.trials; ++t)
      outcomes[t] = detail::run_trial(cfg, problem, mesh ? &ops : nullptr, t);
  } else {
    std::atomic<int> next{0};
    auto work = [&] {
      for (int t = next.fetch_add(1); t < cfg.trials; t = next.fetch_add(1))
        outcomes[t] = detail::run_trial(cfg, problem, mesh ? &ops : nullptr, t);
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  ExperimentSummary sum;
  sum.trials = cfg.trials;
  sum.csv_path = cfg.output;
  sum.summary_path = detail::summary_path_for(cfg.output);

  std::ofstream csv(cfg.output, std::ios::binary);
  if (!csv) throw IoError("cannot write " + cfg.output);
  csv << csv::kHeader << '\n';
  for (const auto& outcome : outcomes)
    for (const auto& row : outcome.rows) csv << csv::format_row(row) << '\n';
  csv.close();

  // Per-iteration means over completed trials.
  struct Acc {
    double sum = 0;
    int n = 0;
    void add(const std::optional<double>& v) {
      if (v) {
        sum += *v;
        ++n;
      }
    }
    std::optional<double> mean() const {
      return n > 0 ? std::optional<double>(sum / n) : std::nullopt;
    }
  };
  std::map<long, std::array<Acc, 5>> by_iter;
  std::map<long, long> calls_by_iter;
  for (const auto& outcome : outcomes) {
    sum.total_oracle_calls += outcome.oracle_calls;
    if (outcome.aborted) {
      ++sum.aborted;
      continue;
    }
    for (const auto& row : outcome.rows) {
      auto& acc = by_iter[row.iter];
      acc[0].add(row.opt_gap);
      acc[1].add(row.cons_vio);
      acc[2].add(row.phi);
      acc[3].add(row.psi);
      acc[4].add(row.potential);
      calls_by_iter[row.iter] = row.oracle_calls;
    }
  }

  std::ofstream sc(sum.summary_path, std::ios::binary);
  if (!sc) throw IoError("cannot write " + sum.summary_path);
  sc << "iter,trials,opt_gap,cons_vio,phi,psi,potential,oracle_calls\n";
  for (const auto& [iter, acc] : by_iter) {
    std::string line = std::to_string(iter);
    line += ',';
    line += std::to_string(cfg.trials - sum.aborted);
    for (const auto& a : acc) csv::append_field(line, a.mean());
    line += ',';
    line += std::to_string(calls_by_iter[iter]);
    sc << line << '\n';
  }
  sc.close();

  if (!by_iter.empty()) {
    const auto& [iter, acc] = *by_iter.rbegin();
    sum.final_iter = iter;
    sum.final_opt_gap = acc[0].mean();
    sum.final_cons_vio = acc[1].mean();
    sum.final_phi = acc[2].mean();
    sum.final_psi = acc[3].mean();
    sum.final_potential = acc[4].mean();
  }
  sum.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return sum;
}

// Table-style sweep over network sizes: one trace CSV per size plus a
// combined final-gap summary.
inline std::vector<ExperimentSummary> run_sweep(
    const ExperimentConfig& base, const std::vector<int>& agent_counts,
    const std::string& combined_path, int threads = 0) {
  std::vector<ExperimentSummary> all;
  std::ofstream combined(combined_path, std::ios::binary);
  if (!combined) throw IoError("cannot write " + combined_path);
  combined << "agents,algorithm,final_iter,opt_gap,cons_vio,phi,psi\n";
  for (int n : agent_counts) {
    ExperimentConfig cfg = base;
    cfg.n_agents = n;
    const std::string suffix = "_n" + std::to_string(n);
    auto dot = cfg.output.rfind(".csv");
    cfg.output = dot == std::string::npos
                     ? cfg.output + suffix
                     : cfg.output.substr(0, dot) + suffix + ".csv";
    ExperimentSummary s = run_experiment(cfg, threads);
    std::string line = std::to_string(n);
    line += ',';
    line += algorithm_name(cfg.algorithm);
    line += ',';
    line += std::to_string(s.final_iter);
    csv::append_field(line, s.final_opt_gap);
    csv::append_field(line, s.final_cons_vio);
    csv::append_field(line, s.final_phi);
    csv::append_field(line, s.final_psi);
    combined << line << '\n';
    all.push_back(std::move(s));
  }
  return all;
}

}  // namespace zonesim
