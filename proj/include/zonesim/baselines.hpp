#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "zonesim/graph.hpp"
#include "zonesim/metrics.hpp"
#include "zonesim/problems.hpp"
#include "zonesim/prox.hpp"
#include "zonesim/zone_m.hpp"

namespace zonesim {

// Metropolis-Hastings weights: symmetric, doubly stochastic, nonnegative,
// with 1/(1 + max(d_i, d_j)) on edges and the remainder on the diagonal.
inline Mat metropolis_weights(const Topology& topo) {
  const int n = topo.n_agents;
  Mat w = Mat::Zero(n, n);
  for (auto [i, j] : topo.edges) {
    const double v = 1.0 / (1.0 + std::max(topo.degrees[i], topo.degrees[j]));
    w(i, j) = v;
    w(j, i) = v;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - w.row(i).sum();
  return w;
}

struct RgfConfig {
  long horizon = 1;
  int batch = 1;
  double mu = 0.0;
  double noise_std = 0.01;
  NoiseCoupling coupling = NoiseCoupling::kIndependent;
  int metric_stride = 10;
  double divergence_guard = 1e8;
};

// Gradient-free consensus baseline: mix with Metropolis weights, then take a
// local smoothed-gradient step with diminishing stepsize 1/sqrt(r).
inline Vec rgf_step(const Vec& z, const Problem& problem, const Topology& topo,
                    const Mat& weights, long r, const RgfConfig& cfg,
                    std::uint64_t trial_seed, long* evals = nullptr) {
  const int m = problem.dim_m;
  const int n = problem.n_agents;
  // estimator streams share the 0-based round index with the primal-dual
  // algorithms so comparisons use common random numbers
  const Vec g = stacked_estimate(problem, z, cfg.mu, cfg.batch, cfg.noise_std,
                                 cfg.coupling, trial_seed, r - 1, evals);
  const auto zb = Eigen::Map<const Mat>(z.data(), m, n);
  Vec out(n * m);
  auto ob = Eigen::Map<Mat>(out.data(), m, n);
  const double step = 1.0 / std::sqrt(static_cast<double>(r));
  for (int i = 0; i < n; ++i) {
    ob.col(i) = weights(i, i) * zb.col(i);
    for (int j : topo.neighbors[i]) ob.col(i) += weights(i, j) * zb.col(j);
    ob.col(i) -= step * g.segment(i * m, m);
  }
  return out;
}

struct BaselineRunResult {
  std::vector<TraceRecord> trace;
  Vec x_out;
  long oracle_calls = 0;
  bool aborted = false;
  std::string abort_reason;
};

inline BaselineRunResult rgf_run(const Problem& problem,
                                 const GraphOperators& ops,
                                 const RgfConfig& cfg, std::uint64_t trial_seed,
                                 int trial_id = 0) {
  BaselineRunResult out;
  const Mat weights = metropolis_weights(ops.topo);
  MnetState init = mnet_init(problem, ops, trial_seed);
  Vec z = init.z;

  auto record = [&](const Vec& zz, long iter) {
    TraceRecord rec;
    rec.trial = trial_id;
    rec.iter = iter;
    auto [og, cv] = mnet_gap(zz, ops, problem);
    rec.opt_gap = og;
    rec.cons_vio = cv;
    rec.oracle_calls = out.oracle_calls;
    out.trace.push_back(rec);
  };

  record(z, 0);
  for (long r = 1; r <= cfg.horizon; ++r) {
    try {
      z = rgf_step(z, problem, ops.topo, weights, r, cfg, trial_seed,
                   &out.oracle_calls);
      detail::check_finite(z, cfg.divergence_guard, r);
    } catch (const NumericalOverflow& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    if (r % cfg.metric_stride == 0 || r == cfg.horizon) record(z, r);
  }
  out.x_out = z;
  return out;
}

struct ZoGdConfig {
  long horizon = 1;
  int batch = 1;
  double mu = 0.0;
  double noise_std = 0.01;
  NoiseCoupling coupling = NoiseCoupling::kIndependent;
  double stepsize = 0.0;  // 0: 1/(4 L (M+4)) with L the summed smoothness
  int metric_stride = 10;
  double divergence_guard = 1e8;
  double beta_metric = 1.0;  // prox-residual weight used for the trace
};

namespace detail {

// J-sample estimator for the full objective sum_i f_i at a shared point.
// Each oracle evaluation of the sum costs one call per agent.
inline Vec shared_estimate(const Problem& problem, const Vec& x, double mu,
                           int batch, double noise_std, NoiseCoupling coupling,
                           std::uint64_t trial_seed, long iter, long* evals) {
  const int m = problem.dim_m;
  const int n = problem.n_agents;
  rng::Stream phi(rng::key(trial_seed, rng::Purpose::kPerturbation, n, iter));
  rng::Stream noise(rng::key(trial_seed, rng::Purpose::kNoise, n, iter));

  Mat dirs(m, batch);
  for (int j = 0; j < batch; ++j)
    for (int k = 0; k < m; ++k) dirs(k, j) = phi.normal();

  Vec shifted = Vec::Zero(batch);
  for (int i = 0; i < n; ++i) {
    const auto& f = problem.locals[i].field;
    if (f.shifted_values) {
      shifted += f.shifted_values(x, dirs, mu);
    } else {
      for (int j = 0; j < batch; ++j)
        shifted[j] += f.value(x + mu * dirs.col(j));
    }
  }
  const double base = problem.value_shared(x);
  if (evals) *evals += 2L * batch * n;

  Vec g = Vec::Zero(m);
  for (int j = 0; j < batch; ++j) {
    double diff = shifted[j] - base;
    if (noise_std > 0.0) {
      for (int i = 0; i < n; ++i) {
        if (coupling == NoiseCoupling::kShared) {
          noise.normal();
        } else {
          diff += noise_std * noise.normal() - noise_std * noise.normal();
        }
      }
    }
    g += (diff / mu) * dirs.col(j);
  }
  return g / batch;
}

}  // namespace detail

inline Vec zo_gd_step(const Vec& x, const Problem& problem,
                      const ZoGdConfig& cfg, std::uint64_t trial_seed, long r,
                      long* evals = nullptr) {
  const Vec g = detail::shared_estimate(problem, x, cfg.mu, cfg.batch,
                                        cfg.noise_std, cfg.coupling, trial_seed,
                                        r, evals);
  const double step =
      cfg.stepsize > 0.0
          ? cfg.stepsize
          : 1.0 / (4.0 * problem.smoothness_sum * (problem.dim_m + 4));
  return prox_apply(problem.prox_spec(1.0 / step), x - step * g);
}

inline BaselineRunResult zo_gd_run(const Problem& problem,
                                   const ZoGdConfig& cfg,
                                   std::uint64_t trial_seed, int trial_id = 0) {
  BaselineRunResult out;
  rng::Stream init(rng::key(trial_seed, rng::Purpose::kInit));
  Vec x(problem.dim_m);
  for (int i = 0; i < problem.dim_m; ++i) x[i] = init.normal();
  x = prox_apply(problem.prox_spec(), x);

  auto record = [&](const Vec& xx, long iter) {
    TraceRecord rec;
    rec.trial = trial_id;
    rec.iter = iter;
    rec.psi = psi_gap(xx, problem, cfg.beta_metric);
    rec.oracle_calls = out.oracle_calls;
    out.trace.push_back(rec);
  };

  record(x, 0);
  for (long r = 0; r < cfg.horizon; ++r) {
    try {
      x = zo_gd_step(x, problem, cfg, trial_seed, r, &out.oracle_calls);
      detail::check_finite(x, cfg.divergence_guard, r);
    } catch (const NumericalOverflow& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    if ((r + 1) % cfg.metric_stride == 0 || r + 1 == cfg.horizon)
      record(x, r + 1);
  }
  out.x_out = x;
  return out;
}

struct ZoSgdConfig {
  long horizon = 1;
  double mu = 0.0;
  double noise_std = 0.01;
  NoiseCoupling coupling = NoiseCoupling::kIndependent;
  double stepsize = 0.0;  // 0: 1/(2 L (M+4))
  int metric_stride = 10;
  double divergence_guard = 1e8;
  double beta_metric = 1.0;
};

// Single-sample stochastic variant: one uniformly drawn agent per round, its
// objective scaled by N as the stochastic sample of the sum.
inline Vec zo_sgd_step(const Vec& x, const Problem& problem,
                       const ZoSgdConfig& cfg, std::uint64_t trial_seed, long r,
                       long* evals = nullptr) {
  const int n = problem.n_agents;
  rng::Stream pick(rng::key(trial_seed, rng::Purpose::kPick, 0, r));
  const int agent = std::min(n - 1, static_cast<int>(pick.uniform() * n));

  OracleSpec spec;
  spec.noise_std = cfg.noise_std;
  spec.smoothing = cfg.mu;
  spec.batch = 1;
  spec.coupling = cfg.coupling;
  rng::Stream phi(rng::key(trial_seed, rng::Purpose::kPerturbation, agent, r));
  rng::Stream noise(rng::key(trial_seed, rng::Purpose::kNoise, agent, r));
  const auto& local = problem.locals[agent].field;
  ScalarField scaled;
  scaled.value = [&local, n](const Vec& p) { return n * local.value(p); };
  if (local.shifted_values)
    scaled.shifted_values = [&local, n](const Vec& p, const Mat& dirs,
                                        double mu) {
      return Vec(n * local.shifted_values(p, dirs, mu));
    };
  const Vec g = estimate(scaled, x, spec, phi, noise, evals).value;

  const double step =
      cfg.stepsize > 0.0
          ? cfg.stepsize
          : 1.0 / (2.0 * problem.smoothness_sum * (problem.dim_m + 4));
  return prox_apply(problem.prox_spec(1.0 / step), x - step * g);
}

inline BaselineRunResult zo_sgd_run(const Problem& problem,
                                    const ZoSgdConfig& cfg,
                                    std::uint64_t trial_seed,
                                    int trial_id = 0) {
  BaselineRunResult out;
  rng::Stream init(rng::key(trial_seed, rng::Purpose::kInit));
  Vec x(problem.dim_m);
  for (int i = 0; i < problem.dim_m; ++i) x[i] = init.normal();
  x = prox_apply(problem.prox_spec(), x);

  auto record = [&](const Vec& xx, long iter) {
    TraceRecord rec;
    rec.trial = trial_id;
    rec.iter = iter;
    rec.psi = psi_gap(xx, problem, cfg.beta_metric);
    rec.oracle_calls = out.oracle_calls;
    out.trace.push_back(rec);
  };

  record(x, 0);
  for (long r = 0; r < cfg.horizon; ++r) {
    try {
      x = zo_sgd_step(x, problem, cfg, trial_seed, r, &out.oracle_calls);
      detail::check_finite(x, cfg.divergence_guard, r);
    } catch (const NumericalOverflow& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    if ((r + 1) % cfg.metric_stride == 0 || r + 1 == cfg.horizon)
      record(x, r + 1);
  }
  out.x_out = x;
  return out;
}

}  // namespace zonesim
