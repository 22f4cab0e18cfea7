#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "zonesim/errors.hpp"
#include "zonesim/graph.hpp"
#include "zonesim/metrics.hpp"
#include "zonesim/problems.hpp"
#include "zonesim/szo.hpp"

namespace zonesim {

enum class MnetMode { kMatrix, kDistributed };
enum class PenaltySchedule { kTheoretical, kConstant, kIncreasing };

// Constants of the penalty lower bound and of the potential function.
struct MnetTheory {
  double c = 0.0;
  double b = 0.0;
  double d = 0.0;
  double rho_min = 0.0;
  double k = 0.0;  // evaluated at rho_min
};

inline double potential_k(double lhat, double c, double rho, double sigma_min) {
  return 2.0 * (6.0 * lhat * lhat / (rho * sigma_min) + 1.5 * c * lhat);
}

// Smallest admissible penalty for given smoothness aggregate and potential
// constant: the positive root of 2 rho^2 + b rho + d, floored by delta and
// Lhat/2.
inline MnetTheory penalty_lower_bound(double lhat, double c, double sigma_min,
                                      double delta) {
  MnetTheory t;
  t.c = c;
  t.b = -lhat * (lhat + 4.0 * c + 1.0) - 3.0;
  t.d = -12.0 * lhat * lhat / sigma_min;
  t.rho_min = std::max({(-t.b + std::sqrt(t.b * t.b - 8.0 * t.d)) / 4.0, delta,
                        lhat / 2.0});
  t.k = potential_k(lhat, c, t.rho_min, sigma_min);
  return t;
}

// The potential constant gets a 1% margin above its strict lower bound.
inline MnetTheory theoretical_params(const GraphOperators& ops, double lhat,
                                     double delta) {
  const double c = 1.01 * 6.0 * ops.norm_lplus / ops.sigma_min;
  return penalty_lower_bound(lhat, c, ops.sigma_min, delta);
}

struct MnetConfig {
  PenaltySchedule schedule = PenaltySchedule::kTheoretical;
  double rho = 0.0;  // constant penalty; from theory in theoretical mode
  double c = 0.0;    // potential constant
  double lhat = 0.0; // smoothness aggregate entering the formulas
  double mu = 0.0;
  int batch = 1;
  long horizon = 1;
  double noise_std = 0.01;
  NoiseCoupling coupling = NoiseCoupling::kIndependent;
  double delta = 1e-3;
  int metric_stride = 10;
  double divergence_guard = 1e8;

  double rho_at(long iter) const {
    return schedule == PenaltySchedule::kIncreasing
               ? std::sqrt(static_cast<double>(iter + 1))
               : rho;
  }
};

// Fills derived fields: smoothness aggregate, potential constant, and the
// penalty in theoretical mode (1% above the minimum; the bound is strict).
inline MnetConfig resolve_mnet_config(MnetConfig cfg, const Problem& problem,
                                      const GraphOperators& ops) {
  if (cfg.lhat <= 0.0) cfg.lhat = problem.smoothness_sum;
  const MnetTheory t = theoretical_params(ops, cfg.lhat, cfg.delta);
  if (cfg.c <= 0.0) cfg.c = t.c;
  if (cfg.schedule == PenaltySchedule::kTheoretical) {
    if (cfg.rho <= 0.0)
      cfg.rho = 1.01 * t.rho_min;
    else if (cfg.rho <= t.rho_min)
      throw ValidationError("penalty below the theoretical minimum " +
                            std::to_string(t.rho_min));
  }
  if (cfg.schedule == PenaltySchedule::kConstant && cfg.rho <= 0.0)
    throw ValidationError("constant penalty schedule needs rho > 0");
  if (cfg.mu <= 0.0)
    cfg.mu = 1.0 / std::sqrt(static_cast<double>(cfg.horizon));
  return cfg;
}

struct MnetState {
  Vec z;
  Vec z_prev;
  Vec lambda;       // matrix mode; empty in distributed mode
  Vec lambda_prev;
  Vec g_prev;       // estimator of the previous round
  long iter = 0;
  double rho_prev = 0.0;
};

inline MnetState mnet_init(const Problem& problem, const GraphOperators& ops,
                           std::uint64_t trial_seed) {
  MnetState s;
  const int q = problem.n_agents * problem.dim_m;
  rng::Stream init(rng::key(trial_seed, rng::Purpose::kInit));
  s.z = Vec(q);
  for (int i = 0; i < q; ++i) s.z[i] = init.normal();
  s.z_prev = s.z;
  s.lambda = Vec::Zero(ops.topo.n_edges() * problem.dim_m);
  s.lambda_prev = s.lambda;
  s.g_prev = Vec::Zero(q);
  return s;
}

// Stacked per-agent gradient estimate at iteration `iter`. Streams are keyed
// by (trial, purpose, agent, iteration), so both algorithm forms and all
// baselines draw identical randomness for the same round.
inline Vec stacked_estimate(const Problem& problem, const Vec& z, double mu,
                            int batch, double noise_std, NoiseCoupling coupling,
                            std::uint64_t trial_seed, long iter, long* evals) {
  const int m = problem.dim_m;
  Vec g(problem.n_agents * m);
  OracleSpec spec;
  spec.noise_std = noise_std;
  spec.smoothing = mu;
  spec.batch = batch;
  spec.coupling = coupling;
  for (int i = 0; i < problem.n_agents; ++i) {
    rng::Stream phi(rng::key(trial_seed, rng::Purpose::kPerturbation, i, iter));
    rng::Stream noise(rng::key(trial_seed, rng::Purpose::kNoise, i, iter));
    g.segment(i * m, m) =
        estimate(problem.locals[i].field, z.segment(i * m, m), spec, phi, noise,
                 evals)
            .value;
  }
  return g;
}

// One primal-dual round. The matrix form keeps the explicit edge-stacked dual
// and applies the closed-form proximal step followed by dual ascent. The
// distributed form eliminates the dual: each agent combines its two most
// recent estimates and neighbor values only. Both forms produce the same
// trajectory for shared streams; the distributed recursion carries the
// penalties of the current and previous rounds so this also holds under the
// increasing schedule.
inline MnetState mnet_step(const MnetState& state, const Problem& problem,
                           const GraphOperators& ops, const MnetConfig& cfg,
                           MnetMode mode, std::uint64_t trial_seed,
                           long* evals = nullptr) {
  const long r = state.iter;
  const double rho = cfg.rho_at(r);
  const Vec g = stacked_estimate(problem, state.z, cfg.mu, cfg.batch,
                                 cfg.noise_std, cfg.coupling, trial_seed, r,
                                 evals);
  const int m = problem.dim_m;
  const int n = problem.n_agents;

  MnetState next;
  next.iter = r + 1;
  next.z_prev = state.z;
  next.g_prev = g;
  next.rho_prev = rho;

  auto scale_by_inv_degree = [&](Vec v) {
    for (int i = 0; i < n; ++i) v.segment(i * m, m) /= ops.degrees[i];
    return v;
  };

  if (mode == MnetMode::kMatrix) {
    const Vec direction =
        g + ops.apply_incidence_t(state.lambda) + rho * ops.apply_signed(state.z);
    next.z = state.z - scale_by_inv_degree(direction) / (2.0 * rho);
    next.lambda = state.lambda + rho * ops.apply_incidence(next.z);
    next.lambda_prev = state.lambda;
  } else {
    if (r == 0) {
      // zero dual: the first round is the closed form of the proximal step
      const Vec direction = g + rho * ops.apply_signed(state.z);
      next.z = state.z - scale_by_inv_degree(direction) / (2.0 * rho);
    } else {
      const double rho_p = state.rho_prev;
      Vec direction = g - state.g_prev +
                      (rho_p + rho) * ops.apply_signed(state.z) -
                      rho_p * ops.apply_signed(state.z_prev);
      for (int i = 0; i < n; ++i)
        direction.segment(i * m, m) -=
            2.0 * rho_p * ops.degrees[i] *
            (state.z.segment(i * m, m) - state.z_prev.segment(i * m, m));
      next.z = state.z - scale_by_inv_degree(direction) / (2.0 * rho);
    }
    next.lambda = state.lambda;        // never materialized
    next.lambda_prev = state.lambda;
  }
  detail::check_finite(next.z, cfg.divergence_guard, next.iter);
  return next;
}

// Augmented-Lagrangian potential P = L_rho + c V with the weighted difference
// term; diagnostic only, evaluated with true function values. Needs the
// matrix-mode state.
inline std::tuple<double, double, double> mnet_potential(
    const MnetState& state, const Problem& problem, const GraphOperators& ops,
    const MnetConfig& cfg) {
  const double rho = cfg.rho_at(state.iter > 0 ? state.iter - 1 : 0);
  const Vec az = ops.apply_incidence(state.z);
  const double lag = problem.value_stacked(state.z) + state.lambda.dot(az) +
                     0.5 * rho * az.squaredNorm();
  const Vec dz = state.z - state.z_prev;
  const double k = potential_k(cfg.lhat, cfg.c, rho, ops.sigma_min);
  const double dz_b = dz.dot(ops.apply_signless(dz)) +
                      k / (cfg.c * rho) * dz.squaredNorm();
  const double v = 0.5 * rho * (az.squaredNorm() + dz_b);
  return {lag + cfg.c * v, lag, v};
}

struct MnetRunResult {
  std::vector<TraceRecord> trace;
  Vec z_out;
  Vec lambda_out;
  long output_iter = 0;
  long oracle_calls = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Executes the full horizon, records metrics every stride rounds on the
// running iterate, and returns the uniformly sampled output iterate.
inline MnetRunResult mnet_run(const Problem& problem, const GraphOperators& ops,
                              const MnetConfig& cfg, MnetMode mode,
                              std::uint64_t trial_seed, int trial_id = 0,
                              bool with_potential = true) {
  MnetRunResult out;
  MnetState state = mnet_init(problem, ops, trial_seed);
  rng::Stream pick(rng::key(trial_seed, rng::Purpose::kOutput));
  const long u = static_cast<long>(pick.uniform() * cfg.horizon);
  out.z_out = state.z;
  out.lambda_out = state.lambda;
  out.output_iter = u;

  auto record = [&](const MnetState& s) {
    TraceRecord rec;
    rec.trial = trial_id;
    rec.iter = s.iter;
    auto [og, cv] = mnet_gap(s.z, ops, problem);
    rec.opt_gap = og;
    rec.cons_vio = cv;
    if (mode == MnetMode::kMatrix && s.iter >= 1) {
      rec.phi = phi_gap(s.z, s.lambda_prev, cfg.rho_at(s.iter - 1), ops, problem);
      if (with_potential) {
        auto [p, lag, v] = mnet_potential(s, problem, ops, cfg);
        (void)lag;
        (void)v;
        rec.potential = p;
      }
    }
    rec.oracle_calls = out.oracle_calls;
    out.trace.push_back(rec);
  };

  record(state);
  for (long r = 0; r < cfg.horizon; ++r) {
    if (r == u) {
      out.z_out = state.z;
      out.lambda_out = state.lambda;
    }
    try {
      state = mnet_step(state, problem, ops, cfg, mode, trial_seed,
                        &out.oracle_calls);
    } catch (const NumericalOverflow& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    if (state.iter % cfg.metric_stride == 0 || state.iter == cfg.horizon)
      record(state);
  }
  return out;
}

}  // namespace zonesim
