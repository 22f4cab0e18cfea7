#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "zonesim/errors.hpp"
#include "zonesim/metrics.hpp"
#include "zonesim/problems.hpp"
#include "zonesim/prox.hpp"
#include "zonesim/szo.hpp"

namespace zonesim {

// Sampling probabilities, penalties and dual step scales tied to the local
// smoothness surrogates: p_i proportional to sqrt(L_i), rho_i =
// sqrt(5.5 L_i) * sum_j sqrt(5.5 L_j), alpha_i = p_i, beta = 1 / sum rho_i.
struct SnetParams {
  Vec p;
  Vec rho;
  Vec alpha;
  double beta = 0.0;
};

inline SnetParams sampling_params(const Vec& l_mu) {
  SnetParams out;
  const Vec root = l_mu.cwiseSqrt();
  out.p = root / root.sum();
  const Vec root_scaled = (5.5 * l_mu).cwiseSqrt();
  out.rho = root_scaled * root_scaled.sum();
  out.alpha = out.p;
  out.beta = 1.0 / out.rho.sum();
  return out;
}

struct SnetConfig {
  long horizon = 1;
  int batch = 1;
  double mu = 0.0;
  double noise_std = 0.01;
  NoiseCoupling coupling = NoiseCoupling::kIndependent;
  bool increasing = false;  // rho_i = sqrt(r); alpha and p stay theoretical
  int metric_stride = 10;
  double divergence_guard = 1e8;
  SnetParams params;

  Vec rho_at(long iter) const {
    if (!increasing) return params.rho;
    return Vec::Constant(params.rho.size(),
                         std::sqrt(static_cast<double>(iter)));
  }
};

inline SnetConfig resolve_snet_config(SnetConfig cfg, const Problem& problem) {
  Vec l(problem.n_agents);
  for (int i = 0; i < problem.n_agents; ++i)
    l[i] = problem.locals[i].smoothness;
  cfg.params = sampling_params(l);
  if (cfg.mu <= 0.0)
    cfg.mu = 1.0 / std::sqrt(static_cast<double>(cfg.horizon));
  return cfg;
}

// Full iterate state. Columns index agents. The anchor y_i is the last
// central point at which agent i refreshed its estimate; the dual compact
// form lambda_i = -G(y_i) is an exact invariant maintained from the start by
// initializing the duals with one extra estimation round.
struct SnetState {
  Vec x;
  Mat z;
  Mat lambda;
  Mat y;
  Mat g_anchor;
  long iter = 1;  // rounds are 1-based
};

inline OracleSpec snet_oracle_spec(const SnetConfig& cfg) {
  OracleSpec spec;
  spec.noise_std = cfg.noise_std;
  spec.smoothing = cfg.mu;
  spec.batch = cfg.batch;
  spec.coupling = cfg.coupling;
  return spec;
}

inline SnetState snet_init(const Problem& problem, const SnetConfig& cfg,
                           std::uint64_t trial_seed, long* evals = nullptr) {
  const int m = problem.dim_m;
  const int n = problem.n_agents;
  SnetState s;
  rng::Stream init(rng::key(trial_seed, rng::Purpose::kInit));
  Vec x0(m);
  for (int i = 0; i < m; ++i) x0[i] = init.normal();
  s.x = prox_apply(problem.prox_spec(), x0);
  s.z = s.x.replicate(1, n);
  s.y = s.x.replicate(1, n);
  s.lambda = Mat(m, n);
  s.g_anchor = Mat(m, n);
  const OracleSpec spec = snet_oracle_spec(cfg);
  for (int i = 0; i < n; ++i) {
    rng::Stream phi(rng::key(trial_seed, rng::Purpose::kPerturbation, i, 0));
    rng::Stream noise(rng::key(trial_seed, rng::Purpose::kNoise, i, 0));
    s.g_anchor.col(i) =
        estimate(problem.locals[i].field, s.x, spec, phi, noise, evals).value;
    s.lambda.col(i) = -s.g_anchor.col(i);
  }
  s.iter = 1;
  return s;
}

// Residual of the dual compact form, max_i || lambda_i + G(y_i) ||.
inline double dual_invariant_residual(const SnetState& s) {
  double worst = 0.0;
  for (int i = 0; i < s.lambda.cols(); ++i)
    worst = std::max(worst, (s.lambda.col(i) + s.g_anchor.col(i)).norm());
  return worst;
}

struct SnetStepInfo {
  int picked = -1;
  Vec x_prev;
  Vec u;
  Vec g_new;
  Vec anchor_prev;     // estimate stored for the picked agent before refresh
  Vec anchor_sum_prev; // sum of all stored estimates before refresh
  double beta = 0.0;
};

// One round: sample an agent, refresh its estimate at the current central
// point, take its local primal/dual step, copy the central point to everyone
// else, then prox the penalty-weighted average at the controller.
inline SnetState snet_step(const SnetState& state, const Problem& problem,
                           const SnetConfig& cfg, std::uint64_t trial_seed,
                           long* evals = nullptr,
                           SnetStepInfo* info = nullptr) {
  const long r = state.iter;
  const Vec rho = cfg.rho_at(r);
  const double beta = 1.0 / rho.sum();

  rng::Stream pick_stream(rng::key(trial_seed, rng::Purpose::kPick, 0, r));
  const double ticket = pick_stream.uniform();
  int picked = 0;
  double acc = 0.0;
  for (int i = 0; i < problem.n_agents; ++i) {
    acc += cfg.params.p[i];
    if (ticket < acc) {
      picked = i;
      break;
    }
    picked = i;  // ticket in the final bucket
  }

  rng::Stream phi(rng::key(trial_seed, rng::Purpose::kPerturbation, picked, r));
  rng::Stream noise(rng::key(trial_seed, rng::Purpose::kNoise, picked, r));
  const Vec g = estimate(problem.locals[picked].field, state.x,
                         snet_oracle_spec(cfg), phi, noise, evals)
                    .value;

  SnetState next = state;
  next.iter = r + 1;
  const double scale = cfg.params.alpha[picked] * rho[picked];
  next.z = state.x.replicate(1, problem.n_agents);
  next.z.col(picked) = state.x - (state.lambda.col(picked) + g) / scale;
  next.lambda.col(picked) =
      state.lambda.col(picked) + scale * (next.z.col(picked) - state.x);

  // central update with the pre-round duals
  Vec u = next.z * rho + state.lambda.rowwise().sum();
  u *= beta;
  next.x = prox_apply(problem.prox_spec(1.0 / beta), u);

  if (info) {
    info->picked = picked;
    info->x_prev = state.x;
    info->u = u;
    info->g_new = g;
    info->anchor_prev = state.g_anchor.col(picked);
    info->anchor_sum_prev = state.g_anchor.rowwise().sum();
    info->beta = beta;
  }

  next.y.col(picked) = state.x;
  next.g_anchor.col(picked) = g;
  detail::check_finite(next.x, cfg.divergence_guard, next.iter);
  return next;
}

struct SnetRunResult {
  std::vector<TraceRecord> trace;
  Vec x_out;
  long output_iter = 0;
  long oracle_calls = 0;
  bool aborted = false;
  std::string abort_reason;
  double max_dual_residual = 0.0;       // compact-form invariant over the run
  double max_direction_residual = 0.0;  // u vs x - beta*v cross-check
};

inline SnetRunResult snet_run(const Problem& problem, const SnetConfig& cfg,
                              std::uint64_t trial_seed, int trial_id = 0) {
  SnetRunResult out;
  SnetState state = snet_init(problem, cfg, trial_seed, &out.oracle_calls);
  rng::Stream pick(rng::key(trial_seed, rng::Purpose::kOutput));
  const long u_index = 1 + static_cast<long>(pick.uniform() * cfg.horizon);
  out.x_out = state.x;
  out.output_iter = u_index;
  const double beta_metric = cfg.params.beta;

  auto record = [&](const SnetState& s) {
    TraceRecord rec;
    rec.trial = trial_id;
    rec.iter = s.iter - 1;  // rounds completed
    rec.psi = psi_gap(s.x, problem, beta_metric);
    rec.cons_vio = (s.z.colwise() - s.x).squaredNorm();
    rec.oracle_calls = out.oracle_calls;
    out.trace.push_back(rec);
  };

  record(state);
  SnetStepInfo info;
  for (long r = 1; r <= cfg.horizon; ++r) {
    try {
      state = snet_step(state, problem, cfg, trial_seed, &out.oracle_calls,
                        &info);
    } catch (const NumericalOverflow& e) {
      out.aborted = true;
      out.abort_reason = e.what();
      break;
    }
    out.max_dual_residual =
        std::max(out.max_dual_residual, dual_invariant_residual(state));
    const Vec v = info.anchor_sum_prev +
                  (info.g_new - info.anchor_prev) / cfg.params.alpha[info.picked];
    out.max_direction_residual =
        std::max(out.max_direction_residual,
                 (info.u - (info.x_prev - info.beta * v)).norm());
    if (r == u_index) out.x_out = state.x;
    if ((r % cfg.metric_stride == 0) || r == cfg.horizon) record(state);
  }
  return out;
}

}  // namespace zonesim
