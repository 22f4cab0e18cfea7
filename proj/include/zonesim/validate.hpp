#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "zonesim/graph.hpp"
#include "zonesim/problems.hpp"
#include "zonesim/prox.hpp"
#include "zonesim/szo.hpp"
#include "zonesim/zone_m.hpp"
#include "zonesim/zone_s.hpp"

namespace zonesim {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Structural identities of the derived operators. Takes the operators as an
// argument so corrupted inputs can be shown to fail.
inline CheckResult check_graph_identities(const GraphOperators& ops) {
  CheckResult res{"graph identities", true, ""};
  const int n = ops.n();
  std::ostringstream detail;

  const Mat two_d = 2.0 * Mat(ops.degrees.asDiagonal());
  const double lap_sum_err =
      (ops.signless_laplacian + ops.signed_laplacian - two_d)
          .cwiseAbs()
          .maxCoeff();
  if (lap_sum_err != 0.0) {
    res.pass = false;
    detail << "L+ + L- != 2D (max err " << lap_sum_err << "); ";
  }

  const double row_sum_err =
      (ops.mixing.rowwise().sum() - Vec::Ones(n)).cwiseAbs().maxCoeff();
  if (row_sum_err > 1e-12) {
    res.pass = false;
    detail << "W row sums off by " << row_sum_err << "; ";
  }
  if (ops.mixing.minCoeff() < 0.0) {
    res.pass = false;
    detail << "W has negative entries; ";
  }

  const Mat half_dinv_lplus = 0.5 * ops.degrees.cwiseInverse().asDiagonal() *
                              ops.signless_laplacian;
  const Mat expected = 0.5 * (Mat::Identity(n, n) + ops.mixing);
  const double prox_weight_err =
      (half_dinv_lplus - expected).cwiseAbs().maxCoeff();
  if (prox_weight_err > 1e-12) {
    res.pass = false;
    detail << "D^{-1}L+/2 != (I+W)/2 (err " << prox_weight_err << "); ";
  }

  const double consensus_err =
      (ops.signed_laplacian * Vec::Ones(n)).cwiseAbs().maxCoeff();
  if (consensus_err > 1e-12) {
    res.pass = false;
    detail << "L- does not annihilate constants (err " << consensus_err
           << "); ";
  }

  // neighbor-average identity on a deterministic pseudo-random vector
  rng::Stream s(rng::key(42, rng::Purpose::kInit));
  Vec z(n);
  for (int i = 0; i < n; ++i) z[i] = s.normal();
  Vec wz = ops.mixing * z;
  double nb_err = 0.0;
  for (int i = 0; i < n; ++i) {
    double avg = 0.0;
    for (int j : ops.topo.neighbors[i]) avg += z[j];
    avg /= ops.topo.degrees[i];
    nb_err = std::max(nb_err, std::abs(wz[i] - avg));
  }
  if (nb_err > 1e-12) {
    res.pass = false;
    detail << "neighbor-average identity off by " << nb_err << "; ";
  }

  res.detail = detail.str();
  return res;
}

inline CheckResult check_path_spectra() {
  const auto ops = derive_operators(from_edges(3, 1, {{1, 2}, {2, 3}}));
  const bool ok = std::abs(ops.sigma_min - 1.0) <= 1e-10 &&
                  std::abs(ops.norm_lplus - 3.0) <= 1e-10;
  std::ostringstream detail;
  detail << "sigma_min=" << ops.sigma_min << " norm_lplus=" << ops.norm_lplus;
  return {"path-graph spectra", ok, detail.str()};
}

// Estimator sanity on a 2-D quadratic with known smoothed gradient: the
// sample mean stays within 4 standard errors and the empirical second moment
// respects the variance bound.
inline CheckResult check_estimator_unbiasedness(int reps = 2000, int batch = 10) {
  Mat p(2, 2);
  p << 2.0, 0.5, 0.5, 1.0;
  SmoothReferenceParams ref;
  ref.quad_matrix = p;
  ScalarField f = make_field(
      [p](const Vec& z) { return 0.5 * z.dot(p * z); });

  OracleSpec spec;
  spec.noise_std = 0.01;
  spec.smoothing = 0.05;
  spec.batch = batch;
  spec.dim = 2;
  Eigen::SelfAdjointEigenSolver<Mat> es(p);
  const double lhat = es.eigenvalues().cwiseAbs().maxCoeff();
  Vec z(2);
  z << 1.0, -0.5;
  spec.smoothness = lhat;
  spec.grad_bound = (p * z).norm() + lhat * (3.0 * spec.smoothing) * 3.0;

  const auto [sval, sgrad] = smoothed_reference(SmoothKind::kQuadratic, ref, z,
                                                spec.smoothing);
  (void)sval;
  Vec mean = Vec::Zero(2);
  double second_moment = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    rng::Stream phi(rng::key(99, rng::Purpose::kPerturbation, 0, rep));
    rng::Stream noise(rng::key(99, rng::Purpose::kNoise, 0, rep));
    const Vec g = estimate(f, z, spec, phi, noise).value;
    mean += g;
    second_moment += (g - sgrad).squaredNorm();
  }
  mean /= reps;
  second_moment /= reps;
  const double bound = variance_bound(spec);
  const double se = std::sqrt(bound / reps);
  const double mean_err = (mean - sgrad).cwiseAbs().maxCoeff();
  std::ostringstream detail;
  detail << "mean err " << mean_err << " (4se=" << 4 * se << "), E||G-grad||^2 "
         << second_moment << " vs bound " << bound;
  return {"estimator unbiasedness/variance", mean_err <= 4 * se &&
                                                 second_moment <= bound,
          detail.str()};
}

// Matrix and distributed forms must coincide step by step when fed the same
// streams.
inline CheckResult check_form_equivalence(long horizon = 50) {
  const auto topo = from_edges(4, 1, {{1, 2}, {1, 4}, {3, 4}});
  const auto ops = derive_operators(topo);
  const Problem problem = make_sigmoid_log(4, 11);
  MnetConfig cfg;
  cfg.schedule = PenaltySchedule::kConstant;
  cfg.rho = 5.0;
  cfg.horizon = horizon;
  cfg.batch = 8;
  cfg.mu = 0.05;
  cfg.noise_std = 0.01;
  cfg.metric_stride = horizon;
  cfg = resolve_mnet_config(cfg, problem, ops);

  MnetState a = mnet_init(problem, ops, 1234);
  MnetState b = a;
  double worst = 0.0;
  for (long r = 0; r < horizon; ++r) {
    a = mnet_step(a, problem, ops, cfg, MnetMode::kMatrix, 1234);
    b = mnet_step(b, problem, ops, cfg, MnetMode::kDistributed, 1234);
    worst = std::max(worst, (a.z - b.z).cwiseAbs().maxCoeff());
  }
  std::ostringstream detail;
  detail << "max divergence " << worst << " over " << horizon << " rounds";
  return {"primal-dual vs distributed form", worst <= 1e-10, detail.str()};
}

inline CheckResult check_prox_oracle() {
  double worst = 0.0;
  rng::Stream s(rng::key(7, rng::Purpose::kInit));
  for (int dim = 1; dim <= 3; ++dim) {
    const double grid = dim == 3 ? 0.05 : 0.01;
    for (int rep = 0; rep < 5; ++rep) {
      Vec u(dim);
      for (int i = 0; i < dim; ++i) u[i] = 2.0 * s.normal();
      const Vec fast = l1_ball_project(u, 1.0);
      const Vec slow = brute_force_project(1.0, u, grid);
      worst = std::max(worst, (fast - slow).cwiseAbs().maxCoeff() / grid);
    }
  }
  std::ostringstream detail;
  detail << "max error " << worst << " grid steps";
  return {"l1-ball projection vs grid oracle", worst <= 2.0, detail.str()};
}

// Compact dual form of the star-network scheme. `dual_step_scale` deliberately
// mis-scales the dual ascent coefficient so the residual's sensitivity can be
// demonstrated; 1.0 is the faithful update.
inline CheckResult check_dual_compact_form(double dual_step_scale = 1.0,
                                           long horizon = 10) {
  const Problem problem = make_sparse_quadratic(3, 4, 2.0, 5);
  SnetConfig cfg;
  cfg.horizon = horizon;
  cfg.batch = 4;
  cfg.mu = 0.05;
  cfg.noise_std = 0.01;
  cfg.metric_stride = horizon;
  cfg = resolve_snet_config(cfg, problem);

  SnetState state = snet_init(problem, cfg, 77);
  double worst = dual_invariant_residual(state);
  SnetStepInfo info;
  for (long r = 1; r <= horizon; ++r) {
    SnetState prev = state;
    state = snet_step(state, problem, cfg, 77, nullptr, &info);
    if (dual_step_scale != 1.0) {
      const double scale = cfg.params.alpha[info.picked] *
                           cfg.rho_at(r)[info.picked] * dual_step_scale;
      state.lambda.col(info.picked) =
          prev.lambda.col(info.picked) +
          scale * (state.z.col(info.picked) - prev.x);
    }
    worst = std::max(worst, dual_invariant_residual(state));
  }
  std::ostringstream detail;
  detail << "max residual " << worst;
  return {"dual compact form", worst <= 1e-12, detail.str()};
}

// Fast invariant sweep; well under a minute.
inline std::vector<CheckResult> validate_suite() {
  std::vector<CheckResult> out;
  out.push_back(check_graph_identities(
      derive_operators(from_edges(4, 1, {{1, 2}, {1, 4}, {3, 4}}))));
  out.push_back(check_graph_identities(
      derive_operators(random_geometric(12, 2, 0.5, 3))));
  out.push_back(check_path_spectra());
  out.push_back(check_estimator_unbiasedness());
  out.push_back(check_form_equivalence());
  out.push_back(check_prox_oracle());
  out.push_back(check_dual_compact_form());
  return out;
}

}  // namespace zonesim
