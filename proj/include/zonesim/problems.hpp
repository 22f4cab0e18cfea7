#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

#include "zonesim/prox.hpp"
#include "zonesim/rng.hpp"
#include "zonesim/szo.hpp"

namespace zonesim {

// One agent's objective: zeroth-order access for the algorithms, an analytic
// gradient for the metrics, and the constants entering the parameter and
// variance formulas.
struct LocalObjective {
  ScalarField field;
  std::function<Vec(const Vec&)> gradient;
  double grad_bound = 0.0;  // K_i on the evaluation region
  double smoothness = 0.0;  // L_i
};

enum class NonsmoothKind { kNone, kL1Ball };

struct Problem {
  int n_agents = 0;
  int dim_m = 1;
  std::vector<LocalObjective> locals;
  double smoothness_sum = 0.0;  // conservative aggregate for the sum objective
  double smoothness_max = 0.0;
  NonsmoothKind nonsmooth = NonsmoothKind::kNone;
  double l1_radius = 0.0;
  double lower_bound_shift = 0.0;  // makes g >= 0 on the evaluation region
  double delta = 1e-3;             // penalty floor constant

  ProxSpec prox_spec(double weight = 1.0) const {
    return nonsmooth == NonsmoothKind::kL1Ball
               ? ProxSpec{ProxKind::kL1Ball, l1_radius, weight}
               : ProxSpec{ProxKind::kIdentity, 0.0, weight};
  }

  // Stacked objective g(z) = sum_i f_i(z_i), z of size N*M.
  double value_stacked(const Vec& z) const {
    double s = 0.0;
    for (int i = 0; i < n_agents; ++i)
      s += locals[i].field.value(z.segment(i * dim_m, dim_m));
    return s;
  }

  Vec grad_stacked(const Vec& z) const {
    Vec g(n_agents * dim_m);
    for (int i = 0; i < n_agents; ++i)
      g.segment(i * dim_m, dim_m) =
          locals[i].gradient(z.segment(i * dim_m, dim_m));
    return g;
  }

  // Shared-point objective f(x) = sum_i f_i(x), x of size M.
  double value_shared(const Vec& x) const {
    double s = 0.0;
    for (const auto& l : locals) s += l.field.value(x);
    return s;
  }

  Vec grad_shared(const Vec& x) const {
    Vec g = Vec::Zero(dim_m);
    for (const auto& l : locals) g += l.gradient(x);
    return g;
  }

  // Exact bound on the stacked gradient norm.
  double grad_bound_stacked() const {
    double s = 0.0;
    for (const auto& l : locals) s += l.grad_bound * l.grad_bound;
    return std::sqrt(s);
  }
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

// Scalar consensus benchmark: f_i(z) = a_i * sig(z) + b_i * log(1 + z^2) with
// standard Gaussian coefficients. Smoothness constants come from a dense scan
// of |f_i''| over [-10, 10] with a 20% margin.
inline Problem make_sigmoid_log(int n_agents, std::uint64_t seed) {
  Problem p;
  p.n_agents = n_agents;
  p.dim_m = 1;
  p.delta = 1e-3;
  const double grid_lo = -10.0, grid_hi = 10.0, grid_step = 1e-3;
  for (int i = 0; i < n_agents; ++i) {
    rng::Stream coeff(rng::key(seed, rng::Purpose::kCoefficients, i));
    const double a = coeff.normal();
    const double b = coeff.normal();
    double max_d2 = 0.0, min_f = 0.0;
    for (double z = grid_lo; z <= grid_hi + 0.5 * grid_step; z += grid_step) {
      const double s = detail::sigmoid(z);
      const double d2 = a * s * (1 - s) * (1 - 2 * s) +
                        b * 2 * (1 - z * z) / ((1 + z * z) * (1 + z * z));
      max_d2 = std::max(max_d2, std::abs(d2));
      min_f = std::min(min_f, a * s + b * std::log1p(z * z));
    }
    LocalObjective lo;
    lo.field = make_field([a, b](const Vec& z) {
      return a * detail::sigmoid(z[0]) + b * std::log1p(z[0] * z[0]);
    });
    lo.gradient = [a, b](const Vec& z) {
      const double s = detail::sigmoid(z[0]);
      Vec g(1);
      g[0] = a * s * (1 - s) + 2 * b * z[0] / (1 + z[0] * z[0]);
      return g;
    };
    lo.grad_bound = std::abs(a) / 4.0 + std::abs(b);
    lo.smoothness = 1.2 * max_d2;
    p.smoothness_sum += lo.smoothness;
    p.smoothness_max = std::max(p.smoothness_max, lo.smoothness);
    p.lower_bound_shift += -min_f;
    p.locals.push_back(std::move(lo));
  }
  return p;
}

// Nonconvex sparse benchmark: f_i(x) = x^T G_i x - c_i^T x with indefinite
// symmetric G_i (entries N(0,1)/sqrt(M), symmetrized) under an l1-ball
// constraint handled by the nonsmooth term.
inline Problem make_sparse_quadratic(int n_agents, int dim_m, double ell,
                                     std::uint64_t seed) {
  Problem p;
  p.n_agents = n_agents;
  p.dim_m = dim_m;
  p.nonsmooth = NonsmoothKind::kL1Ball;
  p.l1_radius = ell;
  p.delta = 1e-3;
  for (int i = 0; i < n_agents; ++i) {
    rng::Stream coeff(rng::key(seed, rng::Purpose::kCoefficients, i));
    Mat raw(dim_m, dim_m);
    for (int r = 0; r < dim_m; ++r)
      for (int c = 0; c < dim_m; ++c)
        raw(r, c) = coeff.normal() / std::sqrt(static_cast<double>(dim_m));
    Mat gm = 0.5 * (raw + raw.transpose());
    Vec cv(dim_m);
    for (int r = 0; r < dim_m; ++r) cv[r] = coeff.normal();

    Eigen::SelfAdjointEigenSolver<Mat> es(gm);
    const double spec_norm = es.eigenvalues().cwiseAbs().maxCoeff();

    LocalObjective lo;
    lo.field.value = [gm, cv](const Vec& x) {
      return x.dot(gm * x) - cv.dot(x);
    };
    lo.field.shifted_values = [gm, cv](const Vec& x, const Mat& dirs,
                                       double mu) {
      Mat pts = (mu * dirs).colwise() + x;
      Mat gp = gm * pts;
      Vec vals = (pts.array() * gp.array()).colwise().sum().transpose();
      vals.noalias() -= pts.transpose() * cv;
      return vals;
    };
    lo.gradient = [gm, cv](const Vec& x) { return Vec(2.0 * (gm * x) - cv); };
    lo.smoothness = 2.0 * spec_norm;
    lo.grad_bound = 2.0 * spec_norm * ell + cv.norm();
    p.smoothness_sum += lo.smoothness;
    p.smoothness_max = std::max(p.smoothness_max, lo.smoothness);
    // On the ball, x^T G x >= -||G|| ell^2 and -c^T x >= -||c|| ell.
    p.lower_bound_shift += spec_norm * ell * ell + cv.norm() * ell;
    p.locals.push_back(std::move(lo));
  }
  return p;
}

}  // namespace zonesim
