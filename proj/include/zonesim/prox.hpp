#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <vector>

#include "zonesim/errors.hpp"

namespace zonesim {

enum class ProxKind { kIdentity, kL1Ball };

struct ProxSpec {
  ProxKind kind = ProxKind::kIdentity;
  double radius = 0.0;  // l1-ball radius
  double weight = 1.0;  // 1/beta; unused by the indicator prox, kept for form
};

// Euclidean projection onto { ||x||_1 <= ell } by sort-and-threshold,
// O(M log M). Ties in the sort are broken by index; the projection is unique
// so the result does not depend on the order.
inline Eigen::VectorXd l1_ball_project(const Eigen::VectorXd& u, double ell) {
  const double l1 = u.cwiseAbs().sum();
  if (l1 <= ell) return u;
  const int m = static_cast<int>(u.size());
  std::vector<double> v(m);
  for (int i = 0; i < m; ++i) v[i] = std::abs(u[i]);
  std::sort(v.begin(), v.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (int k = 0; k < m; ++k) {
    cum += v[k];
    const double t = (cum - ell) / (k + 1);
    if (v[k] - t > 0.0)
      theta = t;
    else
      break;
  }
  Eigen::VectorXd out(m);
  for (int i = 0; i < m; ++i) {
    const double mag = std::abs(u[i]) - theta;
    out[i] = mag > 0.0 ? (u[i] > 0.0 ? mag : -mag) : 0.0;
  }
  return out;
}

inline Eigen::VectorXd prox_apply(const ProxSpec& spec,
                                  const Eigen::VectorXd& u) {
  switch (spec.kind) {
    case ProxKind::kIdentity:
      return u;
    case ProxKind::kL1Ball:
      return l1_ball_project(u, spec.radius);
  }
  throw UnsupportedKind("prox kind");
}

// Exhaustive-grid projection oracle for dimensions 1-3. Minimizes ||x - u||^2
// over grid points inside the l1 ball.
inline Eigen::VectorXd brute_force_project(double ell, const Eigen::VectorXd& u,
                                           double grid_step) {
  const int m = static_cast<int>(u.size());
  if (m > 3) throw DimensionTooLarge("brute-force projection supports dim <= 3");
  const int steps = static_cast<int>(std::ceil(ell / grid_step));
  Eigen::VectorXd best = Eigen::VectorXd::Zero(m);
  double best_d = (u - best).squaredNorm();
  auto consider = [&](const Eigen::VectorXd& x) {
    const double d = (u - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = x;
    }
  };
  Eigen::VectorXd x(m);
  if (m == 1) {
    for (int a = -steps; a <= steps; ++a) {
      x[0] = a * grid_step;
      if (std::abs(x[0]) <= ell) consider(x);
    }
  } else if (m == 2) {
    for (int a = -steps; a <= steps; ++a)
      for (int b = -steps; b <= steps; ++b) {
        x[0] = a * grid_step;
        x[1] = b * grid_step;
        if (std::abs(x[0]) + std::abs(x[1]) <= ell) consider(x);
      }
  } else {
    for (int a = -steps; a <= steps; ++a)
      for (int b = -steps; b <= steps; ++b)
        for (int c = -steps; c <= steps; ++c) {
          x[0] = a * grid_step;
          x[1] = b * grid_step;
          x[2] = c * grid_step;
          if (std::abs(x[0]) + std::abs(x[1]) + std::abs(x[2]) <= ell)
            consider(x);
        }
  }
  return best;
}

}  // namespace zonesim
