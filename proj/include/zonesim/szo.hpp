#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>

#include "zonesim/errors.hpp"
#include "zonesim/rng.hpp"

namespace zonesim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Zeroth-order access to a scalar field. `shifted_values`, when present, is a
// faster route to f(z + mu*phi_j) for all columns phi_j at once; it must
// compute the same function as `value`.
struct ScalarField {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec& z, const Mat& dirs, double mu)> shifted_values;
};

inline ScalarField make_field(std::function<double(const Vec&)> v) {
  return ScalarField{std::move(v), nullptr};
}

enum class NoiseCoupling { kShared, kIndependent };

namespace detail {

inline void check_finite(const Vec& z, double guard, long iter) {
  if (!z.allFinite() || z.cwiseAbs().maxCoeff() > guard)
    throw NumericalOverflow("iterate diverged at iteration " +
                            std::to_string(iter));
}

}  // namespace detail

struct OracleSpec {
  double noise_std = 0.0;  // additive Gaussian noise on function values
  double smoothing = 0.0;  // mu > 0
  int batch = 1;           // J
  NoiseCoupling coupling = NoiseCoupling::kIndependent;
  double grad_bound = 0.0;  // K
  double smoothness = 0.0;  // Lhat
  int dim = 0;              // Q, ambient dimension of the smoothed function
};

struct EstimatorSample {
  Vec value;        // averaged two-point estimate
  long evals = 0;   // oracle calls consumed (2J)
};

// One noisy oracle query: f(z) + xi, xi ~ N(0, sigma^2).
inline double evaluate(const ScalarField& f, const Vec& z, double noise_std,
                       rng::Stream& noise, long* evals = nullptr) {
  if (evals) ++*evals;
  const double v = f.value(z);
  if (!std::isfinite(v)) throw DomainError("oracle value is not finite");
  return noise_std > 0.0 ? v + noise_std * noise.normal() : v;
}

// Two-point Gaussian-smoothing estimator,
//   (1/J) sum_j [H(z + mu*phi_j) - H(z)] / mu * phi_j.
// Under shared coupling the same noise draw enters both evaluations of a
// sample, so additive noise cancels from the difference exactly; independent
// coupling draws fresh noise for each evaluation.
inline EstimatorSample estimate(const ScalarField& f, const Vec& z,
                                const OracleSpec& spec, rng::Stream& phi,
                                rng::Stream& noise, long* evals = nullptr) {
  const int q = static_cast<int>(z.size());
  const int j_count = spec.batch;
  const double mu = spec.smoothing;
  const double sigma = spec.noise_std;

  Mat dirs(q, j_count);
  for (int j = 0; j < j_count; ++j)
    for (int k = 0; k < q; ++k) dirs(k, j) = phi.normal();

  Vec shifted(j_count);
  if (f.shifted_values) {
    shifted = f.shifted_values(z, dirs, mu);
  } else {
    Vec zp(q);
    for (int j = 0; j < j_count; ++j) {
      zp = z + mu * dirs.col(j);
      shifted[j] = f.value(zp);
    }
  }
  const double base = f.value(z);

  Vec g = Vec::Zero(q);
  for (int j = 0; j < j_count; ++j) {
    double diff = shifted[j] - base;
    if (sigma > 0.0) {
      if (spec.coupling == NoiseCoupling::kShared) {
        noise.normal();  // the shared draw cancels from the difference
      } else {
        diff += sigma * noise.normal() - sigma * noise.normal();
      }
    }
    g += (diff / mu) * dirs.col(j);
  }
  if (evals) *evals += 2L * j_count;
  return EstimatorSample{g / j_count, 2L * j_count};
}

// Second-moment bound of the estimator around the smoothed gradient:
// 2Q [K^2 + sigma^2 + mu^2 Lhat^2 Q] / J.
inline double variance_bound(const OracleSpec& spec) {
  const double q = spec.dim;
  const double sigma_tilde_sq =
      2.0 * q *
      (spec.grad_bound * spec.grad_bound + spec.noise_std * spec.noise_std +
       spec.smoothing * spec.smoothing * spec.smoothness * spec.smoothness * q);
  return sigma_tilde_sq / spec.batch;
}

enum class SmoothKind { kLinear, kQuadratic };

struct SmoothReferenceParams {
  Vec linear_coeff;  // c
  Mat quad_matrix;   // symmetric P of (1/2) z^T P z
  double offset = 0.0;
};

// Closed-form Gaussian smoothing for the two reference families: affine
// functions are unchanged; a quadratic picks up (mu^2/2) tr(P) and keeps its
// gradient.
inline std::pair<double, Vec> smoothed_reference(SmoothKind kind,
                                                 const SmoothReferenceParams& p,
                                                 const Vec& z, double mu) {
  switch (kind) {
    case SmoothKind::kLinear:
      return {p.linear_coeff.dot(z) + p.offset, p.linear_coeff};
    case SmoothKind::kQuadratic: {
      Vec grad = p.quad_matrix * z;
      if (p.linear_coeff.size() == z.size()) grad += p.linear_coeff;
      double val = 0.5 * z.dot(p.quad_matrix * z) + p.offset +
                   0.5 * mu * mu * p.quad_matrix.trace();
      if (p.linear_coeff.size() == z.size()) val += p.linear_coeff.dot(z);
      return {val, grad};
    }
  }
  throw UnsupportedKind("smoothed reference kind");
}

}  // namespace zonesim
