#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <optional>
#include <string>

#include "zonesim/graph.hpp"
#include "zonesim/problems.hpp"
#include "zonesim/prox.hpp"

namespace zonesim {

// One metrics row. Fields that a given algorithm does not define stay empty
// in the CSV. All evaluation happens with analytic gradients; the stochastic
// oracle is never touched here.
struct TraceRecord {
  int trial = 0;
  long iter = 0;
  std::optional<double> opt_gap;
  std::optional<double> cons_vio;
  std::optional<double> phi;
  std::optional<double> psi;
  std::optional<double> potential;
  long oracle_calls = 0;
  std::optional<double> wall_seconds;
};

// Mesh-network solution quality: squared norm of the summed local gradients
// plus the squared consensus violation.
inline std::pair<double, double> mnet_gap(const Vec& z,
                                          const GraphOperators& ops,
                                          const Problem& problem) {
  const Vec grads = problem.grad_stacked(z);
  Vec sum = Vec::Zero(problem.dim_m);
  for (int i = 0; i < problem.n_agents; ++i)
    sum += grads.segment(i * problem.dim_m, problem.dim_m);
  const double cons = ops.apply_incidence(z).squaredNorm();
  return {sum.squaredNorm() + cons, cons};
}

// Stationarity gap of the augmented Lagrangian at (z, lambda).
inline double phi_gap(const Vec& z, const Vec& lambda, double rho,
                      const GraphOperators& ops, const Problem& problem) {
  const Vec az = ops.apply_incidence(z);
  const Vec grad_l = problem.grad_stacked(z) + ops.apply_incidence_t(lambda) +
                     rho * ops.apply_incidence_t(az);
  return grad_l.squaredNorm() + az.squaredNorm();
}

// Prox-gradient residual of the composite problem, (1/beta^2) || x -
// prox(x - beta grad f(x)) ||^2. With no nonsmooth term this is the squared
// gradient norm.
inline double psi_gap(const Vec& x, const Problem& problem, double beta) {
  const Vec step = x - beta * problem.grad_shared(x);
  const Vec prox = prox_apply(problem.prox_spec(1.0 / beta), step);
  return (x - prox).squaredNorm() / (beta * beta);
}

namespace csv {

inline constexpr const char* kHeader =
    "trial,iter,opt_gap,cons_vio,phi,psi,potential,oracle_calls,wall_seconds";

inline void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void append_field(std::string& out, const std::optional<double>& v) {
  out.push_back(',');
  if (v) append_double(out, *v);
}

inline std::string format_row(const TraceRecord& r) {
  std::string out;
  out.reserve(128);
  out += std::to_string(r.trial);
  out.push_back(',');
  out += std::to_string(r.iter);
  append_field(out, r.opt_gap);
  append_field(out, r.cons_vio);
  append_field(out, r.phi);
  append_field(out, r.psi);
  append_field(out, r.potential);
  out.push_back(',');
  out += std::to_string(r.oracle_calls);
  append_field(out, r.wall_seconds);
  return out;
}

}  // namespace csv

}  // namespace zonesim
