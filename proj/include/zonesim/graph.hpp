#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "zonesim/errors.hpp"
#include "zonesim/rng.hpp"

namespace zonesim {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Undirected connected communication graph. Edges are stored 0-based with
// i < j, lexicographically sorted; the text format and from_edges() use the
// 1-based agent ids.
struct Topology {
  int n_agents = 0;
  int dim_m = 1;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> degrees;
  std::vector<std::vector<int>> neighbors;

  int n_edges() const { return static_cast<int>(edges.size()); }
};

namespace detail {

inline bool connected(int n, const std::vector<std::vector<int>>& adj) {
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

inline Topology finalize(int n_agents, int dim_m,
                         std::vector<std::pair<int, int>> edges0) {
  std::sort(edges0.begin(), edges0.end());
  edges0.erase(std::unique(edges0.begin(), edges0.end()), edges0.end());
  Topology t;
  t.n_agents = n_agents;
  t.dim_m = dim_m;
  t.edges = std::move(edges0);
  t.degrees.assign(n_agents, 0);
  t.neighbors.assign(n_agents, {});
  for (auto [i, j] : t.edges) {
    ++t.degrees[i];
    ++t.degrees[j];
    t.neighbors[i].push_back(j);
    t.neighbors[j].push_back(i);
  }
  if (!connected(n_agents, t.neighbors))
    throw DisconnectedGraph("graph is not connected");
  return t;
}

}  // namespace detail

// Builds a canonical Topology from 1-based edge pairs.
inline Topology from_edges(int n_agents, int dim_m,
                           const std::vector<std::pair<int, int>>& edges) {
  if (n_agents < 1) throw InvalidEdge("need at least one agent");
  if (dim_m < 1) throw InvalidEdge("dim_m must be positive");
  std::vector<std::pair<int, int>> e0;
  e0.reserve(edges.size());
  for (auto [i, j] : edges) {
    if (i < 1 || j < 1 || i > n_agents || j > n_agents)
      throw InvalidEdge("edge (" + std::to_string(i) + "," + std::to_string(j) +
                        ") out of range");
    if (i == j)
      throw InvalidEdge("self-loop at node " + std::to_string(i));
    if (i > j) std::swap(i, j);
    e0.emplace_back(i - 1, j - 1);
  }
  return detail::finalize(n_agents, dim_m, std::move(e0));
}

// Random geometric graph: nodes i.i.d. uniform on the unit square, an edge
// whenever the Euclidean distance is below `radius`. Disconnected samples are
// redrawn with an incremented sub-seed; `retries_out` reports how many were
// discarded.
inline Topology random_geometric(int n_agents, int dim_m, double radius,
                                 std::uint64_t seed, int* retries_out = nullptr) {
  if (radius <= 0.0) throw InvalidEdge("radius must be positive");
  constexpr int kMaxRetries = 1000;
  for (int retry = 0; retry < kMaxRetries; ++retry) {
    rng::Stream pos(rng::key(seed, rng::Purpose::kGeometry, retry));
    std::vector<double> x(n_agents), y(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      x[i] = pos.uniform();
      y[i] = pos.uniform();
    }
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n_agents; ++i)
      for (int j = i + 1; j < n_agents; ++j)
        if (std::hypot(x[i] - x[j], y[i] - y[j]) < radius)
          edges.emplace_back(i, j);
    try {
      Topology t = detail::finalize(n_agents, dim_m, std::move(edges));
      if (retries_out) *retries_out = retry;
      return t;
    } catch (const DisconnectedGraph&) {
      // resample
    }
  }
  throw ConnectivityRetryExhausted("no connected geometric graph after " +
                                   std::to_string(kMaxRetries) + " samples");
}

// Plain text serialization: first line "N M", then one 1-based "i j" per edge.
inline std::string to_edge_list(const Topology& t) {
  std::ostringstream os;
  os << t.n_agents << ' ' << t.dim_m << '\n';
  for (auto [i, j] : t.edges) os << i + 1 << ' ' << j + 1 << '\n';
  return os.str();
}

inline Topology from_edge_list(const std::string& text) {
  std::istringstream is(text);
  int n = 0, m = 0;
  if (!(is >> n >> m)) throw ParseError("edge list: bad header");
  std::vector<std::pair<int, int>> edges;
  int i, j;
  while (is >> i >> j) edges.emplace_back(i, j);
  return from_edges(n, m, edges);
}

// Derived operators of the consensus reformulation. The N x N forms are
// materialized densely (desk scale); the extended versions acting on stacked
// N*M vectors are applied blockwise instead of building the Kronecker
// products.
struct GraphOperators {
  Topology topo;
  Mat incidence;           // E x N, +1 on the smaller endpoint of each edge
  Vec degrees;             // d_i
  Mat signed_laplacian;    // A^T A
  Mat signless_laplacian;  // 2D - A^T A
  Mat mixing;              // W = D^{-1}(D - A^T A), row stochastic
  double sigma_min = 0;    // smallest nonzero eigenvalue of A^T A
  double norm_lplus = 0;   // spectral norm of the signless Laplacian

  int n() const { return topo.n_agents; }
  int m() const { return topo.dim_m; }

  Eigen::Map<const Mat> blocks(const Vec& z) const {
    return {z.data(), m(), n()};
  }

  // A z for the extended incidence, one M-block per edge.
  Vec apply_incidence(const Vec& z) const {
    const auto zb = blocks(z);
    Vec out(topo.n_edges() * m());
    for (int k = 0; k < topo.n_edges(); ++k) {
      auto [i, j] = topo.edges[k];
      out.segment(k * m(), m()) = zb.col(i) - zb.col(j);
    }
    return out;
  }

  // A^T y for an edge-stacked vector y.
  Vec apply_incidence_t(const Vec& y) const {
    Vec out = Vec::Zero(n() * m());
    auto ob = Eigen::Map<Mat>(out.data(), m(), n());
    for (int k = 0; k < topo.n_edges(); ++k) {
      auto [i, j] = topo.edges[k];
      ob.col(i) += y.segment(k * m(), m());
      ob.col(j) -= y.segment(k * m(), m());
    }
    return out;
  }

  // L^- z = (d_i z_i - sum of neighbors) per block.
  Vec apply_signed(const Vec& z) const {
    const auto zb = blocks(z);
    Vec out(n() * m());
    auto ob = Eigen::Map<Mat>(out.data(), m(), n());
    for (int i = 0; i < n(); ++i) {
      ob.col(i) = degrees[i] * zb.col(i);
      for (int j : topo.neighbors[i]) ob.col(i) -= zb.col(j);
    }
    return out;
  }

  // L^+ z = (d_i z_i + sum of neighbors) per block.
  Vec apply_signless(const Vec& z) const {
    const auto zb = blocks(z);
    Vec out(n() * m());
    auto ob = Eigen::Map<Mat>(out.data(), m(), n());
    for (int i = 0; i < n(); ++i) {
      ob.col(i) = degrees[i] * zb.col(i);
      for (int j : topo.neighbors[i]) ob.col(i) += zb.col(j);
    }
    return out;
  }

  // W z: neighbor average per block.
  Vec apply_mixing(const Vec& z) const {
    const auto zb = blocks(z);
    Vec out = Vec::Zero(n() * m());
    auto ob = Eigen::Map<Mat>(out.data(), m(), n());
    for (int i = 0; i < n(); ++i) {
      for (int j : topo.neighbors[i]) ob.col(i) += zb.col(j);
      ob.col(i) /= degrees[i];
    }
    return out;
  }
};

inline GraphOperators derive_operators(const Topology& topo) {
  const int n = topo.n_agents;
  const int e = topo.n_edges();
  GraphOperators ops;
  ops.topo = topo;
  ops.incidence = Mat::Zero(e, n);
  for (int k = 0; k < e; ++k) {
    ops.incidence(k, topo.edges[k].first) = 1.0;
    ops.incidence(k, topo.edges[k].second) = -1.0;
  }
  ops.degrees = Vec(n);
  for (int i = 0; i < n; ++i) ops.degrees[i] = topo.degrees[i];
  ops.signed_laplacian = ops.incidence.transpose() * ops.incidence;
  ops.signless_laplacian =
      2.0 * Mat(ops.degrees.asDiagonal()) - ops.signed_laplacian;
  ops.mixing = ops.degrees.cwiseInverse().asDiagonal() *
               (Mat(ops.degrees.asDiagonal()) - ops.signed_laplacian);

  // Spectral constants from the N x N operators; the Kronecker extension
  // replicates eigenvalues, so these equal the extended ones for any M.
  Eigen::SelfAdjointEigenSolver<Mat> es_minus(ops.signed_laplacian);
  ops.sigma_min = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ev = es_minus.eigenvalues()[i];
    if (ev > 1e-9) {
      ops.sigma_min = ev;
      break;
    }
  }
  Eigen::SelfAdjointEigenSolver<Mat> es_plus(ops.signless_laplacian);
  ops.norm_lplus = es_plus.eigenvalues().cwiseAbs().maxCoeff();
  return ops;
}

}  // namespace zonesim
