#include <catch2/catch_amalgamated.hpp>

#include "zonesim/graph.hpp"
#include "zonesim/rng.hpp"

using namespace zonesim;
using Catch::Matchers::WithinAbs;

namespace {

// Dense Kronecker product, reference implementation for the extended
// operators.
Mat kron_identity(const Mat& a, int m) {
  Mat out = Mat::Zero(a.rows() * m, a.cols() * m);
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c)
      out.block(r * m, c * m, m, m) = a(r, c) * Mat::Identity(m, m);
  return out;
}

Vec random_vec(int n, std::uint64_t seed) {
  rng::Stream s(rng::key(seed, rng::Purpose::kInit));
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = s.normal();
  return v;
}

}  // namespace

TEST_CASE("from_edges canonicalizes and validates") {
  const auto t = from_edges(4, 1, {{1, 2}, {1, 4}, {3, 4}});
  REQUIRE(t.degrees == std::vector<int>{2, 1, 1, 2});
  REQUIRE(t.edges == std::vector<std::pair<int, int>>{{0, 1}, {0, 3}, {2, 3}});

  REQUIRE(from_edges(2, 1, {{1, 2}}).degrees == std::vector<int>{1, 1});
  REQUIRE(from_edges(3, 1, {{1, 2}, {1, 3}, {2, 3}}).degrees ==
          std::vector<int>{2, 2, 2});

  // order and duplicates do not matter
  const auto t2 = from_edges(4, 1, {{3, 4}, {2, 1}, {1, 4}, {1, 2}});
  REQUIRE(t2.edges == t.edges);

  REQUIRE_THROWS_AS(from_edges(3, 1, {{1, 1}}), InvalidEdge);
  REQUIRE_THROWS_AS(from_edges(3, 1, {{0, 2}}), InvalidEdge);
  REQUIRE_THROWS_AS(from_edges(3, 1, {{2, 4}}), InvalidEdge);
  REQUIRE_THROWS_AS(from_edges(4, 1, {{1, 2}, {3, 4}}), DisconnectedGraph);
}

TEST_CASE("incidence matrix matches the orientation convention") {
  const auto ops = derive_operators(from_edges(4, 1, {{1, 2}, {1, 4}, {3, 4}}));
  Mat expected(3, 4);
  expected << 1, -1, 0, 0,
              1, 0, 0, -1,
              0, 0, 1, -1;
  REQUIRE((ops.incidence - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("path graph operators and spectra") {
  const auto ops = derive_operators(from_edges(3, 1, {{1, 2}, {2, 3}}));
  Mat lm(3, 3), lp(3, 3), w(3, 3);
  lm << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  lp << 1, 1, 0, 1, 2, 1, 0, 1, 1;
  w << 0, 1, 0, 0.5, 0, 0.5, 0, 1, 0;
  REQUIRE((ops.signed_laplacian - lm).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((ops.signless_laplacian - lp).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((ops.mixing - w).cwiseAbs().maxCoeff() <= 1e-15);
  REQUIRE_THAT(ops.sigma_min, WithinAbs(1.0, 1e-10));
  REQUIRE_THAT(ops.norm_lplus, WithinAbs(3.0, 1e-10));
}

TEST_CASE("random geometric graphs") {
  SECTION("diameter below the radius gives a complete graph") {
    const auto t = random_geometric(3, 1, 1.5, 123);
    REQUIRE(t.n_edges() == 3);
  }
  SECTION("benchmark-scale samples are connected") {
    int retries = -1;
    const auto t = random_geometric(20, 1, 0.6, 7, &retries);
    REQUIRE(t.n_agents == 20);
    REQUIRE(retries >= 0);
    const auto t2 = random_geometric(10, 1, 0.5, 1);
    REQUIRE(t2.n_agents == 10);
  }
  SECTION("same seed reproduces the sample") {
    const auto a = random_geometric(10, 1, 0.5, 42);
    const auto b = random_geometric(10, 1, 0.5, 42);
    REQUIRE(a.edges == b.edges);
  }
}

TEST_CASE("structural identities hold on random graphs") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto ops = derive_operators(random_geometric(12, 1, 0.5, seed));
    const int n = ops.n();
    REQUIRE((ops.mixing.rowwise().sum() - Vec::Ones(n)).cwiseAbs().maxCoeff() <=
            1e-12);
    REQUIRE(ops.mixing.minCoeff() >= 0.0);
    const Mat two_d = 2.0 * Mat(ops.degrees.asDiagonal());
    REQUIRE((ops.signless_laplacian + ops.signed_laplacian - two_d)
                .cwiseAbs()
                .maxCoeff() == 0.0);
    const Mat lhs = 0.5 * ops.degrees.cwiseInverse().asDiagonal() *
                    ops.signless_laplacian;
    const Mat rhs = 0.5 * (Mat::Identity(n, n) + ops.mixing);
    REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE((ops.signed_laplacian * Vec::Ones(n)).cwiseAbs().maxCoeff() <=
            1e-12);

    const Vec z = random_vec(n, seed + 100);
    const Vec wz = ops.apply_mixing(z);
    for (int i = 0; i < n; ++i) {
      double avg = 0;
      for (int j : ops.topo.neighbors[i]) avg += z[j];
      REQUIRE_THAT(wz[i], WithinAbs(avg / ops.topo.degrees[i], 1e-12));
    }
  }
}

TEST_CASE("extended operators agree with dense Kronecker forms") {
  for (int m : {1, 2, 3}) {
    const auto topo = from_edges(5, m, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {1, 5}});
    const auto ops = derive_operators(topo);
    const Mat a_ext = kron_identity(ops.incidence, m);
    const Vec z = random_vec(5 * m, 50 + m);
    REQUIRE((ops.apply_incidence(z) - a_ext * z).cwiseAbs().maxCoeff() <= 1e-12);
    const Vec y = random_vec(topo.n_edges() * m, 60 + m);
    REQUIRE((ops.apply_incidence_t(y) - a_ext.transpose() * y)
                .cwiseAbs()
                .maxCoeff() <= 1e-12);
    REQUIRE((ops.apply_signed(z) - a_ext.transpose() * (a_ext * z))
                .cwiseAbs()
                .maxCoeff() <= 1e-12);
    const Mat lp_ext = kron_identity(ops.signless_laplacian, m);
    REQUIRE((ops.apply_signless(z) - lp_ext * z).cwiseAbs().maxCoeff() <= 1e-12);

    // eigenvalues replicate under the extension
    Eigen::SelfAdjointEigenSolver<Mat> es(a_ext.transpose() * a_ext);
    double sigma_min_ext = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()[i] > 1e-9) {
        sigma_min_ext = es.eigenvalues()[i];
        break;
      }
    REQUIRE_THAT(ops.sigma_min, WithinAbs(sigma_min_ext, 1e-10));
  }
}

TEST_CASE("edge-list text round trip") {
  const auto t = from_edges(4, 2, {{1, 2}, {1, 4}, {3, 4}});
  const auto back = from_edge_list(to_edge_list(t));
  REQUIRE(back.n_agents == t.n_agents);
  REQUIRE(back.dim_m == t.dim_m);
  REQUIRE(back.edges == t.edges);
  REQUIRE_THROWS_AS(from_edge_list("garbage"), ParseError);
}
