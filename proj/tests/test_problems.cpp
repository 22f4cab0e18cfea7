#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "zonesim/problems.hpp"

using namespace zonesim;
using Catch::Matchers::WithinAbs;

namespace {

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// reconstruct the coefficient draws of the generators
std::pair<double, double> siglog_coeffs(std::uint64_t seed, int agent) {
  rng::Stream s(rng::key(seed, rng::Purpose::kCoefficients, agent));
  const double a = s.normal();
  const double b = s.normal();
  return {a, b};
}

Vec central_difference(const ScalarField& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  Vec e = x;
  for (int i = 0; i < x.size(); ++i) {
    e[i] = x[i] + h;
    const double up = f.value(e);
    e[i] = x[i] - h;
    const double dn = f.value(e);
    e[i] = x[i];
    g[i] = (up - dn) / (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("sigmoid-log family matches its closed form") {
  const auto p = make_sigmoid_log(5, 21);
  REQUIRE(p.dim_m == 1);
  REQUIRE(p.n_agents == 5);

  for (int i = 0; i < 5; ++i) {
    const auto [a, b] = siglog_coeffs(21, i);
    Vec z(1);
    for (double zv : {-2.0, 0.0, 0.7, 3.1}) {
      z[0] = zv;
      const double expected = a * sig(zv) + b * std::log1p(zv * zv);
      REQUIRE_THAT(p.locals[i].field.value(z), WithinAbs(expected, 1e-12));
      const double grad = a * sig(zv) * (1 - sig(zv)) +
                          2 * b * zv / (1 + zv * zv);
      REQUIRE_THAT(p.locals[i].gradient(z)[0], WithinAbs(grad, 1e-12));
    }
    // at the origin only the sigmoid part contributes
    z[0] = 0.0;
    REQUIRE_THAT(p.locals[i].field.value(z), WithinAbs(a * 0.5, 1e-12));
    REQUIRE_THAT(p.locals[i].gradient(z)[0], WithinAbs(a / 4.0, 1e-12));
    REQUIRE_THAT(p.locals[i].grad_bound,
                 WithinAbs(std::abs(a) / 4 + std::abs(b), 1e-12));
  }
}

TEST_CASE("sigmoid-log analytic gradients agree with central differences") {
  const auto p = make_sigmoid_log(4, 3);
  rng::Stream s(rng::key(77, rng::Purpose::kInit));
  for (int rep = 0; rep < 100; ++rep) {
    Vec z(1);
    z[0] = 4.0 * s.normal();
    for (const auto& local : p.locals) {
      const double analytic = local.gradient(z)[0];
      const double fd = central_difference(local.field, z)[0];
      const double scale = std::max(1.0, std::abs(analytic));
      REQUIRE(std::abs(analytic - fd) <= 1e-6 * scale);
    }
  }
}

TEST_CASE("sparse quadratic family matches its closed form") {
  const int n = 3, m = 6;
  const double ell = 2.0;
  const auto p = make_sparse_quadratic(n, m, ell, 9);
  REQUIRE(p.nonsmooth == NonsmoothKind::kL1Ball);
  REQUIRE(p.l1_radius == ell);

  for (int i = 0; i < n; ++i) {
    rng::Stream s(rng::key(9, rng::Purpose::kCoefficients, i));
    Mat raw(m, m);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) raw(r, c) = s.normal() / std::sqrt(double(m));
    Mat gm = 0.5 * (raw + raw.transpose());
    Vec cv(m);
    for (int r = 0; r < m; ++r) cv[r] = s.normal();

    rng::Stream xs(rng::key(100 + i, rng::Purpose::kInit));
    Vec x(m);
    for (int k = 0; k < m; ++k) x[k] = 0.4 * xs.normal();
    REQUIRE_THAT(p.locals[i].field.value(x),
                 WithinAbs(x.dot(gm * x) - cv.dot(x), 1e-12));
    REQUIRE((p.locals[i].gradient(x) - (2.0 * (gm * x) - cv))
                .cwiseAbs()
                .maxCoeff() <= 1e-12);
  }
}

TEST_CASE("sparse quadratic batched values match the scalar path") {
  const auto p = make_sparse_quadratic(2, 5, 1.5, 4);
  rng::Stream s(rng::key(5, rng::Purpose::kInit));
  Vec x(5);
  for (int k = 0; k < 5; ++k) x[k] = 0.3 * s.normal();
  Mat dirs(5, 7);
  for (int c = 0; c < 7; ++c)
    for (int r = 0; r < 5; ++r) dirs(r, c) = s.normal();
  const double mu = 0.05;
  for (const auto& local : p.locals) {
    REQUIRE(local.field.shifted_values != nullptr);
    const Vec batch = local.field.shifted_values(x, dirs, mu);
    for (int c = 0; c < 7; ++c) {
      const double scalar = local.field.value(x + mu * dirs.col(c));
      REQUIRE_THAT(batch[c], WithinAbs(scalar, 1e-10));
    }
  }
}

TEST_CASE("sparse quadratic gradients agree with central differences") {
  const auto p = make_sparse_quadratic(10, 100, 5.0, 3);
  rng::Stream s(rng::key(6, rng::Purpose::kInit));
  Vec x(100);
  for (int k = 0; k < 100; ++k) x[k] = 0.05 * s.normal();
  for (const auto& local : p.locals) {
    const Vec analytic = local.gradient(x);
    const Vec fd = central_difference(local.field, x, 1e-6);
    const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
    REQUIRE((analytic - fd).cwiseAbs().maxCoeff() <= 1e-5 * scale);
  }
}

TEST_CASE("declared constants bound gradients on the evaluation region") {
  SECTION("sparse quadratic on the l1 ball") {
    const auto p = make_sparse_quadratic(4, 8, 2.0, 12);
    rng::Stream s(rng::key(13, rng::Purpose::kInit));
    for (int rep = 0; rep < 100; ++rep) {
      Vec u(8), v(8);
      for (int k = 0; k < 8; ++k) u[k] = 2.0 * s.normal();
      for (int k = 0; k < 8; ++k) v[k] = 2.0 * s.normal();
      const Vec x = l1_ball_project(u, p.l1_radius);
      const Vec y = l1_ball_project(v, p.l1_radius);
      for (const auto& local : p.locals) {
        REQUIRE(local.gradient(x).norm() <= local.grad_bound * (1 + 1e-12));
        REQUIRE((local.gradient(x) - local.gradient(y)).norm() <=
                local.smoothness * (x - y).norm() * (1 + 1e-12));
      }
    }
  }
  SECTION("sigmoid-log on the scan interval") {
    const auto p = make_sigmoid_log(6, 8);
    rng::Stream s(rng::key(14, rng::Purpose::kInit));
    for (int rep = 0; rep < 100; ++rep) {
      Vec x(1), y(1);
      x[0] = 9.9 * (s.uniform() * 2 - 1);
      y[0] = 9.9 * (s.uniform() * 2 - 1);
      for (const auto& local : p.locals) {
        REQUIRE(local.gradient(x).norm() <= local.grad_bound * (1 + 1e-12));
        REQUIRE((local.gradient(x) - local.gradient(y)).norm() <=
                local.smoothness * (x - y).cwiseAbs().maxCoeff() * (1 + 1e-9));
      }
    }
  }
}

TEST_CASE("aggregates and helpers") {
  const auto p = make_sigmoid_log(3, 2);
  double sum = 0, mx = 0, ksq = 0;
  for (const auto& l : p.locals) {
    sum += l.smoothness;
    mx = std::max(mx, l.smoothness);
    ksq += l.grad_bound * l.grad_bound;
  }
  REQUIRE_THAT(p.smoothness_sum, WithinAbs(sum, 1e-12));
  REQUIRE_THAT(p.smoothness_max, WithinAbs(mx, 1e-12));
  REQUIRE_THAT(p.grad_bound_stacked(), WithinAbs(std::sqrt(ksq), 1e-12));

  Vec z(3);
  z << 0.1, -0.4, 2.0;
  double expect = 0;
  for (int i = 0; i < 3; ++i)
    expect += p.locals[i].field.value(z.segment(i, 1));
  REQUIRE_THAT(p.value_stacked(z), WithinAbs(expect, 1e-12));

  Vec x(1);
  x << 0.3;
  REQUIRE_THAT(p.value_shared(x),
               WithinAbs(p.locals[0].field.value(x) +
                             p.locals[1].field.value(x) +
                             p.locals[2].field.value(x),
                         1e-12));

  // instances are reconstructible from their recipe
  const auto q = make_sigmoid_log(3, 2);
  REQUIRE(q.value_stacked(z) == p.value_stacked(z));
}
