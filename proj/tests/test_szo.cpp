#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "zonesim/szo.hpp"

using namespace zonesim;
using Catch::Matchers::WithinAbs;

TEST_CASE("evaluate returns noisy function values") {
  const ScalarField norm_sq = make_field([](const Vec& z) {
    return z.squaredNorm();
  });
  Vec z(2);
  z << 1, 2;

  rng::Stream noise(rng::key(1, rng::Purpose::kNoise));
  long calls = 0;
  REQUIRE(evaluate(norm_sq, z, 0.0, noise, &calls) == 5.0);
  REQUIRE(calls == 1);

  SECTION("noise statistics") {
    const ScalarField zero = make_field([](const Vec&) { return 0.0; });
    const int n = 1000000;
    double sum = 0, sq = 0;
    rng::Stream stream(rng::key(2, rng::Purpose::kNoise));
    for (int i = 0; i < n; ++i) {
      const double v = evaluate(zero, z, 0.01, stream);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    REQUIRE(std::abs(mean) <= 3 * 0.01 / std::sqrt(double(n)));
    REQUIRE(std::abs(sd - 0.01) <= 3 * 0.01 / std::sqrt(2.0 * n));
  }

  SECTION("fixed seed repeats the value") {
    rng::Stream s1(rng::key(3, rng::Purpose::kNoise));
    rng::Stream s2(rng::key(3, rng::Purpose::kNoise));
    REQUIRE(evaluate(norm_sq, z, 0.5, s1) == evaluate(norm_sq, z, 0.5, s2));
  }

  SECTION("non-finite values are a domain error") {
    const ScalarField bad = make_field([](const Vec&) {
      return std::numeric_limits<double>::quiet_NaN();
    });
    rng::Stream s(rng::key(4, rng::Purpose::kNoise));
    REQUIRE_THROWS_AS(evaluate(bad, z, 0.0, s), DomainError);
  }
}

TEST_CASE("estimator on a linear function is unbiased") {
  Vec c(2);
  c << 1.5, -0.5;
  const ScalarField f = make_field([c](const Vec& z) { return c.dot(z); });
  OracleSpec spec;
  spec.smoothing = 0.3;
  spec.batch = 1;
  spec.dim = 2;
  spec.grad_bound = c.norm();

  Vec z = Vec::Zero(2);
  Vec mean = Vec::Zero(2);
  const int reps = 200000;
  long calls = 0;
  for (int r = 0; r < reps; ++r) {
    rng::Stream phi(rng::key(10, rng::Purpose::kPerturbation, 0, r));
    rng::Stream noise(rng::key(10, rng::Purpose::kNoise, 0, r));
    const auto s = estimate(f, z, spec, phi, noise, &calls);
    REQUIRE(s.evals == 2);
    mean += s.value;
  }
  mean /= reps;
  REQUIRE(calls == 2L * reps);
  const double se = std::sqrt(variance_bound(spec) / reps);
  REQUIRE((mean - c).cwiseAbs().maxCoeff() <= 3 * se);
}

TEST_CASE("estimator with a pinned direction matches the closed form") {
  // half squared norm at the origin: one sample gives (mu/2)||phi||^2 phi
  const ScalarField f = make_field([](const Vec& z) {
    return 0.5 * z.squaredNorm();
  });
  OracleSpec spec;
  spec.smoothing = 0.2;
  spec.batch = 1;
  const int q = 3;

  rng::Stream peek(rng::key(20, rng::Purpose::kPerturbation, 0, 0));
  Vec phi_val(q);
  for (int k = 0; k < q; ++k) phi_val[k] = peek.normal();

  rng::Stream phi(rng::key(20, rng::Purpose::kPerturbation, 0, 0));
  rng::Stream noise(rng::key(20, rng::Purpose::kNoise, 0, 0));
  const auto s = estimate(f, Vec::Zero(q), spec, phi, noise);
  const Vec expected = 0.5 * spec.smoothing * phi_val.squaredNorm() * phi_val;
  REQUIRE((s.value - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("estimator mean approaches the smoothed gradient of a quadratic") {
  Mat p = Mat::Identity(2, 2);
  const ScalarField f = make_field([p](const Vec& z) {
    return 0.5 * z.dot(p * z);
  });
  OracleSpec spec;
  spec.smoothing = 0.1;
  spec.batch = 10;
  spec.dim = 2;
  spec.smoothness = 1.0;
  spec.grad_bound = 2.0;

  Vec z(2);
  z << 1, 0;
  SmoothReferenceParams ref;
  ref.quad_matrix = p;
  const auto [val, grad] = smoothed_reference(SmoothKind::kQuadratic, ref, z,
                                              spec.smoothing);
  (void)val;
  REQUIRE((grad - z).norm() == 0.0);  // smoothing leaves the gradient

  Vec mean = Vec::Zero(2);
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    rng::Stream phi(rng::key(30, rng::Purpose::kPerturbation, 0, r));
    rng::Stream noise(rng::key(30, rng::Purpose::kNoise, 0, r));
    mean += estimate(f, z, spec, phi, noise).value;
  }
  mean /= reps;
  const double se = std::sqrt(variance_bound(spec) / reps);
  REQUIRE((mean - grad).cwiseAbs().maxCoeff() <= 4 * se);
}

TEST_CASE("variance bound formula") {
  OracleSpec spec;
  spec.dim = 2;
  spec.grad_bound = 1.0;
  spec.noise_std = 0.01;
  spec.smoothing = 0.1;
  spec.smoothness = 1.0;
  spec.batch = 1;
  REQUIRE_THAT(variance_bound(spec), WithinAbs(4.0804, 1e-12));
  spec.batch = 10;
  REQUIRE_THAT(variance_bound(spec), WithinAbs(0.40804, 1e-12));

  OracleSpec zero;
  zero.dim = 7;
  zero.batch = 3;
  zero.smoothing = 0.0;
  REQUIRE(variance_bound(zero) == 0.0);
}

TEST_CASE("empirical second moment respects the variance bound") {
  Mat p(2, 2);
  p << 1.0, 0.25, 0.25, 0.5;
  const ScalarField f = make_field([p](const Vec& z) {
    return 0.5 * z.dot(p * z);
  });
  Vec z(2);
  z << 0.7, -0.3;

  OracleSpec spec;
  spec.smoothing = 0.05;
  spec.noise_std = 0.01;
  spec.batch = 5;
  spec.dim = 2;
  Eigen::SelfAdjointEigenSolver<Mat> es(p);
  spec.smoothness = es.eigenvalues().cwiseAbs().maxCoeff();
  // gradient bound over the sampled neighbourhood of z
  spec.grad_bound = (p * z).norm() + spec.smoothness * spec.smoothing * 10.0;

  SmoothReferenceParams ref;
  ref.quad_matrix = p;
  const auto [val, sgrad] = smoothed_reference(SmoothKind::kQuadratic, ref, z,
                                               spec.smoothing);
  (void)val;
  double second = 0.0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    rng::Stream phi(rng::key(40, rng::Purpose::kPerturbation, 0, r));
    rng::Stream noise(rng::key(40, rng::Purpose::kNoise, 0, r));
    second += (estimate(f, z, spec, phi, noise).value - sgrad).squaredNorm();
  }
  second /= reps;
  REQUIRE(second <= variance_bound(spec));
}

TEST_CASE("smoothed references") {
  SmoothReferenceParams lin;
  lin.linear_coeff = Vec(2);
  lin.linear_coeff << 1, 1;
  const auto [lv, lg] = smoothed_reference(SmoothKind::kLinear, lin,
                                           Vec::Zero(2), 0.5);
  REQUIRE(lv == 0.0);
  REQUIRE((lg - lin.linear_coeff).norm() == 0.0);

  SmoothReferenceParams quad;
  quad.quad_matrix = Mat::Identity(2, 2);
  Vec z(2);
  z << 1, 1;
  const auto [qv, qg] = smoothed_reference(SmoothKind::kQuadratic, quad, z, 1.0);
  REQUIRE_THAT(qv, WithinAbs(2.0, 1e-12));
  REQUIRE((qg - z).norm() == 0.0);

  const auto [qv0, qg0] = smoothed_reference(SmoothKind::kQuadratic, quad, z,
                                             0.0);
  REQUIRE_THAT(qv0, WithinAbs(0.5 * z.squaredNorm(), 1e-12));
  REQUIRE((qg0 - z).norm() == 0.0);
}

TEST_CASE("shared coupling cancels additive noise exactly") {
  const ScalarField f = make_field([](const Vec& z) {
    return std::sin(z[0]) + 0.25 * z.squaredNorm();
  });
  Vec z(3);
  z << 0.3, -1.0, 2.0;
  OracleSpec noisy;
  noisy.smoothing = 0.1;
  noisy.batch = 16;
  noisy.noise_std = 0.5;
  noisy.coupling = NoiseCoupling::kShared;
  OracleSpec clean = noisy;
  clean.noise_std = 0.0;

  rng::Stream phi_a(rng::key(50, rng::Purpose::kPerturbation, 0, 0));
  rng::Stream noise_a(rng::key(50, rng::Purpose::kNoise, 0, 0));
  rng::Stream phi_b(rng::key(50, rng::Purpose::kPerturbation, 0, 0));
  rng::Stream noise_b(rng::key(50, rng::Purpose::kNoise, 0, 0));
  const auto a = estimate(f, z, noisy, phi_a, noise_a);
  const auto b = estimate(f, z, clean, phi_b, noise_b);
  REQUIRE((a.value - b.value).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("smoothed-gradient deviation is bounded for a smooth scalar field") {
  // a * sig(z) + b * log(1+z^2) in one dimension
  const double a = 1.3, b = 0.8;
  const ScalarField f = make_field([a, b](const Vec& z) {
    return a / (1.0 + std::exp(-z[0])) + b * std::log1p(z[0] * z[0]);
  });
  const double lhat = 0.0962 * a + 2 * b;  // bound on |f''|
  const double mu = 0.05;
  Vec z(1);
  z << 0.4;
  const double sig = 1.0 / (1.0 + std::exp(-z[0]));
  const double grad = a * sig * (1 - sig) + 2 * b * z[0] / (1 + z[0] * z[0]);

  OracleSpec spec;
  spec.smoothing = mu;
  spec.batch = 20;
  spec.dim = 1;
  spec.smoothness = lhat;
  spec.grad_bound = a / 4 + b;

  double mean = 0.0;
  const int reps = 40000;
  for (int r = 0; r < reps; ++r) {
    rng::Stream phi(rng::key(60, rng::Purpose::kPerturbation, 0, r));
    rng::Stream noise(rng::key(60, rng::Purpose::kNoise, 0, r));
    mean += estimate(f, z, spec, phi, noise).value[0];
  }
  mean /= reps;
  const double bias_bound = 0.5 * mu * lhat * std::pow(1.0 + 3.0, 1.5);
  const double slack = 4 * std::sqrt(variance_bound(spec) / reps);
  REQUIRE(std::abs(mean - grad) <= bias_bound + slack);
}
