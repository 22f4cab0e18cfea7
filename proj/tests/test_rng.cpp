#include <catch2/catch_amalgamated.hpp>

#include "zonesim/rng.hpp"

using namespace zonesim;

TEST_CASE("streams are deterministic and keyed") {
  rng::Stream a(rng::key(1, rng::Purpose::kPerturbation, 3, 7));
  rng::Stream b(rng::key(1, rng::Purpose::kPerturbation, 3, 7));
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  rng::Stream c(rng::key(1, rng::Purpose::kPerturbation, 3, 8));
  rng::Stream d(rng::key(1, rng::Purpose::kNoise, 3, 7));
  REQUIRE(a.next_u64() != c.next_u64());
  REQUIRE(a.next_u64() != d.next_u64());
}

TEST_CASE("uniform draws live in [0,1)") {
  rng::Stream s(rng::key(2, rng::Purpose::kInit));
  for (int i = 0; i < 10000; ++i) {
    const double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal draws have standard moments") {
  rng::Stream s(rng::key(3, rng::Purpose::kInit));
  const int n = 200000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.01);
  REQUIRE(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("trial seeds decorrelate trials") {
  REQUIRE(rng::trial_seed(1, 0) != rng::trial_seed(1, 1));
  REQUIRE(rng::trial_seed(1, 0) != rng::trial_seed(2, 0));
}
