#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "wasep/core.hpp"
#include "wasep/rng.hpp"

using namespace wasep;

namespace {

BridgeState B(std::vector<std::int32_t> h) { return BridgeState(std::move(h)); }

BridgeState random_bridge(int N, std::mt19937_64& g) {
  std::vector<std::uint8_t> e(static_cast<std::size_t>(2 * N), 0);
  for (int i = 0; i < N; ++i) e[static_cast<std::size_t>(i)] = 1;
  std::shuffle(e.begin(), e.end(), g);
  return occupation_to_height(Occupation{e});
}

double ulps_apart(double a, double b) {
  return std::abs(a - b) / (std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("make_params at N=8, alpha=1/2") {
  const auto m = make_params(8, 0.5);
  CHECK(m.gamma == doctest::Approx(0.5).epsilon(1e-15));
  // long double oracle for the closed forms
  const long double g = 0.5L;
  const long double p = 1.0L / (1.0L + std::exp(-2.0L * g));
  const long double c = 256.0L / (2.0L * std::cosh(g));
  const long double lam = c * (std::exp(g) - 2.0L + std::exp(-g));
  CHECK(m.p == doctest::Approx(static_cast<double>(p)).epsilon(1e-15));
  CHECK(m.p == doctest::Approx(0.731059).epsilon(1e-6));
  CHECK(m.c == doctest::Approx(static_cast<double>(c)).epsilon(1e-14));
  CHECK(m.c == doctest::Approx(113.512).epsilon(1e-5));
  CHECK(m.lambda == doctest::Approx(static_cast<double>(lam)).epsilon(1e-13));
  CHECK(m.lambda == doctest::Approx(28.974).epsilon(1e-4));
  CHECK(m.scale() == doctest::Approx(4.0));
}

TEST_CASE("make_params rejects bad input") {
  CHECK_THROWS_AS(make_params(0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_params(4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_params(4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_params(4, 1.5), std::invalid_argument);
  CHECK_NOTHROW(make_params(1, 0.5));
}

TEST_CASE("parameter closed forms over a sweep") {
  for (double alpha : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    for (int N : {1, 2, 3, 10, 77, 1000, 4096, 99991, 1000000}) {
      const auto m = make_params(N, alpha);
      const long double s = std::pow(2.0L * N, static_cast<long double>(alpha));
      const long double g = 2.0L / s;
      CHECK(ulps_apart(m.gamma, static_cast<double>(g)) <= 4);
      // p/(1-p) against exp(4 (2N)^-alpha); p and q carry independent roundings
      const long double ratio = static_cast<long double>(m.p) / static_cast<long double>(m.q);
      CHECK(ulps_apart(static_cast<double>(ratio), static_cast<double>(std::exp(2.0L * g))) <= 4);
      CHECK(m.p > 0.5);
      CHECK(m.p < 1.0);
      CHECK(ulps_apart(m.p + m.q, 1.0) <= 2);
      const long double c = std::pow(s, 4.0L) / (std::exp(g) + std::exp(-g));
      CHECK(ulps_apart(m.c, static_cast<double>(c)) <= 16);
      const long double lam = c * 4.0L * std::sinh(g / 2) * std::sinh(g / 2);
      CHECK(ulps_apart(m.lambda, static_cast<double>(lam)) <= 16);
    }
  }
}

TEST_CASE("bridge invariants") {
  CHECK_THROWS_AS(B({0, 1, 1, 1, 0}), InvariantError);
  CHECK_THROWS_AS(B({1, 0, 1}), InvariantError);
  CHECK_THROWS_AS(B({0, 1, 2, 3, 2}), InvariantError);
  CHECK_THROWS_AS(B({0, 1}), InvariantError);
  CHECK_NOTHROW(B({0, 1, 0}));
}

TEST_CASE("area") {
  CHECK(area(B({0, 1, 2, 1, 0})) == 4);
  CHECK(area(B({0, -1, 0, -1, 0})) == -2);
  CHECK(area(B({0, 1, 2, 1, 0})) == -area(B({0, -1, -2, -1, 0})));
}

TEST_CASE("discrete laplacian") {
  CHECK(discrete_laplacian(B({0, 1, 0, 1, 0}), 2) == 2);
  CHECK(discrete_laplacian(B({0, 1, 0, 1, 0}), 1) == -2);
  CHECK(discrete_laplacian(B({0, 1, 2, 1, 0}), 2) == -2);
  CHECK_THROWS_AS(discrete_laplacian(B({0, 1, 0, 1, 0}), 0), std::out_of_range);
  CHECK_THROWS_AS(discrete_laplacian(B({0, 1, 0, 1, 0}), 4), std::out_of_range);
}

TEST_CASE("flip") {
  CHECK(flip(B({0, 1, 0, 1, 0}), 2) == B({0, 1, 2, 1, 0}));
  CHECK(flip(B({0, 1, 2, 1, 0}), 2) == B({0, 1, 0, 1, 0}));
  CHECK(flip(B({0, 1, 0, 1, 0}), 1) == B({0, -1, 0, 1, 0}));
  CHECK_THROWS_AS(flip(B({0, 1, 2, 1, 0}), 1), NoCornerError);
  CHECK_THROWS_AS(flip(B({0, 1, 2, 1, 0}), 0), NoCornerError);
}

TEST_CASE("corner sets") {
  auto cs = corner_sets(B({0, 1, 0, 1, 0}));
  CHECK(cs.down == std::vector<int>{2});
  CHECK(cs.up == std::vector<int>{1, 3});
  cs = corner_sets(B({0, 1, 2, 1, 0}));
  CHECK(cs.down.empty());
  CHECK(cs.up == std::vector<int>{2});
  cs = corner_sets(B({0, -1, -2, -1, 0}));
  CHECK(cs.down == std::vector<int>{2});
  CHECK(cs.up.empty());
}

TEST_CASE("built-in bridges") {
  CHECK(flat_initial(2) == B({0, 1, 0, 1, 0}));
  for (int N : {1, 2, 5, 64}) {
    CHECK(area(flat_initial(N)) == N);
    const auto o = height_to_occupation(flat_initial(N));
    for (int k = 1; k <= 2 * N; ++k) CHECK(o.eta[static_cast<std::size_t>(k - 1)] == (k % 2 == 1));
  }
  CHECK(maximal_bridge(2) == B({0, 1, 2, 1, 0}));
  CHECK(minimal_bridge(2) == B({0, -1, -2, -1, 0}));
}

TEST_CASE("occupation conversions") {
  CHECK(height_to_occupation(B({0, 1, 0, 1, 0})).eta == std::vector<std::uint8_t>{1, 0, 1, 0});
  CHECK(occupation_to_height(Occupation{{1, 1, 0, 0}}) == B({0, 1, 2, 1, 0}));
  CHECK_THROWS_AS(occupation_to_height(Occupation{{1, 1, 1, 0}}), InvariantError);
}

TEST_CASE("random bridge properties") {
  std::mt19937_64 g(12345);
  for (int trial = 0; trial < 500; ++trial) {
    const int N = 1 + static_cast<int>(g() % 40);
    const auto s = random_bridge(N, g);
    const auto o = height_to_occupation(s);
    CHECK(o.mass() == N);
    CHECK(occupation_to_height(o) == s);
    const auto cs = corner_sets(s);
    std::vector<int> kind(static_cast<std::size_t>(2 * N + 1), 0);
    for (int k : cs.down) kind[static_cast<std::size_t>(k)] = 2;
    for (int k : cs.up) kind[static_cast<std::size_t>(k)] = -2;
    for (int k = 1; k < 2 * N; ++k) {
      const int lap = discrete_laplacian(s, k);
      CHECK(lap == kind[static_cast<std::size_t>(k)]);
      if (lap != 0) {
        const auto f = flip(s, k);
        CHECK(std::abs(area(f) - area(s)) == 2);
        CHECK(area(f) - area(s) == lap);
        CHECK(flip(f, k) == s);
      }
    }
  }
}

TEST_CASE("csv and hex formats") {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 100; ++trial) {
    const int N = 1 + static_cast<int>(g() % 30);
    const auto s = random_bridge(N, g);
    CHECK(bridge_from_csv(bridge_to_csv(s)) == s);
    const auto o = height_to_occupation(s);
    CHECK(occupation_from_hex(occupation_to_hex(o), o.sites()) == o);
  }
  CHECK(bridge_to_csv(B({0, 1, 0, -1, 0})) == "0,1,0,-1,0");
  CHECK(bridge_from_csv("0, 1, 2, 1, 0\n") == B({0, 1, 2, 1, 0}));
  CHECK_THROWS_AS(bridge_from_csv("0,1,x"), InvariantError);
  // site 1 is the most significant bit of the first digit
  CHECK(occupation_to_hex(Occupation{{1, 1, 0, 0}}) == "c");
  CHECK(occupation_to_hex(Occupation{{1, 0, 0, 0, 0, 1}}) == "84");
  CHECK_THROWS_AS(occupation_from_hex("85", 6), InvariantError);
  CHECK_THROWS_AS(occupation_from_hex("8", 6), InvariantError);
}

TEST_CASE("rng reproducibility and ranges") {
  Rng a(derive_seed(42, 3)), b(derive_seed(42, 3)), c(derive_seed(42, 4));
  bool differ = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.bits(), y = b.bits(), z = c.bits();
    CHECK(x == y);
    differ |= x != z;
  }
  CHECK(differ);
  Rng r(1);
  double mean = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    mean += u;
    CHECK(r.below(7) < 7);
  }
  CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
}
