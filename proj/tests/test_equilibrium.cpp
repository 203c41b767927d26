#include <bit>
#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "wasep/equilibrium.hpp"
#include "wasep/rng.hpp"

using namespace wasep;
using namespace wasep::equilibrium;

namespace {

// Every bridge of length 2N, by brute force over sign sequences.
std::vector<BridgeState> all_bridges(int N) {
  std::vector<BridgeState> out;
  const int L = 2 * N;
  for (unsigned mask = 0; mask < (1u << L); ++mask) {
    if (std::popcount(mask) != N) continue;
    std::vector<std::int32_t> h(static_cast<std::size_t>(L + 1), 0);
    for (int k = 0; k < L; ++k) h[static_cast<std::size_t>(k + 1)] = h[static_cast<std::size_t>(k)] + ((mask >> k & 1u) ? 1 : -1);
    out.emplace_back(h);
  }
  return out;
}

double log_z_enum(int N, double gamma) {
  double m = -1e300;
  std::vector<double> t;
  for (const auto& b : all_bridges(N)) t.push_back(gamma * static_cast<double>(area(b)));
  for (double v : t) m = std::max(m, v);
  double s = 0;
  for (double v : t) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

TEST_CASE("partition function oracles") {
  const auto m1 = make_params(1, 0.5);
  CHECK(std::exp(build_partition_table(m1).log_partition()) ==
        doctest::Approx(std::exp(m1.gamma) + std::exp(-m1.gamma)).epsilon(1e-14));

  // symmetric limit counts bridges: binomial(2N, N)
  for (int N : {1, 2, 5, 10, 20}) {
    const auto m0 = make_params_with_gamma(N, 0.0);
    const double binom = std::lgamma(2.0 * N + 1) - 2 * std::lgamma(N + 1.0);
    CHECK(build_partition_table(m0).log_partition() == doctest::Approx(binom).epsilon(1e-12));
  }
  for (int N = 1; N <= 7; ++N) {
    for (double alpha : {0.2, 0.5, 0.8}) {
      const auto m = make_params(N, alpha);
      const double ref = log_z_enum(N, m.gamma);
      CHECK(build_partition_table(m).log_partition() == doctest::Approx(ref).epsilon(1e-13));
      CHECK(log_partition_streaming(m) == doctest::Approx(ref).epsilon(1e-13));
    }
  }
  CHECK(build_partition_table(make_params(2, 0.5)).log_z(4, 0) == 0.0);
}

TEST_CASE("table stays finite at large N") {
  for (double alpha : {0.1, 0.5, 0.9}) {
    const auto m = make_params(10000, alpha);
    CHECK(std::isfinite(log_partition_streaming(m)));
  }
  const auto m = make_params(2048, 0.1);
  const auto t = build_partition_table(m);
  bool finite = true;
  for (int k = 0; k <= 4096; k += 7) {
    const int hm = std::min(k, 4096 - k);
    for (int h = -hm; h <= hm; h += 2) finite &= std::isfinite(t.log_z(k, h));
  }
  CHECK(finite);
  CHECK(log_partition_streaming(m) == doctest::Approx(t.log_partition()).epsilon(1e-12));
}

TEST_CASE("sampler law at N=1") {
  const auto m = make_params(1, 0.5);
  const auto t = build_partition_table(m);
  const int n = 100000;
  int up = 0;
  for (const auto& s : sample_mu(t, n, 3)) up += s[1] == 1;
  const double p = std::exp(m.gamma) / (std::exp(m.gamma) + std::exp(-m.gamma));
  CHECK(std::abs(up / double(n) - p) <= 3 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("sampler concentrates on the maximal path for large tilt") {
  const auto m = make_params_with_gamma(4, 5.0);
  const auto t = build_partition_table(m);
  // enumeration: probability of the maximal path
  double zmax = 0, z = 0;
  for (const auto& b : all_bridges(4)) {
    const double w = std::exp(5.0 * static_cast<double>(area(b) - 16));
    z += w;
    if (b == maximal_bridge(4)) zmax = w;
  }
  const double pmax = zmax / z;
  CHECK(pmax > 0.99);
  int hits = 0;
  const int n = 20000;
  for (const auto& s : sample_mu(t, n, 4)) hits += s == maximal_bridge(4);
  CHECK(std::abs(hits / double(n) - pmax) <= 4 * std::sqrt(pmax * (1 - pmax) / n) + 1e-4);
}

TEST_CASE("sampler matches enumeration at N=3 (chi-square style per cell)") {
  const auto m = make_params(3, 0.5);
  const auto t = build_partition_table(m);
  const auto bridges = all_bridges(3);
  std::map<std::vector<std::int32_t>, int> hist;
  const int n = 200000;
  for (const auto& s : sample_mu(t, n, 5))
    ++hist[std::vector<std::int32_t>(s.heights().begin(), s.heights().end())];
  const double lz = log_z_enum(3, m.gamma);
  for (const auto& b : bridges) {
    const double p = std::exp(m.gamma * static_cast<double>(area(b)) - lz);
    const double f = hist[std::vector<std::int32_t>(b.heights().begin(), b.heights().end())] / double(n);
    CHECK(std::abs(f - p) <= 4.5 * std::sqrt(p * (1 - p) / n));
  }
}

TEST_CASE("sigma curve") {
  const auto m = make_params(2, 0.5);
  const auto c = sigma_curve(m);
  CHECK(c.value[0] == 0.0);
  CHECK(c.value[4] == 0.0);
  CHECK(c.value[2] == doctest::Approx(std::tanh(1.5) + std::tanh(0.5)).epsilon(1e-15));
  CHECK(c.value[2] == doctest::Approx(1.36727).epsilon(1e-5));
  CHECK(c.x[0] == doctest::Approx(-2 / std::sqrt(4.0)));
  // even about x = 0
  const auto m2 = make_params(50, 0.4);
  const auto c2 = sigma_curve(m2);
  for (int k = 0; k <= 100; ++k)
    CHECK(c2.value[static_cast<std::size_t>(k)] == doctest::Approx(c2.value[static_cast<std::size_t>(100 - k)]).epsilon(1e-12));
}

TEST_CASE("sigma limit against the finite-N curve") {
  CHECK(sigma_limit(0) == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-15));
  CHECK(std::abs(sigma_limit(10) + 10) < 1e-8);
  CHECK(std::abs(sigma_limit(-10) + 10) < 1e-8);
  const double h = 1e-5;
  CHECK(std::abs(sigma_limit(h) - sigma_limit(-h)) < 1e-15);
  CHECK(std::abs((sigma_limit(h) - sigma_limit(-h)) / (2 * h)) < 1e-8);
  // the limit lies below the maximal path profile -|x|
  for (double x = -3; x <= 3; x += 0.25) CHECK(sigma_limit(x) < -std::abs(x));

  const auto m = make_params(100000, 0.5);
  const auto c = sigma_curve(m);
  const double s = m.scale();
  for (double x : {-1.0, -0.5, 0.0, 0.25, 1.0, 2.0}) {
    const double num = (c(x) - m.N) / s;
    CHECK(num == doctest::Approx(sigma_limit(x)).epsilon(2e-3));
  }
}

TEST_CASE("rescaled fluctuation field") {
  const auto m = make_params(2, 0.5);
  const auto top = maximal_bridge(2);
  const auto u = rescale_u(top, m);
  CHECK(u.front() == 0.0);
  CHECK(u.back() == 0.0);
  CHECK(u[2] == doctest::Approx((2 - std::tanh(1.5) - std::tanh(0.5)) / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(u[2] == doctest::Approx(0.44741).epsilon(1e-4));
  const auto c = sigma_curve(m);
  CHECK(rescale_u_at(top, m, c, 0.0) == doctest::Approx(u[2]));
  CHECK(rescale_u_at(top, m, c, -1.0) == 0.0);
  CHECK(rescale_u_at(top, m, c, 5.0) == 0.0);
}

TEST_CASE("limiting covariance") {
  CHECK(balpha_covariance(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(balpha_covariance(-40, 0.5) < 1e-30);
  CHECK(balpha_covariance(1, 2) == balpha_covariance(2, 1));
  // quadrature oracle: q(a,b) = int_a^b sech^2(2u) du, q(-inf,inf) = 1
  auto q = [](double a, double b) {
    const int n = 200000;
    const double h = (b - a) / n;
    double s = 0;
    for (int i = 0; i < n; ++i) {
      const double u = a + (i + 0.5) * h;
      const double ch = std::cosh(2 * u);
      s += 1.0 / (ch * ch);
    }
    return s * h;
  };
  for (auto [x, y] : std::vector<std::pair<double, double>>{{1, 2}, {-0.5, 0.3}, {0, 0}, {-1, 1}}) {
    const double ref = q(-20, x) * q(y, 20);
    CHECK(balpha_covariance(x, y) == doctest::Approx(ref).epsilon(1e-8));
  }
  // positive semi-definite on random point sets (Cholesky with tolerance)
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> U(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    const int P = 8;
    std::vector<double> pts(P);
    for (auto& p : pts) p = U(g);
    std::vector<double> A(P * P);
    for (int i = 0; i < P; ++i)
      for (int j = 0; j < P; ++j) A[i * P + j] = balpha_covariance(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
    // smallest eigenvalue >= -1e-10 via Gershgorin-free check: add shift and
    // attempt Cholesky
    for (int i = 0; i < P; ++i) A[i * P + i] += 1e-10;
    bool ok = true;
    for (int j = 0; j < P && ok; ++j) {
      double d = A[j * P + j];
      for (int k = 0; k < j; ++k) d -= A[j * P + k] * A[j * P + k];
      if (d < 0) ok = false;
      d = std::sqrt(std::max(d, 0.0));
      A[j * P + j] = d;
      for (int i = j + 1; i < P; ++i) {
        double s = A[i * P + j];
        for (int k = 0; k < j; ++k) s -= A[i * P + k] * A[j * P + k];
        A[i * P + j] = d > 0 ? s / d : 0.0;
      }
    }
    CHECK(ok);
  }
}

TEST_CASE("empirical covariance") {
  std::vector<std::vector<double>> same(10, std::vector<double>{1.0, 2.0, -3.0});
  const auto e = empirical_covariance(same);
  for (double v : e.cov.v) CHECK(v == 0.0);
  CHECK_THROWS(empirical_covariance({{1.0, 2.0}}));

  // synthetic correlated Gaussians: x = a, y = a/2 + b
  Rng rng(77);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 20000; ++i) {
    const double a = rng.normal(), b = rng.normal();
    rows.push_back({a, 0.5 * a + b});
  }
  const auto est = empirical_covariance(rows);
  const double truth[2][2] = {{1.0, 0.5}, {0.5, 1.25}};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(est.cov(i, j) == est.cov(j, i));
      CHECK(std::abs(est.cov(i, j) - truth[i][j]) <= 3 * est.se(i, j));
      CHECK(est.se(i, j) > 0);
    }
}

TEST_CASE("centering of u under the invariant measure") {
  const auto m = make_params(128, 0.5);
  const auto t = build_partition_table(m);
  const auto c = sigma_curve(m);
  const int n = 4000;
  std::vector<stats::Running> acc(257);
  for (const auto& s : sample_mu(t, n, 8)) {
    const auto u = rescale_u(s, m, c);
    for (std::size_t k = 0; k < u.size(); ++k) acc[k].add(u[k]);
  }
  const double det = 5 * std::pow(2.0 * m.N, -m.alpha / 2);
  for (const auto& a : acc) CHECK(std::abs(a.mean()) <= std::max(3 * a.se(), det));
}
