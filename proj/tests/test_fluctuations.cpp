#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "wasep/fluctuations.hpp"
#include "wasep/heat_kernel.hpp"

using namespace wasep;
using namespace wasep::fluctuations;

namespace {

BridgeState random_bridge(int N, std::mt19937_64& g) {
  // random walk conditioned to return: shuffle N ups and N downs
  std::vector<int> steps(static_cast<std::size_t>(2 * N), -1);
  std::fill(steps.begin(), steps.begin() + N, 1);
  std::shuffle(steps.begin(), steps.end(), g);
  std::vector<std::int32_t> h{0};
  for (int s : steps) h.push_back(h.back() + s);
  return BridgeState(h);
}

}  // namespace

TEST_CASE("hopf-cole transform") {
  const auto m = make_params(16, 1.0 / 3);
  const auto f = hopf_cole(flat_initial(16), 0.0, m);
  for (int l = 0; l <= 32; ++l) {
    const double want = l % 2 ? std::exp(-m.gamma) : 1.0;
    CHECK(f.xi[static_cast<std::size_t>(l)] == doctest::Approx(want).epsilon(1e-15));
    CHECK(f.x[static_cast<std::size_t>(l)] == doctest::Approx((l - 16) / std::pow(32.0, 2.0 / 3)).epsilon(1e-14));
  }
  CHECK((f.h[16] == 0.0 || f.h[16] == m.gamma));

  std::mt19937_64 g(1);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_bridge(16, g);
    const double t = 0.001 * static_cast<double>(g() % 500);
    const auto hc = hopf_cole(s, t, m);
    CHECK(hc.xi.front() == std::exp(m.lambda * t));
    CHECK(hc.xi.back() == std::exp(m.lambda * t));
    for (std::size_t l = 0; l < hc.xi.size(); ++l) {
      CHECK(hc.xi[l] > 0);
      CHECK(std::abs(hc.h[l] + std::log(hc.xi[l])) <= 1e-12 * (1 + std::abs(hc.h[l])));
      CHECK(std::abs(hc.h[l]) <= m.gamma * 16 + m.lambda * t);
    }
  }
  CHECK_THROWS(hopf_cole(flat_initial(8), 0.0, m));
}

TEST_CASE("drift and bracket agree with the jump rates") {
  // generator of xi(k) = exp(-gamma S(k) + lambda t), computed from the flip
  // rates, against c Delta xi and the closed-form bracket
  for (double alpha : {1.0 / 3, 0.25}) {
    const auto m = make_params(16, alpha);
    const double s4 = std::pow(32.0, 4 * alpha);
    std::mt19937_64 g(2);
    for (int i = 0; i < 100; ++i) {
      const auto s = random_bridge(16, g);
      const auto f = hopf_cole(s, 0.05, m);
      for (int k = 1; k < 32; ++k) {
        const auto K = static_cast<std::size_t>(k);
        const double x = f.xi[K];
        const int d = s[k - 1] + s[k + 1] - 2 * s[k];
        double drift = m.lambda * x, qv = 0;
        if (d == 2) {  // local minimum, flips up at rate p
          drift += s4 * m.p * x * std::expm1(-2 * m.gamma);
          qv += s4 * m.p * std::pow(x * std::expm1(-2 * m.gamma), 2);
        } else if (d == -2) {
          drift += s4 * m.q * x * std::expm1(2 * m.gamma);
          qv += s4 * m.q * std::pow(x * std::expm1(2 * m.gamma), 2);
        }
        const double lap = f.xi[K + 1] + f.xi[K - 1] - 2 * x;
        const double bracket = m.lambda * (x * lap + 2 * x * x) - s4 * (f.xi[K + 1] - x) * (x - f.xi[K - 1]);
        CHECK(std::abs(drift - m.c * lap) <= 1e-9 * s4 * x);
        CHECK(std::abs(qv - bracket) <= 1e-9 * s4 * x * x);
        CHECK(std::abs(lap) <= std::expm1(2 * m.gamma) * x * (1 + 1e-12));
      }
    }
  }
}

TEST_CASE("test functions and inner product") {
  const auto m = make_params(64, 1.0 / 3);
  const auto gs = TestFunction::gaussian(0.5, 2.0);
  const auto v = gs.samples(m);
  CHECK(v[64] == 1.0);
  CHECK(v[0] == 0.0);
  const auto lap = gs.scaled_laplacian(m);
  // (2N)^(4a) Delta phi tends to phi''; at x = 0 phi'' = -1/w^2
  CHECK(lap[64] == doctest::Approx(-4.0).epsilon(0.01));
  std::vector<double> one(v.size(), 1.0);
  // Riemann sum of the Gaussian: w sqrt(2 pi)
  CHECK(inner_n(v, one, m) == doctest::Approx(0.5 * std::sqrt(2 * M_PI)).epsilon(1e-3));
  const auto cb = TestFunction::cosine_bump(1.0);
  CHECK(cb.f(0) == 1.0);
  CHECK(cb.f(1.0) == 0.0);
  CHECK(cb.f(0.5) == doctest::Approx(0.5));
}

TEST_CASE("martingale residual on stored trajectories") {
  const auto m = make_params(16, 1.0 / 3);
  const auto phi = TestFunction::gaussian(0.5, 2.0);
  const double s4 = std::pow(32.0, 4.0 / 3);
  const double dt = max_snapshot_spacing(m);
  std::vector<double> micro, macro;
  // same grid the streaming path builds: equal steps no wider than dt
  const auto n = static_cast<int>(std::ceil(0.01 / dt * (1 - 1e-12)));
  for (int i = 0; i <= 2 * n; ++i) {
    macro.push_back(i == n ? 0.01 : i == 2 * n ? 0.02 : i < n ? 0.01 * i / n : 0.01 + 0.01 * (i - n) / n);
    micro.push_back(dynamics::macro_time_to_micro(macro.back(), dynamics::Scaling::kpz, m));
  }
  CHECK(macro[1] <= dt);
  const auto tr = dynamics::simulate(m, flat_initial(16), dynamics::Schedule::from_times(micro), 5);
  const std::vector<double> report{0.0, 0.01, 0.02};

  const auto zero = martingale_residual(tr, TestFunction::zero(), report);
  REQUIRE(zero.size() == 2);
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);
  CHECK(martingale_residual(tr, phi, std::vector<double>{0.0}).empty());

  // same seed and grid through the streaming path gives the same numbers
  const auto inc = martingale_residual(tr, phi, report);
  const auto run = martingale_run(m, phi, 0.02, report, 5);
  REQUIRE(run.increments.size() == 2);
  CHECK(run.increments[0] == doctest::Approx(inc[0]).epsilon(1e-12));
  CHECK(run.increments[1] == doctest::Approx(inc[1]).epsilon(1e-12));
  const auto br = bracket_residual(tr, phi);
  CHECK(br.bracket == doctest::Approx(run.bracket.bracket).epsilon(1e-12));
  CHECK(br.bracket == doctest::Approx(br.main_part - br.r1 - br.r2).epsilon(1e-12));
  CHECK(run.boundary_identity_ok);
  CHECK(run.max_laplacian_ratio <= 1.0);

  // sparse snapshots are refused
  std::vector<double> sparse;
  for (int i = 0; i <= 4; ++i) sparse.push_back(i * 0.005 * s4);
  const auto tr2 = dynamics::simulate(m, flat_initial(16), dynamics::Schedule::from_times(sparse), 5);
  CHECK_THROWS_AS(martingale_residual(tr2, phi, std::vector<double>{0.0, 0.02}), std::invalid_argument);
  CHECK_THROWS_AS(bracket_residual(tr2, phi), std::invalid_argument);
  // report times must be snapshot times
  CHECK_THROWS_AS(martingale_residual(tr, phi, std::vector<double>{0.0, 0.0101234}), std::invalid_argument);
}

TEST_CASE("martingale and bracket, small Monte Carlo") {
  const auto m = make_params(32, 1.0 / 3);
  const auto st = martingale_study(m, TestFunction::gaussian(0.5, 2.0), 0.05, {0.025, 0.05}, 200, 17, 1);
  REQUIRE(st.increments.size() == 2);
  for (const auto& s : st.increments) CHECK(std::abs(s.mean) <= 3 * s.se);
  CHECK(st.ratio >= 0.85);
  CHECK(st.ratio <= 1.15);
  CHECK(st.boundary_identity_ok);
  CHECK(st.max_laplacian_ratio <= 1.0);
  // |R1| <= (e^{2 gamma} - 1) lambda/(2N)^(2a) int <xi^2, phi^2>, i.e. O(gamma) of the main part
  CHECK(st.abs_r1.mean <= std::expm1(2 * m.gamma) * st.bracket.mean);
}

TEST_CASE("mshe reference") {
  MsheOptions o;
  o.dx = 0.1;
  o.t_end = 0.1;
  o.replicas = 4;
  o.noise = 0;
  const auto flat = mshe_reference(o);
  for (double v : flat.profile) CHECK(v == 1.0);
  CHECK(flat.half_width >= 4 * std::sqrt(0.1) + 4);

  o.dt = 0.0051;
  CHECK_THROWS_AS(mshe_reference(o), std::invalid_argument);
  o.dt = 0;
  o.half_width = 3;
  CHECK_THROWS_AS(mshe_reference(o), std::invalid_argument);
  o.half_width = 0;

  // noise off, exact heat steps: the discrete heat semigroup applied once
  MsheOptions e = o;
  e.scheme = MsheScheme::ExactHeat;
  e.dx = 0.2;
  e.dt = 0.013;
  e.replicas = 1;
  e.initial = [](double x) { return 1 + std::exp(-x * x); };
  const auto run = mshe_reference(e);
  const int n = run.cells;
  const auto spec = heat_kernel::KernelSpec::with_speed(n / 2, 1 / (e.dx * e.dx));
  for (int k = 1; k < n; k += 3) {
    double want = 1;
    for (int l = 1; l < n; ++l)
      want += heat_kernel::dirichlet_kernel_eigen(spec, e.t_end, k, l) * std::exp(-std::pow(-run.half_width + l * e.dx, 2));
    CHECK(std::abs(run.profile[static_cast<std::size_t>(k)] - want) <= 1e-10);
  }

  // noisy runs: mean preserved, second moment matches the scheme recursion
  MsheOptions s;
  s.dx = 0.1;
  s.t_end = 0.1;
  s.replicas = 4000;
  s.seed = 21;
  s.threads = 1;
  const auto r = mshe_reference(s);
  CHECK(std::abs(r.xi_summary.mean - 1) <= 3 * r.xi_summary.se);
  const double m2 = mshe_scheme_second_moment(s);
  CHECK(std::abs(r.second_moment - m2) <= 3 * r.second_moment_se);
  for (double v : r.xi0) CHECK(v > 0);
  CHECK(r.h_quantiles.size() == 5);

  // self convergence of the second moment under dx -> dx/2
  MsheOptions a = s, b = s;
  a.dx = 0.05;
  b.dx = 0.025;
  const double ma = mshe_scheme_second_moment(a), mb = mshe_scheme_second_moment(b);
  CHECK(std::abs(ma - mb) <= 0.05 * mb);
  CHECK(std::abs(mb - mshe_second_moment_exact(0.1)) < std::abs(ma - mshe_second_moment_exact(0.1)));
  CHECK(mshe_second_moment_exact(0.1) == doctest::Approx(2.43).epsilon(1e-3));
}

TEST_CASE("kpz heights") {
  for (int N : {64, 128}) {
    const auto m = make_params(N, 1.0 / 3);
    bool ok = false;
    CHECK(kpz_height_sample(m, 0.0, 3, &ok) == (N % 2 ? m.gamma : 0.0));
    CHECK(ok);
  }
  MsheOptions ref;
  ref.dx = 0.1;
  ref.replicas = 200;
  CHECK_THROWS_AS(kpz_compare({32}, 0.4, 0.1, 10, 1, ref), std::invalid_argument);
  CHECK_THROWS_AS(kpz_compare({32}, 1.0 / 3, 0.5, 10, 1, ref), std::domain_error);
  const auto rep = kpz_compare({32, 64}, 1.0 / 3, 0.05, 100, 4, ref, 1);
  REQUIRE(rep.levels.size() == 2);
  CHECK(rep.levels[0].ks_vs_previous < 0);
  CHECK(rep.levels[1].ks_vs_previous >= 0);
  CHECK(rep.levels[1].ks_vs_previous <= 1);
  for (const auto& lv : rep.levels) {
    CHECK(lv.boundary_identity_ok);
    CHECK(lv.h.size() == 100);
    CHECK(lv.window_lo <= lv.N);
    CHECK(lv.window_hi >= lv.N);
  }
  CHECK(rep.reference_var_log == doctest::Approx(4 * rep.reference_var_half_log).epsilon(1e-9));
  CHECK(rep.horizon == doctest::Approx(64 * make_params(64, 1.0 / 3).gamma / make_params(64, 1.0 / 3).lambda));
}

TEST_CASE("equilibrium stationarity") {
  const auto m = make_params(64, 0.5);
  const auto rep = equilibrium_stationarity(m, {0.0, 0.5, 1.0}, 0.0, 400, 8, 1);
  REQUIRE(rep.summary.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rep.ks_pvalue_vs_first[i] > 0.01);
    CHECK(std::abs(rep.summary[i].mean) <= std::max(3 * rep.summary[i].se, rep.centering_tolerance));
  }
  CHECK_THROWS(equilibrium_stationarity(m, {0.5, 0.1}, 0.0, 4, 8, 1));
}
