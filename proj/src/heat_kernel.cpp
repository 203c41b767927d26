#include "wasep/heat_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace wasep::heat_kernel {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

double walk_time(const KernelSpec& spec, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw std::invalid_argument("heat kernel: t must be finite and >= 0");
  return spec.speed * t;
}

void check_site(const KernelSpec& spec, int k, const char* what) {
  if (k < 0 || k > 2 * spec.params.N)
    throw std::out_of_range(std::string("heat kernel: site ") + what + " outside 0..2N");
}

// e^{-x} I_nu(x) for x > 0, nu >= 0.
double scaled_bessel(long double x, long nu) {
  const long double half = x / 2;
  const long double lh = std::log(half);
  const long double n = static_cast<long double>(nu);
  long double m0 = std::floor((std::sqrt(n * n + x * x) - n) / 2);
  if (m0 < 0) m0 = 0;
  auto logterm = [&](long double m) { return (2 * m + n) * lh - std::lgamma(m + 1) - std::lgamma(m + n + 1) - x; };
  const long double lpeak = logterm(m0);
  constexpr long double tol = 1e-17L;
  long double sum = 1, term = 1;
  // upward: ratio (x/2)^2 / ((m+1)(m+nu+1)) shrinks with m
  for (long double m = m0;; m += 1) {
    const long double r = half * half / ((m + 1) * (m + n + 1));
    term *= r;
    sum += term;
    const long double rn = half * half / ((m + 2) * (m + n + 2));
    if (rn < 1 && term * rn / (1 - rn) < tol * sum) break;
  }
  term = 1;
  for (long double m = m0; m > 0; m -= 1) {
    const long double r = m * (m + n) / (half * half);
    term *= r;
    sum += term;
    const long double rn = (m - 1) * (m - 1 + n) / (half * half);
    if (rn < 1 && term * rn / (1 - rn) < tol * sum) break;
  }
  return static_cast<double>(std::exp(lpeak) * sum);
}

}  // namespace

KernelSpec KernelSpec::from_params(const ModelParams& m, Domain d) {
  KernelSpec s;
  s.params = m;
  s.speed = 2.0 * m.c;
  s.domain = d;
  s.validate();
  return s;
}

KernelSpec KernelSpec::with_speed(int N, double speed, Domain d) {
  if (N < 1) throw std::invalid_argument("KernelSpec: N must be >= 1");
  KernelSpec s;
  s.params.N = N;
  s.speed = speed;
  s.domain = d;
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  if (!(speed > 0.0) || !std::isfinite(speed)) throw std::invalid_argument("KernelSpec: speed must be > 0");
}

double line_kernel(const KernelSpec& spec, double t, long ell) {
  const double x = walk_time(spec, t);
  const long nu = ell < 0 ? -ell : ell;
  if (x == 0.0) return nu == 0 ? 1.0 : 0.0;
  return scaled_bessel(x, nu);
}

double line_kernel_poisson(const KernelSpec& spec, double t, long ell) {
  const double x = walk_time(spec, t);
  const long nu = ell < 0 ? -ell : ell;
  if (x == 0.0) return nu == 0 ? 1.0 : 0.0;
  // P(Pois(x) >= n) and P(Pois(x) <= n) are both <= e^{-x} (e x / n)^n on
  // the respective sides of x
  auto chernoff = [&](double n) { return n <= 0 ? -x : -x + n + n * std::log(x / n); };
  const double cut = std::log(0.5e-14);
  long lo = static_cast<long>(std::floor(x));
  while (lo > 0 && chernoff(static_cast<double>(lo)) > cut) --lo;
  long hi = static_cast<long>(std::ceil(x));
  while (chernoff(static_cast<double>(hi)) > cut) ++hi;
  long double s = 0;
  const long double lx = std::log(static_cast<long double>(x));
  for (long n = std::max(lo, nu); n <= hi; ++n) {
    if ((n - nu) % 2 != 0) continue;
    const long double nn = static_cast<long double>(n);
    const long double lp = -static_cast<long double>(x) + nn * lx - std::lgamma(nn + 1);
    const long double lw = std::lgamma(nn + 1) - std::lgamma((nn + nu) / 2 + 1) -
                           std::lgamma((nn - nu) / 2 + 1) - nn * std::log(2.0L);
    s += std::exp(lp + lw);
  }
  return static_cast<double>(s);
}

double dirichlet_kernel_eigen(const KernelSpec& spec, double t, int k, int ell) {
  const double x = walk_time(spec, t);
  check_site(spec, k, "k");
  check_site(spec, ell, "ell");
  const int N = spec.params.N;
  const int L = 2 * N;
  if (k == 0 || k == L || ell == 0 || ell == L) return 0.0;
  double s = 0;
  for (int j = 1; j < L; ++j) {
    const double th = kPi * j / L;
    const double sh = std::sin(0.5 * th);
    // sin(pi j k / 2N) with the product reduced mod 4N for accuracy
    const double a = std::sin(kPi * static_cast<double>((static_cast<long>(j) * k) % (2 * L)) / L);
    const double b = std::sin(kPi * static_cast<double>((static_cast<long>(j) * ell) % (2 * L)) / L);
    s += a * b * std::exp(-2.0 * x * sh * sh);
  }
  return s / N;
}

double large_dev_g(double x) {
  const double ax = std::abs(x);
  return std::hypot(1.0, ax) - ax * std::asinh(ax) - 1.0;
}

double line_tail_bound(const KernelSpec& spec, double t, double a) {
  const double x = walk_time(spec, t);
  if (!(a > 0)) throw std::invalid_argument("line_tail_bound: a must be > 0");
  if (x == 0.0) return 0.0;
  return std::exp(x * large_dev_g(a / x));
}

double images_truncation_bound(const KernelSpec& spec, double t, int j_max) {
  if (j_max < 1) throw std::invalid_argument("images: j_max must be >= 1");
  // every omitted argument has modulus >= 4N j_max + 2; they are distinct
  // integers, so each side is dominated by one line tail
  return 2.0 * line_tail_bound(spec, t, 4.0 * spec.params.N * j_max);
}

int images_j_max(const KernelSpec& spec, double t, double tol) {
  int j = 1;
  while (images_truncation_bound(spec, t, j) > tol) {
    if (j > 1000000) throw std::runtime_error("images_j_max: no convergence");
    ++j;
  }
  return j;
}

ImagesValue dirichlet_kernel_images(const KernelSpec& spec, double t, int k, int ell, int j_max) {
  check_site(spec, k, "k");
  check_site(spec, ell, "ell");
  if (j_max < 1) throw std::invalid_argument("images: j_max must be >= 1");
  const long fourN = 4L * spec.params.N;
  // pair terms with opposite j so near-cancelling values meet early
  double s = line_kernel(spec, t, static_cast<long>(k) - ell) - line_kernel(spec, t, -static_cast<long>(k) - ell);
  for (long j = 1; j <= j_max; ++j) {
    s += line_kernel(spec, t, k + j * fourN - ell) - line_kernel(spec, t, -k + j * fourN - ell);
    s += line_kernel(spec, t, k - j * fourN - ell) - line_kernel(spec, t, -k - j * fourN - ell);
  }
  return {s, images_truncation_bound(spec, t, j_max)};
}

KernelTable segment_table(const KernelSpec& spec, double t, Representation rep) {
  const int N = spec.params.N, L = 2 * N;
  KernelTable tab;
  tab.t = t;
  tab.domain = Domain::Segment;
  tab.representation = rep;
  tab.values.assign(static_cast<std::size_t>(L + 1), std::vector<double>(static_cast<std::size_t>(L + 1), 0.0));
  if (rep == Representation::Eigen) {
    const double x = walk_time(spec, t);
    std::vector<std::vector<double>> sn(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(L + 1)));
    std::vector<double> decay(static_cast<std::size_t>(L));
    for (int j = 1; j < L; ++j) {
      const double sh = std::sin(0.5 * kPi * j / L);
      decay[static_cast<std::size_t>(j)] = std::exp(-2.0 * x * sh * sh);
      for (int k = 0; k <= L; ++k)
        sn[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
            std::sin(kPi * static_cast<double>((static_cast<long>(j) * k) % (2 * L)) / L);
    }
    for (int k = 1; k < L; ++k)
      for (int l = k; l < L; ++l) {
        double s = 0;
        for (int j = 1; j < L; ++j)
          s += sn[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] *
               sn[static_cast<std::size_t>(j)][static_cast<std::size_t>(l)] * decay[static_cast<std::size_t>(j)];
        tab.values[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] = s / N;
        tab.values[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)] = s / N;
      }
  } else if (rep == Representation::Images) {
    const int jm = images_j_max(spec, t);
    for (int k = 1; k < L; ++k)
      for (int l = 1; l < L; ++l)
        tab.values[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] =
            dirichlet_kernel_images(spec, t, k, l, jm).value;
  } else {
    throw std::invalid_argument("segment_table: PoissonBessel is a line representation");
  }
  return tab;
}

KernelTable line_table(const KernelSpec& spec, double t, long half_width) {
  if (half_width < 0) throw std::invalid_argument("line_table: half_width must be >= 0");
  KernelTable tab;
  tab.t = t;
  tab.domain = Domain::Line;
  tab.representation = Representation::PoissonBessel;
  tab.offset = static_cast<int>(half_width);
  tab.values.assign(1, std::vector<double>(static_cast<std::size_t>(2 * half_width + 1)));
  for (long l = 0; l <= half_width; ++l) {
    const double v = line_kernel(spec, t, l);
    tab.values[0][static_cast<std::size_t>(half_width + l)] = v;
    tab.values[0][static_cast<std::size_t>(half_width - l)] = v;
  }
  return tab;
}

std::string KernelTable::to_csv() const {
  std::string out;
  char buf[40];
  for (const auto& row : values) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", row[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

double barrier_b(const ModelParams& m, double t, int ell) {
  if (ell < 0 || ell > 2 * m.N) throw std::out_of_range("barrier_b: ell outside 0..2N");
  const int d = std::min(ell, 2 * m.N - ell);
  return 2.0 + std::exp(m.lambda * t - m.gamma * d);
}

double q_kernel(const ModelParams& m, double s, double t, int k, int ell) {
  if (s > t) throw std::invalid_argument("q_kernel: need s <= t");
  const auto spec = KernelSpec::from_params(m);
  return dirichlet_kernel_eigen(spec, t - s, k, ell) * barrier_b(m, s, k);
}

Window bulk_window(const ModelParams& m, double t, double eps) {
  if (!(eps >= 0.0) || !(t >= 0.0)) throw std::invalid_argument("bulk_window: need t >= 0 and eps >= 0");
  const double shift = m.lambda * t / m.gamma + eps * m.N;
  Window w;
  w.lo = static_cast<long>(std::ceil(shift));
  w.hi = static_cast<long>(std::floor(2.0 * m.N - shift));
  if (w.lo > w.hi) throw std::domain_error("bulk_window: window is empty at this time");
  return w;
}

std::vector<AuditRow> kernel_bound_audit(const AuditSweep& sweep) {
  std::vector<AuditRow> rows;
  for (int N : sweep.Ns) {
    const auto m = make_params(N, sweep.alpha);
    const auto spec = KernelSpec::from_params(m);
    double images_dev = 0;
    for (double t : sweep.times) {
      auto push = [&](const char* name, double v) { rows.push_back({N, sweep.alpha, t, name, v}); };
      const double x = spec.speed * t;
      if (t > 0) {
        // whole-line kernel ratios
        const long W = static_cast<long>(std::ceil(x + 12.0 * std::sqrt(x) + 40.0));
        const auto line = line_table(spec, t, W);
        const auto& p = line.values[0];
        auto at = [&](long l) { return p[static_cast<std::size_t>(l + W)]; };
        double grad_l1 = 0, grad_moment = 0, grad_sup = 0, moment = 0;
        for (long l = -W; l < W; ++l) {
          const double g = at(l + 1) - at(l);
          grad_l1 += std::abs(g);
          grad_moment += std::abs(g) * std::abs(static_cast<double>(l));
          grad_sup = std::max(grad_sup, std::abs(g));
          moment += at(l) * std::abs(static_cast<double>(l));
        }
        const double sct = std::sqrt(m.c * t);
        push("pbar0_sqrt_ct", at(0) * sct);
        push("grad_l1_over_2pbar0", grad_l1 / (2.0 * at(0)));
        push("first_moment_over_sqrt_ct", moment / sct);
        push("grad_first_moment", grad_moment);
        push("grad_sup_over_min_1_inv_ct", grad_sup / std::min(1.0, 1.0 / (m.c * t)));
        double tail_ratio = 0;
        for (long a = 1; a <= W; ++a) {
          double tail = 0;
          for (long l = a; l <= W; ++l) tail += at(l);
          tail_ratio = std::max(tail_ratio, tail / line_tail_bound(spec, t, static_cast<double>(a)));
        }
        push("tail_over_large_dev_bound", tail_ratio);
      }

      // q-kernel ratios over s in [0, t)
      const int L = 2 * N;
      double mass_ratio = 0, sup_ratio = 0, offbulk = 0;
      bool have_window = true;
      Window wt{}, wsh{};
      try {
        wt = bulk_window(m, t, sweep.eps);
      } catch (const std::domain_error&) {
        have_window = false;
      }
      for (int i = 0; i < 8 && t > 0; ++i) {
        const double s = t * i / 8.0;
        const auto tab = segment_table(spec, t - s, Representation::Eigen);
        bool sh_ok = true;
        try {
          wsh = bulk_window(m, s, 0.5 * sweep.eps);
        } catch (const std::domain_error&) {
          sh_ok = false;
        }
        for (int l = 1; l < L; ++l) {
          const double bt = barrier_b(m, t, l);
          double mass = 0, sup = 0;
          for (int k = 1; k < L; ++k) {
            const double q = tab.values[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)] * barrier_b(m, s, k);
            mass += q;
            sup = std::max(sup, q);
            const bool k_out = !sh_ok || k < wsh.lo || k > wsh.hi;
            if (have_window && k_out && l >= wt.lo && l <= wt.hi) offbulk = std::max(offbulk, q);
          }
          mass_ratio = std::max(mass_ratio, mass / bt);
          const double scale = std::min(1.0, 1.0 / (std::sqrt(t - s) * std::pow(2.0 * N, 2 * sweep.alpha)));
          sup_ratio = std::max(sup_ratio, sup / (bt * scale));
        }
      }
      if (t > 0) {
        push("q_mass_over_b", mass_ratio);
        push("q_sup_over_b_scale", sup_ratio);
        if (have_window) push("offbulk_q_max", offbulk);
      }

      // Eigen against Images on a strided site grid
      const int jm = images_j_max(spec, t);
      const int stride = std::max(1, L / 16);
      for (int k = 1; k < L; k += stride)
        for (int l = 1; l < L; l += stride)
          images_dev = std::max(images_dev, std::abs(dirichlet_kernel_eigen(spec, t, k, l) -
                                                     dirichlet_kernel_images(spec, t, k, l, jm).value));
    }
    rows.push_back({N, sweep.alpha, std::numeric_limits<double>::quiet_NaN(), "eigen_images_max_dev", images_dev});
  }
  return rows;
}

std::string audit_to_csv(const std::vector<AuditRow>& rows) {
  std::string out = "N,alpha,t,ratio,value\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%s,%.17g\n", r.N, r.alpha, r.t, r.name.c_str(), r.value);
    out += buf;
  }
  return out;
}

}  // namespace wasep::heat_kernel
