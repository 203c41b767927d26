#include "wasep/fluctuations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wasep/equilibrium.hpp"
#include "wasep/heat_kernel.hpp"
#include "wasep/parallel.hpp"
#include "wasep/rng.hpp"

namespace wasep::fluctuations {

namespace {

// the one place xi is formed, so the boundary identity is a machine equality
inline double xi_of(std::int32_t S, double t, const ModelParams& m) { return std::exp(-(m.gamma * S - m.lambda * t)); }

double kpz_space_scale(const ModelParams& m) { return std::pow(2.0 * m.N, 2.0 * m.alpha); }
double kpz_time_scale(const ModelParams& m) { return std::pow(2.0 * m.N, 4.0 * m.alpha); }

std::vector<double> quantiles(std::vector<double> v, std::initializer_list<double> ps) {
  std::vector<double> out;
  if (v.empty()) return out;
  std::sort(v.begin(), v.end());
  for (double p : ps) {
    // linear interpolation between order statistics
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double f = pos - static_cast<double>(i);
    out.push_back(i + 1 < v.size() ? v[i] * (1 - f) + v[i + 1] * f : v[i]);
  }
  return out;
}

bool boundary_identity(std::span<const std::int32_t> heights, double t, const ModelParams& m) {
  const double e = std::exp(m.lambda * t);
  return xi_of(heights.front(), t, m) == e && xi_of(heights.back(), t, m) == e;
}

// macro snapshot grid containing every report time, spacing <= max_dt
std::vector<double> snapshot_grid(std::span<const double> report, double max_dt) {
  std::vector<double> g{report.front()};
  for (std::size_t i = 1; i < report.size(); ++i) {
    const double a = report[i - 1], b = report[i];
    const auto n = static_cast<long>(std::ceil((b - a) / max_dt * (1 - 1e-12)));
    for (long j = 1; j < n; ++j) g.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(n));
    g.push_back(b);
  }
  return g;
}

void check_report_times(std::span<const double> report) {
  for (std::size_t i = 0; i < report.size(); ++i) {
    if (!(report[i] >= 0) || !std::isfinite(report[i]))
      throw std::invalid_argument("report times must be finite and >= 0");
    if (i && report[i] <= report[i - 1]) throw std::invalid_argument("report times must increase");
  }
}

}  // namespace

HopfColeField hopf_cole(std::span<const std::int32_t> heights, double t_macro, const ModelParams& m) {
  HopfColeField f;
  f.t_macro = t_macro;
  const std::size_t n = heights.size();
  f.xi.resize(n);
  f.h.resize(n);
  f.x.resize(n);
  const double sc = kpz_space_scale(m);
  for (std::size_t l = 0; l < n; ++l) {
    f.h[l] = m.gamma * heights[l] - m.lambda * t_macro;
    f.xi[l] = xi_of(heights[l], t_macro, m);
    f.x[l] = (static_cast<double>(l) - m.N) / sc;
  }
  return f;
}

HopfColeField hopf_cole(const BridgeState& s, double t_macro, const ModelParams& m) {
  if (s.N() != m.N) throw std::invalid_argument("hopf_cole: bridge and params disagree on N");
  return hopf_cole(s.heights(), t_macro, m);
}

TestFunction TestFunction::gaussian(double width, double radius) {
  if (!(width > 0) || !(radius > 0)) throw std::invalid_argument("gaussian test function: width, radius > 0");
  TestFunction t;
  t.radius = radius;
  t.f = [width, radius](double x) { return std::abs(x) < radius ? std::exp(-x * x / (2 * width * width)) : 0.0; };
  return t;
}

TestFunction TestFunction::cosine_bump(double radius) {
  if (!(radius > 0)) throw std::invalid_argument("cosine bump: radius > 0");
  TestFunction t;
  t.radius = radius;
  t.f = [radius](double x) {
    if (std::abs(x) >= radius) return 0.0;
    const double c = std::cos(M_PI * x / (2 * radius));
    return c * c;
  };
  return t;
}

TestFunction TestFunction::zero() {
  TestFunction t;
  t.radius = 0;
  t.f = [](double) { return 0.0; };
  return t;
}

std::vector<double> TestFunction::samples(const ModelParams& m) const {
  std::vector<double> v(static_cast<std::size_t>(2 * m.N + 1));
  const double sc = kpz_space_scale(m);
  for (int l = 0; l <= 2 * m.N; ++l) v[static_cast<std::size_t>(l)] = f((l - m.N) / sc);
  return v;
}

std::vector<double> TestFunction::scaled_laplacian(const ModelParams& m) const {
  const auto v = samples(m);
  std::vector<double> d(v.size(), 0.0);
  const double s4 = kpz_time_scale(m);
  for (std::size_t l = 1; l + 1 < v.size(); ++l) d[l] = s4 * (v[l + 1] + v[l - 1] - 2 * v[l]);
  return d;
}

double inner_n(std::span<const double> f, std::span<const double> g, const ModelParams& m) {
  const auto L = static_cast<std::size_t>(2 * m.N);
  if (f.size() != L + 1 || g.size() != L + 1) throw std::invalid_argument("inner_n: arrays must cover sites 0..2N");
  double s = 0;
  for (std::size_t l = 1; l < L; ++l) s += f[l] * g[l];
  return s / kpz_space_scale(m);
}

MartingaleTracker::MartingaleTracker(const ModelParams& m, const TestFunction& phi)
    : p_(m), phi_(phi.samples(m)), lap_(phi.scaled_laplacian(m)) {
  const int L = 2 * m.N;
  lo_ = L;
  hi_ = 0;
  for (int l = 1; l < L; ++l)
    if (phi_[static_cast<std::size_t>(l)] != 0.0 || lap_[static_cast<std::size_t>(l)] != 0.0) {
      lo_ = std::min(lo_, l);
      hi_ = std::max(hi_, l);
    }
}

SnapshotTerms MartingaleTracker::terms(std::span<const std::int32_t> h, double t) const {
  SnapshotTerms T;
  if (static_cast<int>(h.size()) != 2 * p_.N + 1) throw std::invalid_argument("tracker: wrong height array size");
  if (lo_ > hi_) return T;
  const double s2 = kpz_space_scale(p_);
  const double bound = std::expm1(2 * p_.gamma);
  double pair = 0, drift = 0, main = 0, r1 = 0, r2 = 0;
  double xm = xi_of(h[static_cast<std::size_t>(lo_ - 1)], t, p_);
  double x0 = xi_of(h[static_cast<std::size_t>(lo_)], t, p_);
  for (int l = lo_; l <= hi_; ++l) {
    const double xp = xi_of(h[static_cast<std::size_t>(l + 1)], t, p_);
    const double ph = phi_[static_cast<std::size_t>(l)], ph2 = ph * ph;
    const double lap = xp + xm - 2 * x0;
    pair += x0 * ph;
    drift += x0 * lap_[static_cast<std::size_t>(l)];
    main += x0 * x0 * ph2;
    r1 += x0 * lap * ph2;
    r2 += (xp - x0) * (x0 - xm) * ph2;
    T.max_laplacian_ratio = std::max(T.max_laplacian_ratio, std::abs(lap) / (bound * x0));
    xm = x0;
    x0 = xp;
  }
  T.pairing = pair / s2;
  T.drift = 0.5 * drift / s2;
  T.main = 2 * p_.lambda / s2 * main / s2;
  T.r1 = -p_.lambda / s2 * r1 / s2;
  T.r2 = r2;  // (2N)^(2a) cancels the inner product weight
  return T;
}

void MartingaleTracker::observe(double t, std::span<const std::int32_t> heights) {
  if (n_ > 0 && !(t >= t_)) throw std::invalid_argument("tracker: snapshot times must not decrease");
  const SnapshotTerms T = terms(heights, t);
  if (n_ > 0) {
    const double dt = t - t_;
    const double dm = T.pairing - last_.pairing - last_.drift * dt;
    m_ += dm;
    qv_ += dm * dm;
    main_ += last_.main * dt;
    r1_ += last_.r1 * dt;
    r2_ += last_.r2 * dt;
  }
  max_lap_ = std::max(max_lap_, T.max_laplacian_ratio);
  last_ = T;
  t_ = t;
  ++n_;
}

double max_snapshot_spacing(const ModelParams& m) { return 0.1 / kpz_time_scale(m); }

std::vector<double> martingale_residual(const dynamics::Trajectory& tr, const TestFunction& phi,
                                        std::span<const double> report_times) {
  const auto& m = tr.params;
  check_report_times(report_times);
  const double s4 = kpz_time_scale(m);
  const double max_dt = max_snapshot_spacing(m);
  std::vector<double> out;
  if (report_times.size() < 2) return out;
  const auto& sn = tr.snapshots;
  for (std::size_t i = 1; i < sn.size(); ++i)
    if ((sn[i].time - sn[i - 1].time) / s4 > max_dt * (1 + 1e-9))
      throw std::invalid_argument("martingale_residual: snapshots too sparse for the drift quadrature");
  MartingaleTracker tk(m, phi);
  std::size_t next = 0;
  double at_last_report = 0;
  for (const auto& s : sn) {
    const double t = s.time / s4;
    tk.observe(t, s.state.heights());
    if (next < report_times.size() && std::abs(t - report_times[next]) <= 1e-12 * std::max(1.0, t)) {
      if (next > 0) out.push_back(tk.martingale() - at_last_report);
      at_last_report = tk.martingale();
      ++next;
    }
  }
  if (next != report_times.size())
    throw std::invalid_argument("martingale_residual: report times must be snapshot times");
  return out;
}

BracketResult bracket_residual(const dynamics::Trajectory& tr, const TestFunction& phi) {
  const auto& m = tr.params;
  const double s4 = kpz_time_scale(m);
  const double max_dt = max_snapshot_spacing(m);
  MartingaleTracker tk(m, phi);
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    const auto& s = tr.snapshots[i];
    if (i && (s.time - tr.snapshots[i - 1].time) / s4 > max_dt * (1 + 1e-9))
      throw std::invalid_argument("bracket_residual: snapshots too sparse for the drift quadrature");
    tk.observe(s.time / s4, s.state.heights());
  }
  BracketResult r;
  r.quadratic_variation = tk.quadratic_variation();
  r.bracket = tk.bracket();
  r.ratio = r.bracket != 0 ? r.quadratic_variation / r.bracket : 0;
  r.main_part = tk.main_part();
  r.r1 = tk.r1();
  r.r2 = tk.r2();
  return r;
}

MartingaleRun martingale_run(const ModelParams& m, const TestFunction& phi, double t_end,
                             std::span<const double> report_times, std::uint64_t seed) {
  std::vector<double> report(report_times.begin(), report_times.end());
  if (report.empty() || report.front() != 0.0) report.insert(report.begin(), 0.0);
  if (report.back() < t_end) report.push_back(t_end);
  check_report_times(report);
  const auto grid = snapshot_grid(report, max_snapshot_spacing(m));
  std::vector<double> micro(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    micro[i] = dynamics::macro_time_to_micro(grid[i], dynamics::Scaling::kpz, m);

  MartingaleRun run;
  MartingaleTracker tk(m, phi);
  std::size_t idx = 0, next = 0;
  double last = 0;
  run.events = dynamics::simulate_streaming(
      m, flat_initial(m.N), dynamics::Schedule::from_times(micro), seed,
      [&](double, std::span<const std::int32_t> h) {
        const double t = grid[idx++];
        if (!boundary_identity(h, t, m)) run.boundary_identity_ok = false;
        tk.observe(t, h);
        if (next < report.size() && t == report[next]) {
          if (next > 0) run.increments.push_back(tk.martingale() - last);
          last = tk.martingale();
          ++next;
        }
      });
  run.final_martingale = tk.martingale();
  run.bracket.quadratic_variation = tk.quadratic_variation();
  run.bracket.bracket = tk.bracket();
  run.bracket.ratio = tk.bracket() != 0 ? tk.quadratic_variation() / tk.bracket() : 0;
  run.bracket.main_part = tk.main_part();
  run.bracket.r1 = tk.r1();
  run.bracket.r2 = tk.r2();
  run.max_laplacian_ratio = tk.max_laplacian_ratio();
  return run;
}

MartingaleStudy martingale_study(const ModelParams& m, const TestFunction& phi, double t_end,
                                 std::vector<double> report_times, std::size_t replicas,
                                 std::uint64_t seed, unsigned threads) {
  if (report_times.empty() || report_times.front() != 0.0) report_times.insert(report_times.begin(), 0.0);
  if (report_times.back() < t_end) report_times.push_back(t_end);
  const auto runs = run_replicas<MartingaleRun>(replicas, threads, [&](std::size_t i) {
    return martingale_run(m, phi, t_end, report_times, derive_seed(seed, i));
  });
  MartingaleStudy st;
  st.N = m.N;
  st.alpha = m.alpha;
  st.t_end = t_end;
  st.replicas = replicas;
  st.report_times = report_times;
  const std::size_t K = report_times.size() - 1;
  std::vector<std::vector<double>> inc(K);
  std::vector<double> qv, br, a1, a2, r2;
  for (const auto& r : runs) {
    for (std::size_t k = 0; k < K; ++k) inc[k].push_back(r.increments.at(k));
    qv.push_back(r.bracket.quadratic_variation);
    br.push_back(r.bracket.bracket);
    a1.push_back(std::abs(r.bracket.r1));
    a2.push_back(std::abs(r.bracket.r2));
    r2.push_back(r.bracket.r2);
    st.max_laplacian_ratio = std::max(st.max_laplacian_ratio, r.max_laplacian_ratio);
    st.boundary_identity_ok = st.boundary_identity_ok && r.boundary_identity_ok;
  }
  for (auto& v : inc) st.increments.push_back(stats::summarize(v));
  st.quadratic_variation = stats::summarize(qv);
  st.bracket = stats::summarize(br);
  st.abs_r1 = stats::summarize(a1);
  st.abs_r2 = stats::summarize(a2);
  st.r2 = stats::summarize(r2);
  st.ratio = st.bracket.mean != 0 ? st.quadratic_variation.mean / st.bracket.mean : 0;
  return st;
}

double mshe_second_moment_exact(double t) {
  const double z = 2 * std::sqrt(2 * t);
  return 2 * std::exp(4 * t) * 0.5 * std::erfc(-z / std::sqrt(2.0));
}

namespace {

struct MsheGrid {
  int n = 0;  // intervals; nodes 0..n, centre n/2
  double A = 0, dt = 0, sigma = 0, r = 0;
  long steps = 0;
  std::vector<double> init;
};

MsheGrid mshe_grid(const MsheOptions& opt) {
  if (!(opt.t_end >= 0) || !(opt.dx > 0)) throw std::invalid_argument("mshe: need t_end >= 0 and dx > 0");
  const double A_min = 4 * std::sqrt(opt.t_end) + 4;
  const double A = opt.half_width > 0 ? opt.half_width : A_min;
  if (A < A_min * (1 - 1e-12)) throw std::invalid_argument("mshe: half width below 4 sqrt(t) + 4");
  MsheGrid g;
  g.n = 2 * static_cast<int>(std::ceil(A / opt.dx - 1e-9));
  g.A = g.n * opt.dx / 2;
  const double dt_req = opt.dt > 0 ? opt.dt : opt.dx * opt.dx / 4;
  if (opt.scheme == MsheScheme::Explicit && dt_req > opt.dx * opt.dx / 2 * (1 + 1e-12))
    throw std::invalid_argument("mshe: explicit scheme needs dt <= dx^2/2");
  g.steps = static_cast<long>(std::ceil(opt.t_end / dt_req - 1e-9));
  g.dt = g.steps > 0 ? opt.t_end / static_cast<double>(g.steps) : 0.0;
  g.sigma = 2 * opt.noise * std::sqrt(g.dt / opt.dx);
  g.r = g.dt / (2 * opt.dx * opt.dx);
  g.init.assign(static_cast<std::size_t>(g.n + 1), 1.0);
  for (int i = 1; i < g.n; ++i)
    g.init[static_cast<std::size_t>(i)] = opt.initial ? opt.initial(-g.A + i * opt.dx) : 1.0;
  return g;
}

}  // namespace

double mshe_scheme_second_moment(const MsheOptions& opt) {
  if (opt.scheme != MsheScheme::Explicit) throw std::invalid_argument("mshe_scheme_second_moment: explicit scheme only");
  const auto g = mshe_grid(opt);
  const auto n1 = static_cast<std::size_t>(g.n + 1);
  // C[i][j] = E xi_i xi_j over all nodes; boundary nodes are the constant 1
  std::vector<double> C(n1 * n1), T(n1 * n1);
  for (std::size_t i = 0; i < n1; ++i)
    for (std::size_t j = 0; j < n1; ++j) C[i * n1 + j] = g.init[i] * g.init[j];
  const double boost = std::exp(g.sigma * g.sigma);
  for (long s = 0; s < g.steps; ++s) {
    for (std::size_t i = 1; i + 1 < n1; ++i) C[i * n1 + i] *= boost;
    // rows: T = H C
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n1; ++j)
        T[i * n1 + j] = (i == 0 || i + 1 == n1)
                            ? C[i * n1 + j]
                            : C[i * n1 + j] + g.r * (C[(i + 1) * n1 + j] + C[(i - 1) * n1 + j] - 2 * C[i * n1 + j]);
    // columns: C = T H^T
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n1; ++j)
        C[i * n1 + j] = (j == 0 || j + 1 == n1)
                            ? T[i * n1 + j]
                            : T[i * n1 + j] + g.r * (T[i * n1 + j + 1] + T[i * n1 + j - 1] - 2 * T[i * n1 + j]);
  }
  const auto c = static_cast<std::size_t>(g.n / 2);
  return C[c * n1 + c];
}

MsheResult mshe_reference(const MsheOptions& opt) {
  if (opt.replicas == 0) throw std::invalid_argument("mshe_reference: replicas must be >= 1");
  const auto g = mshe_grid(opt);
  MsheResult res;
  res.options = opt;
  const int n = g.n;
  res.cells = n;
  res.half_width = g.A;
  res.dt = g.dt;
  const long steps = g.steps;
  const double dt = g.dt, sigma = g.sigma, r = g.r;
  const auto& init = g.init;

  // one-step propagator of the discrete heat equation, interior sites only
  std::vector<double> P;
  if (opt.scheme == MsheScheme::ExactHeat && steps > 0) {
    const auto spec = heat_kernel::KernelSpec::with_speed(n / 2, 1.0 / (opt.dx * opt.dx));
    const auto tab = heat_kernel::segment_table(spec, dt);
    P.resize(static_cast<std::size_t>(n - 1) * static_cast<std::size_t>(n - 1));
    for (int k = 1; k < n; ++k)
      for (int l = 1; l < n; ++l)
        P[static_cast<std::size_t>(k - 1) * static_cast<std::size_t>(n - 1) + static_cast<std::size_t>(l - 1)] =
            tab.values[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)];
  }

  auto run_one = [&](std::size_t rep) {
    Rng rng(derive_seed(opt.seed, rep));
    std::vector<double> xi = init, nxt(init.size(), 1.0), w(static_cast<std::size_t>(n - 1));
    for (long s = 0; s < steps; ++s) {
      if (sigma > 0)
        for (int i = 1; i < n; ++i) xi[static_cast<std::size_t>(i)] *= std::exp(sigma * rng.normal() - 0.5 * sigma * sigma);
      if (opt.scheme == MsheScheme::Explicit) {
        for (int i = 1; i < n; ++i) {
          const auto k = static_cast<std::size_t>(i);
          nxt[k] = xi[k] + r * (xi[k + 1] + xi[k - 1] - 2 * xi[k]);
        }
      } else {
        for (int i = 1; i < n; ++i) w[static_cast<std::size_t>(i - 1)] = xi[static_cast<std::size_t>(i)] - 1.0;
        for (int k = 0; k < n - 1; ++k) {
          const double* row = &P[static_cast<std::size_t>(k) * static_cast<std::size_t>(n - 1)];
          double acc = 0;
          for (int l = 0; l < n - 1; ++l) acc += row[l] * w[static_cast<std::size_t>(l)];
          nxt[static_cast<std::size_t>(k + 1)] = 1.0 + acc;
        }
      }
      std::swap(xi, nxt);
    }
    return xi;
  };
  const auto profiles = run_replicas<std::vector<double>>(opt.replicas, opt.threads, run_one);
  for (const auto& p : profiles) {
    const double v = p[static_cast<std::size_t>(n / 2)];
    res.xi0.push_back(v);
    res.h.push_back(-0.5 * std::log(v));
  }
  res.profile = profiles.front();
  res.xi_summary = stats::summarize(res.xi0);
  res.h_summary = stats::summarize(res.h);
  std::vector<double> sq;
  for (double v : res.xi0) sq.push_back(v * v);
  const auto s2 = stats::summarize(sq);
  res.second_moment = s2.mean;
  res.second_moment_se = s2.se;
  res.xi_quantiles = quantiles(res.xi0, {0.05, 0.25, 0.5, 0.75, 0.95});
  res.h_quantiles = quantiles(res.h, {0.05, 0.25, 0.5, 0.75, 0.95});
  return res;
}

double kpz_height_sample(const ModelParams& m, double t_macro, std::uint64_t seed, bool* boundary_ok) {
  std::vector<double> grid, micro;
  for (int k = 1; k <= 10; ++k) grid.push_back(t_macro * k / 10.0);
  for (double t : grid) micro.push_back(dynamics::macro_time_to_micro(t, dynamics::Scaling::kpz, m));
  std::size_t idx = 0;
  double h0 = 0;
  bool ok = true;
  dynamics::simulate_streaming(m, flat_initial(m.N), dynamics::Schedule::from_times(micro), seed,
                               [&](double, std::span<const std::int32_t> h) {
                                 const double t = grid[idx++];
                                 ok = ok && boundary_identity(h, t, m);
                                 h0 = m.gamma * h[static_cast<std::size_t>(m.N)] - m.lambda * t;
                               });
  if (t_macro == 0.0) h0 = 0.0;
  if (boundary_ok) *boundary_ok = ok;
  return h0;
}

KpzReport kpz_compare(const std::vector<int>& Ns, double alpha, double t_macro, std::size_t replicas,
                      std::uint64_t seed, const MsheOptions& reference, unsigned threads) {
  if (alpha > 1.0 / 3 + 1e-12) throw std::invalid_argument("kpz_compare: needs alpha <= 1/3");
  if (!(t_macro >= 0)) throw std::invalid_argument("kpz_compare: t must be >= 0");
  if (std::abs(alpha - 1.0 / 3) <= 1e-12 && t_macro >= 0.5)
    throw std::domain_error("kpz_compare: t must stay below the horizon 1/2 at alpha = 1/3");
  KpzReport rep;
  rep.alpha = alpha;
  rep.t_macro = t_macro;
  for (std::size_t li = 0; li < Ns.size(); ++li) {
    const auto m = make_params(Ns[li], alpha);
    const auto w = heat_kernel::bulk_window(m, t_macro, 0.0);
    if (m.N < w.lo || m.N > w.hi) throw std::domain_error("kpz_compare: x = 0 outside the bulk window");
    KpzLevel lv;
    lv.N = m.N;
    lv.window_lo = w.lo;
    lv.window_hi = w.hi;
    struct Out {
      double h = 0;
      bool ok = true;
    };
    const std::uint64_t lseed = derive_seed(seed, static_cast<std::uint64_t>(m.N));
    const auto outs = run_replicas<Out>(replicas, threads, [&](std::size_t i) {
      Out o;
      o.h = kpz_height_sample(m, t_macro, derive_seed(lseed, i), &o.ok);
      return o;
    });
    for (const auto& o : outs) {
      lv.h.push_back(o.h);
      lv.boundary_identity_ok = lv.boundary_identity_ok && o.ok;
    }
    lv.summary = stats::summarize(lv.h);
    if (!rep.levels.empty()) lv.ks_vs_previous = stats::ks_distance(rep.levels.back().h, lv.h);
    rep.levels.push_back(std::move(lv));
    rep.horizon = m.N * m.gamma / m.lambda;
  }
  MsheOptions ro = reference;
  ro.t_end = t_macro;
  if (ro.threads == 0) ro.threads = threads;
  rep.reference = mshe_reference(ro);
  rep.reference_var_half_log = rep.reference.h_summary.var;
  std::vector<double> full;
  for (double v : rep.reference.xi0) full.push_back(-std::log(v));
  rep.reference_var_log = stats::summarize(full).var;
  for (auto& lv : rep.levels) lv.ks_vs_reference = stats::ks_distance(lv.h, rep.reference.h);
  return rep;
}

StationarityReport equilibrium_stationarity(const ModelParams& m, std::vector<double> times, double x0,
                                            std::size_t replicas, std::uint64_t seed, unsigned threads) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0)) throw std::invalid_argument("equilibrium_stationarity: times must be >= 0");
    if (i && times[i] < times[i - 1]) throw std::invalid_argument("equilibrium_stationarity: times must not decrease");
  }
  const auto table = equilibrium::build_partition_table(m);
  const auto sigma = equilibrium::sigma_curve(m);
  const auto runs = run_replicas<std::vector<double>>(replicas, threads, [&](std::size_t r) {
    const auto s0 = equilibrium::sample_one(table, derive_seed(seed, r));
    dynamics::CornerEngine eng(m, s0, derive_seed(derive_seed(seed, 0x5747u), r));
    std::vector<double> u;
    for (double t : times) {
      eng.advance_to(dynamics::macro_time_to_micro(t, dynamics::Scaling::equilibrium, m));
      u.push_back(equilibrium::rescale_u_at(eng.state(), m, sigma, x0));
    }
    return u;
  });
  StationarityReport rep;
  rep.N = m.N;
  rep.alpha = m.alpha;
  rep.x0 = x0;
  rep.times = times;
  rep.u.assign(times.size(), {});
  for (const auto& u : runs)
    for (std::size_t i = 0; i < times.size(); ++i) rep.u[i].push_back(u[i]);
  for (std::size_t i = 0; i < times.size(); ++i) {
    rep.summary.push_back(stats::summarize(rep.u[i]));
    rep.ks_pvalue_vs_first.push_back(
        i == 0 ? 1.0 : stats::ks_pvalue(stats::ks_distance(rep.u[0], rep.u[i]), replicas, replicas));
  }
  rep.centering_tolerance = 5 * std::pow(2.0 * m.N, -m.alpha / 2);
  return rep;
}

}  // namespace wasep::fluctuations
