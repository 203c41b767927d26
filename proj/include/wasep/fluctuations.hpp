#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wasep/core.hpp"
#include "wasep/dynamics.hpp"
#include "wasep/stats.hpp"

namespace wasep::fluctuations {

/// xi = exp(-h), h(l) = gamma S(l) - lambda t on sites 0..2N, x(l) =
/// (l - N)/(2N)^(2 alpha).
struct HopfColeField {
  double t_macro = 0;
  std::vector<double> xi;
  std::vector<double> h;
  std::vector<double> x;
};

HopfColeField hopf_cole(const BridgeState& s, double t_macro, const ModelParams& m);
HopfColeField hopf_cole(std::span<const std::int32_t> heights, double t_macro, const ModelParams& m);

/// Test function on the KPZ-rescaled line, zero outside [-radius, radius].
struct TestFunction {
  double radius = 0;
  std::function<double(double)> f;

  /// exp(-x^2 / (2 w^2)) cut at |x| = radius.
  static TestFunction gaussian(double width, double radius);
  /// cos^2(pi x / (2 radius)) on |x| < radius.
  static TestFunction cosine_bump(double radius);
  static TestFunction zero();

  /// phi(x_l) for l = 0..2N.
  std::vector<double> samples(const ModelParams& m) const;
  /// (2N)^(4 alpha) Delta phi at l = 1..2N-1 (zero at the ends).
  std::vector<double> scaled_laplacian(const ModelParams& m) const;
};

/// <f, g>_N = (2N)^(-2 alpha) sum_{l=1}^{2N-1} f(l) g(l).
double inner_n(std::span<const double> f, std::span<const double> g, const ModelParams& m);

/// Integrands of the martingale problem at one snapshot.
struct SnapshotTerms {
  double pairing = 0;     // <xi, phi>_N
  double drift = 0;       // 1/2 <xi, (2N)^(4a) Delta phi>_N
  double main = 0;        // 2 lambda/(2N)^(2a) <xi^2, phi^2>_N
  double r1 = 0;          // -lambda/(2N)^(2a) <xi Delta xi, phi^2>_N
  double r2 = 0;          // (2N)^(2a) <grad+ xi grad- xi, phi^2>_N
  double max_laplacian_ratio = 0;  // max |Delta xi| / ((e^{2 gamma} - 1) xi)
};

/// Streaming evaluation of M^N(t, phi) and its bracket from snapshots.
/// Drift and bracket integrals use the left endpoint of each interval.
class MartingaleTracker {
 public:
  MartingaleTracker(const ModelParams& m, const TestFunction& phi);

  /// Snapshots must arrive in increasing macro time.
  void observe(double t_macro, std::span<const std::int32_t> heights);

  double martingale() const { return m_; }
  /// Sum of squared increments over consecutive snapshots.
  double quadratic_variation() const { return qv_; }
  /// Integral of the bracket drift: main - r1 - r2.
  double bracket() const { return main_ - r1_ - r2_; }
  double main_part() const { return main_; }
  double r1() const { return r1_; }
  double r2() const { return r2_; }
  double max_laplacian_ratio() const { return max_lap_; }
  double time() const { return t_; }
  std::size_t snapshots() const { return n_; }

  SnapshotTerms terms(std::span<const std::int32_t> heights, double t_macro) const;

 private:
  ModelParams p_;
  std::vector<double> phi_, lap_;
  int lo_ = 1, hi_ = 0;  // sites where phi or its Laplacian is nonzero
  double t_ = 0;
  std::size_t n_ = 0;
  SnapshotTerms last_;
  double m_ = 0, qv_ = 0, main_ = 0, r1_ = 0, r2_ = 0, max_lap_ = 0;
};

/// Largest macro spacing allowed between snapshots: 0.1 (2N)^(-4 alpha).
double max_snapshot_spacing(const ModelParams& m);

/// Increments of M^N between consecutive report times. The trajectory's
/// snapshots are the quadrature nodes; each report time must be one of
/// them. Throws std::invalid_argument for a sparse grid.
std::vector<double> martingale_residual(const dynamics::Trajectory& tr, const TestFunction& phi,
                                        std::span<const double> report_times);

struct BracketResult {
  double quadratic_variation = 0;
  double bracket = 0;
  double ratio = 0;
  double main_part = 0;
  double r1 = 0;
  double r2 = 0;
};

BracketResult bracket_residual(const dynamics::Trajectory& tr, const TestFunction& phi);

/// Per replica output of a KPZ-scaled run from the flat bridge.
struct MartingaleRun {
  std::vector<double> increments;  // M^N over the report intervals
  BracketResult bracket;
  double final_martingale = 0;
  double max_laplacian_ratio = 0;
  bool boundary_identity_ok = true;
  std::uint64_t events = 0;
};

/// Simulates the flat bridge to macro time t_end with snapshots every
/// max_snapshot_spacing (or finer) and evaluates the diagnostics on the fly.
MartingaleRun martingale_run(const ModelParams& m, const TestFunction& phi, double t_end,
                             std::span<const double> report_times, std::uint64_t seed);

struct MartingaleStudy {
  int N = 0;
  double alpha = 0;
  double t_end = 0;
  std::size_t replicas = 0;
  std::vector<double> report_times;
  std::vector<stats::Summary> increments;  // per report interval
  stats::Summary quadratic_variation, bracket, abs_r1, abs_r2, r2;
  double ratio = 0;  // mean QV / mean bracket
  double max_laplacian_ratio = 0;
  bool boundary_identity_ok = true;
};

MartingaleStudy martingale_study(const ModelParams& m, const TestFunction& phi, double t_end,
                                 std::vector<double> report_times, std::size_t replicas,
                                 std::uint64_t seed, unsigned threads = 0);

// Reference multiplicative SHE -------------------------------------------

enum class MsheScheme { Explicit, ExactHeat };

struct MsheOptions {
  double half_width = 0;  // A; 0 means 4 sqrt(t_end) + 4
  double dx = 0.05;
  double dt = 0;          // 0 means dx^2 / 4
  double t_end = 0.1;
  double noise = 1.0;     // multiplies the amplitude 2
  MsheScheme scheme = MsheScheme::Explicit;
  std::size_t replicas = 100;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  /// Initial data; defaults to 1.
  std::function<double(double)> initial;
};

struct MsheResult {
  MsheOptions options;
  int cells = 0;            // intervals of the grid on [-A, A]
  double half_width = 0;    // A after rounding to the grid
  double dt = 0;
  std::vector<double> xi0;  // xi(t_end, 0) per replica
  std::vector<double> h;    // -(log xi0)/2
  stats::Summary xi_summary, h_summary;
  double second_moment = 0;
  double second_moment_se = 0;
  std::vector<double> xi_quantiles, h_quantiles;  // at 5, 25, 50, 75, 95 %
  /// Full terminal profile of replica 0, for checks.
  std::vector<double> profile;
};

/// d xi = 1/2 xi'' dt + 2 xi dW on [-A, A], xi = 1 at +-A. Each step
/// multiplies by exp(s Z - s^2/2), s = 2 noise sqrt(dt/dx), then applies the
/// heat step: explicit Euler (needs dt <= dx^2/2) or the exact discrete
/// semigroup from the heat-kernel module.
MsheResult mshe_reference(const MsheOptions& opt);

/// Exact E xi(t_end,0)^2 of the explicit scheme (noise and initial data as
/// in `opt`), from the deterministic recursion for the second moment
/// matrix. O(cells^2) per step.
double mshe_scheme_second_moment(const MsheOptions& opt);

/// E xi(t,0)^2 for the continuum equation: 2 e^{4t} Phi(2 sqrt(2t)).
double mshe_second_moment_exact(double t);

// KPZ comparison ----------------------------------------------------------

struct KpzLevel {
  int N = 0;
  std::vector<double> h;  // h^N(t, 0) per replica
  stats::Summary summary;
  double ks_vs_previous = -1;
  double ks_vs_reference = 0;
  bool boundary_identity_ok = true;
  long window_lo = 0, window_hi = 0;
};

struct KpzReport {
  double alpha = 0;
  double t_macro = 0;
  std::vector<KpzLevel> levels;
  MsheResult reference;
  double reference_var_half_log = 0;  // Var(-(log xi)/2)
  double reference_var_log = 0;       // Var(-log xi)
  double horizon = 0;                 // window closing time at the largest N
};

/// h^N(t,0) over replicas for each N, from the flat bridge, compared across
/// N and with the reference. Throws std::invalid_argument when alpha > 1/3
/// and std::domain_error when the bulk window at t is empty or excludes N.
KpzReport kpz_compare(const std::vector<int>& Ns, double alpha, double t_macro, std::size_t replicas,
                      std::uint64_t seed, const MsheOptions& reference, unsigned threads = 0);

/// h^N(t,0) for one replica.
double kpz_height_sample(const ModelParams& m, double t_macro, std::uint64_t seed, bool* boundary_ok = nullptr);

// Equilibrium stationarity --------------------------------------------------

struct StationarityReport {
  int N = 0;
  double alpha = 0;
  double x0 = 0;
  std::vector<double> times;  // equilibrium macro times
  std::vector<std::vector<double>> u;  // u[i][r]: time i, replica r
  std::vector<stats::Summary> summary;
  std::vector<double> ks_pvalue_vs_first;
  double centering_tolerance = 0;
};

/// Starts each replica from an exact mu_N sample and records u^N(t, x0) at
/// the given times (scale (2N)^(2 alpha)).
StationarityReport equilibrium_stationarity(const ModelParams& m, std::vector<double> times,
                                            double x0, std::size_t replicas, std::uint64_t seed,
                                            unsigned threads = 0);

}  // namespace wasep::fluctuations
