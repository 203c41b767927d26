#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wasep/core.hpp"

namespace wasep::heat_kernel {

enum class Domain { Segment, Line };
enum class Representation { Eigen, Images, PoissonBessel };

/// The walk jumps at total rate `speed` (speed/2 each way), so that
/// d/dt p = (speed/2) Delta p. Default speed is 2 c_N.
struct KernelSpec {
  ModelParams params;
  double speed = 0;
  Domain domain = Domain::Segment;

  static KernelSpec from_params(const ModelParams& m, Domain d = Domain::Segment);
  /// Segment {0..2N} with an arbitrary speed; params only supply N.
  static KernelSpec with_speed(int N, double speed, Domain d = Domain::Segment);
  void validate() const;
};

/// e^{-x} I_|l|(x), x = speed t, by a log-domain Bessel series summed
/// outward from its largest term; the geometric tail bound is below 1e-17
/// of the sum when the series is cut.
double line_kernel(const KernelSpec& spec, double t, long ell);

/// Same quantity from the Poisson mixture of discrete-time walks, with the
/// Poisson tail cut by a Chernoff bound at 1e-14. Cost O(x); for checks.
double line_kernel_poisson(const KernelSpec& spec, double t, long ell);

/// (1/N) sum_j sin(pi j k/2N) sin(pi j l/2N) exp(-speed t (1 - cos(pi j/2N))).
/// Sites 0 and 2N are allowed and give 0.
double dirichlet_kernel_eigen(const KernelSpec& spec, double t, int k, int ell);

struct ImagesValue {
  double value = 0;
  /// Certified bound on the omitted |j| > j_max terms.
  double truncation_bound = 0;
};

ImagesValue dirichlet_kernel_images(const KernelSpec& spec, double t, int k, int ell, int j_max);

/// 2 exp(x g(4N j_max / x)) with x = speed t; zero at t = 0.
double images_truncation_bound(const KernelSpec& spec, double t, int j_max);

/// Smallest j_max >= 1 whose truncation bound is <= tol.
int images_j_max(const KernelSpec& spec, double t, double tol = 1e-16);

/// values[k][l] for k, l in 0..2N (Segment) or values[0][l + L] for
/// l in -L..L (Line).
struct KernelTable {
  double t = 0;
  Domain domain = Domain::Segment;
  Representation representation = Representation::Eigen;
  int offset = 0;
  std::vector<std::vector<double>> values;

  std::string to_csv() const;
};

KernelTable segment_table(const KernelSpec& spec, double t, Representation rep = Representation::Eigen);
KernelTable line_table(const KernelSpec& spec, double t, long half_width);

/// 2 + exp(lambda t - gamma (l ^ (2N - l))).
double barrier_b(const ModelParams& m, double t, int ell);

/// p_{t-s}(k, l) b(s, k), kernel sped up by 2 c_N. Throws if s > t.
double q_kernel(const ModelParams& m, double s, double t, int k, int ell);

/// sqrt(1 + x^2) - x asinh(x) - 1.
double large_dev_g(double x);

/// exp(x g(a / x)) with x = speed t: bound on sum_{k >= a} pbar_t(k), a > 0.
double line_tail_bound(const KernelSpec& spec, double t, double a);

struct Window {
  long lo = 0;
  long hi = 0;
};

/// [lambda t/gamma + eps N, 2N - lambda t/gamma - eps N] rounded inward.
/// Throws std::domain_error when the window is empty.
Window bulk_window(const ModelParams& m, double t, double eps);

struct AuditRow {
  int N = 0;
  double alpha = 0;
  double t = 0;
  std::string name;
  double value = 0;
};

struct AuditSweep {
  std::vector<int> Ns;
  double alpha = 0.5;
  std::vector<double> times;  // KPZ macro times
  double eps = 0.2;
};

/// Suprema of the ratios behind the kernel estimates, one row per
/// (N, t, ratio), plus per-N rows for Eigen/Images agreement.
std::vector<AuditRow> kernel_bound_audit(const AuditSweep& sweep);

std::string audit_to_csv(const std::vector<AuditRow>& rows);

}  // namespace wasep::heat_kernel
