#pragma once

#include <functional>
#include <string_view>
#include <vector>

namespace wasep::burgers {

/// Cell averages of the density on a uniform grid of [0,1].
struct CellField {
  int M = 0;
  double dx = 0;
  std::vector<double> values;
  double time = 0;

  /// Throws std::invalid_argument for M < 1 or values outside [0,1].
  static CellField from_values(std::vector<double> v, double time = 0);
  double mass() const;
};

enum class BoundaryMode { ZeroFlux, DirichletBLN };

/// G(eta) = 2 eta^2 - 2 eta, so that d_t eta + d_x G(eta) = 0.
/// Written so that G(0) and G(1) are +0.
inline double flux(double eta) { return 2.0 * eta * eta - 2.0 * eta; }

/// Exact Riemann flux for the convex G.
double godunov_flux(double a, double b);

/// CFL step used by solve(): 0.4 dx.
inline double default_dt(const CellField& f) { return 0.4 * f.dx; }

/// One conservative update. Throws std::invalid_argument if dt > dx/2.
CellField step(const CellField& field, double dt, BoundaryMode mode);

CellField solve(const CellField& eta0, double t_end, BoundaryMode mode);

/// Every time level of a run, including the initial one.
struct History {
  std::vector<double> times;
  std::vector<CellField> fields;
};

History solve_history(const CellField& eta0, double t_end, BoundaryMode mode);

/// m at the M+1 cell boundaries: m_0 = 0, m_i = m_{i-1} + (2 eta_i - 1) dx.
std::vector<double> integrated_height(const CellField& field);

// Built-in initial data.
CellField constant_field(int M, double value);
/// value_left on (0, x0), value_right on (x0, 1), exact cell averages.
CellField step_field(int M, double x0, double value_left, double value_right);
/// Cell averages of (1 + m0')/2 for a 1-Lipschitz height profile m0 with
/// m0(0) = 0; values are clipped to [0,1].
CellField from_height_profile(int M, const std::function<double(double)>& m0);
/// One line of comma separated cell values.
CellField field_from_csv(std::string_view row);

/// Cell averages of the flat-start solution: 1 on (0,t), 1/2 on
/// (t, 1-t), 0 on (1-t, 1); for t >= 1/2 the steady step.
CellField flat_exact(int M, double t);
/// x ^ (1-x) ^ t.
double flat_exact_height(double x, double t);

enum class Sign { plus, minus };

/// h^+-(eta,c) = -2 sgn^+-(eta - c)(eta(1-eta) - c(1-c)) with
/// sgn^+(x) = 1{x>0} and sgn^-(x) = -1{x<0}.
double semi_entropy_flux(double eta, double c, Sign s);

/// (x)^+ or (x)^-, both nonnegative.
double part(double x, Sign s);

/// phi sampled at (history time n, node x_j = j dx), j = 0..M.
using NodeSamples = std::vector<std::vector<double>>;

NodeSamples sample_test_function(const History& h, const std::function<double(double, double)>& phi);

/// Discrete left-hand side of the boundary entropy inequality on [0,T],
/// T the last history time. Midpoint rule in space, left endpoint in time,
/// phi differentiated by differences of the node samples; includes the
/// initial, boundary and a terminal term (the latter vanishes when phi(T)
/// = 0). Throws std::invalid_argument if any sample is negative.
double entropy_residual(const History& h, double c, const NodeSamples& phi, Sign s);

}  // namespace wasep::burgers
