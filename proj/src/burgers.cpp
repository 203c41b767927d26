#include "wasep/burgers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wasep::burgers {

CellField CellField::from_values(std::vector<double> v, double time) {
  if (v.empty()) throw std::invalid_argument("CellField: need at least one cell");
  for (double x : v)
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("CellField: value outside [0,1]");
  CellField f;
  f.M = static_cast<int>(v.size());
  f.dx = 1.0 / f.M;
  f.values = std::move(v);
  f.time = time;
  return f;
}

double CellField::mass() const {
  double s = 0;
  for (double v : values) s += v;
  return s * dx;
}

double godunov_flux(double a, double b) {
  if (a <= b) return flux(std::clamp(0.5, a, b));
  return std::max(flux(a), flux(b));
}

CellField step(const CellField& field, double dt, BoundaryMode mode) {
  if (!(dt >= 0.0) || dt > 0.5 * field.dx * (1.0 + 1e-12))
    throw std::invalid_argument("burgers step: CFL condition dt <= dx/2 violated");
  const int M = field.M;
  const auto& v = field.values;
  std::vector<double> F(static_cast<std::size_t>(M + 1));
  for (int i = 1; i < M; ++i)
    F[static_cast<std::size_t>(i)] = godunov_flux(v[static_cast<std::size_t>(i - 1)], v[static_cast<std::size_t>(i)]);
  if (mode == BoundaryMode::ZeroFlux) {
    F.front() = 0.0;
    F.back() = 0.0;
  } else {
    // ghost cells carry the Dirichlet data 1 (left) and 0 (right)
    F.front() = godunov_flux(1.0, v.front());
    F.back() = godunov_flux(v.back(), 0.0);
  }
  const double r = dt / field.dx;
  CellField out = field;
  for (int i = 0; i < M; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.values[k] = v[k] - r * (F[k + 1] - F[k]);
  }
  out.time = field.time + dt;
  return out;
}

namespace {

template <class Visit>
CellField march(const CellField& eta0, double t_end, BoundaryMode mode, Visit&& visit) {
  if (!(t_end >= 0.0) || !std::isfinite(t_end))
    throw std::invalid_argument("burgers solve: t_end must be finite and >= 0");
  CellField f = eta0;
  const double t0 = eta0.time;
  const double dt = default_dt(eta0);
  // step count fixed in advance so the final time lands exactly on t_end
  const auto full = static_cast<long>(std::floor(t_end / dt));
  for (long n = 0; n < full; ++n) {
    f = step(f, dt, mode);
    f.time = t0 + static_cast<double>(n + 1) * dt;
    visit(f);
  }
  const double rest = t_end - static_cast<double>(full) * dt;
  if (rest > 1e-14 * dt) {
    f = step(f, rest, mode);
    visit(f);
  }
  f.time = t0 + t_end;
  return f;
}

}  // namespace

CellField solve(const CellField& eta0, double t_end, BoundaryMode mode) {
  return march(eta0, t_end, mode, [](const CellField&) {});
}

History solve_history(const CellField& eta0, double t_end, BoundaryMode mode) {
  History h;
  h.times.push_back(eta0.time);
  h.fields.push_back(eta0);
  march(eta0, t_end, mode, [&](const CellField& f) {
    h.times.push_back(f.time);
    h.fields.push_back(f);
  });
  h.times.back() = eta0.time + t_end;
  h.fields.back().time = h.times.back();
  return h;
}

std::vector<double> integrated_height(const CellField& field) {
  std::vector<double> m(static_cast<std::size_t>(field.M + 1), 0.0);
  for (int i = 0; i < field.M; ++i)
    m[static_cast<std::size_t>(i + 1)] =
        m[static_cast<std::size_t>(i)] + (2.0 * field.values[static_cast<std::size_t>(i)] - 1.0) * field.dx;
  return m;
}

CellField constant_field(int M, double value) {
  if (M < 1) throw std::invalid_argument("constant_field: M must be >= 1");
  return CellField::from_values(std::vector<double>(static_cast<std::size_t>(M), value));
}

CellField step_field(int M, double x0, double value_left, double value_right) {
  if (M < 1) throw std::invalid_argument("step_field: M must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) {
    // fraction of the cell lying left of x0
    const double left = std::clamp((x0 - static_cast<double>(i) / M) * M, 0.0, 1.0);
    v[static_cast<std::size_t>(i)] = left * value_left + (1.0 - left) * value_right;
  }
  return CellField::from_values(std::move(v));
}

CellField from_height_profile(int M, const std::function<double(double)>& m0) {
  if (M < 1) throw std::invalid_argument("from_height_profile: M must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i) {
    const double slope = (m0(static_cast<double>(i + 1) / M) - m0(static_cast<double>(i) / M)) * M;
    v[static_cast<std::size_t>(i)] = std::clamp(0.5 * (1.0 + slope), 0.0, 1.0);
  }
  return CellField::from_values(std::move(v));
}

CellField field_from_csv(std::string_view row) {
  std::vector<double> v;
  std::size_t pos = 0;
  while (pos <= row.size()) {
    std::size_t end = row.find(',', pos);
    if (end == std::string_view::npos) end = row.size();
    std::string field(row.substr(pos, end - pos));
    std::size_t used = 0;
    double x;
    try {
      x = std::stod(field, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("field csv: bad number '" + field + "'");
    }
    while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
    if (used != field.size()) throw std::invalid_argument("field csv: bad number '" + field + "'");
    v.push_back(x);
    pos = end + 1;
  }
  return CellField::from_values(std::move(v));
}

double flat_exact_height(double x, double t) { return std::min({x, 1.0 - x, t}); }

CellField flat_exact(int M, double t) {
  if (M < 1) throw std::invalid_argument("flat_exact: M must be >= 1");
  std::vector<double> v(static_cast<std::size_t>(M));
  const double tt = std::min(t, 0.5);
  for (int i = 0; i < M; ++i) {
    // cell average of (1 + m')/2 is exact from the piecewise linear m
    const double a = static_cast<double>(i) / M, b = static_cast<double>(i + 1) / M;
    const double slope = (flat_exact_height(b, tt) - flat_exact_height(a, tt)) * M;
    v[static_cast<std::size_t>(i)] = std::clamp(0.5 * (1.0 + slope), 0.0, 1.0);
  }
  return CellField::from_values(std::move(v), t);
}

double part(double x, Sign s) { return s == Sign::plus ? std::max(x, 0.0) : std::max(-x, 0.0); }

double semi_entropy_flux(double eta, double c, Sign s) {
  const double d = eta - c;
  const double sg = s == Sign::plus ? (d > 0 ? 1.0 : 0.0) : (d < 0 ? -1.0 : 0.0);
  return -2.0 * sg * (eta * (1.0 - eta) - c * (1.0 - c));
}

NodeSamples sample_test_function(const History& h, const std::function<double(double, double)>& phi) {
  NodeSamples out(h.times.size());
  const int M = h.fields.front().M;
  for (std::size_t n = 0; n < h.times.size(); ++n) {
    out[n].resize(static_cast<std::size_t>(M + 1));
    for (int j = 0; j <= M; ++j)
      out[n][static_cast<std::size_t>(j)] = phi(h.times[n], static_cast<double>(j) / M);
  }
  return out;
}

double entropy_residual(const History& h, double c, const NodeSamples& phi, Sign s) {
  if (h.times.empty()) throw std::invalid_argument("entropy_residual: empty history");
  const std::size_t K = h.times.size();
  const int M = h.fields.front().M;
  const double dx = 1.0 / M;
  if (phi.size() != K) throw std::invalid_argument("entropy_residual: phi has wrong time count");
  for (const auto& row : phi) {
    if (row.size() != static_cast<std::size_t>(M + 1))
      throw std::invalid_argument("entropy_residual: phi has wrong node count");
    for (double v : row)
      if (v < 0) throw std::invalid_argument("entropy_residual: test function must be nonnegative");
  }
  auto centre = [&](std::size_t n, int i) {
    return 0.5 * (phi[n][static_cast<std::size_t>(i)] + phi[n][static_cast<std::size_t>(i + 1)]);
  };

  double interior = 0, boundary = 0;
  for (std::size_t n = 0; n + 1 < K; ++n) {
    const double dt = h.times[n + 1] - h.times[n];
    if (dt <= 0) continue;
    const auto& v = h.fields[n].values;
    double row = 0;
    for (int i = 0; i < M; ++i) {
      const double e = v[static_cast<std::size_t>(i)];
      const double phit = (centre(n + 1, i) - centre(n, i)) / dt;
      const double phix = (phi[n][static_cast<std::size_t>(i + 1)] - phi[n][static_cast<std::size_t>(i)]) / dx;
      row += part(e - c, s) * phit + semi_entropy_flux(e, c, s) * phix;
    }
    interior += row * dx * dt;
    boundary += 2.0 * (part(1.0 - c, s) * phi[n].front() + part(0.0 - c, s) * phi[n].back()) * dt;
  }
  double initial = 0, terminal = 0;
  for (int i = 0; i < M; ++i) {
    initial += part(h.fields.front().values[static_cast<std::size_t>(i)] - c, s) * centre(0, i);
    terminal += part(h.fields.back().values[static_cast<std::size_t>(i)] - c, s) * centre(K - 1, i);
  }
  return interior + boundary + (initial - terminal) * dx;
}

}  // namespace wasep::burgers
