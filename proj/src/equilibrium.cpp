#include "wasep/equilibrium.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "wasep/rng.hpp"

namespace wasep::equilibrium {

namespace {

double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace

PartitionTable::PartitionTable(const ModelParams& m) : m_(m) {
  if (m.N > max_dense_N)
    throw std::invalid_argument("PartitionTable: N above the dense limit; use log_partition_streaming");
  const int L = 2 * m.N;
  offset_.resize(static_cast<std::size_t>(L + 2));
  offset_[0] = 0;
  for (int k = 0; k <= L; ++k)
    offset_[static_cast<std::size_t>(k + 1)] =
        offset_[static_cast<std::size_t>(k)] + static_cast<std::size_t>(std::min(k, L - k) + 1);
  logz_.assign(offset_.back(), 0.0);
  const double g = m.gamma;
  for (int k = L - 1; k >= 0; --k) {
    const int hm = std::min(k, L - k);
    for (int h = -hm; h <= hm; h += 2) {
      double acc = -std::numeric_limits<double>::infinity();
      if (admissible(k + 1, h + 1)) acc = logaddexp(acc, g * (h + 1) + logz_[index(k + 1, h + 1)]);
      if (admissible(k + 1, h - 1)) acc = logaddexp(acc, g * (h - 1) + logz_[index(k + 1, h - 1)]);
      logz_[index(k, h)] = acc;
    }
  }
}

bool PartitionTable::admissible(int k, int h) const {
  const int L = 2 * m_.N;
  if (k < 0 || k > L) return false;
  const int hm = std::min(k, L - k);
  return h >= -hm && h <= hm && ((h + k) % 2 == 0);
}

std::size_t PartitionTable::index(int k, int h) const {
  const int hm = std::min(k, 2 * m_.N - k);
  return offset_[static_cast<std::size_t>(k)] + static_cast<std::size_t>((h + hm) / 2);
}

double PartitionTable::log_z(int k, int h) const {
  if (!admissible(k, h)) throw std::out_of_range("PartitionTable: inadmissible (k,h)");
  return logz_[index(k, h)];
}

PartitionTable build_partition_table(const ModelParams& m) { return PartitionTable(m); }

double log_partition_streaming(const ModelParams& m) {
  const int L = 2 * m.N;
  // col[j] holds height h = -hm + 2j of the current column.
  std::vector<double> next{0.0}, cur;
  int hm_next = 0;
  for (int k = L - 1; k >= 0; --k) {
    const int hm = std::min(k, L - k);
    cur.assign(static_cast<std::size_t>(hm + 1), 0.0);
    for (int j = 0; j <= hm; ++j) {
      const int h = -hm + 2 * j;
      double acc = -std::numeric_limits<double>::infinity();
      for (int d : {+1, -1}) {
        const int hn = h + d;
        if (hn < -hm_next || hn > hm_next) continue;
        acc = logaddexp(acc, m.gamma * hn + next[static_cast<std::size_t>((hn + hm_next) / 2)]);
      }
      cur[static_cast<std::size_t>(j)] = acc;
    }
    next.swap(cur);
    hm_next = hm;
  }
  return next[0];
}

BridgeState sample_one(const PartitionTable& table, std::uint64_t stream_seed) {
  const int L = 2 * table.N();
  const double g = table.params().gamma;
  Rng rng(stream_seed);
  std::vector<std::int32_t> h(static_cast<std::size_t>(L + 1), 0);
  int cur = 0;
  for (int k = 0; k < L; ++k) {
    bool up;
    if (!table.admissible(k + 1, cur + 1))
      up = false;
    else if (!table.admissible(k + 1, cur - 1))
      up = true;
    else {
      const double pu = std::exp(g * (cur + 1) + table.log_z(k + 1, cur + 1) - table.log_z(k, cur));
      up = rng.uniform() < pu;
    }
    cur += up ? 1 : -1;
    h[static_cast<std::size_t>(k + 1)] = cur;
  }
  return BridgeState(std::move(h));
}

std::vector<BridgeState> sample_mu(const PartitionTable& table, std::size_t count,
                                   std::uint64_t seed, std::uint64_t first_index) {
  std::vector<BridgeState> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(sample_one(table, derive_seed(seed, first_index + i)));
  return out;
}

double SigmaCurve::operator()(double xx) const {
  if (x.empty() || xx < x.front() || xx > x.back()) return 0.0;
  const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  const double pos = (xx - x.front()) / h;
  const auto k = std::min(static_cast<std::size_t>(pos), x.size() - 2);
  const double w = pos - static_cast<double>(k);
  return (1.0 - w) * value[k] + w * value[k + 1];
}

SigmaCurve sigma_curve(const ModelParams& m) {
  const int L = 2 * m.N;
  const double s = m.scale();
  SigmaCurve c;
  c.x.resize(static_cast<std::size_t>(L + 1));
  c.value.resize(static_cast<std::size_t>(L + 1));
  double acc = 0;
  for (int k = 0; k <= L; ++k) {
    if (k > 0) acc += std::tanh(2.0 * (m.N - k + 0.5) / s);
    c.x[static_cast<std::size_t>(k)] = (k - m.N) / s;
    c.value[static_cast<std::size_t>(k)] = acc;
  }
  // The summands are antisymmetric about N + 1/2, so the last value is zero
  // in exact arithmetic.
  c.value.back() = 0.0;
  return c;
}

double sigma_limit(double x) {
  // log cosh(2x) = |2x| + log1p(exp(-|4x|)) - log 2, stable for large |x|
  const double a = std::abs(2.0 * x);
  const double logcosh = a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
  return -0.5 * std::log(2.0) - 0.5 * logcosh;
}

std::vector<double> rescale_u(const BridgeState& s, const ModelParams& m, const SigmaCurve& sigma) {
  const int L = 2 * m.N;
  if (s.sites() != L) throw std::invalid_argument("rescale_u: bridge size does not match N");
  const double denom = std::sqrt(m.scale());
  std::vector<double> u(static_cast<std::size_t>(L + 1));
  for (int k = 0; k <= L; ++k)
    u[static_cast<std::size_t>(k)] = (s[k] - sigma.value[static_cast<std::size_t>(k)]) / denom;
  u.front() = 0.0;
  u.back() = 0.0;
  return u;
}

std::vector<double> rescale_u(const BridgeState& s, const ModelParams& m) {
  return rescale_u(s, m, sigma_curve(m));
}

double rescale_u_at(const BridgeState& s, const ModelParams& m, const SigmaCurve& sigma, double x) {
  const int L = 2 * m.N;
  const double sc = m.scale();
  const double pos = m.N + x * sc;
  if (pos < 0 || pos > L) return 0.0;
  const int k = std::min(static_cast<int>(pos), L - 1);
  const double w = pos - k;
  const double S = (1.0 - w) * s[k] + w * s[k + 1];
  const double Sg = (1.0 - w) * sigma.value[static_cast<std::size_t>(k)] +
                    w * sigma.value[static_cast<std::size_t>(k + 1)];
  return (S - Sg) / std::sqrt(sc);
}

double balpha_covariance(double x, double y) {
  if (x > y) std::swap(x, y);
  // (1 + tanh 2x)/2 = 1/(1 + e^{-4x}), free of cancellation in the tails
  return 1.0 / (1.0 + std::exp(-4.0 * x)) / (1.0 + std::exp(4.0 * y));
}

stats::CovarianceEstimate empirical_covariance(const std::vector<std::vector<double>>& samples) {
  return stats::covariance_with_jackknife(samples);
}

}  // namespace wasep::equilibrium
