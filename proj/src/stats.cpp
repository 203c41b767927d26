#include "wasep/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "wasep/rng.hpp"

namespace wasep::stats {

Summary summarize(std::span<const double> xs) {
  Summary s;
  s.n = xs.size();
  if (s.n == 0) return s;
  double sum = 0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.var = ss / static_cast<double>(s.n - 1);
    s.se = std::sqrt(s.var / static_cast<double>(s.n));
  }
  return s;
}

void Running::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double Running::se() const {
  return n_ > 1 ? std::sqrt(var() / static_cast<double>(n_)) : 0.0;
}

CovarianceEstimate covariance_with_jackknife(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  if (n < 2) throw std::invalid_argument("covariance needs at least two samples");
  const std::size_t P = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != P) throw std::invalid_argument("covariance: ragged samples");

  // Centre on the full-sample mean first; the delete-one estimates are then
  // cheap updates of the centred sums and do not lose precision.
  std::vector<double> mean(P, 0.0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < P; ++i) mean[i] += r[i];
  for (auto& m : mean) m /= static_cast<double>(n);

  CovarianceEstimate est;
  est.cov.size = est.se.size = P;
  est.cov.v.assign(P * P, 0.0);
  est.se.v.assign(P * P, 0.0);
  if (n < 3) {
    // Jackknife undefined with one remaining sample; report the plain estimate.
    for (std::size_t i = 0; i < P; ++i)
      for (std::size_t j = 0; j < P; ++j) {
        double s = 0;
        for (const auto& r : rows) s += (r[i] - mean[i]) * (r[j] - mean[j]);
        est.cov(i, j) = s / static_cast<double>(n - 1);
      }
    return est;
  }

  const double nd = static_cast<double>(n);
  std::vector<double> d(P);
  for (std::size_t i = 0; i < P; ++i) {
    for (std::size_t j = i; j < P; ++j) {
      double sxy = 0;
      for (const auto& r : rows) sxy += (r[i] - mean[i]) * (r[j] - mean[j]);
      const double full = sxy / (nd - 1);
      // Leaving out sample s with centred values a, b gives
      // (sxy - a b n/(n-1)) / (n-2).
      double jm = 0, jss = 0;
      std::size_t cnt = 0;
      for (const auto& r : rows) {
        const double a = r[i] - mean[i], b = r[j] - mean[j];
        const double loo = (sxy - a * b * nd / (nd - 1)) / (nd - 2);
        ++cnt;
        const double delta = loo - jm;
        jm += delta / static_cast<double>(cnt);
        jss += delta * (loo - jm);
      }
      const double se = std::sqrt((nd - 1) / nd * jss);
      est.cov(i, j) = est.cov(j, i) = full;
      est.se(i, j) = est.se(j, i) = se;
    }
  }
  return est;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_distance: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_pvalue(double d, std::size_t n, std::size_t m) {
  const double ne = static_cast<double>(n) * static_cast<double>(m) / static_cast<double>(n + m);
  const double sq = std::sqrt(ne);
  const double lam = (sq + 0.12 + 0.11 / sq) * d;
  if (lam < 1e-3) return 1.0;
  double sum = 0, sign = 1;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lam * lam);
    sum += term;
    if (std::abs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double tv_distance(std::span<const std::uint64_t> counts, std::span<const double> probs) {
  if (counts.size() != probs.size()) throw std::invalid_argument("tv_distance: size mismatch");
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  if (n == 0) throw std::invalid_argument("tv_distance: empty histogram");
  double s = 0;
  for (std::size_t i = 0; i < counts.size(); ++i)
    s += std::abs(static_cast<double>(counts[i]) / static_cast<double>(n) - probs[i]);
  return 0.5 * s;
}

double multinomial_tv_envelope(std::span<const double> probs, std::uint64_t n, double level,
                               int draws, std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("multinomial_tv_envelope: draws must be >= 1");
  std::mt19937_64 eng(seed);
  std::vector<double> tv(static_cast<std::size_t>(draws));
  std::vector<std::uint64_t> counts(probs.size());
  for (int r = 0; r < draws; ++r) {
    // Conditional binomial decomposition of the multinomial.
    std::uint64_t left = n;
    double pleft = 1.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (i + 1 == probs.size() || left == 0) {
        counts[i] = left;
        left = 0;
        continue;
      }
      const double pc = std::clamp(probs[i] / pleft, 0.0, 1.0);
      std::binomial_distribution<std::uint64_t> bin(left, pc);
      counts[i] = bin(eng);
      left -= counts[i];
      pleft -= probs[i];
    }
    tv[static_cast<std::size_t>(r)] = tv_distance(counts, probs);
  }
  std::sort(tv.begin(), tv.end());
  const auto idx = static_cast<std::size_t>(std::ceil(level * draws)) - 1;
  return tv[std::min(idx, tv.size() - 1)];
}

}  // namespace wasep::stats
