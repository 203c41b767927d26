#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace wasep::stats {

struct Summary {
  std::size_t n = 0;
  double mean = 0;
  double var = 0;  // unbiased
  double se = 0;   // standard error of the mean
};

/// Two-pass mean and unbiased variance.
Summary summarize(std::span<const double> xs);

/// Welford accumulator for streams that are too long to keep.
class Running {
 public:
  void add(double x);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double var() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double se() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0, m2_ = 0;
};

/// Symmetric P x P matrix, row major.
struct Matrix {
  std::size_t size = 0;
  std::vector<double> v;
  double operator()(std::size_t i, std::size_t j) const { return v[i * size + j]; }
  double& operator()(std::size_t i, std::size_t j) { return v[i * size + j]; }
};

struct CovarianceEstimate {
  Matrix cov;  // unbiased sample covariance
  Matrix se;   // delete-one jackknife standard errors
};

/// rows[s][i] is observation s at point i. Throws std::invalid_argument for
/// fewer than two rows or ragged input.
CovarianceEstimate covariance_with_jackknife(const std::vector<std::vector<double>>& rows);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b);

/// Asymptotic p-value for the two-sample KS distance.
double ks_pvalue(double d, std::size_t n, std::size_t m);

/// Total variation distance between an empirical histogram and a law.
double tv_distance(std::span<const std::uint64_t> counts, std::span<const double> probs);

/// Monte Carlo quantile of the total variation distance between a
/// multinomial(n, probs) histogram and probs.
double multinomial_tv_envelope(std::span<const double> probs, std::uint64_t n, double level,
                               int draws, std::uint64_t seed);

}  // namespace wasep::stats
