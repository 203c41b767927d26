#pragma once

#include <cstdint>
#include <vector>

#include "wasep/core.hpp"
#include "wasep/stats.hpp"

namespace wasep::equilibrium {

/// log Z(k,h): log of the total weight exp(gamma (S(k+1)+...+S(2N))) over
/// all completions of a path standing at height h after k steps. Stored
/// densely over the diamond |h| <= min(k, 2N-k), h = k mod 2.
class PartitionTable {
 public:
  /// Largest N accepted for the dense table (O(N^2) memory).
  static constexpr int max_dense_N = 8192;

  explicit PartitionTable(const ModelParams& m);

  const ModelParams& params() const { return m_; }
  int N() const { return m_.N; }
  /// Requires an admissible (k,h).
  double log_z(int k, int h) const;
  bool admissible(int k, int h) const;
  /// log Z_N = log_z(0,0).
  double log_partition() const { return log_z(0, 0); }

 private:
  std::size_t index(int k, int h) const;
  ModelParams m_;
  std::vector<std::size_t> offset_;
  std::vector<double> logz_;
};

PartitionTable build_partition_table(const ModelParams& m);

/// log Z_N with two columns of memory, for N beyond the dense limit.
double log_partition_streaming(const ModelParams& m);

/// Exact i.i.d. samples from the tilted bridge measure, drawn by walking the
/// table forward. Sample i uses the stream derive_seed(seed, first_index + i).
std::vector<BridgeState> sample_mu(const PartitionTable& table, std::size_t count,
                                   std::uint64_t seed, std::uint64_t first_index = 0);

/// One sample from the given stream.
BridgeState sample_one(const PartitionTable& table, std::uint64_t stream_seed);

/// Centering curve on the grid x_k = (k-N)/(2N)^alpha, k = 0..2N.
struct SigmaCurve {
  std::vector<double> x;
  std::vector<double> value;
  /// Linear interpolation; zero outside the grid.
  double operator()(double xx) const;
};

SigmaCurve sigma_curve(const ModelParams& m);

/// Limit of (Sigma^N(x) - N)/(2N)^alpha: -log(2)/2 - log(cosh 2x)/2.
double sigma_limit(double x);

/// u^N(x_k) = (S(k) - Sigma^N(x_k)) / (2N)^(alpha/2), k = 0..2N.
std::vector<double> rescale_u(const BridgeState& s, const ModelParams& m,
                              const SigmaCurve& sigma);
std::vector<double> rescale_u(const BridgeState& s, const ModelParams& m);

/// u^N at arbitrary x (linear interpolation between grid points, zero
/// outside [-N/(2N)^alpha, N/(2N)^alpha]).
double rescale_u_at(const BridgeState& s, const ModelParams& m, const SigmaCurve& sigma,
                    double x);

/// Limiting covariance ((1+tanh 2x)/2)((1-tanh 2y)/2) for x <= y, symmetric.
double balpha_covariance(double x, double y);

/// Sample covariance of u^N at the given points with jackknife SEs.
/// Throws std::invalid_argument with fewer than two samples.
stats::CovarianceEstimate empirical_covariance(const std::vector<std::vector<double>>& samples);

}  // namespace wasep::equilibrium
