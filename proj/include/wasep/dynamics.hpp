#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wasep/core.hpp"
#include "wasep/rng.hpp"

namespace wasep::dynamics {

enum class Scaling { hydro, kpz, equilibrium };

/// t (2N)^(1+alpha), t (2N)^(4 alpha) or t (2N)^(2 alpha).
double macro_time_to_micro(double t, Scaling s, const ModelParams& m);

/// |log(w(S^k)/w(S)) - log(rate(S->S^k)/rate(S^k->S))| with
/// w = exp(gamma area). Zero up to rounding for a reversible chain.
double detailed_balance_defect(const ModelParams& m, const BridgeState& s, int k);

struct Schedule {
  std::vector<double> times;  // microscopic, non-decreasing
  double horizon = 0;

  /// Throws std::invalid_argument when the invariants fail.
  void validate() const;
  static Schedule from_times(std::vector<double> times);
};

struct Snapshot {
  double time = 0;
  BridgeState state;
};

struct Trajectory {
  ModelParams params;
  std::vector<Snapshot> snapshots;
  std::uint64_t seed = 0;
  std::uint64_t event_count = 0;
  /// Integral of the total jump rate along the path; the event count minus
  /// this is a martingale, which the tests use as a sanity check.
  double compensator = 0;
};

/// Exact event-driven simulation of the corner dynamics in unsped time.
/// Corner lists are kept as swap-remove arrays with a site -> slot map, so
/// each event costs O(1).
class CornerEngine {
 public:
  CornerEngine(const ModelParams& m, const BridgeState& initial, std::uint64_t seed);

  /// Runs all events with time <= t, then moves the clock to t.
  void advance_to(double t);

  double time() const { return t_; }
  std::uint64_t events() const { return events_; }
  double compensator() const { return compensator_; }
  double total_rate() const;
  std::span<const std::int32_t> heights() const { return h_; }
  BridgeState state() const;
  std::size_t down_count() const { return down_.size(); }
  std::size_t up_count() const { return up_.size(); }

 private:
  void refresh(int k);
  void add(std::vector<int>& list, int k);
  void remove(std::vector<int>& list, int k);

  ModelParams m_;
  std::vector<std::int32_t> h_;
  std::vector<int> down_, up_;
  std::vector<int> slot_;     // position inside down_/up_, -1 if none
  std::vector<std::int8_t> kind_;  // +1 down corner, -1 up corner, 0 none
  Rng rng_;
  double t_ = 0;
  std::uint64_t events_ = 0;
  double compensator_ = 0;
};

Trajectory simulate(const ModelParams& m, const BridgeState& initial, const Schedule& schedule,
                    std::uint64_t seed);

/// One row per snapshot: time, then the heights S(0..2N).
std::string trajectory_to_csv(const Trajectory& tr);

/// Binary snapshot file. 16-byte header: "WS", uint16 version (1), uint32
/// N, float64 alpha; then per snapshot a float64 time and the 2N steps as
/// bits (1 = up step, site k in bit (k-1)%8 of byte (k-1)/8). Little endian.
void write_trajectory_binary(std::ostream& out, const Trajectory& tr);
/// Restores params (from N and alpha) and snapshots; seed and counters are
/// not stored. Throws std::runtime_error on a bad header or a truncated record.
Trajectory read_trajectory_binary(std::istream& in);

/// Streaming form: calls `observe(time, heights)` at each schedule time
/// instead of storing snapshots. Returns the event count.
std::uint64_t simulate_streaming(
    const ModelParams& m, const BridgeState& initial, const Schedule& schedule,
    std::uint64_t seed,
    const std::function<void(double, std::span<const std::int32_t>)>& observe);

/// Particle mass per macroscopic cell, divided by 2N. Site k sits at
/// (k - 1/2)/2N and is assigned to the cell containing that point.
std::vector<double> density_profile(const BridgeState& s, int cells);

/// m(x) = S(x 2N)/2N sampled at x = k/2N, k = 0..2N.
std::vector<double> rescaled_height(const BridgeState& s);

/// Linear interpolation of rescaled_height at x in [0,1].
double rescaled_height_at(const BridgeState& s, double x);

// Two-species coupled process -------------------------------------------

struct CoupledState {
  std::vector<std::uint8_t> eta;   // conserved species, sites 1..2N at [0..2N-1]
  std::vector<std::uint8_t> zeta;  // species with reservoirs
  double c = 0;
};

/// Minimal number of constant-sign clusters of eta - zeta, where sites with
/// eta = zeta fit into any cluster.
int sign_changes(const CoupledState& s);
int sign_changes(std::span<const std::uint8_t> eta, std::span<const std::uint8_t> zeta);

/// Couples eta and zeta through shared uniforms: eta(k) = 1{U_k <= f(k)},
/// zeta(k) = 1{U_k <= c}.
CoupledState coupled_from_uniforms(std::span<const double> eta_density, double c, Rng& rng);

struct CoupledOptions {
  /// Check the sign-change bound after every event, not only on snapshots
  /// and after reservoir events. O(N) per event; meant for small tests.
  bool check_every_event = false;
  /// Throw InvariantError on the first violation instead of counting.
  bool throw_on_violation = false;
};

struct CoupledTrajectory {
  ModelParams params;
  double c = 0;
  std::vector<double> times;
  std::vector<CoupledState> snapshots;
  std::uint64_t seed = 0;
  std::uint64_t bulk_events = 0;
  std::uint64_t boundary_events = 0;
  int initial_sign_changes = 0;
  int max_sign_changes = 0;
  std::uint64_t violations = 0;  // checks with n(t) > n(0) + 3
  /// Per site integral of zeta over [0, horizon].
  std::vector<double> zeta_time_integral;
  double horizon = 0;
};

/// Basic coupling in the bulk: each bond carries a leftward clock of rate p
/// and a rightward clock of rate 1 - p, and a ring moves every species that
/// can make that jump. zeta additionally loses a particle at site 1 at rate
/// (2p-1)(1-c) and gains one at site 2N at rate (2p-1)c. All clocks are
/// merged into one exponential race, which has the same law as separate
/// clocks.
CoupledTrajectory simulate_coupled(const ModelParams& m, double c, const CoupledState& initial,
                                   const Schedule& schedule, std::uint64_t seed,
                                   const CoupledOptions& opts = {});

// Replacement statistic ---------------------------------------------------

/// Local function of r consecutive sites starting at offset `first`:
/// Phi(tau_j eta) = table[b], bit i of b being eta(j + first + i).
struct LocalFunction {
  int first = 1;
  int r = 1;
  std::vector<double> table;  // size 2^r

  double eval(std::span<const std::uint8_t> eta, int j) const;
  /// Expectation under product Bernoulli(a), by summing all 2^r patterns.
  double bernoulli_mean(double a) const;

  /// -2 eta(1)(1 - eta(0)).
  static LocalFunction current();
  /// eta(1).
  static LocalFunction occupation();
};

/// V_l at `center`: |mean of Phi(tau_j eta) - Phi~(mean of eta)| over the
/// box {center-l..center+l}. Sites are periodic modulo 2N (site 0 is 2N).
/// Throws std::invalid_argument if r > 2l+1 or the box exceeds the lattice.
double replacement_statistic(std::span<const std::uint8_t> eta, int center, int half_width,
                             const LocalFunction& phi);

/// (1/2N) sum over all centres of V_l, via sliding window sums.
double replacement_site_average(std::span<const std::uint8_t> eta, int half_width,
                                const LocalFunction& phi);

}  // namespace wasep::dynamics
