#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wasep {

/// Raised when a state or parameter violates a model invariant.
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by flip() when the requested site carries no corner.
class NoCornerError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lattice size and asymmetry, together with the constants derived from
/// them. All rescalings (hydrodynamic, KPZ, equilibrium) are expressed
/// through these numbers.
struct ModelParams {
  int N = 0;          // half the lattice length; sites are 0..2N
  double alpha = 0;   // asymmetry exponent, in (0,1)
  double p = 0;       // rate of a downwards corner (local minimum)
  double q = 0;       // rate of an upwards corner, 1 - p evaluated directly
  double gamma = 0;   // (1/2) log(p/q) = 2 (2N)^(-alpha)
  double c = 0;       // (2N)^(4 alpha) / (e^gamma + e^-gamma)
  double lambda = 0;  // c (e^gamma - 2 + e^-gamma)

  int sites() const { return 2 * N; }
  /// (2N)^alpha
  double scale() const;
};

/// Builds the parameter set. Throws std::invalid_argument for N < 1 or
/// alpha outside (0,1).
ModelParams make_params(int N, double alpha);

/// Same constants for an arbitrary tilt gamma >= 0 (alpha is left at 0).
/// Only meant for limits that are not reachable through make_params, such
/// as the symmetric case gamma = 0.
ModelParams make_params_with_gamma(int N, double gamma);

/// Discrete bridge from (0,0) to (2N,0) with +-1 increments.
class BridgeState {
 public:
  BridgeState() = default;
  /// Validates the bridge invariants; throws InvariantError otherwise.
  explicit BridgeState(std::vector<std::int32_t> heights);

  int N() const { return static_cast<int>(heights_.size() / 2); }
  int sites() const { return static_cast<int>(heights_.size()) - 1; }
  std::int32_t operator[](int k) const { return heights_[static_cast<std::size_t>(k)]; }
  std::span<const std::int32_t> heights() const { return heights_; }

  /// Flips the corner at k in place. Throws NoCornerError if there is none.
  void flip_in_place(int k);

  friend bool operator==(const BridgeState&, const BridgeState&) = default;

 private:
  std::vector<std::int32_t> heights_;
};

/// Particle configuration on sites 1..2N; eta[i] is site i+1.
struct Occupation {
  std::vector<std::uint8_t> eta;

  int sites() const { return static_cast<int>(eta.size()); }
  int mass() const;
  friend bool operator==(const Occupation&, const Occupation&) = default;
};

std::int64_t area(const BridgeState& s);

/// S(k+1) - 2 S(k) + S(k-1) for 1 <= k <= 2N-1.
int discrete_laplacian(const BridgeState& s, int k);

BridgeState flip(const BridgeState& s, int k);

struct CornerSets {
  std::vector<int> down;  // local minima, flip up at rate p
  std::vector<int> up;    // local maxima, flip down at rate 1 - p
};

CornerSets corner_sets(const BridgeState& s);

/// S(k) = k mod 2.
BridgeState flat_initial(int N);
/// k ^ (2N - k): all particles on the left.
BridgeState maximal_bridge(int N);
BridgeState minimal_bridge(int N);

Occupation height_to_occupation(const BridgeState& s);
/// Throws InvariantError unless the occupation carries exactly N particles
/// on 2N sites.
BridgeState occupation_to_height(const Occupation& o);

// Text formats (see docs/FORMATS.md).
std::string bridge_to_csv(const BridgeState& s);
BridgeState bridge_from_csv(std::string_view row);
std::string occupation_to_hex(const Occupation& o);
Occupation occupation_from_hex(std::string_view hex, int sites);

}  // namespace wasep
