#include "wasep/core.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

namespace wasep {

double ModelParams::scale() const {
  return std::pow(2.0 * N, alpha);
}

namespace {

ModelParams fill_from_gamma(int N, double alpha, double gamma, double scale4) {
  ModelParams m;
  m.N = N;
  m.alpha = alpha;
  m.gamma = gamma;
  // Both weights from their own logistic form so that q never suffers the
  // cancellation of 1 - p when gamma is tiny.
  m.p = 1.0 / (1.0 + std::exp(-2.0 * gamma));
  m.q = 1.0 / (1.0 + std::exp(2.0 * gamma));
  m.c = scale4 / (2.0 * std::cosh(gamma));
  const double sh = std::sinh(0.5 * gamma);
  m.lambda = m.c * 4.0 * sh * sh;
  return m;
}

}  // namespace

ModelParams make_params(int N, double alpha) {
  if (N < 1) throw std::invalid_argument("make_params: N must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("make_params: alpha must lie in (0,1)");
  // pow is within an ulp in glibc; exp(alpha log 2N) would amplify the
  // rounding of the logarithm by alpha log 2N.
  const double L = 2.0 * N;
  const double gamma = 2.0 * std::pow(L, -alpha);
  return fill_from_gamma(N, alpha, gamma, std::pow(L, 4.0 * alpha));
}

ModelParams make_params_with_gamma(int N, double gamma) {
  if (N < 1) throw std::invalid_argument("make_params_with_gamma: N must be >= 1");
  if (!(gamma >= 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("make_params_with_gamma: gamma must be finite and >= 0");
  return fill_from_gamma(N, 0.0, gamma, 1.0);
}

BridgeState::BridgeState(std::vector<std::int32_t> heights) : heights_(std::move(heights)) {
  const std::size_t n = heights_.size();
  if (n < 3 || n % 2 == 0)
    throw InvariantError("bridge must have 2N+1 heights with N >= 1");
  if (heights_.front() != 0 || heights_.back() != 0)
    throw InvariantError("bridge must start and end at height 0");
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto d = heights_[k + 1] - heights_[k];
    if (d != 1 && d != -1)
      throw InvariantError("bridge increment at " + std::to_string(k) + " is not +-1");
  }
}

void BridgeState::flip_in_place(int k) {
  if (k < 1 || k >= sites()) throw NoCornerError("no corner at boundary site " + std::to_string(k));
  auto& h = heights_;
  const auto i = static_cast<std::size_t>(k);
  const int lap = h[i + 1] - 2 * h[i] + h[i - 1];
  if (lap == 0) throw NoCornerError("no corner at site " + std::to_string(k));
  h[i] += lap;
}

int Occupation::mass() const {
  return std::accumulate(eta.begin(), eta.end(), 0);
}

std::int64_t area(const BridgeState& s) {
  std::int64_t a = 0;
  for (auto h : s.heights()) a += h;
  return a;
}

int discrete_laplacian(const BridgeState& s, int k) {
  if (k < 1 || k >= s.sites())
    throw std::out_of_range("discrete_laplacian: site " + std::to_string(k) + " outside 1..2N-1");
  return s[k + 1] - 2 * s[k] + s[k - 1];
}

BridgeState flip(const BridgeState& s, int k) {
  BridgeState out = s;
  out.flip_in_place(k);
  return out;
}

CornerSets corner_sets(const BridgeState& s) {
  CornerSets cs;
  for (int k = 1; k < s.sites(); ++k) {
    const int lap = s[k + 1] - 2 * s[k] + s[k - 1];
    if (lap > 0)
      cs.down.push_back(k);
    else if (lap < 0)
      cs.up.push_back(k);
  }
  return cs;
}

BridgeState flat_initial(int N) {
  if (N < 1) throw std::invalid_argument("flat_initial: N must be >= 1");
  std::vector<std::int32_t> h(static_cast<std::size_t>(2 * N + 1));
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = static_cast<std::int32_t>(k % 2);
  return BridgeState(std::move(h));
}

BridgeState maximal_bridge(int N) {
  if (N < 1) throw std::invalid_argument("maximal_bridge: N must be >= 1");
  std::vector<std::int32_t> h(static_cast<std::size_t>(2 * N + 1));
  for (int k = 0; k <= 2 * N; ++k) h[static_cast<std::size_t>(k)] = std::min(k, 2 * N - k);
  return BridgeState(std::move(h));
}

BridgeState minimal_bridge(int N) {
  if (N < 1) throw std::invalid_argument("minimal_bridge: N must be >= 1");
  std::vector<std::int32_t> h(static_cast<std::size_t>(2 * N + 1));
  for (int k = 0; k <= 2 * N; ++k) h[static_cast<std::size_t>(k)] = -std::min(k, 2 * N - k);
  return BridgeState(std::move(h));
}

Occupation height_to_occupation(const BridgeState& s) {
  Occupation o;
  o.eta.resize(static_cast<std::size_t>(s.sites()));
  for (int k = 1; k <= s.sites(); ++k)
    o.eta[static_cast<std::size_t>(k - 1)] = static_cast<std::uint8_t>((s[k] - s[k - 1] + 1) / 2);
  return o;
}

BridgeState occupation_to_height(const Occupation& o) {
  const int L = o.sites();
  if (L < 2 || L % 2 != 0) throw InvariantError("occupation must cover 2N sites");
  const int m = o.mass();
  if (m != L / 2)
    throw InvariantError("occupation carries " + std::to_string(m) + " particles, expected " +
                         std::to_string(L / 2));
  std::vector<std::int32_t> h(static_cast<std::size_t>(L + 1), 0);
  for (int k = 1; k <= L; ++k) {
    const auto e = o.eta[static_cast<std::size_t>(k - 1)];
    if (e > 1) throw InvariantError("occupation values must be 0 or 1");
    h[static_cast<std::size_t>(k)] = h[static_cast<std::size_t>(k - 1)] + 2 * e - 1;
  }
  return BridgeState(std::move(h));
}

std::string bridge_to_csv(const BridgeState& s) {
  std::string out;
  out.reserve(s.heights().size() * 3);
  bool first = true;
  for (auto h : s.heights()) {
    if (!first) out.push_back(',');
    first = false;
    out += std::to_string(h);
  }
  return out;
}

BridgeState bridge_from_csv(std::string_view row) {
  std::vector<std::int32_t> h;
  std::size_t pos = 0;
  while (pos <= row.size()) {
    std::size_t end = row.find(',', pos);
    if (end == std::string_view::npos) end = row.size();
    auto field = row.substr(pos, end - pos);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\r' || field.back() == '\n'))
      field.remove_suffix(1);
    std::int32_t v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
      throw InvariantError("bridge csv: bad integer '" + std::string(field) + "'");
    h.push_back(v);
    pos = end + 1;
  }
  return BridgeState(std::move(h));
}

std::string occupation_to_hex(const Occupation& o) {
  static constexpr char digits[] = "0123456789abcdef";
  const int L = o.sites();
  std::string out;
  out.reserve(static_cast<std::size_t>((L + 3) / 4));
  for (int base = 0; base < L; base += 4) {
    int nib = 0;
    for (int b = 0; b < 4; ++b) {
      nib <<= 1;
      if (base + b < L) nib |= o.eta[static_cast<std::size_t>(base + b)] & 1;
    }
    out.push_back(digits[nib]);
  }
  return out;
}

Occupation occupation_from_hex(std::string_view hex, int sites) {
  if (sites < 0 || hex.size() != static_cast<std::size_t>((sites + 3) / 4))
    throw InvariantError("occupation hex: length does not match site count");
  Occupation o;
  o.eta.assign(static_cast<std::size_t>(sites), 0);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const char ch = hex[i];
    int nib;
    if (ch >= '0' && ch <= '9')
      nib = ch - '0';
    else if (ch >= 'a' && ch <= 'f')
      nib = ch - 'a' + 10;
    else if (ch >= 'A' && ch <= 'F')
      nib = ch - 'A' + 10;
    else
      throw InvariantError("occupation hex: bad digit");
    for (int b = 0; b < 4; ++b) {
      const int site = static_cast<int>(i) * 4 + b;
      const int bit = (nib >> (3 - b)) & 1;
      if (site < sites)
        o.eta[static_cast<std::size_t>(site)] = static_cast<std::uint8_t>(bit);
      else if (bit)
        throw InvariantError("occupation hex: padding bits must be zero");
    }
  }
  return o;
}

}  // namespace wasep
