#include "wasep/dynamics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace wasep::dynamics {

double macro_time_to_micro(double t, Scaling s, const ModelParams& m) {
  if (!(t >= 0.0)) throw std::invalid_argument("macro_time_to_micro: t must be >= 0");
  const double L = 2.0 * m.N;
  switch (s) {
    case Scaling::hydro:
      return t * std::pow(L, 1.0 + m.alpha);
    case Scaling::kpz:
      return t * std::pow(L, 4.0 * m.alpha);
    case Scaling::equilibrium:
      return t * std::pow(L, 2.0 * m.alpha);
  }
  return 0.0;
}

double detailed_balance_defect(const ModelParams& m, const BridgeState& s, int k) {
  const BridgeState f = flip(s, k);
  auto rate = [&](const BridgeState& x) { return discrete_laplacian(x, k) > 0 ? m.p : m.q; };
  const double lw = m.gamma * static_cast<double>(area(f) - area(s));
  const double lr = std::log(rate(s)) - std::log(rate(f));
  return std::abs(lw - lr);
}

void Schedule::validate() const {
  if (!std::isfinite(horizon) || horizon < 0)
    throw std::invalid_argument("schedule horizon must be finite and >= 0");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0)
      throw std::invalid_argument("schedule time must be finite and >= 0");
    if (i > 0 && times[i] < times[i - 1])
      throw std::invalid_argument("schedule times must be non-decreasing");
    if (times[i] > horizon) throw std::invalid_argument("schedule time beyond horizon");
  }
}

Schedule Schedule::from_times(std::vector<double> times) {
  Schedule s;
  s.horizon = times.empty() ? 0.0 : times.back();
  s.times = std::move(times);
  s.validate();
  return s;
}

// --- corner engine -------------------------------------------------------

CornerEngine::CornerEngine(const ModelParams& m, const BridgeState& initial, std::uint64_t seed)
    : m_(m), rng_(seed) {
  if (initial.N() != m.N) throw std::invalid_argument("initial bridge size does not match N");
  h_.assign(initial.heights().begin(), initial.heights().end());
  const int L = 2 * m.N;
  slot_.assign(static_cast<std::size_t>(L + 1), -1);
  kind_.assign(static_cast<std::size_t>(L + 1), 0);
  for (int k = 1; k < L; ++k) refresh(k);
}

double CornerEngine::total_rate() const {
  return m_.p * static_cast<double>(down_.size()) + m_.q * static_cast<double>(up_.size());
}

BridgeState CornerEngine::state() const { return BridgeState(h_); }

void CornerEngine::add(std::vector<int>& list, int k) {
  slot_[static_cast<std::size_t>(k)] = static_cast<int>(list.size());
  list.push_back(k);
}

void CornerEngine::remove(std::vector<int>& list, int k) {
  const int i = slot_[static_cast<std::size_t>(k)];
  const int last = list.back();
  list[static_cast<std::size_t>(i)] = last;
  slot_[static_cast<std::size_t>(last)] = i;
  list.pop_back();
  slot_[static_cast<std::size_t>(k)] = -1;
}

void CornerEngine::refresh(int k) {
  if (k < 1 || k >= 2 * m_.N) return;
  const auto i = static_cast<std::size_t>(k);
  const int lap = h_[i + 1] - 2 * h_[i] + h_[i - 1];
  const std::int8_t want = lap > 0 ? 1 : (lap < 0 ? -1 : 0);
  const std::int8_t have = kind_[i];
  if (want == have) return;
  if (have == 1) remove(down_, k);
  if (have == -1) remove(up_, k);
  if (want == 1) add(down_, k);
  if (want == -1) add(up_, k);
  kind_[i] = want;
}

void CornerEngine::advance_to(double t) {
  if (!std::isfinite(t)) throw std::invalid_argument("advance_to: non-finite time");
  if (t < t_) throw std::invalid_argument("advance_to: time runs backwards");
  for (;;) {
    const double pd = m_.p * static_cast<double>(down_.size());
    const double R = pd + m_.q * static_cast<double>(up_.size());
    if (R <= 0) {
      t_ = t;
      return;
    }
    const double dt = rng_.exponential(R);
    if (t_ + dt > t) {
      // The overshooting draw is discarded; by memorylessness the next call
      // starts a fresh clock at t.
      compensator_ += R * (t - t_);
      t_ = t;
      return;
    }
    compensator_ += R * dt;
    t_ += dt;
    int k;
    if (rng_.uniform() * R < pd)
      k = down_[rng_.below(down_.size())];
    else
      k = up_[rng_.below(up_.size())];
    const auto i = static_cast<std::size_t>(k);
    h_[i] += h_[i + 1] - 2 * h_[i] + h_[i - 1];
    refresh(k - 1);
    refresh(k);
    refresh(k + 1);
    ++events_;
  }
}

std::uint64_t simulate_streaming(
    const ModelParams& m, const BridgeState& initial, const Schedule& schedule,
    std::uint64_t seed,
    const std::function<void(double, std::span<const std::int32_t>)>& observe) {
  schedule.validate();
  CornerEngine eng(m, initial, seed);
  for (double t : schedule.times) {
    eng.advance_to(t);
    observe(t, eng.heights());
  }
  return eng.events();
}

Trajectory simulate(const ModelParams& m, const BridgeState& initial, const Schedule& schedule,
                    std::uint64_t seed) {
  schedule.validate();
  Trajectory tr;
  tr.params = m;
  tr.seed = seed;
  CornerEngine eng(m, initial, seed);
  tr.snapshots.reserve(schedule.times.size());
  for (double t : schedule.times) {
    eng.advance_to(t);
    tr.snapshots.push_back({t, eng.state()});
  }
  tr.event_count = eng.events();
  tr.compensator = eng.compensator();
  return tr;
}

std::vector<double> density_profile(const BridgeState& s, int cells) {
  if (cells < 1) throw std::invalid_argument("density_profile: cells must be >= 1");
  const int L = s.sites();
  std::vector<double> out(static_cast<std::size_t>(cells), 0.0);
  std::vector<std::int64_t> count(static_cast<std::size_t>(cells), 0);
  for (int k = 1; k <= L; ++k) {
    if (s[k] - s[k - 1] != 1) continue;
    // cell of the point (k - 1/2)/L, i.e. floor((2k-1) cells / 2L)
    const auto c = static_cast<std::size_t>((static_cast<std::int64_t>(2 * k - 1) * cells) /
                                            (2 * static_cast<std::int64_t>(L)));
    ++count[c];
  }
  for (std::size_t c = 0; c < out.size(); ++c)
    out[c] = static_cast<double>(count[c]) / static_cast<double>(L);
  return out;
}

std::vector<double> rescaled_height(const BridgeState& s) {
  const int L = s.sites();
  std::vector<double> m(static_cast<std::size_t>(L + 1));
  for (int k = 0; k <= L; ++k) m[static_cast<std::size_t>(k)] = static_cast<double>(s[k]) / L;
  return m;
}

double rescaled_height_at(const BridgeState& s, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("rescaled_height_at: x outside [0,1]");
  const int L = s.sites();
  const double y = x * L;
  const int k = std::min(static_cast<int>(y), L - 1);
  const double w = y - k;
  return ((1.0 - w) * s[k] + w * s[k + 1]) / L;
}

// --- coupled process -----------------------------------------------------

int sign_changes(std::span<const std::uint8_t> eta, std::span<const std::uint8_t> zeta) {
  if (eta.size() != zeta.size()) throw std::invalid_argument("sign_changes: size mismatch");
  int clusters = 1;
  int allowed = 0;  // 0: both signs still possible, otherwise the fixed sign
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const int s = static_cast<int>(eta[i]) - static_cast<int>(zeta[i]);
    if (s == 0) continue;
    if (allowed == 0 || allowed == s) {
      allowed = s;
    } else {
      ++clusters;
      allowed = s;
    }
  }
  return clusters;
}

int sign_changes(const CoupledState& s) { return sign_changes(s.eta, s.zeta); }

CoupledState coupled_from_uniforms(std::span<const double> eta_density, double c, Rng& rng) {
  if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("coupled_from_uniforms: c outside [0,1]");
  CoupledState s;
  s.c = c;
  s.eta.resize(eta_density.size());
  s.zeta.resize(eta_density.size());
  for (std::size_t i = 0; i < eta_density.size(); ++i) {
    const double u = rng.uniform();
    s.eta[i] = u < eta_density[i];
    s.zeta[i] = u < c;
  }
  return s;
}

namespace {

struct ActiveList {
  std::vector<int> items;
  std::vector<int> slot;

  explicit ActiveList(std::size_t n) : slot(n, -1) {}
  bool has(int b) const { return slot[static_cast<std::size_t>(b)] >= 0; }
  void set(int b, bool on) {
    if (on == has(b)) return;
    if (on) {
      slot[static_cast<std::size_t>(b)] = static_cast<int>(items.size());
      items.push_back(b);
    } else {
      const int i = slot[static_cast<std::size_t>(b)];
      const int last = items.back();
      items[static_cast<std::size_t>(i)] = last;
      slot[static_cast<std::size_t>(last)] = i;
      items.pop_back();
      slot[static_cast<std::size_t>(b)] = -1;
    }
  }
};

}  // namespace

CoupledTrajectory simulate_coupled(const ModelParams& m, double c, const CoupledState& initial,
                                   const Schedule& schedule, std::uint64_t seed,
                                   const CoupledOptions& opts) {
  if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("simulate_coupled: c outside [0,1]");
  schedule.validate();
  const int L = 2 * m.N;
  if (static_cast<int>(initial.eta.size()) != L || static_cast<int>(initial.zeta.size()) != L)
    throw std::invalid_argument("simulate_coupled: state size does not match 2N");

  std::vector<std::uint8_t> eta = initial.eta, zeta = initial.zeta;
  const int nb = L - 1;  // bonds (b, b+1) in 0-based sites
  ActiveList left(static_cast<std::size_t>(nb)), right(static_cast<std::size_t>(nb));
  auto refresh = [&](int b) {
    if (b < 0 || b >= nb) return;
    const auto i = static_cast<std::size_t>(b);
    left.set(b, (!eta[i] && eta[i + 1]) || (!zeta[i] && zeta[i + 1]));
    right.set(b, (eta[i] && !eta[i + 1]) || (zeta[i] && !zeta[i + 1]));
  };
  for (int b = 0; b < nb; ++b) refresh(b);

  const double drift = m.p - m.q;  // 2p - 1 without cancellation
  const double out_rate = drift * (1.0 - c);
  const double in_rate = drift * c;

  CoupledTrajectory tr;
  tr.params = m;
  tr.c = c;
  tr.seed = seed;
  tr.horizon = schedule.horizon;
  tr.initial_sign_changes = sign_changes(eta, zeta);
  tr.max_sign_changes = tr.initial_sign_changes;
  tr.zeta_time_integral.assign(static_cast<std::size_t>(L), 0.0);
  std::vector<double> last_change(static_cast<std::size_t>(L), 0.0);

  auto check = [&] {
    const int n = sign_changes(eta, zeta);
    tr.max_sign_changes = std::max(tr.max_sign_changes, n);
    if (n > tr.initial_sign_changes + 3) {
      ++tr.violations;
      if (opts.throw_on_violation)
        throw InvariantError("sign changes grew from " + std::to_string(tr.initial_sign_changes) +
                             " to " + std::to_string(n));
    }
  };
  auto set_zeta = [&](std::size_t i, std::uint8_t v, double t) {
    tr.zeta_time_integral[i] += (t - last_change[i]) * zeta[i];
    last_change[i] = t;
    zeta[i] = v;
  };

  Rng rng(seed);
  double t = 0;
  auto run_until = [&](double target) {
    for (;;) {
      const double rl = m.p * static_cast<double>(left.items.size());
      const double rr = m.q * static_cast<double>(right.items.size());
      const double r1 = zeta[0] ? out_rate : 0.0;
      const double r2 = zeta[static_cast<std::size_t>(L - 1)] ? 0.0 : in_rate;
      const double R = rl + rr + r1 + r2;
      if (R <= 0) {
        t = target;
        return;
      }
      const double dt = rng.exponential(R);
      if (t + dt > target) {
        t = target;
        return;
      }
      t += dt;
      double u = rng.uniform() * R;
      if (u < rl + rr) {
        const bool go_left = u < rl;
        auto& list = go_left ? left : right;
        const int b = list.items[rng.below(list.items.size())];
        const auto i = static_cast<std::size_t>(b);
        // A leftward ring moves a particle from b+1 to b in every species
        // where that is possible; a rightward ring the opposite.
        const std::size_t from = go_left ? i + 1 : i, to = go_left ? i : i + 1;
        if (eta[from] && !eta[to]) {
          eta[from] = 0;
          eta[to] = 1;
        }
        if (zeta[from] && !zeta[to]) {
          set_zeta(from, 0, t);
          set_zeta(to, 1, t);
        }
        refresh(b - 1);
        refresh(b);
        refresh(b + 1);
        ++tr.bulk_events;
        if (opts.check_every_event) check();
      } else {
        u -= rl + rr;
        if (u < r1) {
          set_zeta(0, 0, t);
          refresh(0);
        } else {
          set_zeta(static_cast<std::size_t>(L - 1), 1, t);
          refresh(nb - 1);
        }
        ++tr.boundary_events;
        check();
      }
    }
  };

  for (double ts : schedule.times) {
    run_until(ts);
    tr.times.push_back(ts);
    tr.snapshots.push_back({eta, zeta, c});
    check();
  }
  run_until(schedule.horizon);
  for (std::size_t i = 0; i < tr.zeta_time_integral.size(); ++i)
    tr.zeta_time_integral[i] += (schedule.horizon - last_change[i]) * zeta[i];
  return tr;
}

// --- replacement statistic -----------------------------------------------

double LocalFunction::eval(std::span<const std::uint8_t> eta, int j) const {
  const int L = static_cast<int>(eta.size());
  unsigned idx = 0;
  for (int i = 0; i < r; ++i) {
    // site s in 1..2N is stored at s-1; reduce modulo 2N
    int s = ((j + first + i - 1) % L + L) % L;
    idx |= static_cast<unsigned>(eta[static_cast<std::size_t>(s)] & 1) << i;
  }
  return table[idx];
}

double LocalFunction::bernoulli_mean(double a) const {
  double sum = 0;
  for (unsigned b = 0; b < table.size(); ++b) {
    const int ones = std::popcount(b);
    sum += table[b] * std::pow(a, ones) * std::pow(1.0 - a, r - ones);
  }
  return sum;
}

LocalFunction LocalFunction::current() {
  // bit 0 is eta(0), bit 1 is eta(1)
  return LocalFunction{0, 2, {0.0, 0.0, -2.0, 0.0}};
}

LocalFunction LocalFunction::occupation() { return LocalFunction{1, 1, {0.0, 1.0}}; }

namespace {

void check_window(std::size_t L, int half_width, const LocalFunction& phi) {
  if (half_width < 0) throw std::invalid_argument("replacement: negative half width");
  if (phi.r < 1 || phi.table.size() != (std::size_t{1} << phi.r))
    throw std::invalid_argument("replacement: table size must be 2^r");
  if (phi.r > 2 * half_width + 1)
    throw std::invalid_argument("replacement: local function wider than the box");
  if (static_cast<std::size_t>(2 * half_width + 1) > L)
    throw std::invalid_argument("replacement: box larger than the lattice");
}

}  // namespace

double replacement_statistic(std::span<const std::uint8_t> eta, int center, int half_width,
                             const LocalFunction& phi) {
  check_window(eta.size(), half_width, phi);
  const int L = static_cast<int>(eta.size());
  double sphi = 0, seta = 0;
  for (int j = center - half_width; j <= center + half_width; ++j) {
    sphi += phi.eval(eta, j);
    seta += eta[static_cast<std::size_t>(((j - 1) % L + L) % L)];
  }
  const double w = 2.0 * half_width + 1.0;
  return std::abs(sphi / w - phi.bernoulli_mean(seta / w));
}

double replacement_site_average(std::span<const std::uint8_t> eta, int half_width,
                                const LocalFunction& phi) {
  check_window(eta.size(), half_width, phi);
  const int L = static_cast<int>(eta.size());
  std::vector<double> f(static_cast<std::size_t>(L));
  for (int s = 1; s <= L; ++s) f[static_cast<std::size_t>(s - 1)] = phi.eval(eta, s);
  auto at = [&](int s) { return static_cast<std::size_t>(((s - 1) % L + L) % L); };
  // Sliding sums. For integer-valued tables (the usual case) these are exact.
  double sphi = 0;
  long seta = 0;
  for (int j = 1 - half_width; j <= 1 + half_width; ++j) {
    sphi += f[at(j)];
    seta += eta[at(j)];
  }
  const double w = 2.0 * half_width + 1.0;
  double total = 0;
  for (int k = 1; k <= L; ++k) {
    total += std::abs(sphi / w - phi.bernoulli_mean(static_cast<double>(seta) / w));
    sphi += f[at(k + half_width + 1)] - f[at(k - half_width)];
    seta += eta[at(k + half_width + 1)] - eta[at(k - half_width)];
  }
  return total / L;
}

std::string trajectory_to_csv(const Trajectory& tr) {
  std::string out;
  char b[32];
  for (const auto& sn : tr.snapshots) {
    std::snprintf(b, sizeof b, "%.17g", sn.time);
    out += b;
    out += ',';
    out += bridge_to_csv(sn.state);
    out += '\n';
  }
  return out;
}

namespace {

constexpr std::uint16_t binary_version = 1;

template <class T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::uint64_t x = 0;
  std::memcpy(&x, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(x >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
bool get_le(std::istream& in, T& v) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) return false;
  std::uint64_t x = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  std::memcpy(&v, &x, sizeof(T));
  return true;
}

}  // namespace

void write_trajectory_binary(std::ostream& out, const Trajectory& tr) {
  out.write("WS", 2);
  put_le<std::uint16_t>(out, binary_version);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tr.params.N));
  put_le<double>(out, tr.params.alpha);
  const int L = 2 * tr.params.N;
  std::vector<char> bits(static_cast<std::size_t>((L + 7) / 8));
  for (const auto& sn : tr.snapshots) {
    if (sn.state.sites() != L) throw std::invalid_argument("write_trajectory_binary: snapshot size mismatch");
    put_le<double>(out, sn.time);
    std::fill(bits.begin(), bits.end(), 0);
    for (int k = 1; k <= L; ++k)
      if (sn.state[k] > sn.state[k - 1]) bits[static_cast<std::size_t>((k - 1) / 8)] |= static_cast<char>(1 << ((k - 1) % 8));
    out.write(bits.data(), static_cast<std::streamsize>(bits.size()));
  }
  if (!out) throw std::runtime_error("write_trajectory_binary: write failed");
}

Trajectory read_trajectory_binary(std::istream& in) {
  char magic[2];
  std::uint16_t ver = 0;
  std::uint32_t N = 0;
  double alpha = 0;
  if (!in.read(magic, 2) || magic[0] != 'W' || magic[1] != 'S') throw std::runtime_error("trajectory file: bad magic");
  if (!get_le(in, ver) || ver != binary_version) throw std::runtime_error("trajectory file: unsupported version");
  if (!get_le(in, N) || !get_le(in, alpha)) throw std::runtime_error("trajectory file: truncated header");
  Trajectory tr;
  tr.params = make_params(static_cast<int>(N), alpha);
  const int L = 2 * static_cast<int>(N);
  std::vector<unsigned char> bits(static_cast<std::size_t>((L + 7) / 8));
  double t = 0;
  while (get_le(in, t)) {
    if (!in.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size())))
      throw std::runtime_error("trajectory file: truncated record");
    std::vector<std::int32_t> h(static_cast<std::size_t>(L + 1), 0);
    for (int k = 1; k <= L; ++k) {
      const bool up = (bits[static_cast<std::size_t>((k - 1) / 8)] >> ((k - 1) % 8)) & 1;
      h[static_cast<std::size_t>(k)] = h[static_cast<std::size_t>(k - 1)] + (up ? 1 : -1);
    }
    tr.snapshots.push_back({t, BridgeState(std::move(h))});
  }
  if (in.gcount() != 0 && in.gcount() != static_cast<std::streamsize>(sizeof(double)))
    throw std::runtime_error("trajectory file: truncated record");
  return tr;
}

}  // namespace wasep::dynamics
