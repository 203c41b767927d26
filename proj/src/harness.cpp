#include "wasep/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "wasep/burgers.hpp"
#include "wasep/core.hpp"
#include "wasep/dynamics.hpp"
#include "wasep/equilibrium.hpp"
#include "wasep/fluctuations.hpp"
#include "wasep/heat_kernel.hpp"
#include "wasep/parallel.hpp"
#include "wasep/rng.hpp"
#include "wasep/stats.hpp"

#ifndef WASEP_VERSION
#define WASEP_VERSION "0.0.0"
#endif

namespace wasep::harness {

using json = nlohmann::ordered_json;

std::string version() { return WASEP_VERSION; }

namespace {

const std::vector<std::string> kinds{"equilibrium", "hydro", "kpz", "burgers", "kernel-audit", "coupled"};

// schema order, also the order of config.resolved
const std::vector<std::string> keys{"kind",    "N",      "alpha",    "replicas", "seed",     "threads",
                                    "out",     "times",  "cells",    "initial",  "points",   "eps",
                                    "c",       "boundary", "mshe_dx", "mshe_replicas", "check_every_event"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool to_i64(std::string_view s, long long& v) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty();
}

bool to_u64(std::string_view s, std::uint64_t& v) {
  if (s.empty() || s.front() == '-') return false;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool to_real(std::string_view s, double& v) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size() && !s.empty() && std::isfinite(v);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string num(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.12g", v);
  return b;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += num(v[i]);
    else
      s += std::to_string(v[i]);
  }
  return s;
}

void apply_defaults(ExperimentConfig& c) {
  if (c.kind == "equilibrium") {
    c.N = {512};
    c.replicas = 10000;
    c.points = {-1, -0.5, 0, 0.5, 1};
  } else if (c.kind == "hydro") {
    c.N = {128, 512};
    c.replicas = 8;
    c.times = {0.25};
  } else if (c.kind == "kpz") {
    c.N = {64, 128, 256, 512};
    c.alpha = 1.0 / 3;
    c.replicas = 500;
    c.times = {0.1};
  } else if (c.kind == "burgers") {
    c.cells = 400;
    c.times = {0.25, 0.5};
  } else if (c.kind == "kernel-audit") {
    c.N = {16, 32, 64};
    c.times = {0.002, 0.005, 0.01, 0.02};
    c.eps = {0.2};
  } else if (c.kind == "coupled") {
    c.N = {128};
    c.replicas = 1000;
    c.times = {1.0};
    c.c = {0.25, 0.5, 0.75};
    c.initial = "step";
  }
}

struct Entry {
  std::string value;
  std::string origin;
};

class Builder {
 public:
  Builder(std::map<std::string, Entry> e, std::vector<ConfigError>& err) : e_(std::move(e)), err_(err) {}

  std::string origin(const std::string& key) const {
    const auto it = e_.find(key);
    return it == e_.end() ? "default" : it->second.origin;
  }
  bool has(const std::string& key) const { return e_.count(key) != 0; }
  void fail(const std::string& key, const std::string& msg) { err_.push_back({origin(key), key, msg}); }

  template <class Fn>
  void with(const std::string& key, Fn&& fn) {
    const auto it = e_.find(key);
    if (it != e_.end()) fn(it->second.value);
  }

  void integer(const std::string& key, long long lo, long long hi, auto& out) {
    with(key, [&](const std::string& v) {
      long long x;
      if (!to_i64(v, x)) return fail(key, "expected an integer, got '" + v + "'");
      if (x < lo || x > hi)
        return fail(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + v);
      out = static_cast<std::remove_reference_t<decltype(out)>>(x);
    });
  }

  void real(const std::string& key, double& out) {
    with(key, [&](const std::string& v) {
      double x;
      if (!to_real(v, x)) return fail(key, "expected a real number, got '" + v + "'");
      out = x;
    });
  }

  void reals(const std::string& key, std::vector<double>& out) {
    with(key, [&](const std::string& v) {
      std::vector<double> xs;
      for (const auto& s : split_list(v)) {
        double x;
        if (!to_real(s, x)) return fail(key, "expected a comma separated list of reals, got '" + v + "'");
        xs.push_back(x);
      }
      out = std::move(xs);
    });
  }

  void ints(const std::string& key, std::vector<int>& out) {
    with(key, [&](const std::string& v) {
      std::vector<int> xs;
      for (const auto& s : split_list(v)) {
        long long x;
        if (!to_i64(s, x) || x < -(1LL << 30) || x > (1LL << 30))
          return fail(key, "expected a comma separated list of integers, got '" + v + "'");
        xs.push_back(static_cast<int>(x));
      }
      out = std::move(xs);
    });
  }

  void choice(const std::string& key, const std::vector<std::string>& allowed, std::string& out) {
    with(key, [&](const std::string& v) {
      if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
        std::string all;
        for (const auto& a : allowed) all += (all.empty() ? "" : ", ") + a;
        return fail(key, "must be one of {" + all + "}, got '" + v + "'");
      }
      out = v;
    });
  }

 private:
  std::map<std::string, Entry> e_;
  std::vector<ConfigError>& err_;
};

void validate(const ExperimentConfig& c, Builder& b) {
  const bool uses_N = c.kind != "burgers";
  if (uses_N && c.N.empty()) b.fail("N", "needs at least one value");
  for (int n : c.N) {
    if (n < 1) b.fail("N", "values must be >= 1, got " + std::to_string(n));
    if (c.kind == "equilibrium" && n > equilibrium::PartitionTable::max_dense_N)
      b.fail("N", "equilibrium sampling supports N <= " + std::to_string(equilibrium::PartitionTable::max_dense_N));
    if (c.kind == "hydro" && n >= 1 && c.cells > 2 * n)
      b.fail("cells", "must not exceed 2N = " + std::to_string(2 * n));
  }
  if (!(c.alpha > 0 && c.alpha < 1)) b.fail("alpha", "must lie in the open interval (0,1), got " + num(c.alpha));
  if (c.kind == "kpz" && c.alpha > 1.0 / 3 + 1e-12) b.fail("alpha", "kpz needs alpha <= 1/3, got " + num(c.alpha));

  const bool uses_times = c.kind != "equilibrium";
  if (uses_times && c.times.empty()) b.fail("times", "needs at least one value");
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    if (c.times[i] < 0) b.fail("times", "values must be >= 0, got " + num(c.times[i]));
    if (i && c.times[i] <= c.times[i - 1]) b.fail("times", "values must increase strictly");
  }
  if (c.kind == "coupled" && !c.times.empty() && c.times.back() <= 0)
    b.fail("times", "coupled runs need a positive horizon");
  if (c.kind == "kpz" && c.alpha > 0 && c.alpha <= 1.0 / 3 + 1e-12) {
    for (int n : c.N) {
      if (n < 1) continue;
      const auto m = make_params(n, c.alpha);
      for (double t : c.times) {
        if (t < 0) continue;
        bool ok = true;
        try {
          const auto w = heat_kernel::bulk_window(m, t, 0.0);
          ok = w.lo <= n && n <= w.hi;
        } catch (const std::domain_error&) {
          ok = false;
        }
        if (std::abs(c.alpha - 1.0 / 3) <= 1e-12 && t >= 0.5) ok = false;
        if (!ok)
          b.fail("times", "t = " + num(t) + " is past the bulk window horizon " + num(n * m.gamma / m.lambda) +
                              " at N = " + std::to_string(n));
      }
    }
  }
  if (c.kind == "equilibrium" && c.replicas < 2) b.fail("replicas", "equilibrium covariance needs >= 2 samples");
  if (c.cells < 1) b.fail("cells", "must be >= 1");
  for (double e : c.eps)
    if (!(e > 0 && e < 1)) b.fail("eps", "values must lie in (0,1), got " + num(e));
  if (c.kind == "kernel-audit" && c.eps.empty()) b.fail("eps", "needs at least one value");
  for (double v : c.c)
    if (!(v > 0 && v < 1)) b.fail("c", "values must lie in (0,1), got " + num(v));
  if (c.kind == "coupled" && c.c.empty()) b.fail("c", "needs at least one value");
  if (!(c.mshe_dx > 0 && c.mshe_dx <= 0.5)) b.fail("mshe_dx", "must lie in (0, 0.5], got " + num(c.mshe_dx));
  if (c.out.empty()) b.fail("out", "must not be empty");
}

std::uint64_t level_seed(std::uint64_t seed, int N) { return derive_seed(seed, static_cast<std::uint64_t>(N)); }

unsigned threads_of(const ExperimentConfig& c) { return c.threads ? c.threads : default_threads(); }

BridgeState initial_bridge(const std::string& name, int N) {
  if (name == "step") return maximal_bridge(N);
  if (name == "step-right") return minimal_bridge(N);
  return flat_initial(N);
}

burgers::CellField initial_field(const std::string& name, int M) {
  if (name == "step") return burgers::step_field(M, 0.5, 1.0, 0.0);
  if (name == "step-right") return burgers::step_field(M, 0.5, 0.0, 1.0);
  return burgers::constant_field(M, 0.5);
}

json summary_json(const stats::Summary& s) { return json{{"n", s.n}, {"mean", s.mean}, {"var", s.var}, {"se", s.se}}; }

}  // namespace

std::string ConfigError::to_string() const { return origin + ": " + key + ": " + message; }

ParseResult parse_config(std::string_view text, const std::vector<Override>& overrides, std::string_view kind) {
  ParseResult res;
  std::map<std::string, Entry> entries;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      res.errors.push_back({where, "", "expected key=value, got '" + line + "'"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      res.errors.push_back({where, key, "unknown key"});
      continue;
    }
    if (entries.count(key)) {
      res.errors.push_back({where, key, "duplicate key (first set on " + entries[key].origin + ")"});
      continue;
    }
    entries[key] = {value, where};
  }
  for (const auto& o : overrides) {
    if (std::find(keys.begin(), keys.end(), o.key) == keys.end()) {
      res.errors.push_back({o.origin, o.key, "unknown key"});
      continue;
    }
    entries[o.key] = {o.value, o.origin};
  }

  ExperimentConfig c;
  if (!kind.empty()) {
    if (entries.count("kind") && entries["kind"].value != kind)
      res.errors.push_back({entries["kind"].origin, "kind",
                            "file says '" + entries["kind"].value + "' but the command is '" + std::string(kind) + "'"});
    entries["kind"] = {std::string(kind), entries.count("kind") ? entries["kind"].origin : "command"};
  }
  Builder b(entries, res.errors);
  if (!b.has("kind")) {
    res.errors.push_back({"config", "kind", "missing"});
    return res;
  }
  b.choice("kind", kinds, c.kind);
  if (c.kind.empty()) return res;
  apply_defaults(c);

  b.ints("N", c.N);
  b.real("alpha", c.alpha);
  b.integer("replicas", 1, 100000000, c.replicas);
  b.with("seed", [&](const std::string& v) {
    if (!to_u64(v, c.seed)) return b.fail("seed", "expected an unsigned 64-bit integer, got '" + v + "'");
    c.seed_defaulted = false;
  });
  b.integer("threads", 0, 1024, c.threads);
  b.with("out", [&](const std::string& v) { c.out = v; });
  b.reals("times", c.times);
  b.integer("cells", 1, 1 << 20, c.cells);
  b.choice("initial", {"flat", "step", "step-right"}, c.initial);
  b.reals("points", c.points);
  b.reals("eps", c.eps);
  b.reals("c", c.c);
  b.choice("boundary", {"zero-flux", "dirichlet-bln"}, c.boundary);
  b.real("mshe_dx", c.mshe_dx);
  b.integer("mshe_replicas", 2, 100000000, c.mshe_replicas);
  b.with("check_every_event", [&](const std::string& v) {
    if (v == "true" || v == "1")
      c.check_every_event = true;
    else if (v == "false" || v == "0")
      c.check_every_event = false;
    else
      b.fail("check_every_event", "expected true or false, got '" + v + "'");
  });
  validate(c, b);
  if (res.errors.empty()) res.config = std::move(c);
  return res;
}

std::string ExperimentConfig::resolved() const {
  std::ostringstream o;
  o << "kind=" << kind << '\n'
    << "N=" << join(N) << '\n'
    << "alpha=" << num(alpha) << '\n'
    << "replicas=" << replicas << '\n'
    << "seed=" << seed << '\n'
    << "threads=" << threads << '\n'
    << "out=" << out << '\n'
    << "times=" << join(times) << '\n'
    << "cells=" << cells << '\n'
    << "initial=" << initial << '\n'
    << "points=" << join(points) << '\n'
    << "eps=" << join(eps) << '\n'
    << "c=" << join(c) << '\n'
    << "boundary=" << boundary << '\n'
    << "mshe_dx=" << num(mshe_dx) << '\n'
    << "mshe_replicas=" << mshe_replicas << '\n'
    << "check_every_event=" << (check_every_event ? "true" : "false") << '\n';
  return o.str();
}

json ExperimentConfig::to_json() const {
  return json{{"kind", kind},
              {"N", N},
              {"alpha", alpha},
              {"replicas", replicas},
              {"seed", seed},
              {"seed_defaulted", seed_defaulted},
              {"threads", threads},
              {"out", out},
              {"times", times},
              {"cells", cells},
              {"initial", initial},
              {"points", points},
              {"eps", eps},
              {"c", c},
              {"boundary", boundary},
              {"mshe_dx", mshe_dx},
              {"mshe_replicas", mshe_replicas},
              {"check_every_event", check_every_event}};
}

// Pipelines ----------------------------------------------------------------

RunReport run_equilibrium_study(const ExperimentConfig& cfg) {
  RunReport rep;
  rep.results["levels"] = json::array();
  std::string csv = "N,x,y,empirical,se,limit,z\n";
  if (cfg.points.empty()) {
    rep.csv.push_back({"covariance.csv", csv});
    return rep;
  }
  const auto& pts = cfg.points;
  for (int N : cfg.N) {
    const auto m = make_params(N, cfg.alpha);
    const auto table = equilibrium::build_partition_table(m);
    const auto sigma = equilibrium::sigma_curve(m);
    const auto seed = level_seed(cfg.seed, N);
    const auto rows = run_replicas<std::vector<double>>(cfg.replicas, threads_of(cfg), [&](std::size_t i) {
      const auto s = equilibrium::sample_one(table, derive_seed(seed, i));
      std::vector<double> u;
      for (double x : pts) u.push_back(equilibrium::rescale_u_at(s, m, sigma, x));
      return u;
    });
    const auto est = equilibrium::empirical_covariance(rows);
    double max_z = 0;
    int within = 0, pairs = 0;
    json origin = nullptr;
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i; j < pts.size(); ++j) {
        const double lim = equilibrium::balpha_covariance(pts[i], pts[j]);
        const double se = est.se(i, j);
        const double z = se > 0 ? (est.cov(i, j) - lim) / se : 0.0;
        max_z = std::max(max_z, std::abs(z));
        within += std::abs(z) <= 3;
        ++pairs;
        if (pts[i] == 0 && pts[j] == 0) origin = est.cov(i, j);
        csv += std::to_string(N) + ',' + num(pts[i]) + ',' + num(pts[j]) + ',' + num(est.cov(i, j)) + ',' +
               num(se) + ',' + num(lim) + ',' + num(z) + '\n';
      }
    rep.results["levels"].push_back(json{{"N", N},
                                         {"samples", cfg.replicas},
                                         {"pairs", pairs},
                                         {"pairs_within_3se", within},
                                         {"max_abs_z", max_z},
                                         {"cov_at_origin", origin}});
  }
  rep.csv.push_back({"covariance.csv", csv});
  return rep;
}

RunReport run_hydro_comparison(const ExperimentConfig& cfg) {
  RunReport rep;
  const int M = cfg.cells;
  // Godunov reference on a finer grid, averaged back onto the bins
  const int refine = std::max(1, static_cast<int>(std::ceil(1600.0 / M)));
  const auto eta0 = initial_field(cfg.initial, M * refine);
  std::vector<std::vector<double>> ref;
  for (double t : cfg.times) {
    const auto f = t > 0 ? burgers::solve(eta0, t, burgers::BoundaryMode::ZeroFlux) : eta0;
    std::vector<double> coarse(static_cast<std::size_t>(M), 0.0);
    for (int i = 0; i < M * refine; ++i) coarse[static_cast<std::size_t>(i / refine)] += f.values[static_cast<std::size_t>(i)] / refine;
    ref.push_back(coarse);
  }

  std::string prof = "N,t,cell,x,density_mean,density_se,burgers\n";
  std::string err = "N,t,l1_mean_profile,l1_replica_mean,l1_replica_se\n";
  rep.results["reference_cells"] = M * refine;
  rep.results["levels"] = json::array();
  for (int N : cfg.N) {
    const auto m = make_params(N, cfg.alpha);
    std::vector<double> micro;
    for (double t : cfg.times) micro.push_back(dynamics::macro_time_to_micro(t, dynamics::Scaling::hydro, m));
    const auto sched = dynamics::Schedule::from_times(micro);
    const auto init = initial_bridge(cfg.initial, N);
    const auto seed = level_seed(cfg.seed, N);
    using Profiles = std::vector<std::vector<double>>;
    const auto runs = run_replicas<Profiles>(cfg.replicas, threads_of(cfg), [&](std::size_t i) {
      Profiles out;
      dynamics::simulate_streaming(m, init, sched, derive_seed(seed, i), [&](double, std::span<const std::int32_t> h) {
        auto d = dynamics::density_profile(BridgeState({h.begin(), h.end()}), M);
        for (auto& v : d) v *= M;
        out.push_back(std::move(d));
      });
      return out;
    });
    json lv{{"N", N}, {"times", json::array()}};
    for (std::size_t ti = 0; ti < cfg.times.size(); ++ti) {
      std::vector<double> l1s;
      std::vector<double> mean(static_cast<std::size_t>(M), 0.0);
      for (const auto& r : runs) {
        double l1 = 0;
        for (int k = 0; k < M; ++k) {
          const auto K = static_cast<std::size_t>(k);
          l1 += std::abs(r[ti][K] - ref[ti][K]) / M;
          mean[K] += r[ti][K] / static_cast<double>(runs.size());
        }
        l1s.push_back(l1);
      }
      double l1_mean = 0;
      for (int k = 0; k < M; ++k) {
        const auto K = static_cast<std::size_t>(k);
        l1_mean += std::abs(mean[K] - ref[ti][K]) / M;
        std::vector<double> col;
        for (const auto& r : runs) col.push_back(r[ti][K]);
        const auto s = stats::summarize(col);
        prof += std::to_string(N) + ',' + num(cfg.times[ti]) + ',' + std::to_string(k) + ',' + num((k + 0.5) / M) +
                ',' + num(s.mean) + ',' + num(s.se) + ',' + num(ref[ti][K]) + '\n';
      }
      const auto s = stats::summarize(l1s);
      err += std::to_string(N) + ',' + num(cfg.times[ti]) + ',' + num(l1_mean) + ',' + num(s.mean) + ',' + num(s.se) +
             '\n';
      lv["times"].push_back(json{{"t", cfg.times[ti]}, {"l1_mean_profile", l1_mean}, {"l1_replica", summary_json(s)}});
    }
    rep.results["levels"].push_back(lv);
  }
  rep.csv.push_back({"hydro_profiles.csv", prof});
  rep.csv.push_back({"hydro_errors.csv", err});
  return rep;
}

RunReport run_kpz_study(const ExperimentConfig& cfg) {
  RunReport rep;
  fluctuations::MsheOptions ref;
  ref.dx = cfg.mshe_dx;
  ref.replicas = cfg.mshe_replicas;
  ref.seed = derive_seed(cfg.seed, 0x4d534845);
  ref.threads = threads_of(cfg);
  std::string samples = "t,N,replica,h\n";
  std::string refcsv = "t,replica,xi,h_half_log\n";
  rep.results["times"] = json::array();
  for (std::size_t ti = 0; ti < cfg.times.size(); ++ti) {
    const double t = cfg.times[ti];
    const auto kr = fluctuations::kpz_compare(cfg.N, cfg.alpha, t, cfg.replicas, derive_seed(cfg.seed, 0x6b707a00 + ti),
                                              ref, threads_of(cfg));
    json levels = json::array();
    for (const auto& lv : kr.levels) {
      const auto m = make_params(lv.N, cfg.alpha);
      const double horizon = lv.N * m.gamma / m.lambda;
      levels.push_back(json{{"N", lv.N},
                            {"h", summary_json(lv.summary)},
                            {"ks_vs_previous", lv.ks_vs_previous < 0 ? json(nullptr) : json(lv.ks_vs_previous)},
                            {"ks_vs_reference", lv.ks_vs_reference},
                            {"window", {lv.window_lo, lv.window_hi}},
                            {"horizon", horizon},
                            {"near_horizon", t >= 0.8 * horizon},
                            {"boundary_identity_ok", lv.boundary_identity_ok}});
      if (!lv.boundary_identity_ok)
        rep.failures.push_back("Hopf-Cole boundary identity failed at N = " + std::to_string(lv.N) + ", t = " + num(t));
      for (std::size_t r = 0; r < lv.h.size(); ++r)
        samples += num(t) + ',' + std::to_string(lv.N) + ',' + std::to_string(r) + ',' + num(lv.h[r]) + '\n';
    }
    for (std::size_t r = 0; r < kr.reference.xi0.size(); ++r)
      refcsv += num(t) + ',' + std::to_string(r) + ',' + num(kr.reference.xi0[r]) + ',' + num(kr.reference.h[r]) + '\n';
    rep.results["times"].push_back(json{{"t", t},
                                        {"levels", levels},
                                        {"reference",
                                         {{"cells", kr.reference.cells},
                                          {"dt", kr.reference.dt},
                                          {"xi", summary_json(kr.reference.xi_summary)},
                                          {"var_half_log", kr.reference_var_half_log},
                                          {"var_log", kr.reference_var_log}}},
                                        {"horizon", kr.horizon},
                                        {"near_horizon", t >= 0.8 * kr.horizon}});
  }
  rep.csv.push_back({"kpz_samples.csv", samples});
  rep.csv.push_back({"mshe_reference.csv", refcsv});
  return rep;
}

RunReport run_burgers(const ExperimentConfig& cfg) {
  RunReport rep;
  const auto mode = cfg.boundary == "dirichlet-bln" ? burgers::BoundaryMode::DirichletBLN : burgers::BoundaryMode::ZeroFlux;
  const auto eta0 = initial_field(cfg.initial, cfg.cells);
  std::string prof = "t,cell,x,eta\n", height = "t,j,x,m\n";
  rep.results["times"] = json::array();
  for (double t : cfg.times) {
    const auto f = t > 0 ? burgers::solve(eta0, t, mode) : eta0;
    const auto m = burgers::integrated_height(f);
    for (int k = 0; k < f.M; ++k)
      prof += num(t) + ',' + std::to_string(k) + ',' + num((k + 0.5) * f.dx) + ',' + num(f.values[static_cast<std::size_t>(k)]) + '\n';
    double linf = 0;
    for (int j = 0; j <= f.M; ++j) {
      const double x = j * f.dx;
      height += num(t) + ',' + std::to_string(j) + ',' + num(x) + ',' + num(m[static_cast<std::size_t>(j)]) + '\n';
      linf = std::max(linf, std::abs(m[static_cast<std::size_t>(j)] - burgers::flat_exact_height(x, t)));
    }
    json row{{"t", t}, {"mass", f.mass()}};
    if (cfg.initial == "flat") row["linf_height_error"] = linf;
    rep.results["times"].push_back(row);
  }
  rep.csv.push_back({"burgers_profiles.csv", prof});
  rep.csv.push_back({"burgers_heights.csv", height});
  return rep;
}

RunReport run_kernel_audit(const ExperimentConfig& cfg) {
  RunReport rep;
  std::string csv = "eps,N,alpha,t,ratio,value\n";
  rep.results["sweeps"] = json::array();
  for (double eps : cfg.eps) {
    heat_kernel::AuditSweep sw;
    sw.Ns = cfg.N;
    sw.alpha = cfg.alpha;
    sw.times = cfg.times;
    sw.eps = eps;
    const auto rows = heat_kernel::kernel_bound_audit(sw);
    std::map<std::string, double> sup;
    json agree = json::array();
    for (const auto& r : rows) {
      csv += num(eps) + ',' + std::to_string(r.N) + ',' + num(r.alpha) + ',' + (std::isnan(r.t) ? std::string() : num(r.t)) +
             ',' + r.name + ',' + num(r.value) + '\n';
      if (r.name == "eigen_images_max_dev") {
        agree.push_back(json{{"N", r.N}, {"max_dev", r.value}});
        if (!(r.value < 1e-8))
          rep.failures.push_back("Eigen and Images kernels differ by " + num(r.value) + " at N = " + std::to_string(r.N));
      } else {
        auto it = sup.find(r.name);
        if (it == sup.end() || r.value > it->second) sup[r.name] = r.value;
      }
    }
    json sj = json::object();
    for (const auto& [k, v] : sup) sj[k] = v;
    rep.results["sweeps"].push_back(json{{"eps", eps}, {"eigen_images", agree}, {"sup", sj}});
  }
  rep.csv.push_back({"audit.csv", csv});
  return rep;
}

RunReport run_coupled_study(const ExperimentConfig& cfg) {
  RunReport rep;
  std::string csv = "N,c,site,zeta_time_average,se,z\n";
  rep.results["levels"] = json::array();
  for (int N : cfg.N) {
    const auto m = make_params(N, cfg.alpha);
    std::vector<double> micro;
    for (double t : cfg.times) micro.push_back(dynamics::macro_time_to_micro(t, dynamics::Scaling::hydro, m));
    const auto sched = dynamics::Schedule::from_times(micro);
    std::vector<double> f(static_cast<std::size_t>(2 * N), 0.5);
    if (cfg.initial == "step")
      for (int k = 0; k < N; ++k) f[static_cast<std::size_t>(k)] = 1, f[static_cast<std::size_t>(N + k)] = 0;
    if (cfg.initial == "step-right")
      for (int k = 0; k < N; ++k) f[static_cast<std::size_t>(k)] = 0, f[static_cast<std::size_t>(N + k)] = 1;
    dynamics::CoupledOptions opts;
    opts.check_every_event = cfg.check_every_event;
    for (std::size_t ci = 0; ci < cfg.c.size(); ++ci) {
      const double c = cfg.c[ci];
      const auto seed = derive_seed(level_seed(cfg.seed, N), ci);
      struct Out {
        std::uint64_t violations = 0;
        int excess = 0;
        std::vector<double> density;
      };
      const auto runs = run_replicas<Out>(cfg.replicas, threads_of(cfg), [&](std::size_t i) {
        Rng rng(derive_seed(seed, 2 * i));
        const auto s0 = dynamics::coupled_from_uniforms(f, c, rng);
        const auto tr = dynamics::simulate_coupled(m, c, s0, sched, derive_seed(seed, 2 * i + 1), opts);
        Out o;
        o.violations = tr.violations;
        o.excess = tr.max_sign_changes - tr.initial_sign_changes;
        for (double v : tr.zeta_time_integral) o.density.push_back(v / tr.horizon);
        return o;
      });
      std::uint64_t violations = 0;
      int max_excess = -1 << 30;
      for (const auto& o : runs) {
        violations += o.violations;
        max_excess = std::max(max_excess, o.excess);
      }
      int outside = 0;
      double max_z = 0;
      std::vector<double> site_means;
      for (int k = 0; k < 2 * N; ++k) {
        std::vector<double> col;
        for (const auto& o : runs) col.push_back(o.density[static_cast<std::size_t>(k)]);
        const auto s = stats::summarize(col);
        const double z = s.se > 0 ? (s.mean - c) / s.se : 0.0;
        outside += std::abs(z) > 3;
        max_z = std::max(max_z, std::abs(z));
        site_means.push_back(s.mean);
        csv += std::to_string(N) + ',' + num(c) + ',' + std::to_string(k + 1) + ',' + num(s.mean) + ',' + num(s.se) +
               ',' + num(z) + '\n';
      }
      std::vector<double> per_rep;
      for (const auto& o : runs) {
        double a = 0;
        for (double v : o.density) a += v;
        per_rep.push_back(a / (2.0 * N));
      }
      const auto avg = stats::summarize(per_rep);
      if (violations)
        rep.failures.push_back("sign-change bound violated " + std::to_string(violations) + " times at N = " +
                               std::to_string(N) + ", c = " + num(c));
      rep.results["levels"].push_back(json{{"N", N},
                                           {"c", c},
                                           {"trajectories", cfg.replicas},
                                           {"violations", violations},
                                           {"max_sign_change_excess", max_excess},
                                           {"sites_outside_3se", outside},
                                           {"max_abs_z", max_z},
                                           {"site_average_density", summary_json(avg)}});
    }
  }
  rep.csv.push_back({"coupled_density.csv", csv});
  return rep;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.kind == "equilibrium") return run_equilibrium_study(cfg);
  if (cfg.kind == "hydro") return run_hydro_comparison(cfg);
  if (cfg.kind == "kpz") return run_kpz_study(cfg);
  if (cfg.kind == "burgers") return run_burgers(cfg);
  if (cfg.kind == "kernel-audit") return run_kernel_audit(cfg);
  if (cfg.kind == "coupled") return run_coupled_study(cfg);
  throw std::invalid_argument("unknown experiment kind '" + cfg.kind + "'");
}

std::string report_json(const ExperimentConfig& cfg, const RunReport& rep) {
  json j{{"version", version()},
         {"kind", cfg.kind},
         {"config", cfg.to_json()},
         {"results", rep.results},
         {"failures", rep.failures}};
  return j.dump(2) + '\n';
}

void write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunReport& rep, double wall_seconds) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << text;
  };
  put("config.resolved", cfg.resolved());
  put("report.json", report_json(cfg, rep));
  for (const auto& c : rep.csv) put(c.name, c.text);

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  const json meta{{"timestamp", stamp},
                  {"version", version()},
                  {"wall_seconds", wall_seconds},
                  {"threads", threads_of(cfg)},
                  {"seed", cfg.seed},
                  {"seed_defaulted", cfg.seed_defaulted},
                  {"rng", std::string(Rng::algorithm)}};
  put("meta.json", meta.dump(2) + '\n');
}

}  // namespace wasep::harness
