#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wasep/core.hpp"
#include "wasep/harness.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_assertion = 3;

struct Flags {
  std::string config, seed, replicas, out, threads;
  std::vector<std::string> set;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "key=value configuration file");
  sub->add_option("--seed", f.seed, "master seed (unsigned 64-bit)");
  sub->add_option("--replicas", f.replicas, "number of replicas");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--threads", f.threads, "worker threads (0: WASEP_THREADS or hardware count)");
  sub->add_option("--set", f.set, "extra key=value override, repeatable");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace wasep::harness;
  CLI::App app{"Corner growth / weakly asymmetric exclusion experiments"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);
  Flags f;
  const std::vector<std::pair<std::string, std::string>> subs{
      {"equilibrium", "covariance of the rescaled height under the invariant measure"},
      {"hydro", "binned density against the Godunov solution"},
      {"kpz", "h^N(t,0) across N against the multiplicative SHE reference"},
      {"burgers", "Godunov solution of the zero-flux Burgers problem"},
      {"kernel-audit", "heat-kernel representations and bound ratios"},
      {"coupled", "two-species coupling: sign changes and reservoir stationarity"}};
  for (const auto& [name, desc] : subs) add_flags(app.add_subcommand(name, desc), f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }
  const std::string kind = app.get_subcommands().front()->get_name();

  std::string text;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) {
      std::cerr << "cannot read config file " << f.config << '\n';
      return exit_config;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  std::vector<Override> ov;
  if (!f.seed.empty()) ov.push_back({"seed", f.seed, "--seed"});
  if (!f.replicas.empty()) ov.push_back({"replicas", f.replicas, "--replicas"});
  if (!f.out.empty()) ov.push_back({"out", f.out, "--out"});
  if (!f.threads.empty()) ov.push_back({"threads", f.threads, "--threads"});
  for (const auto& s : f.set) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "--set: expected key=value, got '" << s << "'\n";
      return exit_config;
    }
    ov.push_back({s.substr(0, eq), s.substr(eq + 1), "--set"});
  }

  const auto parsed = parse_config(text, ov, kind);
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors) std::cerr << "config error: " << e.to_string() << '\n';
    return exit_config;
  }
  const auto& cfg = *parsed.config;

  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  try {
    rep = run_experiment(cfg);
  } catch (const wasep::InvariantError& e) {
    std::cerr << "assertion failed: " << e.what() << '\n';
    return exit_assertion;
  } catch (const std::invalid_argument& e) {
    std::cerr << "precondition: " << e.what() << '\n';
    return exit_config;
  } catch (const std::domain_error& e) {
    std::cerr << "precondition: " << e.what() << '\n';
    return exit_config;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_run(cfg.out, cfg, rep, wall);
  std::cout << cfg.kind << ": wrote " << cfg.out << " (" << wall << " s)\n";
  for (const auto& msg : rep.failures) std::cerr << "assertion failed: " << msg << '\n';
  return rep.failures.empty() ? 0 : exit_assertion;
}
