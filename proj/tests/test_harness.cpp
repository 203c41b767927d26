#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "wasep/harness.hpp"

using namespace wasep::harness;

namespace {

bool mentions(const ParseResult& r, const std::string& key, const std::string& origin, const std::string& text = {}) {
  for (const auto& e : r.errors)
    if (e.key == key && e.origin == origin && e.message.find(text) != std::string::npos) return true;
  return false;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto ok = parse_config("kind=hydro\nN=512\nalpha=0.5\nreplicas=8\ntimes=0.25\n# comment\n\ncells=16  # bins\n");
  REQUIRE(ok.ok());
  CHECK(ok.config->kind == "hydro");
  CHECK(ok.config->N == std::vector<int>{512});
  CHECK(ok.config->cells == 16);
  CHECK(ok.config->seed == default_seed);
  CHECK(ok.config->seed_defaulted);
  CHECK(ok.config->resolved().find("seed=12345\n") != std::string::npos);

  const auto bad_alpha = parse_config("kind=hydro\nalpha=1.5\n");
  CHECK_FALSE(bad_alpha.ok());
  CHECK(mentions(bad_alpha, "alpha", "line 2", "(0,1)"));

  // every violation is reported, each with its line
  const auto many = parse_config("kind=kpz\nfoo=1\nN=64,abc\nalpha=0.5\nreplicas=0\nseed=-3\nsilly line\nN=32\n");
  CHECK(mentions(many, "foo", "line 2", "unknown"));
  CHECK(mentions(many, "N", "line 3", "integers"));
  CHECK(mentions(many, "alpha", "line 4", "1/3"));
  CHECK(mentions(many, "replicas", "line 5"));
  CHECK(mentions(many, "seed", "line 6"));
  CHECK(mentions(many, "", "line 7", "key=value"));
  CHECK(mentions(many, "N", "line 8", "duplicate"));
  CHECK(many.errors.size() == 7);

  // flags override the file
  const auto ov = parse_config("kind=coupled\nseed=5\nreplicas=3\n", {{"seed", "9", "--seed"}, {"replicas", "x", "--replicas"}});
  CHECK(mentions(ov, "replicas", "--replicas", "integer"));
  const auto ov2 = parse_config("kind=coupled\nseed=5\n", {{"seed", "9", "--seed"}});
  REQUIRE(ov2.ok());
  CHECK(ov2.config->seed == 9);
  CHECK_FALSE(ov2.config->seed_defaulted);

  CHECK(mentions(parse_config("kind=hydro\n", {}, "kpz"), "kind", "line 1"));
  CHECK(parse_config("", {}, "burgers").ok());
  CHECK_FALSE(parse_config("N=3\n").ok());
  CHECK(mentions(parse_config("kind=kpz\nN=512\ntimes=0.1,0.6\n"), "times", "line 3", "horizon"));
  CHECK(mentions(parse_config("kind=hydro\nN=4\ncells=16\n"), "cells", "line 3", "2N"));
  CHECK(mentions(parse_config("kind=hydro\ntimes=0.3,0.2\n"), "times", "line 2", "increase"));
  CHECK(mentions(parse_config("kind=coupled\nc=0,0.5\n"), "c", "line 2"));
  CHECK(mentions(parse_config("kind=burgers\nboundary=periodic\n"), "boundary", "line 2", "zero-flux"));

  // resolved text parses back to the same config
  const auto again = parse_config(ok.config->resolved());
  REQUIRE(again.ok());
  CHECK(again.config->resolved() == ok.config->resolved());
}

TEST_CASE("equilibrium study") {
  auto c = *parse_config("kind=equilibrium\nN=512\nreplicas=2000\nseed=3\nthreads=1\n").config;
  const auto rep = run_equilibrium_study(c);
  REQUIRE(rep.results["levels"].size() == 1);
  const auto& lv = rep.results["levels"][0];
  CHECK(lv["pairs"] == 15);
  CHECK(lv["max_abs_z"].get<double>() < 4);
  CHECK(std::abs(lv["cov_at_origin"].get<double>() - 0.25) < 0.05);

  c.points.clear();
  const auto empty = run_equilibrium_study(c);
  CHECK(empty.results["levels"].empty());
  CHECK(empty.failures.empty());
}

TEST_CASE("runs are deterministic and thread independent") {
  auto c = *parse_config("kind=hydro\nN=32,64\nreplicas=6\ntimes=0.1,0.25\ncells=8\nseed=11\nthreads=1\n").config;
  const auto a = run_hydro_comparison(c);
  const auto b = run_hydro_comparison(c);
  c.threads = 3;
  const auto d = run_hydro_comparison(c);
  c.threads = 1;
  CHECK(report_json(c, a) == report_json(c, b));
  CHECK(a.results.dump() == d.results.dump());
  REQUIRE(a.csv.size() == d.csv.size());
  for (std::size_t i = 0; i < a.csv.size(); ++i) CHECK(a.csv[i].text == d.csv[i].text);

  c.seed = 12;
  CHECK(run_hydro_comparison(c).results.dump() != a.results.dump());

  const auto dir = std::filesystem::temp_directory_path() / "wasep_harness_test";
  std::filesystem::remove_all(dir);
  write_run(dir, c, a, 0.5);
  for (const char* f : {"config.resolved", "report.json", "meta.json", "hydro_profiles.csv", "hydro_errors.csv"})
    CHECK(std::filesystem::exists(dir / f));
  const auto report = slurp(dir / "report.json");
  CHECK(report.find("timestamp") == std::string::npos);
  CHECK(report.find("\"version\": \"" + version() + "\"") != std::string::npos);
  CHECK(report.find("\"seed\": 12") != std::string::npos);
  CHECK(slurp(dir / "meta.json").find("timestamp") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("kernel audit, coupled and kpz orchestration") {
  const auto ka = run_kernel_audit(*parse_config("kind=kernel-audit\nN=32\n").config);
  REQUIRE(ka.results["sweeps"].size() == 1);
  const auto& rows = ka.results["sweeps"][0]["eigen_images"];
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["N"] == 32);
  CHECK(rows[0]["max_dev"].get<double>() < 1e-8);
  CHECK(ka.failures.empty());

  const auto co = run_coupled_study(*parse_config("kind=coupled\nN=16\nreplicas=20\nc=0.5\nthreads=1\n").config);
  REQUIRE(co.results["levels"].size() == 1);
  CHECK(co.results["levels"][0]["violations"] == 0);
  CHECK(co.failures.empty());

  // close to the horizon at alpha = 1/3 the window is still open
  const auto kp = run_kpz_study(*parse_config(
                                     "kind=kpz\nN=512\ntimes=0.45\nreplicas=2\nmshe_dx=0.2\nmshe_replicas=4\nthreads=1\n")
                                     .config);
  const auto& t = kp.results["times"][0];
  CHECK(t["near_horizon"] == true);
  const auto& w = t["levels"][0]["window"];
  CHECK(w[0].get<long>() <= 512);
  CHECK(w[1].get<long>() >= 512);
  CHECK(t["levels"][0]["boundary_identity_ok"] == true);
}

TEST_CASE("burgers run") {
  const auto r = run_burgers(*parse_config("kind=burgers\ncells=400\n").config);
  for (const auto& row : r.results["times"]) CHECK(row["linf_height_error"].get<double>() <= 2.5 / 400);
  const auto s = run_burgers(*parse_config("kind=burgers\ncells=100\ninitial=step\nboundary=dirichlet-bln\n").config);
  for (const auto& row : s.results["times"]) CHECK(row["mass"].get<double>() == doctest::Approx(0.5));
}
