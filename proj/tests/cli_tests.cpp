#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(LDPKIT_CLI_PATH) + " " + args + " >cli_stdout.txt 2>cli_stderr.txt";
  int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return (status >> 8) & 0xFF;  // POSIX wait status -> exit code
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

std::vector<std::string> csv_lines(const fs::path& p) {
  std::string text = slurp(p);
  std::vector<std::string> lines;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      lines.push_back(cur);
      cur.clear();
      ++i;
    } else {
      cur += text[i];
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

const char* kOuToml = R"([model]
name = "ou"
a = 1.0
sigma = 1.0

[grid]
T = 1.0
steps = 50

[initial]
kind = "zero"

[run]
seed = 7
)";

struct Scratch {
  fs::path dir;
  Scratch() : dir(fs::path("cli_scratch") / std::to_string(std::rand())) {
    fs::create_directories(dir);
  }
};

}  // namespace

TEST_CASE("check subcommand writes manifest, report and csv tables") {
  Scratch s;
  fs::path cfg = s.dir / "ou.toml";
  write_file(cfg, kOuToml);
  fs::path out = s.dir / "out";
  int rc = run_cli("check --config " + cfg.string() + " --out-dir " + out.string());
  CHECK(rc == 0);

  json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["tool"] == "ldpkit");
  CHECK(manifest["subcommand"] == "check");
  CHECK(manifest["seed"] == 7);
  CHECK_FALSE(manifest["config_hash"].get<std::string>().empty());
  CHECK(manifest["config"]["model"]["name"] == "ou");
  REQUIRE(manifest.contains("outputs"));

  auto lines = csv_lines(out / "probes.csv");
  REQUIRE(lines.size() >= 2);
  CHECK(lines[0] == "probe,statistic,value");  // mandatory header row

  json report = json::parse(slurp(out / "report.json"));
  CHECK(report["violations"].empty());
}

TEST_CASE("skeleton subcommand emits the trajectory grid") {
  Scratch s;
  fs::path cfg = s.dir / "ou.toml";
  write_file(cfg, kOuToml);
  fs::path out = s.dir / "out";
  int rc = run_cli("skeleton --config " + cfg.string() + " --out-dir " + out.string() +
                   " --initial.kind=mode --initial.mode=1 --initial.amplitude=2.0");
  CHECK(rc == 0);
  auto lines = csv_lines(out / "trajectory.csv");
  REQUIRE(lines.size() == 52);  // header + 51 nodes
  CHECK(lines[0].rfind("t,", 0) == 0);
  // first data row is t=0 with the overridden initial state
  CHECK(lines[1].rfind("0,2", 0) == 0);
  CHECK(fs::exists(out / "residual.csv"));
  CHECK(fs::exists(out / "windows.csv"));
}

TEST_CASE("seed and dotted overrides land in the manifest echo") {
  Scratch s;
  fs::path cfg = s.dir / "ou.toml";
  write_file(cfg, kOuToml);
  fs::path out = s.dir / "out";
  int rc = run_cli("check --config " + cfg.string() + " --out-dir " + out.string() +
                   " --seed 99 --check.samples=50");
  CHECK(rc == 0);
  json manifest = json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["seed"] == 99);
  CHECK(manifest["config"]["run"]["seed"] == 99);
  CHECK(manifest["config"]["check"]["samples"] == 50);
}

TEST_CASE("config hash is identical across reruns of the same config") {
  Scratch s;
  fs::path cfg = s.dir / "ou.toml";
  write_file(cfg, kOuToml);
  fs::path out1 = s.dir / "a", out2 = s.dir / "b";
  REQUIRE(run_cli("check --config " + cfg.string() + " --out-dir " + out1.string()) == 0);
  REQUIRE(run_cli("check --config " + cfg.string() + " --out-dir " + out2.string()) == 0);
  json m1 = json::parse(slurp(out1 / "manifest.json"));
  json m2 = json::parse(slurp(out2 / "manifest.json"));
  CHECK(m1["config_hash"] == m2["config_hash"]);
}

TEST_CASE("configuration problems exit with code 1") {
  Scratch s;
  CHECK(run_cli("check --config " + (s.dir / "missing.toml").string()) == 1);

  fs::path bad = s.dir / "bad.toml";
  write_file(bad, "[model\nname = \"ou\"\n");
  CHECK(run_cli("check --config " + bad.string()) == 1);
  std::string err = slurp("cli_stderr.txt");
  CHECK(err.find("bad.toml:1") != std::string::npos);

  fs::path nofield = s.dir / "nofield.toml";
  write_file(nofield, "[model]\nnu = 1.0\n");  // model.name missing
  CHECK(run_cli("check --config " + nofield.string()) == 1);
  CHECK(slurp("cli_stderr.txt").find("model.name") != std::string::npos);
}

TEST_CASE("certified violations exit with code 2") {
  Scratch s;
  fs::path cfg = s.dir / "hot.toml";
  write_file(cfg, "[model]\nname = \"heat1d\"\nnu = 1.0\nb = 2.0\ng_lip = 0.0\nm = 8\n");
  int rc = run_cli("check --config " + cfg.string() + " --out-dir " + (s.dir / "out").string());
  CHECK(rc == 2);
  CHECK(slurp("cli_stderr.txt").find("theta") != std::string::npos);
}

TEST_CASE("monte carlo that cannot see the event exits with code 3") {
  Scratch s;
  fs::path cfg = s.dir / "ou.toml";
  write_file(cfg, std::string(kOuToml) +
                      "[event]\nkind = \"halfspace\"\ndirection = [1.0]\nlevel = 3.0\n"
                      "[ldp]\nkind = \"slope\"\neps = [0.1, 0.05, 0.02]\nn_paths = 100\n");
  int rc = run_cli("ldp --config " + cfg.string() + " --out-dir " + (s.dir / "out").string());
  CHECK(rc == 3);
}

TEST_CASE("simulate subcommand certifies the tightness envelope") {
  Scratch s;
  fs::path cfg = s.dir / "heat.toml";
  // nonzero initial data and n = 2000 paths keep every gamma row resolvable:
  // the gamma = 8 bound must stay above the zero-hit Wilson upper limit ~z^2/n
  write_file(cfg,
             "[model]\nname = \"heat1d\"\nnu = 1.0\nb = 0.5\ng_lip = 0.2\nm = 8\n"
             "[grid]\nT = 0.3\nsteps = 100\n"
             "[initial]\nkind = \"mode\"\nmode = 1\namplitude = 1.0\n"
             "[simulate]\nepsilon = 0.05\nn_paths = 2000\n"
             "[run]\nseed = 11\n");
  fs::path out = s.dir / "out";
  int rc = run_cli("simulate --config " + cfg.string() + " --out-dir " + out.string());
  CHECK(rc == 0);
  auto lines = csv_lines(out / "tightness.csv");
  REQUIRE(lines.size() == 4);  // header + gammas {2,4,8}
  CHECK(lines[0] == "gamma,exceed,p_hat,wilson_lo,wilson_hi,bound");
  json report = json::parse(slurp(out / "report.json"));
  CHECK(report["tightness"]["all_ok"] == true);
  CHECK(report["exploded"] == 0);
}

TEST_CASE("rate subcommand reports the minimizer and its certificate") {
  Scratch s;
  fs::path cfg = s.dir / "rate.toml";
  write_file(cfg, std::string(kOuToml) +
                      "[event]\nkind = \"halfspace\"\ndirection = [1.0]\nlevel = 1.0\n");
  fs::path out = s.dir / "out";
  int rc = run_cli("rate --config " + cfg.string() + " --out-dir " + out.string());
  CHECK(rc == 0);
  json report = json::parse(slurp(out / "report.json"));
  CHECK(report["verdict"] == "finite");
  double value = report["value"].get<double>();
  CHECK(value > 1.0);
  CHECK(value < 1.3);
  CHECK(fs::exists(out / "control.csv"));
  CHECK(fs::exists(out / "trace.csv"));
}

TEST_CASE("convergence subcommand runs the dt ladder") {
  Scratch s;
  fs::path cfg = s.dir / "conv.toml";
  write_file(cfg,
             "[model]\nname = \"allen_cahn\"\nm = 8\nscale = 1.0\n"
             "[grid]\nT = 0.2\nsteps = 100\n"
             "[initial]\nkind = \"mode\"\nmode = 1\namplitude = 0.5\n"
             "[convergence]\nkind = \"dt\"\nlevels = 3\n");
  fs::path out = s.dir / "out";
  int rc = run_cli("convergence --config " + cfg.string() + " --out-dir " + out.string());
  CHECK(rc == 0);
  auto lines = csv_lines(out / "dt_refinement.csv");
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "steps,residual_max,residual_ratio,sup_h_diff_to_next");
}
