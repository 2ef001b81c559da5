// Command-line front end. Talks to the library exclusively through the C API
// in ldpkit/ldpkit.h; flag parsing and file output live here.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ldpkit/ldpkit.h"

namespace {

using nlohmann::json;

struct StringGuard {
  char* p = nullptr;
  ~StringGuard() { ldpkit_string_free(p); }
};

[[noreturn]] void fail(int status, const std::string& context) {
  std::cerr << "error: " << context;
  const char* detail = ldpkit_last_error();
  if (detail && *detail) std::cerr << ": " << detail;
  std::cerr << "\n";
  std::exit(status == LDPKIT_OK ? LDPKIT_EINTERNAL : status);
}

// RFC 4180: quote fields containing separators or quotes, double the quotes,
// CRLF record ends, header row first.
std::string csv_field(const std::string& s) {
  bool quote = s.find_first_of(",\"\r\n") != std::string::npos;
  if (!quote) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv(const std::filesystem::path& path, const json& table) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(LDPKIT_EINTERNAL, "cannot open " + path.string());
  auto row = [&](const json& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) f << ',';
      f << csv_field(cells[i].get<std::string>());
    }
    f << "\r\n";
  };
  row(table["header"]);
  for (const auto& r : table["rows"]) row(r);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(LDPKIT_EINTERNAL, "cannot open " + path.string());
  f << text;
}

// Accepts "--a.b.c=value" tokens left over after the named flags.
void apply_extra_overrides(std::string& config, const std::vector<std::string>& extras) {
  for (const auto& raw : extras) {
    if (raw.rfind("--", 0) != 0)
      fail(LDPKIT_EINVAL, "unrecognized argument '" + raw + "' (overrides look like --key=value)");
    std::string body = raw.substr(2);
    auto eq = body.find('=');
    if (eq == std::string::npos || eq == 0)
      fail(LDPKIT_EINVAL, "override '" + raw + "' must look like --key=value");
    StringGuard next;
    int rc = ldpkit_config_override(config.c_str(), body.substr(0, eq).c_str(),
                                    body.substr(eq + 1).c_str(), &next.p);
    if (rc != LDPKIT_OK) fail(rc, "override '" + raw + "'");
    config = next.p;
  }
}

void apply_override_or_die(std::string& config, const std::string& key, const std::string& value) {
  StringGuard next;
  int rc = ldpkit_config_override(config.c_str(), key.c_str(), value.c_str(), &next.p);
  if (rc != LDPKIT_OK) fail(rc, "override " + key);
  config = next.p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ldpkit: small-noise asymptotics for quasilinear stochastic evolution equations"};
  app.set_version_flag("--version", std::string(ldpkit_version()));
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  long long seed = -1;
  int threads = -1;

  const std::vector<std::pair<std::string, std::string>> subcommands = {
      {"check", "probe the declared coefficient assumptions"},
      {"skeleton", "solve the deterministic controlled skeleton equation"},
      {"simulate", "sample small-noise paths and audit energy/tightness bounds"},
      {"rate", "minimize the rate functional for a target event"},
      {"ldp", "Monte Carlo checks of the large-deviation asymptotics"},
      {"convergence", "refinement studies in time step, modes, or noise dimension"},
  };
  for (const auto& [name, help] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "TOML or JSON configuration file")->required();
    sub->add_option("--out-dir", out_dir, "output directory (default: out)");
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--threads", threads, "override run.threads");
    sub->allow_extras();  // --section.key=value config overrides
  }

  CLI11_PARSE(app, argc, argv);
  CLI::App* sub = app.get_subcommands().front();
  const std::string subcommand = sub->get_name();

  StringGuard loaded;
  int rc = ldpkit_config_load(config_path.c_str(), &loaded.p);
  if (rc != LDPKIT_OK) fail(rc, "loading " + config_path);
  std::string config = loaded.p;

  apply_extra_overrides(config, sub->remaining());
  if (seed >= 0) apply_override_or_die(config, "run.seed", std::to_string(seed));
  if (threads >= 0) apply_override_or_die(config, "run.threads", std::to_string(threads));

  StringGuard result;
  rc = ldpkit_run_experiment(subcommand.c_str(), config.c_str(), &result.p);
  if (rc != LDPKIT_OK && result.p == nullptr) fail(rc, subcommand + " run failed");

  json out = json::parse(std::string(result.p));
  json manifest = out["manifest"];
  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(LDPKIT_EINTERNAL, "cannot create " + dir.string() + ": " + ec.message());

  json outputs = json::array();
  for (const auto& table : out["tables"]) {
    std::filesystem::path p = dir / (table["name"].get<std::string>() + ".csv");
    write_csv(p, table);
    outputs.push_back(p.string());
  }
  std::filesystem::path report_path = dir / "report.json";
  write_text(report_path, out["report"].dump(2) + "\n");
  outputs.push_back(report_path.string());
  manifest["outputs"] = outputs;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");

  std::cout << subcommand << ": " << out["report"]["model"].get<std::string>() << " (dim "
            << out["report"]["dim"] << ", noise dim " << out["report"]["noise_dim"] << ")\n";
  for (const auto& [key, value] : out["report"].items()) {
    if (key == "model" || key == "dim" || key == "noise_dim" || key == "violations") continue;
    std::cout << "  " << key << " = " << value.dump() << "\n";
  }
  const json& violations = out["report"]["violations"];
  for (const auto& v : violations) std::cout << "VIOLATION: " << v.get<std::string>() << "\n";
  std::cout << "wrote " << outputs.size() + 1 << " files to " << dir.string() << "\n";

  return rc == LDPKIT_OK ? 0 : rc;
}
