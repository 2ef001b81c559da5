#pragma once

#include <string>
#include <vector>

#include "ldpkit/action.hpp"
#include "ldpkit/config.hpp"
#include "ldpkit/models.hpp"

namespace ldpkit {

// One emitted CSV table (RFC 4180; the caller owns file placement).
struct CsvTable {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct ExperimentResult {
  json report;                  // full numeric results; report["violations"] lists findings
  json manifest;                // tool, version, subcommand, config hash + echo, seed, tables
  std::vector<CsvTable> tables;
  bool violation = false;       // a certified property failed (exit code 2)
};

// ---- config -> objects -------------------------------------------------------

// [model] name = "ou" | "heat1d" | "allen_cahn" | "ns2d" (+ parameters).
Model build_model(const json& config);
// [grid] T, steps.
TimeGrid build_grid(const json& config);
// [initial] kind = "zero" | "mode" | "values".
Vec build_initial(const json& config, const Model& model);
// [<section>] kind = "zero" | "constant" | "sin".
Control build_control(const json& config, const Model& model, const TimeGrid& grid,
                      const std::string& section = "control");
// [event] kind = "ball" | "halfspace".
TargetEvent build_event(const json& config, const Model& model);

// ---- dispatch ------------------------------------------------------------------

// subcommand in {check, skeleton, simulate, rate, ldp, convergence}. Throws
// config_error / violation_error / convergence_error per the error taxonomy;
// statistical findings that are certified properties set result.violation.
ExperimentResult run_experiment(const std::string& subcommand, const json& config);

}  // namespace ldpkit
