#include "ldpkit/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ldpkit/ldp.hpp"
#include "ldpkit/sde.hpp"
#include "ldpkit/skeleton.hpp"
#include "ldpkit/util.hpp"
#include "ldpkit/version.hpp"

namespace ldpkit {

namespace {

std::string cell(double v) { return format_double(v); }
std::string cell(int v) { return std::to_string(v); }

std::vector<double> number_list(const json& config, const std::string& path,
                                std::vector<double> fallback) {
  const json* v = find_path(config, path);
  if (!v) return fallback;
  if (!v->is_array()) throw config_error("field '" + path + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) throw config_error("field '" + path + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// scalar -> 1x1, flat array -> diagonal, array of arrays -> dense
Mat parse_matrix(const json& config, const std::string& path) {
  json v = require_path(config, path);
  if (v.is_number()) {
    Mat m(1, 1);
    m(0, 0) = v.get<double>();
    return m;
  }
  if (!v.is_array() || v.empty()) throw config_error("field '" + path + "' must be a matrix");
  if (v[0].is_number()) {
    Mat m = Mat::Zero(int(v.size()), int(v.size()));
    for (int i = 0; i < int(v.size()); ++i) {
      if (!v[i].is_number()) throw config_error("field '" + path + "' mixes rows and scalars");
      m(i, i) = v[i].get<double>();
    }
    return m;
  }
  const int rows = int(v.size());
  const int cols = int(v[0].size());
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!v[i].is_array() || int(v[i].size()) != cols)
      throw config_error("field '" + path + "' has ragged rows");
    for (int j = 0; j < cols; ++j) {
      if (!v[i][j].is_number()) throw config_error("field '" + path + "' has non-numeric entries");
      m(i, j) = v[i][j].get<double>();
    }
  }
  return m;
}

std::uint64_t run_seed(const json& config) {
  return std::uint64_t(integer_or(config, "run.seed", 1));
}
int run_threads(const json& config) { return int(integer_or(config, "run.threads", 0)); }

std::vector<std::string> state_labels(const Model& model) {
  std::vector<std::string> labels = model.triple.labels();
  if (labels.empty())
    for (int k = 1; k <= model.pair.dim; ++k) labels.push_back("u" + std::to_string(k));
  return labels;
}

CsvTable trajectory_table(const std::string& name, const Model& model, const Trajectory& u) {
  CsvTable t;
  t.name = name;
  t.header.push_back("t");
  for (const auto& l : state_labels(model)) t.header.push_back(l);
  for (int i = 0; i < u.nodes(); ++i) {
    std::vector<std::string> row;
    row.push_back(cell(u.grid().node(i)));
    for (int k = 0; k < u.dim(); ++k) row.push_back(cell(u.state(i)[k]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace

// ---- config -> objects -------------------------------------------------------------

Model build_model(const json& config) {
  std::string name = require_string(config, "model.name");
  if (name == "ou" || name == "linear_sde") {
    Mat a = parse_matrix(config, "model.a");
    Mat sigma = parse_matrix(config, "model.sigma");
    return make_linear_sde(a, sigma);
  }
  if (name == "heat1d" || name == "heat1d_transport") {
    return make_heat1d_transport(number_or(config, "model.nu", 1.0),
                                 number_or(config, "model.b", 0.0),
                                 number_or(config, "model.g_lip", 0.0),
                                 int(integer_or(config, "model.m", 32)));
  }
  if (name == "allen_cahn" || name == "allen_cahn1d") {
    return make_allen_cahn1d(int(integer_or(config, "model.m", 16)),
                             number_or(config, "model.scale", 1.0),
                             number_or(config, "model.sigma_g", 0.5),
                             int(integer_or(config, "model.n_noise", 4)));
  }
  if (name == "ns2d" || name == "ns2d_periodic") {
    std::vector<std::array<double, 2>> b_fields;
    if (const json* bf = find_path(config, "model.b_fields")) {
      if (!bf->is_array()) throw config_error("field 'model.b_fields' must be [[bx, by], ...]");
      for (const auto& row : *bf) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
          throw config_error("field 'model.b_fields' must be [[bx, by], ...]");
        b_fields.push_back({row[0].get<double>(), row[1].get<double>()});
      }
    }
    return make_ns2d_periodic(number_or(config, "model.nu", 1.0),
                              int(integer_or(config, "model.cutoff", 2)), b_fields,
                              number_or(config, "model.g_lip", 0.5),
                              int(integer_or(config, "model.n_g", 2)));
  }
  throw config_error("unknown model name '" + name +
                     "' (expected ou | heat1d | allen_cahn | ns2d)");
}

TimeGrid build_grid(const json& config) {
  return TimeGrid(number_or(config, "grid.T", 1.0), int(integer_or(config, "grid.steps", 1000)));
}

Vec build_initial(const json& config, const Model& model) {
  const int dim = model.pair.dim;
  std::string kind = string_or(config, "initial.kind", "zero");
  if (kind == "zero") return Vec::Zero(dim);
  if (kind == "mode") {
    int mode = int(integer_or(config, "initial.mode", 1));
    if (mode < 1 || mode > dim) throw config_error("field 'initial.mode' out of range");
    Vec x = Vec::Zero(dim);
    x[mode - 1] = number_or(config, "initial.amplitude", 1.0);
    return x;
  }
  if (kind == "values") {
    std::vector<double> vals = number_list(config, "initial.values", {});
    if (int(vals.size()) != dim)
      throw config_error("field 'initial.values' must have exactly " + std::to_string(dim) +
                         " entries");
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = vals[std::size_t(i)];
    return x;
  }
  throw config_error("field 'initial.kind' must be zero | mode | values");
}

Control build_control(const json& config, const Model& model, const TimeGrid& grid,
                      const std::string& section) {
  Control psi(grid, model.pair.noise_dim);
  std::string kind = string_or(config, section + ".kind", "zero");
  if (kind == "zero") return psi;
  if (kind == "constant") {
    const json* raw = find_path(config, section + ".value");
    if (!raw) throw config_error("missing field '" + section + ".value'");
    std::vector<double> vals;
    if (raw->is_number())
      vals.push_back(raw->get<double>());
    else
      vals = number_list(config, section + ".value", {});
    if (int(vals.size()) == 1) {
      psi.cells.col(0).setConstant(vals[0]);
      return psi;
    }
    if (int(vals.size()) != model.pair.noise_dim)
      throw config_error("field '" + section + ".value' must be a scalar or have noise_dim entries");
    for (int j = 0; j < model.pair.noise_dim; ++j) psi.cells.col(j).setConstant(vals[std::size_t(j)]);
    return psi;
  }
  if (kind == "sin") {
    double amp = number_or(config, section + ".amplitude", 1.0);
    double freq = number_or(config, section + ".frequency", 1.0);
    int dir = int(integer_or(config, section + ".direction", 0));
    if (dir < 0 || dir >= model.pair.noise_dim)
      throw config_error("field '" + section + ".direction' out of range");
    for (int i = 0; i < grid.steps; ++i) {
      double tmid = grid.node(i) + 0.5 * grid.dt();
      psi.cells(i, dir) = amp * std::sin(2.0 * M_PI * freq * tmid);
    }
    return psi;
  }
  throw config_error("field '" + section + ".kind' must be zero | constant | sin");
}

TargetEvent build_event(const json& config, const Model& model) {
  const int dim = model.pair.dim;
  std::string kind = require_string(config, "event.kind");
  auto vector_field = [&](const std::string& vec_path, const std::string& mode_path,
                          const std::string& amp_path) {
    if (find_path(config, vec_path)) {
      std::vector<double> vals = number_list(config, vec_path, {});
      if (int(vals.size()) != dim)
        throw config_error("field '" + vec_path + "' must have exactly " + std::to_string(dim) +
                           " entries");
      Vec v(dim);
      for (int i = 0; i < dim; ++i) v[i] = vals[std::size_t(i)];
      return v;
    }
    int mode = int(integer_or(config, mode_path, 1));
    if (mode < 1 || mode > dim) throw config_error("field '" + mode_path + "' out of range");
    Vec v = Vec::Zero(dim);
    v[mode - 1] = number_or(config, amp_path, 1.0);
    return v;
  };
  if (kind == "ball") {
    Vec center = vector_field("event.center", "event.center_mode", "event.center_amplitude");
    return TargetEvent::endpoint_ball(center, require_number(config, "event.radius"));
  }
  if (kind == "halfspace") {
    Vec dir = vector_field("event.direction", "event.direction_mode", "event.direction_amplitude");
    return TargetEvent::endpoint_halfspace(dir, require_number(config, "event.level"));
  }
  throw config_error("field 'event.kind' must be ball | halfspace");
}

// ---- subcommands --------------------------------------------------------------------

namespace {

void add_violation(ExperimentResult& res, const std::string& what) {
  res.violation = true;
  res.report["violations"].push_back(what);
}

OptimizerConfig optimizer_config(const json& config) {
  OptimizerConfig oc;
  oc.max_iterations = int(integer_or(config, "rate.max_iterations", oc.max_iterations));
  oc.grad_tol = number_or(config, "rate.grad_tol", oc.grad_tol);
  oc.penalty0 = number_or(config, "rate.penalty0", oc.penalty0);
  oc.penalty_stages = int(integer_or(config, "rate.stages", oc.penalty_stages));
  oc.constraint_tol = number_or(config, "rate.constraint_tol", oc.constraint_tol);
  oc.restarts = int(integer_or(config, "rate.restarts", oc.restarts));
  oc.seed = run_seed(config);
  return oc;
}

void exp_check(const json& config, const Model& model, ExperimentResult& res) {
  ProbeOptions po;
  po.n_samples = int(integer_or(config, "check.samples", 200));
  po.seed = run_seed(config);
  po.t_max = number_or(config, "grid.T", 1.0);
  po.state_radius = number_or(config, "check.state_radius", 1.0);
  const CoefficientPair& pair = model.pair;

  CoercivityEstimate full = probe_coercivity_AB(model.triple, pair, po);
  LocalCoercivityEstimate principal = probe_coercivity_A0B0(model.triple, pair, po);
  res.report["coercivity_full"] = {{"theta_hat", full.theta_hat},
                                   {"declared_theta", pair.theta},
                                   {"falsified", full.falsified},
                                   {"witness_t", full.worst_t},
                                   {"samples", full.n_samples}};
  res.report["coercivity_principal"] = {{"theta_hat_m0", principal.theta_hat_m0},
                                        {"theta_hat_declared", principal.theta_hat_declared},
                                        {"falsified", principal.falsified},
                                        {"samples", principal.n_samples}};
  if (full.theta_hat < pair.theta - 1e-8) {
    std::ostringstream msg;
    msg << "coercivity estimate " << full.theta_hat << " below declared theta = " << pair.theta
        << " (witness t = " << full.worst_t << ")";
    add_violation(res, msg.str());
  }
  if (principal.falsified)
    add_violation(res, "principal-part coercivity falsified with the declared M");

  CsvTable probes;
  probes.name = "probes";
  probes.header = {"probe", "statistic", "value"};
  probes.rows.push_back({"coercivity_full", "theta_hat", cell(full.theta_hat)});
  probes.rows.push_back({"coercivity_full", "declared_theta", cell(pair.theta)});
  probes.rows.push_back({"coercivity_principal", "theta_hat_m0", cell(principal.theta_hat_m0)});
  probes.rows.push_back(
      {"coercivity_principal", "theta_hat_declared", cell(principal.theta_hat_declared)});

  auto lip = [&](CoefficientPart part, const std::string& name) {
    LipschitzEstimate est = probe_lipschitz(model.triple, pair, part, po);
    res.report["lipschitz"][name] = {{"c_hat", est.c_hat},
                                     {"c_hat_half", est.c_hat_half},
                                     {"samples", est.n_samples}};
    probes.rows.push_back({"lipschitz_" + name, "c_hat", cell(est.c_hat)});
    probes.rows.push_back({"lipschitz_" + name, "c_hat_half", cell(est.c_hat_half)});
  };
  lip(CoefficientPart::A0, "A0");
  if (pair.B0) lip(CoefficientPart::B0, "B0");
  if (pair.F) lip(CoefficientPart::F, "F");
  if (pair.G) lip(CoefficientPart::G, "G");

  CsvTable sub;
  sub.name = "subcriticality";
  sub.header = {"part", "rho", "beta", "verdict"};
  auto verdict_str = [](Subcriticality s) {
    return s == Subcriticality::Subcritical ? "subcritical"
           : s == Subcriticality::Critical  ? "critical"
                                            : "violated";
  };
  auto sub_rows = [&](const std::vector<GrowthExponent>& exps, const std::string& part) {
    if (exps.empty()) return;
    SubcriticalityReport rep = check_subcriticality(exps);
    res.report["subcriticality"][part] = {{"overall", verdict_str(rep.overall)},
                                          {"detail", rep.detail}};
    for (std::size_t j = 0; j < exps.size(); ++j)
      sub.rows.push_back({part, exps[j].rho.str(), exps[j].beta.str(),
                          verdict_str(rep.verdicts[j])});
  };
  sub_rows(pair.F_exponents, "F");
  sub_rows(pair.G_exponents, "G");

  res.tables.push_back(std::move(probes));
  if (!sub.rows.empty()) res.tables.push_back(std::move(sub));
}

void exp_skeleton(const json& config, const Model& model, ExperimentResult& res) {
  TimeGrid grid = build_grid(config);
  Vec x = build_initial(config, model);
  Control psi = build_control(config, model, grid);
  SkeletonResult sol = solve_skeleton(model.triple, model.pair, x, psi);
  if (!sol.converged) throw convergence_error("skeleton solve failed: " + sol.message);
  ResidualReport resid = residual(model.triple, model.pair, sol.u, psi, x);
  GlobalBoundReport bound = verify_global_bound(model.triple, model.pair, sol.u, psi, x);

  res.report["converged"] = true;
  res.report["iterations"] = sol.total_iterations;
  res.report["windows"] = json::array();
  for (const auto& w : sol.windows)
    res.report["windows"].push_back({{"first_node", w.first_node},
                                     {"last_node", w.last_node},
                                     {"iterations", w.iterations},
                                     {"max_contraction", w.max_contraction},
                                     {"final_diff", w.final_diff}});
  res.report["residual_max"] = resid.max_defect;
  res.report["mr_norm"] = bound.mr;
  res.report["apriori_bound"] = bound.bound;
  res.report["margin"] = bound.margin;
  if (bound.margin < 0) {
    std::ostringstream msg;
    msg << "a-priori MR bound violated: margin = " << bound.margin;
    add_violation(res, msg.str());
  }

  res.tables.push_back(trajectory_table("trajectory", model, sol.u));
  CsvTable rt;
  rt.name = "residual";
  rt.header = {"t", "defect"};
  for (std::size_t i = 0; i < resid.profile.size(); ++i)
    rt.rows.push_back({cell(grid.node(int(i))), cell(resid.profile[i])});
  res.tables.push_back(std::move(rt));
  CsvTable wt;
  wt.name = "windows";
  wt.header = {"first_node", "last_node", "iterations", "max_contraction", "final_diff"};
  for (const auto& w : sol.windows)
    wt.rows.push_back({cell(w.first_node), cell(w.last_node), cell(w.iterations),
                       cell(w.max_contraction), cell(w.final_diff)});
  res.tables.push_back(std::move(wt));
}

void exp_simulate(const json& config, const Model& model, ExperimentResult& res) {
  TimeGrid grid = build_grid(config);
  Vec x = build_initial(config, model);
  double eps = number_or(config, "simulate.epsilon", 0.1);
  SimOptions so;
  so.n_paths = int(integer_or(config, "simulate.n_paths", 1000));
  so.noise.seed = run_seed(config);
  so.noise.k_u = int(integer_or(config, "simulate.k_u", -1));
  so.threads = run_threads(config);
  Control psi;
  if (bool_or(config, "simulate.controlled", false)) {
    psi = build_control(config, model, grid);
    so.control = &psi;
  }
  PathEnsemble ens = simulate(model.triple, model.pair, eps, x, grid, so);

  double mean_mr = 0, max_mr = 0, trace_var = 0;
  Vec mean_end = Vec::Zero(model.pair.dim);
  for (const auto& s : ens.stats) {
    mean_mr += s.mr_norm;
    max_mr = std::max(max_mr, s.mr_norm);
    mean_end += s.endpoint;
  }
  mean_mr /= double(so.n_paths);
  mean_end /= double(so.n_paths);
  for (const auto& s : ens.stats) trace_var += (s.endpoint - mean_end).squaredNorm();
  if (so.n_paths > 1) trace_var /= double(so.n_paths - 1);

  res.report["epsilon"] = eps;
  res.report["n_paths"] = so.n_paths;
  res.report["k_u"] = ens.k_u;
  res.report["controlled"] = ens.controlled;
  res.report["exploded"] = ens.exploded_count();
  res.report["mean_mr"] = mean_mr;
  res.report["max_mr"] = max_mr;
  res.report["endpoint_trace_variance"] = trace_var;

  ItoCheckReport ito = ito_identity_check(ens);
  res.report["ito"] = {{"max_defect", ito.max_defect},   {"rms_defect", ito.rms_defect},
                       {"mean_defect", ito.mean_defect}, {"se_mean", ito.se_mean},
                       {"n_paths", ito.n_paths},         {"n_excluded", ito.n_excluded}};

  std::vector<double> gammas = number_list(config, "simulate.gammas", {2.0, 4.0, 8.0});
  TightnessReport tight = tightness_probe(ens, model.triple, model.pair, x, gammas);
  res.report["tightness"] = {{"envelope_c", tight.envelope_c}, {"all_ok", tight.all_ok}};
  CsvTable tt;
  tt.name = "tightness";
  tt.header = {"gamma", "exceed", "p_hat", "wilson_lo", "wilson_hi", "bound"};
  for (const auto& r : tight.rows) {
    tt.rows.push_back({cell(r.gamma), cell(r.exceed), cell(r.p_hat), cell(r.wilson_lo),
                       cell(r.wilson_hi), cell(r.bound)});
    if (!r.ok) {
      std::ostringstream msg;
      msg << "tightness envelope exceeded at gamma = " << r.gamma << ": upper CI " << r.wilson_hi
          << " > bound " << r.bound;
      add_violation(res, msg.str());
    }
  }
  res.tables.push_back(std::move(tt));

  if (const json* steps = find_path(config, "simulate.ito_steps")) {
    std::vector<int> ladder;
    for (const auto& e : *steps) ladder.push_back(e.get<int>());
    SimOptions oso = so;
    oso.control = nullptr;
    oso.n_paths = int(integer_or(config, "simulate.ito_paths", std::min(so.n_paths, 1000)));
    ItoOrderReport order =
        ito_order_study(model.triple, model.pair, eps, x, grid.T, ladder, oso);
    res.report["ito_order"] = {{"order_rms", order.order_rms}, {"order_max", order.order_max}};
    CsvTable ot;
    ot.name = "ito_orders";
    ot.header = {"steps", "rms_defect", "max_defect", "mean_defect", "se_mean"};
    for (std::size_t i = 0; i < order.steps.size(); ++i)
      ot.rows.push_back({cell(order.steps[i]), cell(order.reports[i].rms_defect),
                         cell(order.reports[i].max_defect), cell(order.reports[i].mean_defect),
                         cell(order.reports[i].se_mean)});
    res.tables.push_back(std::move(ot));
  }
}

void exp_rate(const json& config, const Model& model, ExperimentResult& res) {
  TimeGrid grid = build_grid(config);
  Vec x = build_initial(config, model);
  TargetEvent event = build_event(config, model);
  OptimizerConfig oc = optimizer_config(config);
  RateResult r = minimize_rate(model.triple, model.pair, event, x, grid, oc);
  if (!r.feasible && !r.converged)
    throw convergence_error("rate minimization did not converge: " + r.message);

  res.report["value"] = r.value;
  res.report["objective"] = r.objective;
  res.report["verdict"] = r.feasible ? "finite" : "infinite";
  res.report["constraint_violation"] = r.constraint_violation;
  res.report["converged"] = r.converged;
  res.report["certificate"] = {{"mr_norm", r.cert_mr},
                               {"endpoint_distance", r.cert_endpoint_dist}};
  if (!r.message.empty()) res.report["message"] = r.message;

  CsvTable ct;
  ct.name = "control";
  ct.header.push_back("t");
  for (int j = 0; j < model.pair.noise_dim; ++j) ct.header.push_back("psi" + std::to_string(j + 1));
  for (int i = 0; i < grid.steps; ++i) {
    std::vector<std::string> row{cell(grid.node(i))};
    for (int j = 0; j < model.pair.noise_dim; ++j) row.push_back(cell(r.control.cells(i, j)));
    ct.rows.push_back(std::move(row));
  }
  res.tables.push_back(std::move(ct));
  CsvTable tr;
  tr.name = "trace";
  tr.header = {"stage", "iteration", "objective", "grad_norm", "penalty"};
  for (const auto& t : r.trace)
    tr.rows.push_back(
        {cell(t.stage), cell(t.iteration), cell(t.objective), cell(t.grad_norm), cell(t.penalty)});
  res.tables.push_back(std::move(tr));
}

void exp_ldp(const json& config, const Model& model, ExperimentResult& res) {
  TimeGrid grid = build_grid(config);
  Vec x = build_initial(config, model);
  std::string kind = string_or(config, "ldp.kind", "slope");
  const int n_paths = int(integer_or(config, "ldp.n_paths", 10000));
  const std::uint64_t seed = run_seed(config);
  const int threads = run_threads(config);

  if (kind == "slope") {
    TargetEvent event = build_event(config, model);
    SlopeOptions so;
    so.n_paths = n_paths;
    so.seed = seed;
    so.threads = threads;
    so.optimizer = optimizer_config(config);
    std::vector<double> eps = number_list(config, "ldp.eps", {0.2, 0.1, 0.05});
    SlopeReport rep = ldp_slope(model.triple, model.pair, event, eps, x, grid, so);
    res.report["fitted_rate"] = rep.fit.rate;
    res.report["fit_sigma"] = rep.fit.sigma;
    res.report["fit_prefactor"] = rep.fit.prefactor;
    res.report["rate_ref"] = rep.rate_ref_finite ? json(rep.rate_ref) : json("infinity");
    res.report["consistent_3sigma"] =
        rep.rate_ref_finite && std::fabs(rep.fit.rate - rep.rate_ref) <= 3.0 * rep.fit.sigma;
    res.report["warnings"] = rep.warnings;
    CsvTable st;
    st.name = "slope";
    st.header = {"epsilon", "hits",      "n_paths",        "p_hat", "wilson_lo",
                 "wilson_hi", "neg_eps_log_p", "sigma", "usable"};
    for (const auto& r : rep.rows)
      st.rows.push_back({cell(r.epsilon), cell(r.hits), cell(r.n_paths), cell(r.p_hat),
                         cell(r.wilson_lo), cell(r.wilson_hi), cell(r.neg_eps_log_p),
                         cell(r.sigma), r.usable ? "true" : "false"});
    res.tables.push_back(std::move(st));
    return;
  }

  if (kind == "laplace") {
    double eps = number_or(config, "ldp.epsilon", 0.1);
    std::string fname = string_or(config, "ldp.functional", "endpoint_dist2");
    std::function<double(const Trajectory&)> h;
    std::function<double(const Vec&)> cost;
    std::function<Vec(const Vec&)> cost_grad;
    if (fname == "endpoint_coord") {
      TargetEvent ev = build_event(config, model);
      if (ev.kind != TargetEvent::Kind::EndpointHalfspace)
        throw config_error("ldp.functional = endpoint_coord needs event.kind = halfspace "
                           "(its direction defines the coordinate)");
      Vec d = ev.direction;
      h = [d](const Trajectory& u) { return d.dot(u.state(u.nodes() - 1)); };
      cost = [d](const Vec& end) { return d.dot(end); };
      cost_grad = [d](const Vec&) { return d; };
    } else if (fname == "endpoint_dist2") {
      SimOptions det;
      det.n_paths = 1;
      det.store_paths = true;
      PathEnsemble base = simulate(model.triple, model.pair, 0.0, x, grid, det);
      Vec c = base.paths.front().state(grid.steps);
      h = [c](const Trajectory& u) { return (u.state(u.nodes() - 1) - c).squaredNorm(); };
      cost = [c](const Vec& end) { return (end - c).squaredNorm(); };
      cost_grad = [c](const Vec& end) { return Vec(2.0 * (end - c)); };
    } else {
      throw config_error("field 'ldp.functional' must be endpoint_coord | endpoint_dist2");
    }
    LaplaceReport rep =
        laplace_estimate(model.triple, model.pair, h, eps, n_paths, x, grid, seed, threads);
    OptimizerConfig oc = optimizer_config(config);
    RateResult ref = minimize_endpoint_cost(model.triple, model.pair, cost, cost_grad, x, grid, oc);
    res.report["epsilon"] = eps;
    res.report["functional"] = fname;
    res.report["estimate"] = rep.estimate;
    res.report["se"] = rep.se;
    res.report["ess"] = rep.ess;
    res.report["reference"] = ref.objective;  // inf (I + h)
    res.report["gap"] = rep.estimate - ref.objective;
    res.report["warnings"] = rep.warnings;
    CsvTable lt;
    lt.name = "laplace";
    lt.header = {"epsilon", "estimate", "se", "ess", "reference", "gap"};
    lt.rows.push_back({cell(eps), cell(rep.estimate), cell(rep.se), cell(rep.ess),
                       cell(ref.objective), cell(rep.estimate - ref.objective)});
    res.tables.push_back(std::move(lt));
    return;
  }

  if (kind == "lln") {
    std::vector<double> eps = number_list(config, "ldp.eps", {0.2, 0.1, 0.05, 0.02});
    LlnReport rep = lln_check(model.triple, model.pair, eps, n_paths, x, grid, seed, threads);
    res.report["slope"] = rep.slope;
    res.report["monotone"] = rep.monotone;
    CsvTable lt;
    lt.name = "lln";
    lt.header = {"epsilon", "median_dev"};
    for (const auto& r : rep.rows) lt.rows.push_back({cell(r.epsilon), cell(r.median_dev)});
    res.tables.push_back(std::move(lt));
    return;
  }

  if (kind == "continuity") {
    std::vector<double> eps = number_list(config, "ldp.eps", {0.2, 0.1, 0.05, 0.02});
    std::vector<double> deltas = number_list(config, "ldp.deltas", {0.1, 0.05});
    std::vector<Control> family{build_control(config, model, grid)};
    ContinuityReport rep = stochastic_continuity_probe(model.triple, model.pair, family, eps,
                                                       n_paths, x, deltas, seed, threads);
    res.report["monotone"] = rep.monotone;
    CsvTable ct;
    ct.name = "continuity";
    ct.header = {"control", "epsilon", "delta", "exceed", "n_paths", "p_hat", "wilson_hi"};
    for (const auto& r : rep.rows)
      ct.rows.push_back({cell(r.control_index), cell(r.epsilon), cell(r.delta), cell(r.exceed),
                         cell(r.n_paths), cell(r.p_hat), cell(r.wilson_hi)});
    res.tables.push_back(std::move(ct));
    return;
  }

  throw config_error("field 'ldp.kind' must be slope | laplace | lln | continuity");
}

void exp_convergence(const json& config, const Model& model, const json& full_config,
                     ExperimentResult& res) {
  TimeGrid grid = build_grid(config);
  Vec x = build_initial(config, model);
  std::string kind = string_or(config, "convergence.kind", "dt");
  int levels = int(integer_or(config, "convergence.levels", 3));
  if (levels < 2) throw config_error("field 'convergence.levels' must be >= 2");

  if (kind == "dt") {
    std::vector<int> steps;
    std::vector<double> res_max;
    std::vector<Trajectory> sols;
    for (int l = 0; l < levels; ++l) {
      TimeGrid g(grid.T, grid.steps << l);
      Control psi = build_control(config, model, g);
      SkeletonResult sol = solve_skeleton(model.triple, model.pair, x, psi);
      if (!sol.converged)
        throw convergence_error("skeleton solve failed at steps = " + std::to_string(g.steps) +
                                ": " + sol.message);
      steps.push_back(g.steps);
      res_max.push_back(residual(model.triple, model.pair, sol.u, psi, x).max_defect);
      sols.push_back(std::move(sol.u));
    }
    CsvTable t;
    t.name = "dt_refinement";
    t.header = {"steps", "residual_max", "residual_ratio", "sup_h_diff_to_next"};
    for (int l = 0; l < levels; ++l) {
      double ratio = l > 0 ? res_max[std::size_t(l - 1)] / res_max[std::size_t(l)] : 0.0;
      double diff = 0.0;
      if (l + 1 < levels) {  // coarse node i lives at fine node 2i
        for (int i = 0; i <= steps[std::size_t(l)]; ++i)
          diff = std::max(diff,
                          (sols[std::size_t(l)].state(i) - sols[std::size_t(l + 1)].state(2 * i))
                              .norm());
      }
      t.rows.push_back({cell(steps[std::size_t(l)]), cell(res_max[std::size_t(l)]),
                        l > 0 ? cell(ratio) : std::string("-"),
                        l + 1 < levels ? cell(diff) : std::string("-")});
      res.report["residual_max"].push_back(res_max[std::size_t(l)]);
    }
    res.tables.push_back(std::move(t));
    return;
  }

  if (kind == "modes") {
    std::string name = require_string(config, "model.name");
    std::string param = (name == "ns2d" || name == "ns2d_periodic") ? "model.cutoff" : "model.m";
    if (name == "ou" || name == "linear_sde")
      throw config_error("mode refinement needs a spectral model (heat1d | allen_cahn | ns2d)");
    long long base = integer_or(full_config, param, 16);
    std::vector<int> sizes;
    std::vector<Vec> endpoints;
    for (int l = 0; l < levels; ++l) {
      json scaled = full_config;
      apply_override(scaled, param, std::to_string(base << l));
      Model fine = build_model(scaled);
      Vec x_l = Vec::Zero(fine.pair.dim);
      x_l.head(x.size()) = x;  // nested spectral bases: pad with zeros
      Control psi = build_control(scaled, fine, grid);
      SkeletonResult sol = solve_skeleton(fine.triple, fine.pair, x_l, psi);
      if (!sol.converged)
        throw convergence_error("skeleton solve failed at " + param + " = " +
                                std::to_string(base << l) + ": " + sol.message);
      sizes.push_back(fine.pair.dim);
      endpoints.push_back(sol.u.state(grid.steps));
    }
    CsvTable t;
    t.name = "mode_refinement";
    t.header = {"dim", "endpoint_h", "diff_to_next"};
    for (int l = 0; l < levels; ++l) {
      double diff = 0.0;
      if (l + 1 < levels) {
        int d = sizes[std::size_t(l)];
        diff = (endpoints[std::size_t(l + 1)].head(d) - endpoints[std::size_t(l)]).norm();
      }
      t.rows.push_back({cell(sizes[std::size_t(l)]), cell(endpoints[std::size_t(l)].norm()),
                        l + 1 < levels ? cell(diff) : std::string("-")});
    }
    res.tables.push_back(std::move(t));
    return;
  }

  if (kind == "k_u") {
    const int K = model.pair.noise_dim;
    double eps = number_or(config, "simulate.epsilon", 0.1);
    int n_paths = int(integer_or(config, "simulate.n_paths", 1000));
    CsvTable t;
    t.name = "k_u_refinement";
    t.header = {"k_u", "mean_mr", "endpoint_trace_variance"};
    std::vector<double> vars;
    for (int k = 1; k <= K; ++k) {
      SimOptions so;
      so.n_paths = n_paths;
      so.noise.seed = run_seed(config);
      so.noise.k_u = k;
      so.threads = run_threads(config);
      PathEnsemble ens = simulate(model.triple, model.pair, eps, x, grid, so);
      double mean_mr = 0;
      Vec mean_end = Vec::Zero(model.pair.dim);
      for (const auto& s : ens.stats) {
        mean_mr += s.mr_norm;
        mean_end += s.endpoint;
      }
      mean_mr /= double(n_paths);
      mean_end /= double(n_paths);
      double tv = 0;
      for (const auto& s : ens.stats) tv += (s.endpoint - mean_end).squaredNorm();
      if (n_paths > 1) tv /= double(n_paths - 1);
      vars.push_back(tv);
      t.rows.push_back({cell(k), cell(mean_mr), cell(tv)});
    }
    res.report["trace_variance_by_k"] = vars;
    res.tables.push_back(std::move(t));
    return;
  }

  throw config_error("field 'convergence.kind' must be dt | modes | k_u");
}

}  // namespace

ExperimentResult run_experiment(const std::string& subcommand, const json& config) {
  ExperimentResult res;
  res.report = json::object();
  res.report["violations"] = json::array();

  Model model = build_model(config);
  res.report["model"] = model.name;
  res.report["dim"] = model.pair.dim;
  res.report["noise_dim"] = model.pair.noise_dim;

  if (subcommand == "check")
    exp_check(config, model, res);
  else if (subcommand == "skeleton")
    exp_skeleton(config, model, res);
  else if (subcommand == "simulate")
    exp_simulate(config, model, res);
  else if (subcommand == "rate")
    exp_rate(config, model, res);
  else if (subcommand == "ldp")
    exp_ldp(config, model, res);
  else if (subcommand == "convergence")
    exp_convergence(config, model, config, res);
  else
    throw config_error("unknown subcommand '" + subcommand +
                       "' (expected check | skeleton | simulate | rate | ldp | convergence)");

  std::ostringstream hash;
  hash << std::hex << config_hash(config);
  res.manifest = {{"tool", "ldpkit"},
                  {"version", version_string},
                  {"subcommand", subcommand},
                  {"config_hash", hash.str()},
                  {"seed", integer_or(config, "run.seed", 1)},
                  {"config", config},
                  {"violations", res.report["violations"].size()}};
  json table_names = json::array();
  for (const auto& t : res.tables) table_names.push_back(t.name);
  res.manifest["tables"] = table_names;
  return res;
}

}  // namespace ldpkit
