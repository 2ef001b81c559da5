#include "ldpkit/ldpkit.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include "ldpkit/config.hpp"
#include "ldpkit/experiments.hpp"
#include "ldpkit/ldp.hpp"
#include "ldpkit/sde.hpp"
#include "ldpkit/skeleton.hpp"
#include "ldpkit/util.hpp"
#include "ldpkit/version.hpp"

struct ldpkit_model {
  ldpkit::Model m;
};
struct ldpkit_trajectory {
  ldpkit::Trajectory u;
};

namespace {

thread_local std::string g_last_error;

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Map the exception taxonomy onto status codes; everything else is internal.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const ldpkit::config_error& e) {
    g_last_error = e.what();
    return LDPKIT_EINVAL;
  } catch (const ldpkit::violation_error& e) {
    g_last_error = e.what();
    return LDPKIT_EVIOLATION;
  } catch (const ldpkit::convergence_error& e) {
    g_last_error = e.what();
    return LDPKIT_ENOCONV;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LDPKIT_EINTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LDPKIT_EINTERNAL;
  }
}

ldpkit::json parse_json_arg(const char* config_json) {
  if (!config_json) throw ldpkit::config_error("config JSON is null");
  return ldpkit::json::parse(std::string(config_json), nullptr, true, true);
}

}  // namespace

extern "C" {

const char* ldpkit_version(void) { return ldpkit::version_string; }

const char* ldpkit_last_error(void) { return g_last_error.c_str(); }

void ldpkit_string_free(char* s) { std::free(s); }

int ldpkit_config_parse(const char* text, const char* name, char** json_out) {
  return guarded([&] {
    if (!text || !json_out) throw ldpkit::config_error("null argument");
    ldpkit::json tree = ldpkit::parse_config_text(text, name ? name : "<config>");
    *json_out = copy_string(tree.dump());
    return LDPKIT_OK;
  });
}

int ldpkit_config_load(const char* path, char** json_out) {
  return guarded([&] {
    if (!path || !json_out) throw ldpkit::config_error("null argument");
    *json_out = copy_string(ldpkit::load_config(path).dump());
    return LDPKIT_OK;
  });
}

int ldpkit_config_override(const char* config_json, const char* dotted_key,
                           const char* value_text, char** json_out) {
  return guarded([&] {
    if (!dotted_key || !value_text || !json_out) throw ldpkit::config_error("null argument");
    ldpkit::json tree = parse_json_arg(config_json);
    ldpkit::apply_override(tree, dotted_key, value_text);
    *json_out = copy_string(tree.dump());
    return LDPKIT_OK;
  });
}

int ldpkit_model_create(const char* config_json, ldpkit_model** out) {
  return guarded([&] {
    if (!out) throw ldpkit::config_error("null argument");
    ldpkit::json tree = parse_json_arg(config_json);
    auto* handle = new ldpkit_model{ldpkit::build_model(tree)};
    *out = handle;
    return LDPKIT_OK;
  });
}

void ldpkit_model_free(ldpkit_model* m) { delete m; }

int ldpkit_model_dim(const ldpkit_model* m) { return m ? m->m.pair.dim : 0; }
int ldpkit_model_noise_dim(const ldpkit_model* m) { return m ? m->m.pair.noise_dim : 0; }
const char* ldpkit_model_name(const ldpkit_model* m) { return m ? m->m.name.c_str() : ""; }
double ldpkit_model_theta(const ldpkit_model* m) { return m ? m->m.pair.theta : 0.0; }

int ldpkit_model_check(const ldpkit_model* m, int n_samples, uint64_t seed, double* theta_hat) {
  return guarded([&] {
    if (!m) throw ldpkit::config_error("null model");
    ldpkit::ProbeOptions opts;
    if (n_samples > 0) opts.n_samples = n_samples;
    opts.seed = seed;
    ldpkit::CoercivityEstimate est = ldpkit::probe_coercivity_AB(m->m.triple, m->m.pair, opts);
    if (theta_hat) *theta_hat = est.theta_hat;
    if (est.theta_hat < m->m.pair.theta - 1e-8)
      throw ldpkit::violation_error("coercivity probe undercuts the declared constant: " +
                                    std::to_string(est.theta_hat) + " < " +
                                    std::to_string(m->m.pair.theta));
    return LDPKIT_OK;
  });
}

int ldpkit_skeleton_solve(const ldpkit_model* m, const char* config_json,
                          ldpkit_trajectory** out) {
  return guarded([&] {
    if (!m || !out) throw ldpkit::config_error("null argument");
    ldpkit::json tree = parse_json_arg(config_json);
    ldpkit::TimeGrid grid = ldpkit::build_grid(tree);
    ldpkit::Vec x = ldpkit::build_initial(tree, m->m);
    ldpkit::Control psi = ldpkit::build_control(tree, m->m, grid);
    ldpkit::SkeletonResult sol = ldpkit::solve_skeleton(m->m.triple, m->m.pair, x, psi);
    if (!sol.converged) throw ldpkit::convergence_error("skeleton solve failed: " + sol.message);
    *out = new ldpkit_trajectory{std::move(sol.u)};
    return LDPKIT_OK;
  });
}

void ldpkit_trajectory_free(ldpkit_trajectory* u) { delete u; }

int ldpkit_trajectory_nodes(const ldpkit_trajectory* u) { return u ? u->u.nodes() : 0; }
int ldpkit_trajectory_dim(const ldpkit_trajectory* u) { return u ? u->u.dim() : 0; }

int ldpkit_trajectory_state(const ldpkit_trajectory* u, int node, double* out) {
  return guarded([&] {
    if (!u || !out) throw ldpkit::config_error("null argument");
    if (node < 0 || node >= u->u.nodes()) throw ldpkit::config_error("node index out of range");
    ldpkit::Vec s = u->u.state(node);
    std::memcpy(out, s.data(), sizeof(double) * std::size_t(s.size()));
    return LDPKIT_OK;
  });
}

double ldpkit_trajectory_sup_h(const ldpkit_trajectory* u) { return u ? u->u.sup_h() : 0.0; }

int ldpkit_simulate(const ldpkit_model* m, const char* config_json, ldpkit_sim_summary* out) {
  return guarded([&] {
    if (!m || !out) throw ldpkit::config_error("null argument");
    ldpkit::json tree = parse_json_arg(config_json);
    ldpkit::TimeGrid grid = ldpkit::build_grid(tree);
    ldpkit::Vec x = ldpkit::build_initial(tree, m->m);
    double eps = ldpkit::number_or(tree, "simulate.epsilon", 0.1);
    ldpkit::SimOptions so;
    so.n_paths = int(ldpkit::integer_or(tree, "simulate.n_paths", 1000));
    so.noise.seed = std::uint64_t(ldpkit::integer_or(tree, "run.seed", 1));
    so.noise.k_u = int(ldpkit::integer_or(tree, "simulate.k_u", -1));
    so.threads = int(ldpkit::integer_or(tree, "run.threads", 0));
    ldpkit::PathEnsemble ens = ldpkit::simulate(m->m.triple, m->m.pair, eps, x, grid, so);
    ldpkit::ItoCheckReport ito = ldpkit::ito_identity_check(ens);
    double mean_mr = 0.0;
    for (const auto& s : ens.stats) mean_mr += s.mr_norm;
    out->mean_mr = mean_mr / double(so.n_paths);
    out->max_ito_defect = ito.max_defect;
    out->rms_ito_defect = ito.rms_defect;
    out->mean_final_defect = ito.mean_defect;
    out->se_mean = ito.se_mean;
    out->exploded = ens.exploded_count();
    return LDPKIT_OK;
  });
}

int ldpkit_rate_minimize(const ldpkit_model* m, const char* config_json, double* value,
                         int* feasible) {
  return guarded([&] {
    if (!m) throw ldpkit::config_error("null model");
    ldpkit::json tree = parse_json_arg(config_json);
    ldpkit::TimeGrid grid = ldpkit::build_grid(tree);
    ldpkit::Vec x = ldpkit::build_initial(tree, m->m);
    ldpkit::TargetEvent event = ldpkit::build_event(tree, m->m);
    ldpkit::OptimizerConfig oc;
    oc.seed = std::uint64_t(ldpkit::integer_or(tree, "run.seed", 1));
    oc.max_iterations = int(ldpkit::integer_or(tree, "rate.max_iterations", oc.max_iterations));
    oc.restarts = int(ldpkit::integer_or(tree, "rate.restarts", oc.restarts));
    ldpkit::RateResult r = ldpkit::minimize_rate(m->m.triple, m->m.pair, event, x, grid, oc);
    if (!r.feasible && !r.converged)
      throw ldpkit::convergence_error("rate minimization did not converge: " + r.message);
    if (value) *value = r.value_or_infinity();
    if (feasible) *feasible = r.feasible ? 1 : 0;
    return LDPKIT_OK;
  });
}

int ldpkit_run_experiment(const char* subcommand, const char* config_json, char** result_json) {
  return guarded([&] {
    if (!subcommand || !result_json) throw ldpkit::config_error("null argument");
    ldpkit::json tree = parse_json_arg(config_json);
    ldpkit::ExperimentResult res = ldpkit::run_experiment(subcommand, tree);
    ldpkit::json out;
    out["report"] = res.report;
    out["manifest"] = res.manifest;
    out["tables"] = ldpkit::json::array();
    for (const auto& t : res.tables)
      out["tables"].push_back({{"name", t.name}, {"header", t.header}, {"rows", t.rows}});
    *result_json = copy_string(out.dump());
    if (res.violation) {
      g_last_error = res.report["violations"].dump();
      return LDPKIT_EVIOLATION;
    }
    return LDPKIT_OK;
  });
}

}  // extern "C"
