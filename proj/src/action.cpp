#include "ldpkit/action.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "ldpkit/rng.hpp"
#include "ldpkit/util.hpp"

namespace ldpkit {

// ---- events ---------------------------------------------------------------------

TargetEvent TargetEvent::endpoint_ball(Vec z, double delta) {
  if (!(delta > 0)) throw config_error("endpoint_ball: radius must be positive");
  TargetEvent e;
  e.kind = Kind::EndpointBall;
  e.center = std::move(z);
  e.radius = delta;
  return e;
}

TargetEvent TargetEvent::endpoint_halfspace(Vec d, double level) {
  if (d.norm() == 0.0) throw config_error("endpoint_halfspace: zero direction");
  TargetEvent e;
  e.kind = Kind::EndpointHalfspace;
  e.direction = std::move(d);
  e.level = level;
  return e;
}

TargetEvent TargetEvent::path_functional(std::function<double(const Trajectory&)> violation) {
  if (!violation) throw config_error("path_functional: missing callable");
  TargetEvent e;
  e.kind = Kind::PathFunctional;
  e.functional = std::move(violation);
  return e;
}

double TargetEvent::violation_of(const Trajectory& u) const {
  if (kind == Kind::PathFunctional) return std::max(0.0, functional(u));
  return endpoint_violation(u.state(u.nodes() - 1));
}

double TargetEvent::endpoint_violation(const Vec& end) const {
  switch (kind) {
    case Kind::EndpointBall:
      return std::max(0.0, (end - center).norm() - radius);
    case Kind::EndpointHalfspace:
      return std::max(0.0, level - direction.dot(end));
    case Kind::PathFunctional:
      throw config_error("endpoint_violation: path-functional events need the full path");
  }
  return 0.0;
}

// ---- forward pass ---------------------------------------------------------------

Trajectory forward_controlled(const CoefficientPair& pair, const Control& psi, const Vec& x,
                              double guard) {
  const TimeGrid& grid = psi.grid;
  const double dt = grid.dt();
  Trajectory u(grid, pair.dim);
  u.state(0) = x;
  for (int i = 0; i < grid.steps; ++i) {
    const double t = grid.node(i);
    const Vec& ui = u.state(i);
    Vec rhs = ui;
    if (pair.F) rhs += dt * pair.F(t, ui);
    if (pair.f) rhs += dt * pair.f(t);
    rhs += dt * (pair.noise_matrix(t, ui) * psi.cell(i));
    u.state(i + 1) = pair.A0(t, ui).solve_shifted(dt, rhs);
    if (!u.state(i + 1).allFinite() || u.state(i + 1).norm() >= guard) {
      std::ostringstream msg;
      msg << "forward_controlled: state blow-up at node " << i + 1 << " (guard " << guard << ")";
      throw convergence_error(msg.str());
    }
  }
  return u;
}

RateAlong rate_along(const SpectralTriple& triple, const CoefficientPair& pair,
                     const Control& psi, const Vec& x, const SkeletonOptions& opts) {
  RateAlong out;
  out.value = psi.action();
  out.skeleton = solve_skeleton(triple, pair, x, psi, opts);
  if (!out.skeleton.converged)
    throw convergence_error("rate_along: skeleton solve failed: " + out.skeleton.message);
  return out;
}

// ---- adjoint gradient -----------------------------------------------------------

namespace {

// Backward recursion through u_{i+1} = (I + dt A0)^{-1} (u_i + dt(F+f) + dt B psi_i):
//   mu_i   = (I + dt A0(t_i))^{-T} lambda_{i+1},
//   g_i    = dt psi_i + dt B_i^T mu_i,
//   lambda_i = mu_i + dt (F'_i + d[B psi]_i)^T mu_i,   lambda_N = grad phi(u_N).
Mat adjoint_pass(const CoefficientPair& pair, const Control& psi, const Trajectory& u,
                 const Vec& endpoint_grad) {
  const TimeGrid& grid = psi.grid;
  const double dt = grid.dt();
  const int K = psi.noise_dim();
  Mat grad(grid.steps, K);
  Vec lambda = endpoint_grad;
  for (int i = grid.steps - 1; i >= 0; --i) {
    const double t = grid.node(i);
    const Vec& ui = u.state(i);
    const Vec psi_i = psi.cell(i);
    Vec mu = pair.A0(t, ui).solve_shifted_transpose(dt, lambda);
    Mat b = pair.noise_matrix(t, ui);
    grad.row(i) = (dt * psi_i + dt * (b.transpose() * mu)).transpose();
    lambda = mu;
    if (pair.F) lambda += dt * (pair.f_jacobian(t, ui).transpose() * mu);
    if (pair.B0) lambda += dt * (pair.b0_psi_matrix(t, ui, psi_i).transpose() * mu);
    if (pair.G) lambda += dt * (pair.g_jacobian_psi(t, ui, psi_i).transpose() * mu);
  }
  return grad;
}

// Central finite differences on the full objective; the quasilinear fallback.
Mat fd_gradient(const CoefficientPair& pair, const Control& psi, const Vec& x,
                const std::function<double(const Vec&)>& endpoint_cost, double guard) {
  const double h = 1e-6;
  Control probe = psi;
  Mat grad(psi.grid.steps, psi.noise_dim());
  auto objective = [&](const Control& c) {
    Trajectory u = forward_controlled(pair, c, x, guard);
    return c.action() + endpoint_cost(u.state(u.nodes() - 1));
  };
  for (int i = 0; i < psi.grid.steps; ++i)
    for (int j = 0; j < psi.noise_dim(); ++j) {
      const double base = psi.cells(i, j);
      probe.cells(i, j) = base + h;
      const double fp = objective(probe);
      probe.cells(i, j) = base - h;
      const double fm = objective(probe);
      probe.cells(i, j) = base;
      grad(i, j) = (fp - fm) / (2.0 * h);
    }
  return grad;
}

}  // namespace

Mat adjoint_gradient(const CoefficientPair& pair, const Control& psi, const Vec& x,
                     const std::function<double(const Vec&)>& endpoint_cost,
                     const std::function<Vec(const Vec&)>& endpoint_grad) {
  if (!pair.semilinear) return fd_gradient(pair, psi, x, endpoint_cost, 1e8);
  Trajectory u = forward_controlled(pair, psi, x);
  return adjoint_pass(pair, psi, u, endpoint_grad(u.state(u.nodes() - 1)));
}

// ---- optimizer ------------------------------------------------------------------

namespace {

struct Objective {
  const CoefficientPair& pair;
  const Control& shape;  // grid + noise dim
  const Vec& x;
  std::function<double(const Vec&)> cost;   // endpoint cost phi
  std::function<Vec(const Vec&)> cost_grad;
  double guard = 1e8;

  Control unflatten(const Vec& z) const {
    Control psi = shape;
    for (int i = 0; i < psi.grid.steps; ++i)
      for (int j = 0; j < psi.noise_dim(); ++j) psi.cells(i, j) = z[i * psi.noise_dim() + j];
    return psi;
  }

  // Returns the objective; fills grad unless null. Blow-ups report +inf so the
  // line search backs away.
  double eval(const Vec& z, Vec* grad) const {
    Control psi = unflatten(z);
    Trajectory u;
    try {
      u = forward_controlled(pair, psi, x, guard);
    } catch (const convergence_error&) {
      if (grad) *grad = Vec::Zero(z.size());
      return std::numeric_limits<double>::infinity();
    }
    const Vec& end = u.state(u.nodes() - 1);
    double value = psi.action() + cost(end);
    if (grad) {
      Mat g = pair.semilinear ? adjoint_pass(pair, psi, u, cost_grad(end))
                              : fd_gradient(pair, psi, x, cost, guard);
      for (int i = 0; i < psi.grid.steps; ++i)
        for (int j = 0; j < psi.noise_dim(); ++j) (*grad)[i * psi.noise_dim() + j] = g(i, j);
    }
    return value;
  }
};

struct LbfgsOutcome {
  Vec z;
  double objective = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  int iterations = 0;
};

LbfgsOutcome lbfgs_minimize(const Objective& obj, Vec z0, const OptimizerConfig& cfg, int stage,
                            double penalty_weight, std::vector<TraceRow>* trace) {
  const int n = int(z0.size());
  Vec z = std::move(z0);
  Vec g(n);
  double f = obj.eval(z, &g);
  double g0 = std::max(1.0, g.norm());

  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;
  LbfgsOutcome out;
  int iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    double gnorm = g.norm();
    if (trace) trace->push_back({stage, iter, f, gnorm, penalty_weight});
    if (gnorm <= cfg.grad_tol * g0 || gnorm <= 1e-14) {
      out.converged = true;
      break;
    }

    // Two-loop recursion.
    Vec q = g;
    std::vector<double> alpha(s_hist.size());
    for (int j = int(s_hist.size()) - 1; j >= 0; --j) {
      alpha[std::size_t(j)] = rho_hist[std::size_t(j)] * s_hist[std::size_t(j)].dot(q);
      q -= alpha[std::size_t(j)] * y_hist[std::size_t(j)];
    }
    if (!s_hist.empty()) {
      const Vec& s = s_hist.back();
      const Vec& y = y_hist.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t j = 0; j < s_hist.size(); ++j) {
      double beta = rho_hist[j] * y_hist[j].dot(q);
      q += (alpha[j] - beta) * s_hist[j];
    }
    Vec dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0)) {  // not a descent direction; fall back to steepest descent
      dir = -g;
      slope = -gnorm * gnorm;
    }

    // Armijo backtracking.
    double step = s_hist.empty() ? 1.0 / std::max(1.0, gnorm) : 1.0;
    double f_new = 0.0;
    Vec z_new, g_new(n);
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      z_new = z + step * dir;
      f_new = obj.eval(z_new, nullptr);
      if (f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // line search exhausted: stationary to machine noise

    obj.eval(z_new, &g_new);
    Vec s = z_new - z;
    Vec y = g_new - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (int(s_hist.size()) > cfg.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    bool stalled = std::fabs(f - f_new) <= 1e-14 * (1.0 + std::fabs(f));
    z = std::move(z_new);
    g = g_new;
    f = f_new;
    if (stalled) {
      out.converged = true;
      break;
    }
  }
  out.z = std::move(z);
  out.objective = f;
  out.grad_norm = g.norm();
  out.iterations = iter;
  return out;
}

// Penalty phi and grad for an endpoint event with weight mu.
std::function<double(const Vec&)> penalty_cost(const TargetEvent& event, double mu) {
  if (event.kind == TargetEvent::Kind::EndpointBall) {
    Vec c = event.center;
    double r = event.radius;
    return [c, r, mu](const Vec& end) {
      double v = std::max(0.0, (end - c).norm() - r);
      return mu * v * v;
    };
  }
  Vec d = event.direction;
  double L = event.level;
  return [d, L, mu](const Vec& end) {
    double v = std::max(0.0, L - d.dot(end));
    return mu * v * v;
  };
}

std::function<Vec(const Vec&)> penalty_grad(const TargetEvent& event, double mu) {
  if (event.kind == TargetEvent::Kind::EndpointBall) {
    Vec c = event.center;
    double r = event.radius;
    return [c, r, mu](const Vec& end) -> Vec {
      Vec diff = end - c;
      double dist = diff.norm();
      if (dist <= r || dist == 0.0) return Vec::Zero(end.size());
      return (2.0 * mu * (dist - r) / dist) * diff;
    };
  }
  Vec d = event.direction;
  double L = event.level;
  return [d, L, mu](const Vec& end) -> Vec {
    double v = std::max(0.0, L - d.dot(end));
    return Vec(-2.0 * mu * v * d);
  };
}

RateResult run_penalized(const SpectralTriple& triple, const CoefficientPair& pair,
                         const TargetEvent& event, const Vec& x, const TimeGrid& grid,
                         const OptimizerConfig& cfg, Vec z0) {
  Control shape(grid, pair.noise_dim);
  RateResult res;
  Vec z = std::move(z0);
  double mu = cfg.penalty0;
  bool converged = true;
  for (int stage = 0; stage < cfg.penalty_stages; ++stage) {
    Objective obj{pair, shape, x, penalty_cost(event, mu), penalty_grad(event, mu), cfg.guard};
    LbfgsOutcome out = lbfgs_minimize(obj, z, cfg, stage, mu, &res.trace);
    z = std::move(out.z);
    converged = out.converged;
    res.objective = out.objective;
    mu *= 10.0;
  }
  Objective final_obj{pair, shape, x, penalty_cost(event, 1.0), penalty_grad(event, 1.0),
                      cfg.guard};
  res.control = final_obj.unflatten(z);
  res.value = res.control.action();
  Trajectory u = forward_controlled(pair, res.control, x, cfg.guard);
  res.constraint_violation = event.violation_of(u);
  res.feasible = res.constraint_violation <= cfg.constraint_tol;
  res.converged = converged;
  res.cert_mr = u.mr_norm(triple);
  res.cert_endpoint_dist = res.constraint_violation;
  if (!res.feasible)
    res.message = "constraint violation above tolerance after penalty continuation; "
                  "event may be unreachable at finite action";
  return res;
}

}  // namespace

RateResult minimize_rate(const SpectralTriple& triple, const CoefficientPair& pair,
                         const TargetEvent& event, const Vec& x, const TimeGrid& grid,
                         const OptimizerConfig& cfg) {
  if (event.kind == TargetEvent::Kind::PathFunctional)
    throw config_error("minimize_rate: path-functional events are sampling-only "
                       "(no adjoint); use endpoint balls or halfspaces");
  if (int(x.size()) != pair.dim) throw config_error("minimize_rate: wrong initial dimension");

  const int nvar = grid.steps * pair.noise_dim;
  RateResult best = run_penalized(triple, pair, event, x, grid, cfg, Vec::Zero(nvar));
  NoiseStream rng(cfg.seed, "mam.restart", 0);
  std::uint64_t draw = 0;
  for (int k = 0; k < cfg.restarts; ++k) {
    Vec z0(nvar);
    for (int i = 0; i < nvar; ++i) z0[i] = rng.gaussian(draw++);
    RateResult cand = run_penalized(triple, pair, event, x, grid, cfg, std::move(z0));
    bool better = (cand.feasible && !best.feasible) ||
                  (cand.feasible == best.feasible &&
                   (cand.feasible ? cand.value < best.value
                                  : cand.constraint_violation < best.constraint_violation));
    if (better) best = std::move(cand);
  }
  return best;
}

RateResult minimize_endpoint_cost(const SpectralTriple& triple, const CoefficientPair& pair,
                                  const std::function<double(const Vec&)>& cost,
                                  const std::function<Vec(const Vec&)>& cost_grad, const Vec& x,
                                  const TimeGrid& grid, const OptimizerConfig& cfg) {
  if (!cost || !cost_grad) throw config_error("minimize_endpoint_cost: missing cost callbacks");
  Control shape(grid, pair.noise_dim);
  Objective obj{pair, shape, x, cost, cost_grad, cfg.guard};
  RateResult res;
  LbfgsOutcome out =
      lbfgs_minimize(obj, Vec::Zero(grid.steps * pair.noise_dim), cfg, 0, 0.0, &res.trace);
  res.control = obj.unflatten(out.z);
  res.value = res.control.action();
  res.objective = out.objective;
  res.converged = out.converged;
  res.feasible = true;
  res.constraint_violation = 0.0;
  Trajectory u = forward_controlled(pair, res.control, x, cfg.guard);
  res.cert_mr = u.mr_norm(triple);
  return res;
}

// ---- probes --------------------------------------------------------------------

WeakContinuityReport weak_continuity_probe(const SpectralTriple& triple,
                                           const CoefficientPair& pair, const Control& psi,
                                           const Vec& x, const std::vector<int>& n_list,
                                           double amplitude, int e_dir) {
  if (n_list.empty()) throw config_error("weak_continuity_probe: empty n_list");
  if (e_dir < 0 || e_dir >= pair.noise_dim)
    throw config_error("weak_continuity_probe: oscillation direction out of range");
  SkeletonResult base = solve_skeleton(triple, pair, x, psi);
  if (!base.converged)
    throw convergence_error("weak_continuity_probe: base solve failed: " + base.message);

  WeakContinuityReport rep;
  const TimeGrid& grid = psi.grid;
  for (int n : n_list) {
    Control osc = psi;
    for (int i = 0; i < grid.steps; ++i) {
      double tmid = grid.node(i) + 0.5 * grid.dt();
      osc.cells(i, e_dir) += amplitude * std::sin(2.0 * M_PI * n * tmid);
    }
    SkeletonResult pert = solve_skeleton(triple, pair, x, osc);
    if (!pert.converged)
      throw convergence_error("weak_continuity_probe: perturbed solve failed: " + pert.message);
    rep.n_values.push_back(n);
    rep.distances.push_back(Trajectory::mr_distance(pert.u, base.u, triple));
  }
  auto mn = std::min_element(rep.n_values.begin(), rep.n_values.end());
  auto mx = std::max_element(rep.n_values.begin(), rep.n_values.end());
  double d_min_n = rep.distances[std::size_t(mn - rep.n_values.begin())];
  double d_max_n = rep.distances[std::size_t(mx - rep.n_values.begin())];
  rep.ratio = d_min_n > 0 ? d_max_n / d_min_n : 0.0;
  return rep;
}

SublevelReport sublevel_sample(const SpectralTriple& triple, const CoefficientPair& pair,
                               double K, const Vec& x, const TimeGrid& grid, int n_controls,
                               std::uint64_t seed) {
  if (K < 0) throw config_error("sublevel_sample: K must be >= 0");
  if (n_controls < 1) throw config_error("sublevel_sample: need n_controls >= 1");
  SublevelReport rep;
  rep.n_controls = n_controls;
  rep.min_margin = std::numeric_limits<double>::infinity();
  std::vector<Trajectory> sols;
  for (int c = 0; c < n_controls; ++c) {
    Control psi(grid, pair.noise_dim);
    if (K > 0) {
      NoiseStream rng(seed, "sublevel", std::uint64_t(c));
      std::uint64_t draw = 0;
      for (int i = 0; i < grid.steps; ++i)
        for (int j = 0; j < pair.noise_dim; ++j) psi.cells(i, j) = rng.gaussian(draw++);
      psi.cells *= std::sqrt(2.0 * K / psi.l2_norm_sq());  // onto 1/2||psi||^2 = K
    }
    SkeletonResult sol = solve_skeleton(triple, pair, x, psi);
    if (!sol.converged)
      throw convergence_error("sublevel_sample: skeleton solve failed: " + sol.message);
    rep.mr_norms.push_back(sol.u.mr_norm(triple));
    rep.min_margin =
        std::min(rep.min_margin, verify_global_bound(triple, pair, sol.u, psi, x).margin);
    sols.push_back(std::move(sol.u));
  }
  auto [mn, mx] = std::minmax_element(rep.mr_norms.begin(), rep.mr_norms.end());
  rep.spread = *mx - *mn;
  for (std::size_t i = 0; i < sols.size(); ++i)
    for (std::size_t j = i + 1; j < sols.size(); ++j)
      rep.max_pairwise =
          std::max(rep.max_pairwise, Trajectory::mr_distance(sols[i], sols[j], triple));
  return rep;
}

}  // namespace ldpkit
