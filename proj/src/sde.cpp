#include "ldpkit/sde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "ldpkit/rng.hpp"
#include "ldpkit/util.hpp"

namespace ldpkit {

int PathEnsemble::exploded_count() const {
  int n = 0;
  for (const auto& s : stats)
    if (s.exploded) ++n;
  return n;
}

namespace {

// One path; the trajectory buffer is reused across the worker's paths.
void run_path(const SpectralTriple& triple, const CoefficientPair& pair, double epsilon,
              const Vec& x, const TimeGrid& grid, const SimOptions& opts, int k_u,
              std::uint64_t path, Trajectory& traj, PathStats& out) {
  const int steps = grid.steps;
  const double dt = grid.dt();
  const double sqeps = std::sqrt(epsilon);
  const double sqdt = std::sqrt(dt);
  const int K = pair.noise_dim;
  NoiseStream rng(opts.noise.seed, "sde.path", path);

  traj.state(0) = x;
  out = PathStats{};
  double defect_run = 0.0;  // running right-hand side minus ||X_i||^2 bookkeeping
  double ito_sum = 0.0;     // 2 sum <v_i,X_i> dt + eps sum |||B_i|||^2 dt + martingale
  const double x2 = x.squaredNorm();

  Vec dw = Vec::Zero(K);
  int i = 0;
  for (; i < steps; ++i) {
    const double t = grid.node(i);
    const Vec& xi = traj.state(i);
    Mat b = pair.noise_matrix(t, xi);
    Vec rhs = xi;
    Vec drift_lower = Vec::Zero(xi.size());
    if (pair.F) drift_lower += pair.F(t, xi);
    if (pair.f) drift_lower += pair.f(t);
    rhs += dt * drift_lower;
    Vec bpsi;
    if (opts.control) {
      bpsi = b * opts.control->cell(i);
      rhs += dt * bpsi;
    }
    if (epsilon > 0.0) {
      for (int j = 0; j < k_u; ++j) dw[j] = sqdt * rng.gaussian(std::uint64_t(i) * K + j);
      rhs += sqeps * (b * dw);
    }

    LinearOp op = pair.A0(t, xi);

    // Ito bookkeeping at the left endpoint (unbiased martingale sums).
    Vec vi = -op.apply(xi) + drift_lower;
    if (opts.control) vi += bpsi;
    ito_sum += 2.0 * vi.dot(xi) * dt;
    if (epsilon > 0.0) {
      ito_sum += epsilon * b.leftCols(k_u).squaredNorm() * dt;
      ito_sum += 2.0 * sqeps * xi.dot(b * dw);
    }

    traj.state(i + 1) = op.solve_shifted(dt, rhs);
    double d = traj.state(i + 1).squaredNorm() - x2 - ito_sum;
    defect_run = std::max(defect_run, std::fabs(d));
    out.ito_defect = d;

    if (!traj.state(i + 1).allFinite() || traj.state(i + 1).norm() >= opts.guard) {
      out.exploded = true;
      if (!traj.state(i + 1).allFinite()) traj.state(i + 1) = traj.state(i);
      for (int r = i + 2; r <= steps; ++r) traj.state(r) = traj.state(i + 1);
      break;
    }
  }
  out.ito_defect_sup = defect_run;

  out.endpoint = traj.state(steps);
  out.sup_h = traj.sup_h();
  out.l2_v = traj.l2_v(triple);
  out.mr_norm = out.sup_h + out.l2_v;
  if (opts.reference) {
    out.dev_sup_h = Trajectory::sup_h_distance(traj, *opts.reference);
    out.dev_mr = Trajectory::mr_distance(traj, *opts.reference, triple);
  }
  if (opts.functional) out.functional = opts.functional(traj);
}

}  // namespace

PathEnsemble simulate(const SpectralTriple& triple, const CoefficientPair& pair, double epsilon,
                      const Vec& x, const TimeGrid& grid, const SimOptions& opts) {
  if (epsilon < 0.0) throw config_error("simulate: epsilon must be >= 0");
  if (opts.n_paths < 1) throw config_error("simulate: n_paths must be >= 1");
  if (int(x.size()) != pair.dim) throw config_error("simulate: initial datum has wrong dimension");
  if (opts.control) {
    if (opts.control->grid.steps != grid.steps)
      throw config_error("simulate: control grid does not match the simulation grid");
    if (opts.control->noise_dim() != pair.noise_dim)
      throw config_error("simulate: control noise dimension does not match the pair");
  }
  if (opts.reference && opts.reference->grid().steps != grid.steps)
    throw config_error("simulate: reference grid does not match the simulation grid");

  int k_u = opts.noise.k_u < 0 ? pair.noise_dim : std::min(opts.noise.k_u, pair.noise_dim);
  if (opts.noise.k_u == 0) k_u = 0;

  PathEnsemble ens;
  ens.grid = grid;
  ens.epsilon = epsilon;
  ens.seed = opts.noise.seed;
  ens.k_u = k_u;
  ens.controlled = opts.control != nullptr;
  ens.control_l2 = opts.control ? opts.control->l2_norm() : 0.0;
  ens.stats.resize(std::size_t(opts.n_paths));
  if (opts.store_paths) ens.paths.resize(std::size_t(opts.n_paths));

  int n_threads = opts.threads > 0 ? opts.threads : int(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, opts.n_paths));

  std::atomic<int> next{0};
  auto worker = [&]() {
    Trajectory traj(grid, pair.dim);
    for (;;) {
      int p = next.fetch_add(1);
      if (p >= opts.n_paths) break;
      run_path(triple, pair, epsilon, x, grid, opts, k_u, std::uint64_t(p), traj,
               ens.stats[std::size_t(p)]);
      if (opts.store_paths) ens.paths[std::size_t(p)] = traj;
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return ens;
}

ItoCheckReport ito_identity_check(const PathEnsemble& ensemble) {
  ItoCheckReport rep;
  double sum = 0.0, sumsq = 0.0, rms = 0.0;
  for (const auto& s : ensemble.stats) {
    if (s.exploded) {
      ++rep.n_excluded;
      continue;
    }
    ++rep.n_paths;
    rep.max_defect = std::max(rep.max_defect, s.ito_defect_sup);
    rms += s.ito_defect_sup * s.ito_defect_sup;
    sum += s.ito_defect;
    sumsq += s.ito_defect * s.ito_defect;
  }
  if (rep.n_paths > 0) {
    rep.rms_defect = std::sqrt(rms / rep.n_paths);
    rep.mean_defect = sum / rep.n_paths;
    if (rep.n_paths > 1) {
      double var = (sumsq - sum * sum / rep.n_paths) / (rep.n_paths - 1);
      rep.se_mean = std::sqrt(std::max(0.0, var) / rep.n_paths);
    }
  }
  return rep;
}

ItoOrderReport ito_order_study(const SpectralTriple& triple, const CoefficientPair& pair,
                               double epsilon, const Vec& x, double T,
                               const std::vector<int>& steps_list, const SimOptions& opts) {
  if (steps_list.size() < 2) throw config_error("ito_order_study: need at least two step counts");
  ItoOrderReport rep;
  std::vector<double> logn, logrms, logmax;
  for (int n : steps_list) {
    TimeGrid grid(T, n);
    PathEnsemble ens = simulate(triple, pair, epsilon, x, grid, opts);
    ItoCheckReport r = ito_identity_check(ens);
    rep.steps.push_back(n);
    rep.reports.push_back(r);
    if (r.rms_defect > 0.0 && r.max_defect > 0.0) {
      logn.push_back(std::log(double(n)));
      logrms.push_back(std::log(r.rms_defect));
      logmax.push_back(std::log(r.max_defect));
    }
  }
  if (logn.size() >= 2) {
    rep.order_rms = -fit_line(logn, logrms).slope;
    rep.order_max = -fit_line(logn, logmax).slope;
  }
  return rep;
}

TightnessReport tightness_probe(const PathEnsemble& ensemble, const SpectralTriple& triple,
                                const CoefficientPair& pair, const Vec& x,
                                const std::vector<double>& gammas) {
  (void)triple;
  if (ensemble.stats.empty()) throw config_error("tightness_probe: empty ensemble");
  TightnessReport rep;
  const double T = ensemble.grid.T;
  const double theta = pair.theta;
  const double kbound = ensemble.control_l2;
  const double phil2 = pair.phi_l2(T);
  rep.envelope_c = 4.0 / std::min(1.0, 2.0 * theta) *
                   std::exp(2.0 * pair.bigM * T + 4.0 * kbound * kbound) *
                   (x.squaredNorm() + 2.0 * phil2 * phil2);
  const int n = int(ensemble.stats.size());
  for (double gamma : gammas) {
    TightnessRow row;
    row.gamma = gamma;
    for (const auto& s : ensemble.stats)
      if (s.exploded || s.mr_norm > gamma) ++row.exceed;  // explosions count against us
    row.p_hat = double(row.exceed) / n;
    WilsonInterval ci = wilson_interval(row.exceed, n);
    row.wilson_lo = ci.lo;
    row.wilson_hi = ci.hi;
    row.bound = std::min(1.0, rep.envelope_c / (gamma * gamma));
    row.ok = row.wilson_hi <= row.bound + 1e-12;
    rep.all_ok = rep.all_ok && row.ok;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace ldpkit
