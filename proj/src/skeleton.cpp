#include "ldpkit/skeleton.hpp"

#include <cmath>
#include <sstream>

#include "ldpkit/util.hpp"

namespace ldpkit {

Trajectory solve_linearized(const CoefficientPair& pair,
                            const std::function<const Vec&(int node)>& w, const Control& psi,
                            const std::function<Vec(int node)>& fbar,
                            const std::function<Mat(int node)>& gbar, const Vec& x,
                            int first_node, int cells, double guard) {
  const TimeGrid& grid = psi.grid;
  double dt = grid.dt();
  TimeGrid sub{dt * cells, cells};
  Trajectory u(sub, pair.dim);
  u.state(0) = x;
  for (int j = 0; j < cells; ++j) {
    int c = first_node + j;
    double t = grid.node(c);
    const Vec& wj = w(j);
    const Vec& uj = u.state(j);
    Vec psi_c = psi.cell(c);
    Vec rhs = uj + dt * (pair.eval_B0(t, wj, uj) * psi_c);
    if (fbar) rhs += dt * fbar(j);
    if (gbar) rhs += dt * (gbar(j) * psi_c);
    u.state(j + 1) = pair.A0(t, wj).solve_shifted(dt, rhs);
    if (!(u.state(j + 1).norm() < guard))
      throw convergence_error("linearized solve: H-norm exceeded the blow-up guard at t=" +
                              std::to_string(grid.node(c + 1)));
  }
  return u;
}

Trajectory solve_linearized(const CoefficientPair& pair, const Vec& w_const, const Control& psi,
                            const std::function<Vec(double t)>& fbar,
                            const std::function<Mat(double t)>& gbar, const Vec& x) {
  const TimeGrid& grid = psi.grid;
  std::function<Vec(int)> fb = nullptr;
  std::function<Mat(int)> gb = nullptr;
  if (fbar) fb = [&](int j) { return fbar(grid.node(j)); };
  if (gbar) gb = [&](int j) { return gbar(grid.node(j)); };
  return solve_linearized(
      pair, [&](int) -> const Vec& { return w_const; }, psi, fb, gb, x, 0, grid.steps);
}

namespace {

// MR distance between two window iterates (node arrays of equal layout).
double window_mr_diff(const std::vector<Vec>& a, const std::vector<Vec>& b,
                      const SpectralTriple& triple, double dt) {
  double sup = 0.0;
  std::vector<double> sq(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    Vec d = a[i] - b[i];
    sup = std::max(sup, d.norm());
    double nv = triple.norm(d, Space::V);
    sq[i] = nv * nv;
  }
  return sup + std::sqrt(trapezoid(sq, dt));
}

std::vector<Vec> to_states(const Trajectory& t) {
  std::vector<Vec> s(std::size_t(t.nodes()));
  for (int i = 0; i < t.nodes(); ++i) s[std::size_t(i)] = t.state(i);
  return s;
}

}  // namespace

SkeletonResult solve_skeleton(const SpectralTriple& triple, const CoefficientPair& pair,
                              const Vec& x, const Control& psi, const SkeletonOptions& opts) {
  const TimeGrid& grid = psi.grid;
  const int N = grid.steps;
  const double dt = grid.dt();

  SkeletonResult res;
  res.u = Trajectory(grid, pair.dim);
  res.u.state(0) = x;

  int i0 = 0;
  int window = N;

  while (i0 < N) {
    int cells = std::min(window, N - i0);
    int i1 = i0 + cells;
    const Vec u0 = res.u.state(i0);
    if (!(u0.norm() < opts.guard)) {
      res.message = "blow-up: window initial datum exceeds guard at node " + std::to_string(i0);
      return res;
    }

    // Reference solution z from the frozen homogeneous problem seeds the iteration.
    auto w_const = [&](int) -> const Vec& { return u0; };
    bool window_failed = false;
    std::string failure_reason;
    std::vector<Vec> v;
    WindowReport report;
    report.first_node = i0;
    report.last_node = i1;

    try {
      v = to_states(solve_linearized(pair, w_const, psi, nullptr, nullptr, u0, i0, cells,
                                     opts.guard));
    } catch (const convergence_error& e) {
      window_failed = true;
      failure_reason = e.what();
    }

    double prev_diff = -1.0;
    if (!window_failed) {
      for (int k = 1; k <= opts.max_iterations; ++k) {
        // Frozen-coefficient right-hand sides evaluated on the previous iterate.
        auto ftilde = [&](int j) -> Vec {
          double t = grid.node(i0 + j);
          const Vec& vj = v[std::size_t(j)];
          Vec out = pair.A0(t, u0).apply(vj) - pair.A0(t, vj).apply(vj);
          if (pair.F) out += pair.F(t, vj);
          if (pair.f) out += pair.f(t);
          return out;
        };
        auto gtilde = [&](int j) -> Mat {
          double t = grid.node(i0 + j);
          const Vec& vj = v[std::size_t(j)];
          Mat out = pair.eval_B0(t, u0, vj) - pair.eval_B0(t, vj, vj);
          if (pair.G) out += pair.G(t, vj);
          if (pair.g) out += pair.g(t);
          return out;
        };
        std::vector<Vec> next;
        try {
          next = to_states(solve_linearized(pair, w_const, psi, ftilde, gtilde, u0, i0, cells,
                                            opts.guard));
        } catch (const convergence_error& e) {
          window_failed = true;
          failure_reason = e.what();
          break;
        }
        double diff = window_mr_diff(next, v, triple, dt);
        report.iterations = k;
        report.final_diff = diff;
        res.total_iterations++;

        double scale = 0.0;
        for (const auto& s : next) scale = std::max(scale, s.norm());
        double noise_floor = std::max(10.0 * opts.tol, 1e-13 * (1.0 + scale));
        if (prev_diff > noise_floor) {
          double ratio = diff / prev_diff;
          report.max_contraction = std::max(report.max_contraction, ratio);
          if (ratio > opts.contraction_cap) {
            window_failed = true;
            failure_reason = "measured contraction factor " + std::to_string(ratio) +
                             " above cap on window [" + std::to_string(i0) + "," +
                             std::to_string(i1) + "]";
          }
        }
        v = std::move(next);
        if (window_failed) break;
        if (diff <= opts.tol) break;
        if (k == opts.max_iterations) {
          window_failed = true;
          failure_reason = "fixed-point iteration budget exhausted on window [" +
                           std::to_string(i0) + "," + std::to_string(i1) + "]";
        }
        prev_diff = diff;
      }
    }

    if (window_failed) {
      if (cells == 1) {
        res.message = "skeleton solve failed at the minimal window: " + failure_reason;
        return res;
      }
      window = std::max(1, cells / 2);
      continue;
    }

    for (int j = 0; j <= cells; ++j) res.u.state(i0 + j) = v[std::size_t(j)];
    res.windows.push_back(report);
    i0 = i1;
    window = std::min(window * 2, std::max(1, N - i0));
  }

  res.converged = true;
  return res;
}

ResidualReport residual(const SpectralTriple& triple, const CoefficientPair& pair,
                        const Trajectory& u, const Control& psi, const Vec& x) {
  const TimeGrid& grid = u.grid();
  const int N = grid.steps;
  const double dt = grid.dt();
  ResidualReport rep;
  rep.profile.resize(std::size_t(N) + 1, 0.0);

  // Node values of the integrand -A(t,u) + B(t,u)psi (control extended to t_N).
  std::vector<Vec> integrand(std::size_t(N) + 1);
  for (int i = 0; i <= N; ++i) {
    double t = grid.node(i);
    const Vec& ui = u.state(i);
    Vec psi_i = psi.cell(std::min(i, N - 1));
    integrand[std::size_t(i)] = -pair.drift(t, ui) + pair.noise_matrix(t, ui) * psi_i;
  }

  Vec acc = Vec::Zero(pair.dim);  // trapezoidal running integral
  rep.profile[0] = triple.norm(u.state(0) - x, Space::Vstar);
  rep.max_defect = rep.profile[0];
  for (int i = 1; i <= N; ++i) {
    acc += 0.5 * dt * (integrand[std::size_t(i - 1)] + integrand[std::size_t(i)]);
    double d = triple.norm(u.state(i) - x - acc, Space::Vstar);
    rep.profile[std::size_t(i)] = d;
    rep.max_defect = std::max(rep.max_defect, d);
  }
  return rep;
}

GlobalBoundReport verify_global_bound(const SpectralTriple& triple, const CoefficientPair& pair,
                                      const Trajectory& u, const Control& psi, const Vec& x) {
  if (!(pair.theta > 0)) throw config_error("verify_global_bound: declared theta must be > 0");
  GlobalBoundReport rep;
  double phi_l2 = pair.phi_l2(u.grid().T);
  rep.bound = std::sqrt(2.0 + 1.0 / pair.theta) * (x.norm() + std::sqrt(2.0) * phi_l2) *
              std::exp(pair.bigM * u.grid().T + 0.5 * psi.l2_norm_sq());
  rep.mr = u.mr_norm(triple);
  rep.margin = rep.bound - rep.mr;
  return rep;
}

}  // namespace ldpkit
