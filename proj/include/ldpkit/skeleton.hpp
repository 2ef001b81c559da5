#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ldpkit/coeffs.hpp"
#include "ldpkit/grid.hpp"

namespace ldpkit {

// Semi-implicit Euler for the linear(ized) problem
//   u' + A0(t, w(t))u - B0(t, w(t))u psi(t) = fbar(t) + gbar(t) psi(t),  u(0) = x:
//   (I + dt A0(t_i, w_i)) u_{i+1} = u_i + dt (B0(t_i,w_i)u_i psi_i + fbar_i + gbar_i psi_i).
// w, fbar, gbar are node-indexed callbacks (null fbar/gbar mean zero). Operates
// on the node subrange [first_node, first_node+cells] of the control's grid.
Trajectory solve_linearized(const CoefficientPair& pair,
                            const std::function<const Vec&(int node)>& w,
                            const Control& psi,
                            const std::function<Vec(int node)>& fbar,
                            const std::function<Mat(int node)>& gbar, const Vec& x,
                            int first_node, int cells, double guard = 1e8);

// Convenience overload over the whole grid with a constant freeze state.
Trajectory solve_linearized(const CoefficientPair& pair, const Vec& w_const, const Control& psi,
                            const std::function<Vec(double t)>& fbar,
                            const std::function<Mat(double t)>& gbar, const Vec& x);

struct SkeletonOptions {
  double tol = 1e-8;            // successive-iterate MR distance
  int max_iterations = 64;      // per window
  double contraction_cap = 0.5; // measured factor above this shrinks the window
  double guard = 1e8;           // H-norm blow-up guard
};

struct WindowReport {
  int first_node = 0, last_node = 0;
  int iterations = 0;
  double max_contraction = 0.0;  // largest measured d_k/d_{k-1}
  double final_diff = 0.0;
};

struct SkeletonResult {
  Trajectory u;
  bool converged = false;
  int total_iterations = 0;
  std::vector<WindowReport> windows;
  std::string message;
};

// Skeleton equation (u^psi)' = -A(t,u^psi) + B(t,u^psi)psi via the
// linearize-and-contract construction: freeze the quasilinear parts at the
// window's initial datum u0, seed with the homogeneous reference solution
// z: z' + A0(u0)z - B0(u0)z psi = 0, and iterate v -> u solving
//   u' + A0(u0)u - B0(u0)u psi = ftilde(v) + gtilde(v) psi,
//   ftilde(v) = (A0(u0)-A0(v))v + F(v) + f,  gtilde(v) = (B0(u0)-B0(v))v + G(v) + g.
// Windows start at the full interval, halve while the measured contraction
// factor exceeds the cap (or iterations run out), and double again after each
// accepted window.
SkeletonResult solve_skeleton(const SpectralTriple& triple, const CoefficientPair& pair,
                              const Vec& x, const Control& psi,
                              const SkeletonOptions& opts = {});

// Defect of the integrated equation in V*:
//   d_i = || u(t_i) - x + int_0^{t_i} A(s,u) ds - int_0^{t_i} B(s,u)psi ds ||_{V*}
// with trapezoidal quadrature (the control is extended to the last node by its
// final cell value). First-order in dt on solver output.
struct ResidualReport {
  std::vector<double> profile;  // per node
  double max_defect = 0.0;
};
ResidualReport residual(const SpectralTriple& triple, const CoefficientPair& pair,
                        const Trajectory& u, const Control& psi, const Vec& x);

// A-priori maximal-regularity estimate for the full skeleton solution:
//   ||u||_MR <= (2 + 1/theta)^{1/2} (||x||_H + sqrt(2)||phi||_{L2(0,T)})
//               * exp(M T + 1/2 ||psi||^2_{L2(0,T;U)}).
struct GlobalBoundReport {
  double bound = 0.0;
  double mr = 0.0;
  double margin = 0.0;  // bound - mr; negative => violation
};
GlobalBoundReport verify_global_bound(const SpectralTriple& triple, const CoefficientPair& pair,
                                      const Trajectory& u, const Control& psi, const Vec& x);

}  // namespace ldpkit
