#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ldpkit/coeffs.hpp"
#include "ldpkit/grid.hpp"
#include "ldpkit/skeleton.hpp"

namespace ldpkit {

// Target events instantiate the open/closed sets whose probabilities the LDP
// bounds. Balls and halfspaces act on the endpoint u(T) in H and support the
// exact adjoint; path-functional events are membership-only (sampling).
struct TargetEvent {
  enum class Kind { EndpointBall, EndpointHalfspace, PathFunctional };
  Kind kind = Kind::EndpointBall;

  Vec center;           // ball: ||u(T) - center||_H <= radius
  double radius = 0.0;
  Vec direction;        // halfspace: <direction, u(T)> >= level
  double level = 0.0;
  std::function<double(const Trajectory&)> functional;  // <= 0 inside the event

  static TargetEvent endpoint_ball(Vec z, double delta);
  static TargetEvent endpoint_halfspace(Vec d, double level);
  static TargetEvent path_functional(std::function<double(const Trajectory&)> violation);

  // Distance-to-event (0 inside; the quadratic penalty squares this).
  double violation_of(const Trajectory& u) const;
  bool contains(const Trajectory& u) const { return violation_of(u) <= 0.0; }
  // Endpoint-event variant usable on summary statistics (no stored path).
  double endpoint_violation(const Vec& end) const;
};

// Direct semi-implicit pass for the controlled deterministic equation
//   (I + dt A0(t_i,u_i)) u_{i+1} = u_i + dt(F_i + f_i) + dt B(t_i,u_i) psi_i —
// the same scheme as simulate() at eps = 0, and (for semilinear pairs) the
// fixed point of the skeleton iteration, so its discrete adjoint is exact.
Trajectory forward_controlled(const CoefficientPair& pair, const Control& psi, const Vec& x,
                              double guard = 1e8);

// I along an explicit control: (1/2||psi||^2_{L2(0,T;U)}, u^psi from the
// skeleton solver). Solve failures propagate.
struct RateAlong {
  double value = 0.0;
  SkeletonResult skeleton;
};
RateAlong rate_along(const SpectralTriple& triple, const CoefficientPair& pair,
                     const Control& psi, const Vec& x, const SkeletonOptions& opts = {});

// Gradient of 1/2||psi||^2 + phi(u_N(psi)) w.r.t. the control cells through
// the semi-implicit scheme (backward adjoint recursion; finite-difference
// fallback for quasilinear pairs). endpoint_grad = grad phi at u_N.
Mat adjoint_gradient(const CoefficientPair& pair, const Control& psi, const Vec& x,
                     const std::function<double(const Vec&)>& endpoint_cost,
                     const std::function<Vec(const Vec&)>& endpoint_grad);

struct OptimizerConfig {
  int max_iterations = 400;    // per penalty stage
  double grad_tol = 1e-8;      // relative to the stage's initial gradient
  double penalty0 = 10.0;      // quadratic penalty weight, x10 per stage
  int penalty_stages = 4;
  double constraint_tol = 1e-3;
  int restarts = 0;            // extra random starts (best result kept)
  std::uint64_t seed = 7;
  int memory = 10;             // L-BFGS history
  double guard = 1e8;
};

struct TraceRow {
  int stage = 0;
  int iteration = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double penalty = 0.0;
};

struct RateResult {
  double value = std::numeric_limits<double>::infinity();  // 1/2 action(control)
  double objective = std::numeric_limits<double>::infinity();  // incl. cost term
  Control control;
  double constraint_violation = std::numeric_limits<double>::infinity();
  bool feasible = false;   // violation <= constraint_tol
  bool converged = false;  // optimizer met its gradient tolerance
  std::vector<TraceRow> trace;
  double cert_mr = 0.0;             // MR norm of u^psi at the minimizer
  double cert_endpoint_dist = 0.0;  // leftover violation, same as above for balls
  std::string message;

  double value_or_infinity() const {
    return feasible ? value : std::numeric_limits<double>::infinity();
  }
};

// Minimum action method: minimize 1/2 action + penalty * violation^2 over
// piecewise-constant controls, L-BFGS with the adjoint gradient, penalty
// continuation until the violation passes constraint_tol.
RateResult minimize_rate(const SpectralTriple& triple, const CoefficientPair& pair,
                         const TargetEvent& event, const Vec& x, const TimeGrid& grid,
                         const OptimizerConfig& cfg = {});

// Same machinery for inf_z (I(z) + h(z(T))) with smooth endpoint cost h —
// the Laplace-principle reference value. No penalty continuation (one stage).
RateResult minimize_endpoint_cost(const SpectralTriple& triple, const CoefficientPair& pair,
                                  const std::function<double(const Vec&)>& cost,
                                  const std::function<Vec(const Vec&)>& cost_grad, const Vec& x,
                                  const TimeGrid& grid, const OptimizerConfig& cfg = {});

// Weak-continuity probe: psi_n = psi + amplitude*sin(2 pi n t) e_dir converges
// weakly (not strongly) to psi; reports ||u^{psi_n} - u^psi||_MR per n.
struct WeakContinuityReport {
  std::vector<int> n_values;
  std::vector<double> distances;
  double ratio = 0.0;  // distance at max n / distance at min n
};
WeakContinuityReport weak_continuity_probe(const SpectralTriple& triple,
                                           const CoefficientPair& pair, const Control& psi,
                                           const Vec& x, const std::vector<int>& n_list,
                                           double amplitude = 1.0, int e_dir = 0);

// Sublevel-set diagnostic: sample controls on the action sphere 1/2||psi||^2 = K,
// report the MR spread of u^psi, max pairwise MR distance, and the worst
// a-priori-bound margin (batch certificate). No compactness claim.
struct SublevelReport {
  std::vector<double> mr_norms;
  double spread = 0.0;        // max - min MR norm
  double max_pairwise = 0.0;  // max over pairs of MR distance
  double min_margin = 0.0;    // worst verify_global_bound margin
  int n_controls = 0;
};
SublevelReport sublevel_sample(const SpectralTriple& triple, const CoefficientPair& pair,
                               double K, const Vec& x, const TimeGrid& grid, int n_controls,
                               std::uint64_t seed = 11);

}  // namespace ldpkit
