#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ldpkit/coeffs.hpp"
#include "ldpkit/grid.hpp"

namespace ldpkit {

// Truncated cylindrical noise: the first k_u coordinates of U = R^K carry
// independent Brownian increments Normal(0, dt); the rest are frozen at zero.
struct NoiseConfig {
  int k_u = -1;  // retained noise modes; -1 = all noise_dim columns
  std::uint64_t seed = 1;
};

// Per-path summary kept for every path (full states only behind store_paths,
// so large ensembles stay O(n_paths) in memory).
struct PathStats {
  Vec endpoint;
  double sup_h = 0.0;
  double l2_v = 0.0;
  double mr_norm = 0.0;
  double dev_sup_h = 0.0;  // sup-H / MR distance to the reference trajectory,
  double dev_mr = 0.0;     // when one was supplied
  double ito_defect = 0.0;      // signed defect of the squared-norm identity at T
  double ito_defect_sup = 0.0;  // sup over nodes of the running |defect|
  double functional = 0.0;      // h(path) when a functional was supplied
  bool exploded = false;
};

struct SimOptions {
  int n_paths = 1;
  NoiseConfig noise;
  const Control* control = nullptr;       // controlled equation X^eps when set
  const Trajectory* reference = nullptr;  // deviations reported against this
  std::function<double(const Trajectory&)> functional;  // optional h(path)
  bool store_paths = false;
  double guard = 1e8;  // H-norm blow-up guard; trips flag the path, not the run
  int threads = 0;     // 0 = hardware concurrency
};

struct PathEnsemble {
  TimeGrid grid;
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  int k_u = 0;
  bool controlled = false;
  double control_l2 = 0.0;  // ||psi||_{L2(0,T;U)} of the applied control
  std::vector<PathStats> stats;
  std::vector<Trajectory> paths;  // only when store_paths

  int exploded_count() const;
};

// Semi-implicit Euler-Maruyama for dX = -A(t,X)dt + B(t,X)psi dt + sqrt(eps) B(t,X)dW:
//   (I + dt A0(t_i, X_i)) X_{i+1} = X_i + dt(F_i + f_i) + dt B_i psi_i + sqrt(eps) B_i dW_i,
// the same scheme as the skeleton solver so the eps = 0 controlled run is
// node-comparable with solve_skeleton. Paths use disjoint counter-based RNG
// substreams: a batch of n paths is bit-identical to n single-path runs.
PathEnsemble simulate(const SpectralTriple& triple, const CoefficientPair& pair, double epsilon,
                      const Vec& x, const TimeGrid& grid, const SimOptions& opts = {});

// Aggregates of the discrete squared-norm (Ito) identity
//   ||X_N||^2 = ||x||^2 + 2 sum <v_i, X_i> dt + eps sum |||B_i|||^2 dt
//               + 2 sqrt(eps) sum <X_i, B_i dW_i>
// whose per-path defects simulate() already recorded. Exploded paths are
// excluded and counted.
struct ItoCheckReport {
  double max_defect = 0.0;   // max over paths of the sup-over-nodes defect
  double rms_defect = 0.0;   // rms over paths of the sup-over-nodes defect
  double mean_defect = 0.0;  // ensemble mean of the signed final-time defect
  double se_mean = 0.0;      // its standard error (martingale parts are mean
                             // zero; the Riemann parts leave an O(dt) bias)
  int n_paths = 0;
  int n_excluded = 0;
};
ItoCheckReport ito_identity_check(const PathEnsemble& ensemble);

// N-doubling study: same horizon and seed, steps from steps_list; the defect
// should decay at order >= 0.5 in dt (fits on log defect vs log steps).
struct ItoOrderReport {
  std::vector<int> steps;
  std::vector<ItoCheckReport> reports;
  double order_rms = 0.0;
  double order_max = 0.0;
};
ItoOrderReport ito_order_study(const SpectralTriple& triple, const CoefficientPair& pair,
                               double epsilon, const Vec& x, double T,
                               const std::vector<int>& steps_list, const SimOptions& opts);

// Empirical check of the tightness envelope sup_eps P(||X^eps||_MR > gamma) <= C/gamma^2
// with the explicit constant
//   C = 4/(1 min 2 theta) * exp(2 M T + 4 K^2) * (||x||_H^2 + 2||phi||_{L2}^2),
// K = L2 bound of the control family (0 uncontrolled). Wilson intervals; a row
// passes when the upper confidence bound stays below the envelope (capped at 1).
struct TightnessRow {
  double gamma = 0.0;
  int exceed = 0;
  double p_hat = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  double bound = 0.0;
  bool ok = true;
};
struct TightnessReport {
  double envelope_c = 0.0;
  std::vector<TightnessRow> rows;
  bool all_ok = true;
};
TightnessReport tightness_probe(const PathEnsemble& ensemble, const SpectralTriple& triple,
                                const CoefficientPair& pair, const Vec& x,
                                const std::vector<double>& gammas);

}  // namespace ldpkit
