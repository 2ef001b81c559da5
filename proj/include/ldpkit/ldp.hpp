#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ldpkit/action.hpp"
#include "ldpkit/sde.hpp"

namespace ldpkit {

// ---- LDP slope: -eps log P(Y^eps in E) vs the minimized rate ---------------------

struct EpsilonRow {
  double epsilon = 0.0;
  int hits = 0;
  int n_paths = 0;
  int exploded = 0;
  double p_hat = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 0.0;
  double neg_eps_log_p = 0.0;  // -eps log p_hat (only when usable)
  double sigma = 0.0;          // delta-method sd of -eps log p_hat
  bool usable = false;         // hits > 0
};

// Asymptotic fit -eps log p = I + c*eps; an LDP is a small-eps statement, so
// the prefactor is absorbed into the intercept correction c.
struct RateFit {
  double rate = 0.0;       // I
  double prefactor = 0.0;  // c
  double sigma = 0.0;      // propagated sd of I
  int points_used = 0;
};

// Weighted least squares for y = I + c*eps (weights 1/sigma^2 when sigmas are
// given and positive, else uniform). Needs >= 2 points.
RateFit fit_rate_intercept(const std::vector<double>& eps, const std::vector<double>& y,
                           const std::vector<double>* sigmas = nullptr);

struct SlopeReport {
  std::vector<EpsilonRow> rows;
  RateFit fit;              // on the two smallest usable eps
  double rate_ref = 0.0;    // minimize_rate value (infinity when infeasible)
  bool rate_ref_finite = true;
  std::vector<std::string> warnings;
};

struct SlopeOptions {
  int n_paths = 10000;
  std::uint64_t seed = 1;
  int threads = 0;
  int k_u = -1;
  OptimizerConfig optimizer;  // for the rate_ref solve
};

// Monte Carlo probabilities share one seed across eps (common random numbers),
// the fit uses the two smallest eps with hits, and rate_ref comes from the
// minimum action method on the same event.
SlopeReport ldp_slope(const SpectralTriple& triple, const CoefficientPair& pair,
                      const TargetEvent& event, const std::vector<double>& eps_list,
                      const Vec& x, const TimeGrid& grid, const SlopeOptions& opts = {});

// ---- Laplace functional -----------------------------------------------------------

struct LaplaceReport {
  double estimate = 0.0;  // -eps log mean exp(-h/eps), log-sum-exp stabilized
  double se = 0.0;        // jackknife standard error
  double ess = 0.0;       // effective sample size of the exponential weights
  int n_paths = 0;
  std::vector<std::string> warnings;  // degenerate weights (ess < 10), explosions
};

LaplaceReport laplace_estimate(const SpectralTriple& triple, const CoefficientPair& pair,
                               const std::function<double(const Trajectory&)>& h, double epsilon,
                               int n_paths, const Vec& x, const TimeGrid& grid,
                               std::uint64_t seed = 1, int threads = 0);

// ---- LLN decay --------------------------------------------------------------------

struct LlnRow {
  double epsilon = 0.0;
  double median_dev = 0.0;  // median over paths of sup_t ||Y^eps - u^0||_H
};

struct LlnReport {
  std::vector<LlnRow> rows;
  double slope = 0.0;  // log-log fit of median vs eps (about 1/2 for linear pairs)
  bool monotone = false;
};

LlnReport lln_check(const SpectralTriple& triple, const CoefficientPair& pair,
                    const std::vector<double>& eps_list, int n_paths, const Vec& x,
                    const TimeGrid& grid, std::uint64_t seed = 1, int threads = 0);

// ---- stochastic continuity (condition (iii)) ---------------------------------------

struct ContinuityRow {
  int control_index = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  int exceed = 0;
  int n_paths = 0;
  double p_hat = 0.0;
  double wilson_hi = 0.0;
};

struct ContinuityReport {
  std::vector<ContinuityRow> rows;
  bool monotone = false;  // exceedance nonincreasing along decreasing eps, all (psi, delta)
};

// P(||X^eps - u^Psi||_MR > delta) for each deterministic control and eps,
// common random numbers across eps; the skeleton solution is the reference.
ContinuityReport stochastic_continuity_probe(const SpectralTriple& triple,
                                             const CoefficientPair& pair,
                                             const std::vector<Control>& controls,
                                             const std::vector<double>& eps_list, int n_paths,
                                             const Vec& x, const std::vector<double>& deltas,
                                             std::uint64_t seed = 1, int threads = 0);

}  // namespace ldpkit
