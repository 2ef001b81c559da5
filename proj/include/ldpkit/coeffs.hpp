#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ldpkit/rational.hpp"
#include "ldpkit/spectral.hpp"

namespace ldpkit {

// Linear map V -> V* in the spectral coordinates; diagonal or dense. The
// semi-implicit stepping needs shifted solves (I + dt*Op) x = b and, for the
// adjoint pass, the transposed variants.
class LinearOp {
 public:
  static LinearOp Diagonal(Vec d);
  static LinearOp Dense(Mat a);

  Vec apply(const Vec& v) const;
  Vec apply_transpose(const Vec& v) const;
  Vec solve_shifted(double dt, const Vec& b) const;
  Vec solve_shifted_transpose(double dt, const Vec& b) const;
  bool diagonal() const { return diagonal_; }
  const Vec& diag() const { return diag_; }
  Mat dense_matrix(int dim) const;  // materialized (for reports/tests)

 private:
  bool diagonal_ = true;
  Vec diag_;
  Mat dense_;
};

// One growth/regularity declaration (rho_j, beta_j): the j-th lower-order term
// is controlled by (1 + ||u||_beta^rho + ||v||_beta^rho) * ||u-v||_beta.
struct GrowthExponent {
  Rational rho;   // >= 0
  Rational beta;  // in (1/2, 1)
  double rho_d() const { return rho.value(); }
  double beta_d() const { return beta.value(); }
};

enum class Subcriticality { Subcritical, Critical, Violated };

struct SubcriticalityReport {
  std::vector<Subcriticality> verdicts;  // one per exponent
  Subcriticality overall = Subcriticality::Subcritical;
  std::string detail;  // human-readable table
};

// Exact rational test of 2*beta_j <= 1 + 1/(1+rho_j), i.e. 2*beta*(1+rho) vs 2+rho.
SubcriticalityReport check_subcriticality(const std::vector<GrowthExponent>& exponents);

// Coefficient pair in the decomposition
//   A(t,v) = A0(t,v)v - F(t,v) - f(t),  B(t,v) = B0(t,v)v + G(t,v) + g(t),
// with declared coercivity constants (theta, M, phi) for the full pair and the
// growth tables for F and G. Noise space U = R^{noise_dim}, standard basis.
struct CoefficientPair {
  int dim = 0;
  int noise_dim = 0;

  std::function<LinearOp(double t, const Vec& u)> A0;
  // Columns of B0(t,u)v in L2(U,H): (t, u, v) -> m x K matrix (linear in v).
  std::function<Mat(double t, const Vec& u, const Vec& v)> B0;
  std::function<Vec(double t, const Vec& v)> F;  // V -> V*
  std::function<Mat(double t, const Vec& v)> G;  // -> m x K
  std::function<Vec(double t)> f;                // forcing (V*), may be null (= 0)
  std::function<Mat(double t)> g;                // additive noise, may be null (= 0)

  std::vector<GrowthExponent> F_exponents;
  std::vector<GrowthExponent> G_exponents;

  // Declared coercivity: <A(t,v),v> - 1/2|||B(t,v)|||^2 >= theta||v||_V^2
  //                       - M||v||_H^2 - |phi(t)|^2.
  double theta = 0.0;
  double bigM = 0.0;
  std::function<double(double t)> phi;  // |phi(t)|; null = 0

  // A0/B0 independent of their state argument (all shipped models); enables the
  // exact adjoint. Quasilinear pairs fall back to finite differences.
  bool semilinear = true;

  // Optional analytic Jacobians (else finite-difference fallback):
  std::function<Mat(double t, const Vec& u)> F_jac;  // d/du F(t,u)
  // d/du [G(t,u) psi], psi fixed:
  std::function<Mat(double t, const Vec& u, const Vec& psi)> G_jac_psi;
  // matrix of v -> B0(t,u)v psi (semilinear: independent of u):
  std::function<Mat(double t, const Vec& u, const Vec& psi)> B0_psi_mat;

  // ---- helpers (null-safe wrappers) ----
  Vec eval_F(double t, const Vec& v) const;
  Mat eval_G(double t, const Vec& v) const;
  Vec eval_f(double t) const;
  Mat eval_g(double t) const;
  Mat eval_B0(double t, const Vec& u, const Vec& v) const;
  double eval_phi(double t) const;
  // Full noise matrix B(t, v) = B0(t,v)v + G(t,v) + g(t).
  Mat noise_matrix(double t, const Vec& v) const;
  // Drift functional A(t,v) = A0(t,v)v - F(t,v) - f(t)  (an element of V*).
  Vec drift(double t, const Vec& v) const;
  double phi_l2(double T, int quad_nodes = 256) const;  // ||phi||_{L2(0,T)}

  Mat b0_psi_matrix(double t, const Vec& u, const Vec& psi) const;  // with fallback
  Mat f_jacobian(double t, const Vec& u, double fd_step = 1e-6) const;
  Mat g_jacobian_psi(double t, const Vec& u, const Vec& psi, double fd_step = 1e-6) const;

  // Constructor-grade validation: exponent ranges and subcriticality (violations
  // are configuration errors, not probe findings).
  void validate() const;
};

// ---- assumption probes (randomized falsification searches) -----------------

struct ProbeOptions {
  int n_samples = 200;
  std::uint64_t seed = 1;
  double t_max = 1.0;
  double state_radius = 1.0;  // H-ball for the frozen state argument u
};

struct CoercivityEstimate {
  double theta_hat = 0.0;        // min over samples of the normalized form
  double worst_t = 0.0;          // witness
  Vec worst_v;                   // witness test vector
  bool falsified = false;        // theta_hat < 0
  int n_samples = 0;
};

// Full-pair form: (<A(t,v),v> - 1/2|||B(t,v)|||^2 + M||v||_H^2 + phi(t)^2) / ||v||_V^2
CoercivityEstimate probe_coercivity_AB(const SpectralTriple& triple, const CoefficientPair& pair,
                                       const ProbeOptions& opts = {});

struct LocalCoercivityEstimate {
  double theta_hat_m0 = 0.0;        // with M = 0
  double theta_hat_declared = 0.0;  // with the declared M
  double worst_t = 0.0;
  Vec worst_u, worst_v;
  bool falsified = false;  // theta_hat_declared < 0
  int n_samples = 0;
};

// Principal-part form over u in the H-ball of radius opts.state_radius:
// (<A0(t,u)v,v> - 1/2|||B0(t,u)v|||^2 + M||v||_H^2) / ||v||_V^2
LocalCoercivityEstimate probe_coercivity_A0B0(const SpectralTriple& triple,
                                              const CoefficientPair& pair,
                                              const ProbeOptions& opts = {});

enum class CoefficientPart { A0, B0, F, G };

struct LipschitzEstimate {
  double c_hat = 0.0;          // empirical constant, all samples
  double c_hat_half = 0.0;     // first half of the samples (stability check)
  double worst_ratio = 0.0;    // == c_hat (kept for reporting symmetry)
  int n_samples = 0;
};

// Empirical local-Lipschitz constants in the declared norms, e.g. for F:
// ||F(t,u)-F(t,v)||_{V*} / sum_j (1+||u||_{beta_j}^{rho_j}+||v||_{beta_j}^{rho_j})||u-v||_{beta_j}.
LipschitzEstimate probe_lipschitz(const SpectralTriple& triple, const CoefficientPair& pair,
                                  CoefficientPart part, const ProbeOptions& opts = {});

// Random state used by all probes: independent Gaussian modes with standard
// deviation lambda_k^{-1/2}, plus a uniformly scaled single-mode spike.
Vec probe_sample_state(const SpectralTriple& triple, const class NoiseStream& rng,
                       std::uint64_t& draw);

}  // namespace ldpkit
