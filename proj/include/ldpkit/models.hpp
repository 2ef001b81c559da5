#pragma once

#include <array>
#include <string>
#include <vector>

#include "ldpkit/coeffs.hpp"
#include "ldpkit/spectral.hpp"

namespace ldpkit {

// A shipped instance: triple + coefficient pair + a name recorded in manifests.
struct Model {
  std::string name;
  SpectralTriple triple;
  CoefficientPair pair;
};

// Finite-dimensional linear SDE dY = -aY dt + sigma dW on H = V = R^n
// (lambda = 1). theta = smallest eigenvalue of sym(a); the constant diffusion
// only enters the declared phi. Rejects non-coercive drift.
Model make_linear_sde(const Mat& a, const Mat& sigma);

// 1D heat equation with transport noise on the spectral Dirichlet triple,
//   A0 = -nu d_xx, (B0 v) e_0 = b * P_m(d_x v),
// P_m the H-orthogonal projection onto the sine span (matrix 4jk/(j^2-k^2) for
// j+k odd; skew, contractive against ||.||_V). Optional bounded-Lipschitz
// diffusion columns g_lip*(1 + tanh(v_j)) on disjoint noise directions, so the
// declared theta = nu - b^2/2 is exact. Rejects b^2 >= 2 nu.
Model make_heat1d_transport(double nu, double b, double g_lip, int m);

// 1D Allen-Cahn: A0 = -d_xx, F(v) = scale*(v - v^3) with the cubic evaluated
// pseudo-spectrally on a 2m-point sine-nodal grid (alias-free for cubics), plus
// additive noise sigma_g on the first n_noise modes. Exponents (rho,beta) =
// (2, 2/3): exactly critical.
Model make_allen_cahn1d(int m, double scale, double sigma_g = 0.5, int n_noise = 4);

// 2D periodic Navier-Stokes in the divergence-free Fourier basis with constant
// transport noise fields b_n: A0 = nu|k|^2, Phi(u,v) = -P div(u (x) v) by exact
// spectral convolution, (B0 v) e_n = (b_n . grad) v. Requires the transport
// bound 1/2 sum_n (b_n . xi)^2 <= mu |xi|^2 with mu < nu; rejects mu >= nu and
// reports the violating direction.
Model make_ns2d_periodic(double nu, int cutoff, const std::vector<std::array<double, 2>>& b_fields,
                         double g_lip, int n_g = 2);

// ---- 2D geometry helpers (exposed for the structural checks/tests) ----------

struct Ns2dGeometry {
  int cutoff = 0;
  int nh = 0;  // half-lattice wavevectors; coefficient dim = 2*nh (cos,sin)
  std::vector<int> k1, k2;
  std::vector<double> lam;      // |k|^2 per half mode
  std::vector<double> d1, d2;   // unit k_perp (the divergence-free direction)
  std::vector<int> lookup;      // dense (2C+1)^2 -> half index or -1

  static Ns2dGeometry build(int cutoff);
  int half_of(int a, int b) const;
  int dim() const { return 2 * nh; }
};

// Phi(u,v) = -P[(u . grad) v] in coefficients (exact truncated convolution).
Vec ns2d_bilinear(const Ns2dGeometry& g, const Vec& u, const Vec& v);
// max_k |k . u_hat(k)| / (|k| |u_hat(k)|): divergence defect of the represented
// field (zero up to rounding by construction).
double ns2d_divergence_defect(const Ns2dGeometry& g, const Vec& u);

// Dense matrix of v -> P_m(d_x v) on the Dirichlet sine triple (skew).
Mat dirichlet_transport_matrix(int m);

// Sine <-> nodal transforms used by the Allen-Cahn nonlinearity.
struct SineTransform {
  int m = 0, nq = 0;
  Mat synth;  // nq x m: coefficients -> nodal values
  Mat anal;   // m x nq: nodal values -> coefficients (exact below Nyquist)
  static SineTransform build(int m, int padding = 2);
};

}  // namespace ldpkit
