#include "ldpkit/coeffs.hpp"

#include <cmath>
#include <sstream>

#include "ldpkit/rng.hpp"
#include "ldpkit/util.hpp"

namespace ldpkit {

// ---- LinearOp ---------------------------------------------------------------

LinearOp LinearOp::Diagonal(Vec d) {
  LinearOp op;
  op.diagonal_ = true;
  op.diag_ = std::move(d);
  return op;
}

LinearOp LinearOp::Dense(Mat a) {
  if (a.rows() != a.cols()) throw config_error("LinearOp: dense block must be square");
  LinearOp op;
  op.diagonal_ = false;
  op.dense_ = std::move(a);
  return op;
}

Vec LinearOp::apply(const Vec& v) const {
  if (diagonal_) return diag_.cwiseProduct(v);
  return dense_ * v;
}

Vec LinearOp::apply_transpose(const Vec& v) const {
  if (diagonal_) return diag_.cwiseProduct(v);
  return dense_.transpose() * v;
}

Vec LinearOp::solve_shifted(double dt, const Vec& b) const {
  if (diagonal_) return b.cwiseQuotient(Vec::Ones(b.size()) + dt * diag_);
  Mat a = Mat::Identity(dense_.rows(), dense_.cols()) + dt * dense_;
  return a.partialPivLu().solve(b);
}

Vec LinearOp::solve_shifted_transpose(double dt, const Vec& b) const {
  if (diagonal_) return b.cwiseQuotient(Vec::Ones(b.size()) + dt * diag_);
  Mat a = (Mat::Identity(dense_.rows(), dense_.cols()) + dt * dense_).transpose();
  return a.partialPivLu().solve(b);
}

Mat LinearOp::dense_matrix(int dim) const {
  if (!diagonal_) return dense_;
  Mat a = Mat::Zero(dim, dim);
  a.diagonal() = diag_;
  return a;
}

// ---- subcriticality ---------------------------------------------------------

SubcriticalityReport check_subcriticality(const std::vector<GrowthExponent>& exponents) {
  SubcriticalityReport rep;
  std::ostringstream detail;
  for (const auto& e : exponents) {
    // 2*beta <= 1 + 1/(1+rho)  <=>  2*beta*(1+rho) <= 2+rho, exactly in Q.
    Rational lhs = Rational(2, 1) * e.beta * (Rational(1, 1) + e.rho);
    Rational rhs = Rational(2, 1) + e.rho;
    Subcriticality v = lhs == rhs  ? Subcriticality::Critical
                       : lhs < rhs ? Subcriticality::Subcritical
                                   : Subcriticality::Violated;
    rep.verdicts.push_back(v);
    detail << "(rho=" << e.rho.str() << ", beta=" << e.beta.str() << "): 2b(1+r)=" << lhs.str()
           << (v == Subcriticality::Critical    ? " == "
               : v == Subcriticality::Subcritical ? " < "
                                                    : " > ")
           << rhs.str() << "=2+r -> "
           << (v == Subcriticality::Critical      ? "critical"
               : v == Subcriticality::Subcritical ? "subcritical"
                                                  : "violated")
           << "\n";
    if (int(v) > int(rep.overall)) rep.overall = v;
  }
  rep.detail = detail.str();
  return rep;
}

// ---- CoefficientPair helpers ------------------------------------------------

Vec CoefficientPair::eval_F(double t, const Vec& v) const {
  return F ? F(t, v) : Vec::Zero(dim);
}
Mat CoefficientPair::eval_G(double t, const Vec& v) const {
  return G ? G(t, v) : Mat::Zero(dim, noise_dim);
}
Vec CoefficientPair::eval_f(double t) const { return f ? f(t) : Vec::Zero(dim); }
Mat CoefficientPair::eval_g(double t) const { return g ? g(t) : Mat::Zero(dim, noise_dim); }
Mat CoefficientPair::eval_B0(double t, const Vec& u, const Vec& v) const {
  return B0 ? B0(t, u, v) : Mat::Zero(dim, noise_dim);
}
double CoefficientPair::eval_phi(double t) const { return phi ? phi(t) : 0.0; }

Mat CoefficientPair::noise_matrix(double t, const Vec& v) const {
  Mat b = eval_B0(t, v, v);
  if (G) b += G(t, v);
  if (g) b += g(t);
  return b;
}

Vec CoefficientPair::drift(double t, const Vec& v) const {
  Vec a = A0(t, v).apply(v);
  if (F) a -= F(t, v);
  if (f) a -= f(t);
  return a;
}

double CoefficientPair::phi_l2(double T, int quad_nodes) const {
  if (!phi) return 0.0;
  std::vector<double> sq(quad_nodes + 1);
  double dt = T / quad_nodes;
  for (int i = 0; i <= quad_nodes; ++i) {
    double p = phi(i * dt);
    sq[i] = p * p;
  }
  return std::sqrt(trapezoid(sq, dt));
}

Mat CoefficientPair::b0_psi_matrix(double t, const Vec& u, const Vec& psi) const {
  if (B0_psi_mat) return B0_psi_mat(t, u, psi);
  Mat n = Mat::Zero(dim, dim);
  if (!B0) return n;
  Vec e = Vec::Zero(dim);
  for (int j = 0; j < dim; ++j) {
    e[j] = 1.0;
    n.col(j) = B0(t, u, e) * psi;
    e[j] = 0.0;
  }
  return n;
}

Mat CoefficientPair::f_jacobian(double t, const Vec& u, double fd_step) const {
  if (F_jac) return F_jac(t, u);
  Mat jac = Mat::Zero(dim, dim);
  if (!F) return jac;
  Vec up = u, um = u;
  for (int j = 0; j < dim; ++j) {
    double h = fd_step * (1.0 + std::fabs(u[j]));
    up[j] += h;
    um[j] -= h;
    jac.col(j) = (F(t, up) - F(t, um)) / (2.0 * h);
    up[j] = u[j];
    um[j] = u[j];
  }
  return jac;
}

Mat CoefficientPair::g_jacobian_psi(double t, const Vec& u, const Vec& psi, double fd_step) const {
  if (G_jac_psi) return G_jac_psi(t, u, psi);
  Mat jac = Mat::Zero(dim, dim);
  if (!G) return jac;
  Vec up = u, um = u;
  for (int j = 0; j < dim; ++j) {
    double h = fd_step * (1.0 + std::fabs(u[j]));
    up[j] += h;
    um[j] -= h;
    jac.col(j) = (G(t, up) * psi - G(t, um) * psi) / (2.0 * h);
    up[j] = u[j];
    um[j] = u[j];
  }
  return jac;
}

void CoefficientPair::validate() const {
  if (dim < 1) throw config_error("pair: dimension must be >= 1");
  if (noise_dim < 0) throw config_error("pair: noise dimension must be >= 0");
  if (!A0) throw config_error("pair: A0 is required");
  auto check_table = [](const std::vector<GrowthExponent>& tab, const char* which) {
    for (const auto& e : tab) {
      if (e.rho < Rational(0, 1))
        throw config_error(std::string("pair: ") + which + ": rho must be >= 0, got " +
                           e.rho.str());
      if (!(Rational(1, 2) < e.beta && e.beta < Rational(1, 1)))
        throw config_error(std::string("pair: ") + which + ": beta must lie in (1/2,1), got " +
                           e.beta.str());
    }
    auto rep = check_subcriticality(tab);
    if (rep.overall == Subcriticality::Violated)
      throw config_error(std::string("pair: ") + which +
                         ": subcriticality violated:\n" + rep.detail);
  };
  check_table(F_exponents, "F exponents");
  check_table(G_exponents, "G exponents");
}

// ---- probes -----------------------------------------------------------------

Vec probe_sample_state(const SpectralTriple& triple, const NoiseStream& rng,
                       std::uint64_t& draw) {
  int m = triple.dim();
  Vec v(m);
  for (int k = 0; k < m; ++k)
    v[k] = rng.gaussian(draw++) / std::sqrt(triple.eigenvalues()[k]);
  int spike = int(rng.uniform(draw++) * m);
  if (spike >= m) spike = m - 1;
  v[spike] += rng.uniform(draw++);
  return v;
}

namespace {

double hs_norm_sq(const Mat& b) { return b.squaredNorm(); }

}  // namespace

CoercivityEstimate probe_coercivity_AB(const SpectralTriple& triple, const CoefficientPair& pair,
                                       const ProbeOptions& opts) {
  NoiseStream rng(opts.seed, "probe/coercivity-AB", 0);
  std::uint64_t draw = 0;
  CoercivityEstimate est;
  est.n_samples = opts.n_samples;
  bool first = true;
  for (int s = 0; s < opts.n_samples; ++s) {
    double t = rng.uniform(draw++) * opts.t_max;
    Vec v = probe_sample_state(triple, rng, draw);
    double v_v = triple.norm(v, Space::V);
    if (v_v < 1e-12) continue;
    double form = triple.duality_pair(pair.drift(t, v), v) -
                  0.5 * hs_norm_sq(pair.noise_matrix(t, v)) +
                  pair.bigM * v.squaredNorm() + std::pow(pair.eval_phi(t), 2);
    double ratio = form / (v_v * v_v);
    if (first || ratio < est.theta_hat) {
      est.theta_hat = ratio;
      est.worst_t = t;
      est.worst_v = v;
      first = false;
    }
  }
  est.falsified = est.theta_hat < 0.0;
  return est;
}

LocalCoercivityEstimate probe_coercivity_A0B0(const SpectralTriple& triple,
                                              const CoefficientPair& pair,
                                              const ProbeOptions& opts) {
  NoiseStream rng(opts.seed, "probe/coercivity-A0B0", 0);
  std::uint64_t draw = 0;
  LocalCoercivityEstimate est;
  est.n_samples = opts.n_samples;
  bool first = true;
  for (int s = 0; s < opts.n_samples; ++s) {
    double t = rng.uniform(draw++) * opts.t_max;
    Vec u = probe_sample_state(triple, rng, draw);
    double un = u.norm();
    if (un > 0) u *= opts.state_radius * rng.uniform(draw++) / un;  // H-ball of radius n
    Vec v = probe_sample_state(triple, rng, draw);
    double v_v = triple.norm(v, Space::V);
    if (v_v < 1e-12) continue;
    double quad = triple.duality_pair(pair.A0(t, u).apply(v), v) -
                  0.5 * hs_norm_sq(pair.eval_B0(t, u, v));
    double r0 = quad / (v_v * v_v);
    double rm = (quad + pair.bigM * v.squaredNorm()) / (v_v * v_v);
    if (first || rm < est.theta_hat_declared) {
      est.theta_hat_declared = rm;
      est.worst_t = t;
      est.worst_u = u;
      est.worst_v = v;
    }
    if (first || r0 < est.theta_hat_m0) est.theta_hat_m0 = r0;
    first = false;
  }
  est.falsified = est.theta_hat_declared < 0.0;
  return est;
}

LipschitzEstimate probe_lipschitz(const SpectralTriple& triple, const CoefficientPair& pair,
                                  CoefficientPart part, const ProbeOptions& opts) {
  NoiseStream rng(opts.seed, "probe/lipschitz", 0);
  std::uint64_t draw = 0;
  LipschitzEstimate est;
  est.n_samples = opts.n_samples;

  auto denom_growth = [&](const std::vector<GrowthExponent>& tab, const Vec& u, const Vec& v) {
    if (tab.empty()) return double(0);
    double acc = 0.0;
    for (const auto& e : tab) {
      double b = e.beta_d(), r = e.rho_d();
      double growth = 1.0 + std::pow(triple.norm(u, Space::Vbeta, b), r) +
                      std::pow(triple.norm(v, Space::Vbeta, b), r);
      acc += growth * triple.norm(u - v, Space::Vbeta, b);
    }
    return acc;
  };

  for (int s = 0; s < opts.n_samples; ++s) {
    double t = rng.uniform(draw++) * opts.t_max;
    Vec u = probe_sample_state(triple, rng, draw);
    Vec v = probe_sample_state(triple, rng, draw);
    double ratio = 0.0;
    switch (part) {
      case CoefficientPart::A0: {
        Vec w = probe_sample_state(triple, rng, draw);
        double den = (u - v).norm() * triple.norm(w, Space::V);
        if (den < 1e-12) continue;
        Vec diff = pair.A0(t, u).apply(w) - pair.A0(t, v).apply(w);
        ratio = triple.norm(diff, Space::Vstar) / den;
        break;
      }
      case CoefficientPart::B0: {
        Vec w = probe_sample_state(triple, rng, draw);
        double den = (u - v).norm() * triple.norm(w, Space::V);
        if (den < 1e-12) continue;
        Mat diff = pair.eval_B0(t, u, w) - pair.eval_B0(t, v, w);
        ratio = std::sqrt(hs_norm_sq(diff)) / den;
        break;
      }
      case CoefficientPart::F: {
        double den = denom_growth(pair.F_exponents, u, v);
        if (den < 1e-12) continue;
        ratio = triple.norm(pair.eval_F(t, u) - pair.eval_F(t, v), Space::Vstar) / den;
        break;
      }
      case CoefficientPart::G: {
        double den = denom_growth(pair.G_exponents, u, v);
        if (den < 1e-12) continue;
        Mat diff = pair.eval_G(t, u) - pair.eval_G(t, v);
        ratio = std::sqrt(hs_norm_sq(diff)) / den;
        break;
      }
    }
    if (ratio > est.c_hat) est.c_hat = ratio;
    if (s < opts.n_samples / 2 && ratio > est.c_hat_half) est.c_hat_half = ratio;
  }
  est.worst_ratio = est.c_hat;
  return est;
}

}  // namespace ldpkit
