#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "ldpkit/coeffs.hpp"
#include "ldpkit/models.hpp"
#include "ldpkit/rng.hpp"

using namespace ldpkit;

namespace {
Vec random_vec(const NoiseStream& rng, int dim, std::uint64_t offset, double scale = 1.0) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = scale * rng.gaussian(offset + std::uint64_t(i));
  return v;
}
}  // namespace

// ---- growth-exponent arithmetic -----------------------------------------------------

TEST_CASE("subcriticality trichotomy on exact rationals") {
  // 2*beta*(1+rho) vs 2+rho
  GrowthExponent sub{Rational(0, 1), Rational(3, 4)};       // 3/2 < 2
  GrowthExponent crit{Rational(2, 1), Rational(2, 3)};      // 4 = 4
  GrowthExponent bad{Rational(1, 1), Rational(4, 5)};       // 16/5 > 3
  SubcriticalityReport r = check_subcriticality({sub, crit, bad});
  CHECK(r.verdicts[0] == Subcriticality::Subcritical);
  CHECK(r.verdicts[1] == Subcriticality::Critical);
  CHECK(r.verdicts[2] == Subcriticality::Violated);
  CHECK(r.overall == Subcriticality::Violated);
  CHECK(check_subcriticality({sub, crit}).overall == Subcriticality::Critical);
  CHECK(check_subcriticality({sub}).overall == Subcriticality::Subcritical);
}

TEST_CASE("pair validation rejects out-of-range exponents and supercritical tables") {
  Model m = make_linear_sde(Mat::Identity(2, 2), Mat::Identity(2, 2));
  CoefficientPair bad = m.pair;
  bad.G_exponents = {{Rational(1, 1), Rational(4, 5)}};
  CHECK_THROWS_AS(bad.validate(), config_error);
  bad.G_exponents = {{Rational(0, 1), Rational(1, 2)}};  // beta must exceed 1/2
  CHECK_THROWS_AS(bad.validate(), config_error);
}

// ---- linear operators ----------------------------------------------------------------

TEST_CASE("shifted solves invert (I + dt*Op) for diagonal and dense blocks") {
  NoiseStream rng(11, "linop", 0);
  const double dt = 0.017;
  Vec d = random_vec(rng, 5, 0).cwiseAbs();
  LinearOp diag = LinearOp::Diagonal(d);
  Mat a = Mat::Identity(4, 4) * 2.0;
  a(0, 1) = 0.7;
  a(2, 3) = -0.3;
  LinearOp dense = LinearOp::Dense(a);

  Vec x5 = random_vec(rng, 5, 100);
  Vec rhs5 = x5 + dt * diag.apply(x5);
  CHECK((diag.solve_shifted(dt, rhs5) - x5).norm() < 1e-12);

  Vec x4 = random_vec(rng, 4, 200);
  Vec rhs4 = x4 + dt * dense.apply(x4);
  CHECK((dense.solve_shifted(dt, rhs4) - x4).norm() < 1e-12);

  // transposed variants match the materialized matrices
  Mat ad = dense.dense_matrix(4);
  Vec y = random_vec(rng, 4, 300);
  CHECK((dense.apply_transpose(y) - ad.transpose() * y).norm() < 1e-12);
  Vec rhs_t = x4 + dt * ad.transpose() * x4;
  CHECK((dense.solve_shifted_transpose(dt, rhs_t) - x4).norm() < 1e-12);
}

// ---- linear SDE model -------------------------------------------------------------------

TEST_CASE("linear sde pair: drift, noise and declared constants") {
  Mat a(2, 2);
  a << 1.0, 0.3, -0.2, 2.0;
  Mat sigma(2, 2);
  sigma << 0.5, 0.0, 0.1, 0.4;
  Model m = make_linear_sde(a, sigma);
  CHECK(m.pair.dim == 2);
  CHECK(m.pair.noise_dim == 2);

  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
  CHECK(m.pair.theta == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-14));

  NoiseStream rng(3, "lin", 0);
  Vec v = random_vec(rng, 2, 0);
  CHECK((m.pair.drift(0.3, v) - a * v).norm() < 1e-14);
  CHECK((m.pair.noise_matrix(0.7, v) - sigma).norm() < 1e-14);
  CHECK(m.pair.phi_l2(1.0) == doctest::Approx(std::sqrt(0.5) * sigma.norm()).epsilon(1e-6));

  Mat skew(2, 2);
  skew << 0.0, 1.0, -1.0, 0.0;  // sym part vanishes: not coercive
  CHECK_THROWS_AS(make_linear_sde(skew, sigma), violation_error);
}

TEST_CASE("coercivity probe clears correct declarations and falsifies inflated ones") {
  Mat a(2, 2);
  a << 1.5, 0.0, 0.0, 0.8;
  Model m = make_linear_sde(a, Mat::Identity(2, 2) * 0.3);
  ProbeOptions opts;
  opts.n_samples = 300;
  CoercivityEstimate est = probe_coercivity_AB(m.triple, m.pair, opts);
  CHECK(est.theta_hat >= m.pair.theta - 1e-10);
  CHECK_FALSE(est.falsified);

  CoefficientPair inflated = m.pair;
  inflated.theta = m.pair.theta + 0.5;  // claim more than the spectrum allows
  CoercivityEstimate bad = probe_coercivity_AB(m.triple, inflated, opts);
  CHECK(bad.theta_hat < inflated.theta - 1e-8);

  LocalCoercivityEstimate loc = probe_coercivity_A0B0(m.triple, m.pair, opts);
  CHECK_FALSE(loc.falsified);
  CHECK(loc.theta_hat_declared >= 0.0);
}

// ---- 1d heat with transport noise ---------------------------------------------------------

TEST_CASE("dirichlet transport matrix is skew with the odd-sum stencil") {
  Mat t = dirichlet_transport_matrix(6);
  CHECK((t + t.transpose()).norm() < 1e-13);
  for (int j = 1; j <= 6; ++j)
    for (int k = 1; k <= 6; ++k) {
      if ((j + k) % 2 == 0)
        CHECK(t(j - 1, k - 1) == 0.0);
      else
        CHECK(t(j - 1, k - 1) ==
              doctest::Approx(4.0 * j * k / double(j * j - k * k)).epsilon(1e-14));
    }
}

TEST_CASE("heat pair: diffusion diagonal, transport column, declared theta") {
  const double nu = 1.0, b = 0.9, g_lip = 0.2;
  Model m = make_heat1d_transport(nu, b, g_lip, 16);
  CHECK(m.pair.dim == 16);
  CHECK(m.pair.noise_dim == 3);  // transport + two diffusion columns
  CHECK(m.pair.theta == doctest::Approx(nu - 0.5 * b * b));

  NoiseStream rng(9, "heat", 0);
  Vec v = random_vec(rng, 16, 0);
  LinearOp a0 = m.pair.A0(0.0, v);
  CHECK((a0.apply(v) - nu * m.triple.eigenvalues().cwiseProduct(v)).norm() < 1e-12);

  // transport column is skew in H: <(B0 v)e_0, v> = 0
  Mat b0 = m.pair.eval_B0(0.0, v, v);
  CHECK(std::fabs(b0.col(0).dot(v)) < 1e-10 * v.squaredNorm());
  CHECK((b0.col(0) - b * dirichlet_transport_matrix(16) * v).norm() < 1e-12);

  // diffusion columns are bounded with Lipschitz constant g_lip
  Vec u = random_vec(rng, 16, 100);
  Mat gu = m.pair.eval_G(0.0, u), gv = m.pair.eval_G(0.0, v);
  for (int c = 1; c <= 2; ++c) {
    CHECK(gu.col(c).lpNorm<Eigen::Infinity>() <= 2.0 * g_lip + 1e-14);
    CHECK((gu.col(c) - gv.col(c)).norm() <= g_lip * (u - v).norm() + 1e-12);
  }
  // disjoint columns: transport lives in col 0, diffusion in cols 1..2
  CHECK(gu.col(0).norm() == 0.0);

  CHECK_THROWS_AS(make_heat1d_transport(1.0, 1.5, 0.0, 8), violation_error);
}

TEST_CASE("heat probes confirm the declared constants") {
  Model m = make_heat1d_transport(1.0, 0.8, 0.3, 12);
  ProbeOptions opts;
  opts.n_samples = 250;
  CoercivityEstimate est = probe_coercivity_AB(m.triple, m.pair, opts);
  CHECK(est.theta_hat >= m.pair.theta - 1e-8);
  LipschitzEstimate lip = probe_lipschitz(m.triple, m.pair, CoefficientPart::G, opts);
  CHECK(lip.c_hat > 0.0);
  CHECK(std::isfinite(lip.c_hat));
}

// ---- allen-cahn ------------------------------------------------------------------------------

TEST_CASE("sine transform: discrete orthogonality gives an exact inverse") {
  SineTransform st = SineTransform::build(8, 2);
  CHECK(st.synth.rows() == 16);
  CHECK(st.synth.cols() == 8);
  Mat prod = st.anal * st.synth;
  CHECK((prod - Mat::Identity(8, 8)).norm() < 1e-12);
}

TEST_CASE("allen-cahn cubic matches the sine product identity on a single mode") {
  // With phi_k = sqrt(2) sin(k pi x): (alpha phi_1)^3 = 3/2 alpha^3 phi_1 - 1/2 alpha^3 phi_3,
  // so F(alpha e_1) = scale[(alpha - 1.5 alpha^3) e_1 + 0.5 alpha^3 e_3].
  const double scale = 1.7, alpha = 0.6;
  Model m = make_allen_cahn1d(8, scale, 0.5, 4);
  Vec v = Vec::Zero(8);
  v[0] = alpha;
  Vec f = m.pair.eval_F(0.0, v);
  Vec expect = Vec::Zero(8);
  expect[0] = scale * (alpha - 1.5 * alpha * alpha * alpha);
  expect[2] = scale * 0.5 * alpha * alpha * alpha;
  CHECK((f - expect).norm() < 1e-12);
}

TEST_CASE("allen-cahn cubic is alias-free: doubling quadrature changes nothing") {
  const int m = 12;
  Model model = make_allen_cahn1d(m, 1.0, 0.5, 4);
  SineTransform fine = SineTransform::build(m, 8);
  NoiseStream rng(4, "ac", 0);
  Vec v = random_vec(rng, m, 0, 0.7);
  Vec coarse_f = model.pair.eval_F(0.0, v);
  Vec nodal = fine.synth * v;
  Vec fine_f = v - fine.anal * Vec(nodal.array().cube().matrix());
  CHECK((coarse_f - fine_f).norm() < 1e-11);
}

TEST_CASE("allen-cahn jacobian matches finite differences") {
  Model m = make_allen_cahn1d(8, 1.3, 0.5, 4);
  NoiseStream rng(6, "acjac", 0);
  Vec v = random_vec(rng, 8, 0, 0.5);
  Mat jac = m.pair.F_jac(0.0, v);
  const double h = 1e-6;
  for (int j = 0; j < 8; ++j) {
    Vec vp = v, vm = v;
    vp[j] += h;
    vm[j] -= h;
    Vec col = (m.pair.eval_F(0.0, vp) - m.pair.eval_F(0.0, vm)) / (2.0 * h);
    CHECK((jac.col(j) - col).norm() < 1e-6);
  }
  CHECK_THROWS_AS(make_allen_cahn1d(4, 1.0, 0.5, 2), config_error);
}

TEST_CASE("allen-cahn declares the critical exponent pair") {
  Model m = make_allen_cahn1d(8, 1.0, 0.5, 4);
  REQUIRE(m.pair.F_exponents.size() == 1);
  CHECK(m.pair.F_exponents[0].rho == Rational(2, 1));
  CHECK(m.pair.F_exponents[0].beta == Rational(2, 3));
  CHECK(check_subcriticality(m.pair.F_exponents).overall == Subcriticality::Critical);
}

// ---- 2d navier-stokes -------------------------------------------------------------------------

TEST_CASE("ns2d geometry: half-lattice modes sorted by |k|^2, divergence-free") {
  Ns2dGeometry g = Ns2dGeometry::build(2);
  CHECK(g.k1.size() == 12);
  for (std::size_t h = 0; h < g.k1.size(); ++h) {
    // d_k is k rotated by 90 degrees: orthogonal to k, unit length
    double dot = g.d1[h] * g.k1[h] + g.d2[h] * g.k2[h];
    CHECK(std::fabs(dot) < 1e-14);
    CHECK(g.d1[h] * g.d1[h] + g.d2[h] * g.d2[h] == doctest::Approx(1.0));
    if (h > 0) CHECK(g.lam[h] >= g.lam[h - 1] - 1e-14);
  }
}

TEST_CASE("ns2d bilinear term: energy pairing vanishes and divergence stays zero") {
  Model m = make_ns2d_periodic(1.0, 2, {{0.4, 0.1}}, 0.3, 2);
  NoiseStream rng(8, "ns", 0);
  Ns2dGeometry g = Ns2dGeometry::build(2);
  for (int trial = 0; trial < 20; ++trial) {
    Vec u = random_vec(rng, m.pair.dim, std::uint64_t(trial) * 64);
    Vec f = m.pair.eval_F(0.0, u);
    // <Phi(u,u), u> = 0: the convective term moves energy between modes only
    CHECK(std::fabs(f.dot(u)) <= 1e-10 * std::pow(u.norm(), 3));
    CHECK(ns2d_divergence_defect(g, f) <= 1e-12);
  }
}

TEST_CASE("ns2d bilinear jacobian matches finite differences") {
  Model m = make_ns2d_periodic(1.0, 2, {}, 0.2, 1);
  NoiseStream rng(13, "nsjac", 0);
  Vec u = random_vec(rng, m.pair.dim, 0, 0.4);
  Mat jac = m.pair.F_jac(0.0, u);
  const double h = 1e-6;
  for (int j = 0; j < m.pair.dim; j += 5) {
    Vec up = u, um = u;
    up[j] += h;
    um[j] -= h;
    Vec col = (m.pair.eval_F(0.0, up) - m.pair.eval_F(0.0, um)) / (2.0 * h);
    CHECK((jac.col(j) - col).norm() < 1e-6);
  }
}

TEST_CASE("ns2d transport noise columns are skew and the ellipticity test bites") {
  Model m = make_ns2d_periodic(1.0, 2, {{0.5, 0.2}, {-0.1, 0.3}}, 0.0, 0);
  CHECK(m.pair.noise_dim == 2);
  NoiseStream rng(15, "nsb0", 0);
  Vec v = random_vec(rng, m.pair.dim, 0);
  Mat b0 = m.pair.eval_B0(0.0, v, v);
  for (int n = 0; n < 2; ++n) CHECK(std::fabs(b0.col(n).dot(v)) < 1e-10 * v.squaredNorm());

  // mu = largest eigenvalue of 1/2 sum b b^T; fields of norm sqrt(2 nu) saturate it
  CHECK_THROWS_AS(make_ns2d_periodic(0.1, 2, {{0.5, 0.0}}, 0.0, 0), violation_error);
  Model ok = make_ns2d_periodic(1.0, 2, {{1.0, 0.0}}, 0.0, 0);  // mu = 1/2 < nu
  CHECK(ok.pair.theta == doctest::Approx(0.5));
}

TEST_CASE("ns2d spectral bases are nested across cutoffs") {
  Model coarse = make_ns2d_periodic(1.0, 2, {}, 0.2, 1);
  Model fine = make_ns2d_periodic(1.0, 3, {}, 0.2, 1);
  REQUIRE(fine.pair.dim > coarse.pair.dim);
  for (int i = 0; i < coarse.pair.dim; ++i) {
    CHECK(fine.triple.eigenvalues()[i] == doctest::Approx(coarse.triple.eigenvalues()[i]));
    CHECK(fine.triple.labels()[std::size_t(i)] == coarse.triple.labels()[std::size_t(i)]);
  }
}
