#include "ldpkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numeric>
#include <sstream>

#include "ldpkit/util.hpp"

namespace ldpkit {

// ---- linear SDE ---------------------------------------------------------------

Model make_linear_sde(const Mat& a, const Mat& sigma) {
  if (a.rows() != a.cols()) throw config_error("linear_sde: drift matrix must be square");
  const int n = int(a.rows());
  if (sigma.rows() != n) throw config_error("linear_sde: sigma row count must match dim");
  const int K = int(sigma.cols());

  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()));
  double theta = es.eigenvalues().minCoeff();
  if (!(theta > 0)) {
    std::ostringstream msg;
    msg << "linear_sde: drift is not coercive: lambda_min(sym(a)) = " << theta
        << " <= 0 (coercivity requires <av,v> >= theta|v|^2 with theta > 0)";
    throw violation_error(msg.str());
  }

  CoefficientPair pair;
  pair.dim = n;
  pair.noise_dim = K;
  Vec ones = Vec::Ones(n);
  pair.A0 = [a](double, const Vec&) { return LinearOp::Dense(a); };
  pair.G = [sigma](double, const Vec&) { return sigma; };
  pair.G_exponents = {{Rational(0, 1), Rational(3, 4)}};
  pair.theta = theta;
  pair.bigM = 0.0;
  double phi = std::sqrt(0.5) * sigma.norm();  // 1/2 |||sigma|||^2 absorbed into phi^2
  pair.phi = [phi](double) { return phi; };
  pair.semilinear = true;
  pair.G_jac_psi = [n](double, const Vec&, const Vec&) { return Mat::Zero(n, n); };
  pair.validate();

  return Model{"linear_sde", SpectralTriple(ones), std::move(pair)};
}

// ---- 1D heat with transport noise ----------------------------------------------

Mat dirichlet_transport_matrix(int m) {
  // Matrix of P_m(d_x .) in the orthonormal sine basis on (0,1):
  // d_x sqrt2 sin(k pi x) = k pi sqrt2 cos(k pi x),
  // <sqrt2 cos(k pi x), sqrt2 sin(j pi x)>_{L2} = 4j/(pi(j^2-k^2)) for j+k odd.
  Mat d = Mat::Zero(m, m);
  for (int j = 1; j <= m; ++j)
    for (int k = 1; k <= m; ++k)
      if ((j + k) % 2 == 1) d(j - 1, k - 1) = 4.0 * j * k / (double(j) * j - double(k) * k);
  return d;
}

Model make_heat1d_transport(double nu, double b, double g_lip, int m) {
  if (!(nu > 0)) throw config_error("heat1d: need nu > 0");
  if (m < 1) throw config_error("heat1d: need m >= 1");
  if (g_lip < 0) throw config_error("heat1d: need g_lip >= 0");
  if (b * b >= 2.0 * nu) {
    std::ostringstream msg;
    msg << "heat1d: transport noise too strong: theta = nu - b^2/2 = " << nu - 0.5 * b * b
        << " <= 0 (need b^2 < 2 nu; b = " << b << ", nu = " << nu << ")";
    throw violation_error(msg.str());
  }
  SpectralTriple triple = SpectralTriple::dirichlet1d(m, 1.0);
  const int n_g = g_lip > 0 ? 2 : 0;
  const int K = 1 + n_g;
  const int gm = std::min(n_g, m);

  Mat transport = b * dirichlet_transport_matrix(m);

  CoefficientPair pair;
  pair.dim = m;
  pair.noise_dim = K;
  Vec diag = nu * triple.eigenvalues();
  pair.A0 = [diag](double, const Vec&) { return LinearOp::Diagonal(diag); };
  pair.B0 = [transport, m, K](double, const Vec&, const Vec& v) {
    Mat cols = Mat::Zero(m, K);
    cols.col(0) = transport * v;
    return cols;
  };
  pair.B0_psi_mat = [transport](double, const Vec&, const Vec& psi) {
    return Mat(psi[0] * transport);
  };
  if (n_g > 0) {
    pair.G = [m, K, gm, g_lip](double, const Vec& v) {
      Mat cols = Mat::Zero(m, K);
      for (int j = 0; j < gm; ++j) cols(j, 1 + j) = g_lip * (1.0 + std::tanh(v[j]));
      return cols;
    };
    pair.G_jac_psi = [m, gm, g_lip](double, const Vec& u, const Vec& psi) {
      Mat jac = Mat::Zero(m, m);
      for (int j = 0; j < gm; ++j) {
        double c = std::cosh(u[j]);
        jac(j, j) = psi[1 + j] * g_lip / (c * c);
      }
      return jac;
    };
    pair.G_exponents = {{Rational(0, 1), Rational(11, 20)}};
  }
  pair.theta = nu - 0.5 * b * b;
  pair.bigM = 0.0;
  // |||G(v)|||^2 <= sum_j (2 g_lip)^2 = 4 g_lip^2 gm, so phi^2 = 2 g_lip^2 gm.
  double phi = g_lip * std::sqrt(2.0 * gm);
  pair.phi = n_g > 0 ? std::function<double(double)>([phi](double) { return phi; }) : nullptr;
  pair.semilinear = true;
  pair.validate();

  return Model{"heat1d_transport", std::move(triple), std::move(pair)};
}

// ---- 1D Allen-Cahn --------------------------------------------------------------

SineTransform SineTransform::build(int m, int padding) {
  SineTransform st;
  st.m = m;
  st.nq = padding * m;
  st.synth = Mat(st.nq, m);
  st.anal = Mat(m, st.nq);
  const double h = 1.0 / (st.nq + 1);
  for (int j = 1; j <= st.nq; ++j)
    for (int k = 1; k <= m; ++k) {
      double s = std::sqrt(2.0) * std::sin(k * M_PI * j * h);
      st.synth(j - 1, k - 1) = s;
      st.anal(k - 1, j - 1) = s / (st.nq + 1);
    }
  return st;
}

Model make_allen_cahn1d(int m, double scale, double sigma_g, int n_noise) {
  if (m < 8) throw config_error("allen_cahn1d: need m >= 8 modes");
  if (!(scale >= 0)) throw config_error("allen_cahn1d: need scale >= 0");
  if (n_noise < 1) throw config_error("allen_cahn1d: need n_noise >= 1");
  SpectralTriple triple = SpectralTriple::dirichlet1d(m, 1.0);
  const int K = std::min(n_noise, m);

  SineTransform st = SineTransform::build(m, 2);

  CoefficientPair pair;
  pair.dim = m;
  pair.noise_dim = K;
  Vec diag = triple.eigenvalues();
  pair.A0 = [diag](double, const Vec&) { return LinearOp::Diagonal(diag); };
  pair.F = [st, scale](double, const Vec& v) {
    Vec y = st.synth * v;
    return Vec(scale * (v - st.anal * y.array().cube().matrix()));
  };
  pair.F_jac = [st, scale, m](double, const Vec& v) {
    Vec y = st.synth * v;
    Mat jac = st.anal * (3.0 * y.array().square()).matrix().asDiagonal() * st.synth;
    return Mat(scale * (Mat::Identity(m, m) - jac));
  };
  pair.F_exponents = {{Rational(2, 1), Rational(2, 3)}};
  Mat gmat = Mat::Zero(m, K);
  for (int j = 0; j < K; ++j) gmat(j, j) = sigma_g;
  pair.g = [gmat](double) { return gmat; };
  pair.theta = 1.0;
  pair.bigM = scale;
  double phi = std::sqrt(0.5) * gmat.norm();
  pair.phi = [phi](double) { return phi; };
  pair.semilinear = true;
  pair.validate();

  return Model{"allen_cahn1d", std::move(triple), std::move(pair)};
}

// ---- 2D periodic Navier-Stokes ---------------------------------------------------

Ns2dGeometry Ns2dGeometry::build(int cutoff) {
  if (cutoff < 1) throw config_error("ns2d: need cutoff >= 1");
  Ns2dGeometry g;
  g.cutoff = cutoff;
  std::vector<std::array<int, 2>> ks;
  for (int a = 0; a <= cutoff; ++a)
    for (int b = -cutoff; b <= cutoff; ++b) {
      if (a == 0 && b <= 0) continue;
      ks.push_back({a, b});
    }
  std::stable_sort(ks.begin(), ks.end(), [](const auto& x, const auto& y) {
    long lx = long(x[0]) * x[0] + long(x[1]) * x[1];
    long ly = long(y[0]) * y[0] + long(y[1]) * y[1];
    return lx < ly;
  });
  g.nh = int(ks.size());
  const int side = 2 * cutoff + 1;
  g.lookup.assign(std::size_t(side) * side, -1);
  for (int h = 0; h < g.nh; ++h) {
    int a = ks[std::size_t(h)][0], b = ks[std::size_t(h)][1];
    double norm = std::sqrt(double(a) * a + double(b) * b);
    g.k1.push_back(a);
    g.k2.push_back(b);
    g.lam.push_back(double(a) * a + double(b) * b);
    g.d1.push_back(-b / norm);
    g.d2.push_back(a / norm);
    g.lookup[std::size_t(a + cutoff) * side + std::size_t(b + cutoff)] = h;
  }
  return g;
}

int Ns2dGeometry::half_of(int a, int b) const {
  if (std::abs(a) > cutoff || std::abs(b) > cutoff) return -1;
  const int side = 2 * cutoff + 1;
  return lookup[std::size_t(a + cutoff) * side + std::size_t(b + cutoff)];
}

Vec ns2d_bilinear(const Ns2dGeometry& g, const Vec& u, const Vec& v) {
  // u = sum_h d_h (a_h cos(k.x) + b_h sin(k.x)) / (sqrt2 pi); the complex
  // amplitude at +k is d_h (a_h - i b_h)/c with c = 2 sqrt2 pi, and the
  // conjugate at -k. (u.grad)v convolves; the output's divergence-free
  // component at k is its d_k coordinate (k.d_k = 0, so P is free).
  using cd = std::complex<double>;
  const double c = 2.0 * std::sqrt(2.0) * M_PI;
  const cd I(0.0, 1.0);
  Vec out = Vec::Zero(g.dim());
  for (int ho = 0; ho < g.nh; ++ho) {
    const int K1 = g.k1[ho], K2 = g.k2[ho];
    cd w1(0.0, 0.0), w2(0.0, 0.0);
    for (int hp = 0; hp < g.nh; ++hp) {
      const double ua = u[2 * hp], ub = u[2 * hp + 1];
      for (int sgn = +1; sgn >= -1; sgn -= 2) {
        const int P1 = sgn * g.k1[hp], P2 = sgn * g.k2[hp];
        const int Q1 = K1 - P1, Q2 = K2 - P2;
        if (Q1 == 0 && Q2 == 0) continue;
        int hq = g.half_of(Q1, Q2);
        int sq = +1;
        if (hq < 0) {
          hq = g.half_of(-Q1, -Q2);
          sq = -1;
        }
        if (hq < 0) continue;  // outside the truncation
        // scalar amplitude of u at p along d_{hp}
        cd amp_p = sgn > 0 ? cd(ua, -ub) : cd(ua, ub);
        amp_p /= c;
        // (u_hat(p) . q): direction of the p mode is d_{hp} for both signs
        double pdotq = g.d1[hp] * Q1 + g.d2[hp] * Q2;
        const double va = v[2 * hq], vb = v[2 * hq + 1];
        cd amp_q = sq > 0 ? cd(va, -vb) : cd(va, vb);
        amp_q /= c;
        cd s = I * amp_p * pdotq * amp_q;
        w1 += s * g.d1[hq];
        w2 += s * g.d2[hq];
      }
    }
    cd gamma = -(w1 * g.d1[ho] + w2 * g.d2[ho]);
    out[2 * ho] = c * gamma.real();
    out[2 * ho + 1] = -c * gamma.imag();
  }
  return out;
}

double ns2d_divergence_defect(const Ns2dGeometry& g, const Vec& u) {
  // The represented complex amplitude at +k is d_h (a_h - i b_h)/c; its
  // divergence component is (k . d_h) * amp. Normalized by |k| |amp|.
  double worst = 0.0;
  for (int h = 0; h < g.nh; ++h) {
    double amp = std::hypot(u[2 * h], u[2 * h + 1]);
    if (amp == 0.0) continue;
    double kdotd = g.k1[h] * g.d1[h] + g.k2[h] * g.d2[h];
    worst = std::max(worst, std::fabs(kdotd) / std::sqrt(g.lam[std::size_t(h)]));
  }
  return worst;
}

Model make_ns2d_periodic(double nu, int cutoff,
                         const std::vector<std::array<double, 2>>& b_fields, double g_lip,
                         int n_g) {
  if (!(nu > 0)) throw config_error("ns2d: need nu > 0");
  if (g_lip < 0) throw config_error("ns2d: need g_lip >= 0");
  if (n_g < 0) throw config_error("ns2d: need n_g >= 0");
  Ns2dGeometry geom = Ns2dGeometry::build(cutoff);

  // Transport-coercivity check: mu = lambda_max( 1/2 sum_n b_n b_n^T ) < nu.
  Mat q = Mat::Zero(2, 2);
  for (const auto& b : b_fields) {
    Vec bv(2);
    bv << b[0], b[1];
    q += 0.5 * bv * bv.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(q);
  double mu = b_fields.empty() ? 0.0 : es.eigenvalues().maxCoeff();
  if (mu >= nu) {
    Vec dir = es.eigenvectors().col(1);  // eigenvector of the largest eigenvalue
    std::ostringstream msg;
    msg << "ns2d: transport bound violated: mu = " << mu << " >= nu = " << nu
        << " along direction (" << dir[0] << ", " << dir[1]
        << ") (need 1/2 sum_n (b_n . xi)^2 <= mu |xi|^2 with mu < nu)";
    throw violation_error(msg.str());
  }

  const int m = geom.dim();
  const int nt = int(b_fields.size());
  if (n_g > 0 && g_lip == 0.0) n_g = 0;
  const int K = nt + n_g;
  const int gm = std::min(n_g, m);

  // Labels: "cos(k1,k2)" / "sin(k1,k2)", sorted by |k|^2 like the eigenvalues.
  Vec lam(m);
  std::vector<std::string> labels(static_cast<std::size_t>(m));
  for (int h = 0; h < geom.nh; ++h) {
    lam[2 * h] = geom.lam[std::size_t(h)];
    lam[2 * h + 1] = geom.lam[std::size_t(h)];
    std::string kv =
        "(" + std::to_string(geom.k1[h]) + "," + std::to_string(geom.k2[h]) + ")";
    labels[std::size_t(2 * h)] = "cos" + kv;
    labels[std::size_t(2 * h + 1)] = "sin" + kv;
  }
  SpectralTriple triple(lam, labels);

  CoefficientPair pair;
  pair.dim = m;
  pair.noise_dim = K;
  Vec diag = nu * lam;
  pair.A0 = [diag](double, const Vec&) { return LinearOp::Diagonal(diag); };
  auto geom_ptr = std::make_shared<Ns2dGeometry>(geom);
  std::vector<std::array<double, 2>> bf = b_fields;
  pair.B0 = [geom_ptr, bf, m, K](double, const Vec&, const Vec& v) {
    // (b_n . grad) acts per wavevector as the rotation (a,b) -> ((b.k)b, -(b.k)a).
    Mat cols = Mat::Zero(m, K);
    for (int n = 0; n < int(bf.size()); ++n) {
      for (int h = 0; h < geom_ptr->nh; ++h) {
        double bk = bf[std::size_t(n)][0] * geom_ptr->k1[h] + bf[std::size_t(n)][1] * geom_ptr->k2[h];
        cols(2 * h, n) = bk * v[2 * h + 1];
        cols(2 * h + 1, n) = -bk * v[2 * h];
      }
    }
    return cols;
  };
  pair.B0_psi_mat = [geom_ptr, bf, m](double, const Vec&, const Vec& psi) {
    Mat mat = Mat::Zero(m, m);
    for (int n = 0; n < int(bf.size()); ++n) {
      for (int h = 0; h < geom_ptr->nh; ++h) {
        double bk = bf[std::size_t(n)][0] * geom_ptr->k1[h] + bf[std::size_t(n)][1] * geom_ptr->k2[h];
        mat(2 * h, 2 * h + 1) += psi[n] * bk;
        mat(2 * h + 1, 2 * h) -= psi[n] * bk;
      }
    }
    return mat;
  };
  pair.F = [geom_ptr](double, const Vec& v) { return ns2d_bilinear(*geom_ptr, v, v); };
  pair.F_jac = [geom_ptr, m](double, const Vec& v) {
    Mat jac(m, m);
    Vec e = Vec::Zero(m);
    for (int j = 0; j < m; ++j) {
      e[j] = 1.0;
      jac.col(j) = ns2d_bilinear(*geom_ptr, e, v) + ns2d_bilinear(*geom_ptr, v, e);
      e[j] = 0.0;
    }
    return jac;
  };
  pair.F_exponents = {{Rational(1, 1), Rational(3, 4)}};
  if (n_g > 0) {
    pair.G = [m, K, nt, gm, g_lip](double, const Vec& v) {
      Mat cols = Mat::Zero(m, K);
      for (int j = 0; j < gm; ++j) cols(j, nt + j) = g_lip * (1.0 + std::tanh(v[j]));
      return cols;
    };
    pair.G_jac_psi = [m, nt, gm, g_lip](double, const Vec& u, const Vec& psi) {
      Mat jac = Mat::Zero(m, m);
      for (int j = 0; j < gm; ++j) {
        double ch = std::cosh(u[j]);
        jac(j, j) = psi[nt + j] * g_lip / (ch * ch);
      }
      return jac;
    };
    pair.G_exponents = {{Rational(0, 1), Rational(11, 20)}};
    double phi = g_lip * std::sqrt(2.0 * gm);
    pair.phi = [phi](double) { return phi; };
  }
  pair.theta = nu - mu;
  pair.bigM = 0.0;
  pair.semilinear = true;
  pair.validate();

  return Model{"ns2d_periodic", std::move(triple), std::move(pair)};
}

}  // namespace ldpkit
