#include "ldpkit/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "ldpkit/util.hpp"

namespace ldpkit {

SpectralTriple::SpectralTriple(Vec eigenvalues, std::vector<std::string> labels)
    : lambda_(std::move(eigenvalues)), labels_(std::move(labels)) {
  if (lambda_.size() == 0) throw config_error("triple: empty eigenvalue list");
  for (Eigen::Index k = 0; k < lambda_.size(); ++k) {
    if (!(lambda_[k] > 0.0))
      throw config_error("triple: eigenvalues must be positive (index " + std::to_string(k) + ")");
    if (k > 0 && lambda_[k] < lambda_[k - 1])
      throw config_error("triple: eigenvalues must be nondecreasing (index " +
                         std::to_string(k) + ")");
  }
  if (!labels_.empty() && Eigen::Index(labels_.size()) != lambda_.size())
    throw config_error("triple: label count does not match dimension");
}

SpectralTriple SpectralTriple::dirichlet1d(int m, double length) {
  if (m < 1) throw config_error("dirichlet1d: need m >= 1");
  if (!(length > 0)) throw config_error("dirichlet1d: need length > 0");
  Vec lam(m);
  std::vector<std::string> labels(m);
  for (int k = 1; k <= m; ++k) {
    double mu = k * M_PI / length;
    lam[k - 1] = mu * mu;
    labels[k - 1] = "sin(" + std::to_string(k) + "pi x/L)";
  }
  return SpectralTriple(std::move(lam), std::move(labels));
}

SpectralTriple SpectralTriple::periodic2d(int cutoff) {
  if (cutoff < 1) throw config_error("periodic2d: need cutoff >= 1");
  // Real Fourier modes on the 2-torus: one cos and one sin per half-lattice
  // wavevector (k1 > 0, or k1 == 0 and k2 > 0), |k|_inf <= cutoff.
  struct Mode {
    double lam;
    std::string label;
  };
  std::vector<Mode> modes;
  for (int k1 = 0; k1 <= cutoff; ++k1) {
    for (int k2 = -cutoff; k2 <= cutoff; ++k2) {
      if (k1 == 0 && k2 <= 0) continue;
      double lam = double(k1) * k1 + double(k2) * k2;
      std::string kv = "(" + std::to_string(k1) + "," + std::to_string(k2) + ")";
      modes.push_back({lam, "cos" + kv});
      modes.push_back({lam, "sin" + kv});
    }
  }
  std::stable_sort(modes.begin(), modes.end(),
                   [](const Mode& a, const Mode& b) { return a.lam < b.lam; });
  Vec lam(modes.size());
  std::vector<std::string> labels(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    lam[Eigen::Index(i)] = modes[i].lam;
    labels[i] = modes[i].label;
  }
  return SpectralTriple(std::move(lam), std::move(labels));
}

SpectralTriple SpectralTriple::explicit_list(const std::vector<double>& lambda,
                                             std::vector<std::string> labels) {
  Vec lam(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) lam[Eigen::Index(i)] = lambda[i];
  return SpectralTriple(std::move(lam), std::move(labels));
}

void SpectralTriple::check_dim(const Vec& v) const {
  if (v.size() != lambda_.size())
    throw config_error("triple: vector dimension " + std::to_string(v.size()) +
                       " does not match triple dimension " + std::to_string(lambda_.size()));
}

double SpectralTriple::norm(const Vec& v, Space space, double beta) const {
  check_dim(v);
  switch (space) {
    case Space::H:
      return v.norm();
    case Space::V:
      return std::sqrt((lambda_.array() * v.array().square()).sum());
    case Space::Vstar:
      return std::sqrt((v.array().square() / lambda_.array()).sum());
    case Space::Vbeta: {
      if (!(beta > 0.5 && beta < 1.0))
        throw config_error("triple: V_beta norm needs beta in (1/2,1), got " +
                           std::to_string(beta));
      double e = 2.0 * beta - 1.0;
      return std::sqrt((lambda_.array().pow(e) * v.array().square()).sum());
    }
  }
  return 0.0;
}

double SpectralTriple::duality_pair(const Vec& w, const Vec& v) const {
  check_dim(w);
  check_dim(v);
  return w.dot(v);
}

double SpectralTriple::interpolation_ratio(const Vec& v, double beta) const {
  check_dim(v);
  if (!(beta > 0.5 && beta < 1.0))
    throw config_error("triple: interpolation_ratio needs beta in (1/2,1)");
  double h = norm(v, Space::H);
  if (h == 0.0) throw config_error("triple: interpolation_ratio of the zero vector");
  double vb = norm(v, Space::Vbeta, beta);
  double vv = norm(v, Space::V);
  return vb / (std::pow(h, 2.0 - 2.0 * beta) * std::pow(vv, 2.0 * beta - 1.0));
}

}  // namespace ldpkit
