#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ldpkit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class Space { H, V, Vstar, Vbeta };

// Spectral realization of a Gelfand triple V ⊂ H ⊂ V*. Elements are coefficient
// vectors in a fixed H-orthonormal eigenbasis; the norms are weighted l2 norms
// with weights 1 (H), lambda_k (V), 1/lambda_k (V*), lambda_k^{2*beta-1} (the
// interpolation space V_beta, beta in (1/2,1); beta=1/2 gives H, beta=1 gives V).
class SpectralTriple {
 public:
  SpectralTriple(Vec eigenvalues, std::vector<std::string> labels = {});

  // Named generators used by the config layer.
  static SpectralTriple dirichlet1d(int m, double length);      // lambda_k = (k*pi/L)^2
  static SpectralTriple periodic2d(int cutoff);                 // lambda = |k|^2, k != 0
  static SpectralTriple explicit_list(const std::vector<double>& lambda,
                                      std::vector<std::string> labels = {});

  int dim() const { return int(lambda_.size()); }
  const Vec& eigenvalues() const { return lambda_; }
  const std::vector<std::string>& labels() const { return labels_; }

  double norm(const Vec& v, Space space, double beta = 0.0) const;
  // <w, v> for w in V*, v in V: in the spectral coordinates the pairing is the
  // plain coefficient dot product (it extends the H inner product).
  double duality_pair(const Vec& w, const Vec& v) const;
  // ||v||_beta / ( ||v||_H^{2-2beta} * ||v||_V^{2beta-1} ); <= 1 by Hoelder.
  double interpolation_ratio(const Vec& v, double beta) const;

 private:
  void check_dim(const Vec& v) const;
  Vec lambda_;
  std::vector<std::string> labels_;
};

}  // namespace ldpkit
