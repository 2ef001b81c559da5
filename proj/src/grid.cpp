#include "ldpkit/grid.hpp"

#include <cmath>

#include "ldpkit/util.hpp"

namespace ldpkit {

TimeGrid::TimeGrid(double horizon, int n) : T(horizon), steps(n) {
  if (!(T > 0)) throw config_error("grid: horizon T must be positive");
  if (steps < 1) throw config_error("grid: need at least one step");
}

double Control::l2_norm() const { return std::sqrt(l2_norm_sq()); }

Trajectory::Trajectory(const TimeGrid& g, int dim)
    : grid_(g), dim_(dim), states_(std::size_t(g.steps) + 1, Vec::Zero(dim)) {}

double Trajectory::sup_h() const {
  double s = 0.0;
  for (const auto& u : states_) s = std::max(s, u.norm());
  return s;
}

double Trajectory::l2_v(const SpectralTriple& triple) const {
  std::vector<double> sq(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) {
    double n = triple.norm(states_[i], Space::V);
    sq[i] = n * n;
  }
  return std::sqrt(trapezoid(sq, grid_.dt()));
}

double Trajectory::mr_norm(const SpectralTriple& triple) const { return sup_h() + l2_v(triple); }

double Trajectory::mr_distance(const Trajectory& a, const Trajectory& b,
                               const SpectralTriple& triple, int first_node, int last_node) {
  if (last_node < 0) last_node = a.nodes() - 1;
  double sup = 0.0;
  std::vector<double> sq(std::size_t(last_node - first_node) + 1);
  for (int i = first_node; i <= last_node; ++i) {
    Vec d = a.state(i) - b.state(i);
    sup = std::max(sup, d.norm());
    double nv = triple.norm(d, Space::V);
    sq[std::size_t(i - first_node)] = nv * nv;
  }
  return sup + std::sqrt(trapezoid(sq, a.grid().dt()));
}

double Trajectory::sup_h_distance(const Trajectory& a, const Trajectory& b) {
  double sup = 0.0;
  for (int i = 0; i < a.nodes(); ++i) sup = std::max(sup, (a.state(i) - b.state(i)).norm());
  return sup;
}

}  // namespace ldpkit
