#pragma once

#include <vector>

#include "ldpkit/spectral.hpp"

namespace ldpkit {

// Uniform grid 0 = t_0 < ... < t_N = T.
struct TimeGrid {
  double T = 1.0;
  int steps = 1000;

  TimeGrid() = default;
  TimeGrid(double horizon, int n);
  double dt() const { return T / steps; }
  double node(int i) const { return T * double(i) / steps; }
};

// Piecewise-constant control psi: row i is the value on [t_i, t_{i+1}), in the
// truncated noise space U = R^K.
struct Control {
  TimeGrid grid;
  Mat cells;  // steps x K

  Control() = default;
  Control(const TimeGrid& g, int noise_dim) : grid(g), cells(Mat::Zero(g.steps, noise_dim)) {}

  int noise_dim() const { return int(cells.cols()); }
  double l2_norm_sq() const { return cells.squaredNorm() * grid.dt(); }  // ||psi||^2_{L2(0,T;U)}
  double l2_norm() const;
  double action() const { return 0.5 * l2_norm_sq(); }
  Vec cell(int i) const { return cells.row(i).transpose(); }
};

// Nodal trajectory in the spectral coordinates.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(const TimeGrid& g, int dim);

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  int nodes() const { return grid_.steps + 1; }
  Vec& state(int i) { return states_[std::size_t(i)]; }
  const Vec& state(int i) const { return states_[std::size_t(i)]; }

  double sup_h() const;                                // ||.||_{C([0,T];H)}
  double l2_v(const SpectralTriple& triple) const;     // ||.||_{L2(0,T;V)} (trapezoid)
  double mr_norm(const SpectralTriple& triple) const;  // sup_h + l2_v
  // Same norms for the difference of two trajectories on a node subrange.
  static double mr_distance(const Trajectory& a, const Trajectory& b,
                            const SpectralTriple& triple, int first_node = 0,
                            int last_node = -1);
  static double sup_h_distance(const Trajectory& a, const Trajectory& b);

 private:
  TimeGrid grid_;
  int dim_ = 0;
  std::vector<Vec> states_;
};

}  // namespace ldpkit
