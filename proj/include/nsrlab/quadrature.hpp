#pragma once

#include <cstdint>
#include <vector>

#include "nsrlab/fieldlab.hpp"

namespace nsrlab {

// Cells touching a ball, each with the covered volume fraction times h^3.
struct BallMask {
  std::vector<std::int64_t> cells;
  std::vector<double> weights;
  double volume() const;
};

// Ball on the periodic grid; centre anywhere, wraps in space.
BallMask ball_mask(const Grid& grid, const Eigen::Vector3d& center, double r, int subsamples = 4);

// Ball inside a non-periodic m^3 block of spacing h whose node (0,0,0) sits at the origin.
BallMask local_ball_mask(int m, double h, const Eigen::Vector3d& center, double r,
                         int subsamples = 4);

// Validates the cylinder (time extent, floor) and returns its spatial mask.
BallMask cylinder_mask(const Grid& grid, const ParabolicCylinder& q, int subsamples = 4,
                       double floor_cells = kResolutionFloorCells);

// Weights w_j so that sum_j w_j g(t_j) integrates the piecewise-linear
// interpolant of g over [a, b].
struct TimeQuadrature {
  std::vector<int> slices;
  std::vector<double> weights;
};
TimeQuadrature time_quadrature(const Grid& grid, double a, double b);

// Slices bracketing [a, b] for an essential sup.
std::vector<int> sup_slices(const Grid& grid, double a, double b);
// Sup over [a, b] of the linear interpolant of per-slice values on sup_slices(grid, a, b).
double interpolated_sup(const Grid& grid, double a, double b, const std::vector<int>& slices,
                        const std::vector<double>& values);

// Nearest slice to time s; throws outside the extent.
int nearest_slice(const Grid& grid, double s);

}  // namespace nsrlab
