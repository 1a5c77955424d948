#include "nsrlab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nsrlab {

double BallMask::volume() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

namespace {

// Per-axis candidate nodes with the squared offsets of their subsample points.
struct AxisCandidates {
  std::vector<int> nodes;
  std::vector<double> sq;  // nodes.size() * s
  std::vector<double> lo;  // min over subsamples
  std::vector<double> hi;  // max over subsamples
};

AxisCandidates axis_candidates(int n, double h, double c, double r, int s, double period) {
  AxisCandidates ax;
  for (int i = 0; i < n; ++i) {
    double mn = INFINITY, mx = 0.0;
    std::vector<double> local(s);
    for (int k = 0; k < s; ++k) {
      double d = i * h + ((k + 0.5) / s - 0.5) * h - c;
      if (period > 0) d -= period * std::nearbyint(d / period);
      local[k] = d * d;
      mn = std::min(mn, local[k]);
      mx = std::max(mx, local[k]);
    }
    if (mn >= r * r) continue;
    ax.nodes.push_back(i);
    ax.sq.insert(ax.sq.end(), local.begin(), local.end());
    ax.lo.push_back(mn);
    ax.hi.push_back(mx);
  }
  return ax;
}

template <class IndexFn>
BallMask build_mask(int n, double h, const Eigen::Vector3d& c, double r, int s, double period,
                    IndexFn index) {
  if (s < 1) throw ValidationError("subsamples must be >= 1");
  std::array<AxisCandidates, 3> ax;
  for (int a = 0; a < 3; ++a) ax[a] = axis_candidates(n, h, c[a], r, s, period);
  const double cell = h * h * h;
  const double r2 = r * r;
  const double total = double(s) * s * s;
  BallMask m;
  for (std::size_t kz = 0; kz < ax[2].nodes.size(); ++kz) {
    for (std::size_t ky = 0; ky < ax[1].nodes.size(); ++ky) {
      const double lo_zy = ax[2].lo[kz] + ax[1].lo[ky];
      if (lo_zy >= r2) continue;
      const double hi_zy = ax[2].hi[kz] + ax[1].hi[ky];
      for (std::size_t kx = 0; kx < ax[0].nodes.size(); ++kx) {
        if (lo_zy + ax[0].lo[kx] >= r2) continue;
        double frac;
        if (hi_zy + ax[0].hi[kx] < r2) {
          frac = 1.0;
        } else {
          int count = 0;
          const double* qz = &ax[2].sq[kz * s];
          const double* qy = &ax[1].sq[ky * s];
          const double* qx = &ax[0].sq[kx * s];
          for (int a = 0; a < s; ++a)
            for (int b = 0; b < s; ++b) {
              const double zy = qz[a] + qy[b];
              for (int e = 0; e < s; ++e) count += (zy + qx[e] < r2);
            }
          if (count == 0) continue;
          frac = count / total;
        }
        m.cells.push_back(index(ax[0].nodes[kx], ax[1].nodes[ky], ax[2].nodes[kz]));
        m.weights.push_back(frac * cell);
      }
    }
  }
  return m;
}

}  // namespace

BallMask ball_mask(const Grid& grid, const Eigen::Vector3d& center, double r, int subsamples) {
  return build_mask(grid.n, grid.h(), center, r, subsamples, grid.length,
                    [&](int i, int j, int k) { return grid.index(i, j, k); });
}

BallMask local_ball_mask(int m, double h, const Eigen::Vector3d& center, double r, int subsamples) {
  return build_mask(m, h, center, r, subsamples, 0.0, [m](int i, int j, int k) {
    return (std::int64_t(k) * m + j) * m + i;
  });
}

BallMask cylinder_mask(const Grid& grid, const ParabolicCylinder& q, int subsamples,
                       double floor_cells) {
  check_cylinder(grid, q, floor_cells);
  return ball_mask(grid, q.x, q.r, subsamples);
}

TimeQuadrature time_quadrature(const Grid& grid, double a, double b) {
  TimeQuadrature tq;
  if (b < a) throw ValidationError("time interval reversed");
  const double tol = 1e-9 * grid.dt;
  if (a < grid.t0 - tol || b > grid.t_end() + tol)
    throw ValidationError("time interval leaves the grid extent");
  a = std::clamp(a, grid.t0, grid.t_end());
  b = std::clamp(b, grid.t0, grid.t_end());
  if (b - a <= tol) return tq;
  std::vector<double> w(grid.nt, 0.0);
  const double dt = grid.dt;
  for (int j = 0; j + 1 < grid.nt; ++j) {
    const double sj = grid.time(j), sk = grid.time(j + 1);
    const double lo = std::max(a, sj), hi = std::min(b, sk);
    if (hi - lo <= tol) continue;
    w[j] += ((sk - lo) * (sk - lo) - (sk - hi) * (sk - hi)) / (2 * dt);
    w[j + 1] += ((hi - sj) * (hi - sj) - (lo - sj) * (lo - sj)) / (2 * dt);
  }
  for (int j = 0; j < grid.nt; ++j)
    if (w[j] != 0.0) {
      tq.slices.push_back(j);
      tq.weights.push_back(w[j]);
    }
  return tq;
}

std::vector<int> sup_slices(const Grid& grid, double a, double b) {
  const double tol = 1e-9;
  const double fa = (a - grid.t0) / grid.dt, fb = (b - grid.t0) / grid.dt;
  const int ja = std::clamp(int(std::floor(fa + tol)), 0, grid.nt - 1);
  const int jb = std::clamp(int(std::ceil(fb - tol)), 0, grid.nt - 1);
  std::vector<int> out;
  for (int j = ja; j <= jb; ++j) out.push_back(j);
  return out;
}

double interpolated_sup(const Grid& grid, double a, double b, const std::vector<int>& slices,
                        const std::vector<double>& values) {
  if (slices.empty()) return 0.0;
  auto at = [&](double s) {
    const double f = (s - grid.t0) / grid.dt - slices.front();
    const int i = std::clamp(int(std::floor(f)), 0, int(slices.size()) - 1);
    if (i + 1 >= int(slices.size())) return values[i];
    const double w = std::clamp(f - i, 0.0, 1.0);
    return (1 - w) * values[i] + w * values[i + 1];
  };
  double m = std::max(at(a), at(b));
  for (std::size_t i = 0; i < slices.size(); ++i) {
    const double s = grid.time(slices[i]);
    if (s > a && s < b) m = std::max(m, values[i]);
  }
  return m;
}

int nearest_slice(const Grid& grid, double s) {
  const double tol = 1e-9 * grid.dt;
  if (s < grid.t0 - tol || s > grid.t_end() + tol) {
    std::ostringstream os;
    os << "time " << s << " outside [" << grid.t0 << ", " << grid.t_end() << "]";
    throw ValidationError(os.str());
  }
  return std::clamp(int(std::lround((s - grid.t0) / grid.dt)), 0, grid.nt - 1);
}

}  // namespace nsrlab
