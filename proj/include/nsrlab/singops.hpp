#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "nsrlab/fieldlab.hpp"
#include "nsrlab/normcore.hpp"
#include "nsrlab/spectral.hpp"

namespace nsrlab {

enum class KernelRule {
  truncated_spectral,  // truncated Green's function, spectrally exact on the block
  cell_average         // plain 1/(4 pi |x|) with the cell-averaged origin value
};

// Free-space potential N[g] = int g(y)/(4 pi |x-y|) dy, so -Lap N[g] = g, for densities
// on an m^3 block of spacing h. Zero padding to 2m per axis.
class NewtonianPotential {
 public:
  NewtonianPotential(int m, double h, KernelRule rule = KernelRule::truncated_spectral);

  int size() const { return m_; }
  double spacing() const { return h_; }
  KernelRule rule() const { return rule_; }
  // Columns are independent densities. Throws when the support reaches the block faces.
  Slice apply(const Slice& density) const;

 private:
  int m_;
  double h_;
  KernelRule rule_;
  Eigen::ArrayXd kernel_hat_;  // real half spectrum on the (2m)^3 grid
};

// Shared read-only operator for (m, h, rule), built on first request.
std::shared_ptr<const NewtonianPotential> newtonian_operator(
    int m, double h, KernelRule rule = KernelRule::truncated_spectral);

Slice newtonian_potential(const Slice& density, int m, double h,
                          KernelRule rule = KernelRule::truncated_spectral);

// Non-periodic m^3 window of the torus; local node a maps to grid node origin + a (wrapped).
struct LocalBlock {
  int m = 0;
  double h = 0.0;
  Eigen::Vector3i origin = Eigen::Vector3i::Zero();
  Eigen::Vector3d center = Eigen::Vector3d::Zero();  // ball centre in local coordinates
  std::vector<std::int64_t> grid_cells;
};

// Smallest FFT-friendly block holding B_{x,radius} plus margin cells on each side.
LocalBlock make_block(const Grid& grid, const Eigen::Vector3d& x, double radius, int margin = 2);
Slice restrict_to_block(const Slice& torus_field, const LocalBlock& block);

// |f(x0) - mean_{B_r(x0)} f| / sup_{B_r(x0)} |f| on a block, x0 snapped to the nearest node.
double harmonic_defect(const Slice& field, int m, double h, const Eigen::Vector3d& x0, double r,
                       int subsamples = 4);
// Same on the periodic grid at slice j.
double harmonic_defect(const SampledField& field, const Grid& grid, int j, const Eigen::Vector3d& x0,
                       double r, int subsamples = 4);

struct HarmonicityReport {
  double radius = 0.0;
  double residual = 0.0;           // ||Lap harmonic|| / ||Lap input|| in L2(B_radius)
  double mean_value_defect = 0.0;  // at the block centre, same radius
};

struct DecompositionResult {
  LocalBlock block;
  Cutoff cutoff{1.0};
  double interior_radius = 0.0;  // where the harmonic part is claimed harmonic
  Slice input;                   // field being split, on the block
  Slice primary;                 // p1, v, grad v or V
  Slice harmonic;                // input - primary
  Slice input_laplacian;
  Slice harmonic_laplacian;

  // Residual and defect inside B(interior_radius/2).
  HarmonicityReport harmonicity(int subsamples = 4) const;
};

struct SplitOptions {
  KernelRule kernel = KernelRule::truncated_spectral;
  double plateau_fraction = 0.75;
  CutoffProfile profile = CutoffProfile::polynomial_c2;
  int margin = 2;
  int subsamples = 4;
};

// p = p1 + p2, p1 = N[d_i d_j((u_i-(u_i)_rho)(u_j-(u_j)_rho) phi) - div(f phi)], p2 harmonic on B_{rho/2}.
DecompositionResult pressure_split(const FieldStack& stack, int j, const Eigen::Vector3d& x, double rho,
                                   const SplitOptions& opts = {});
// u = v + h, v = curl N[w phi], h harmonic on B_{3 rho/4}.
DecompositionResult biot_savart_local(const FieldStack& stack, int j, const Eigen::Vector3d& x,
                                      double rho, const SplitOptions& opts = {});
// grad u = grad v + grad h with the pair above; columns 3i+j hold d_j.
DecompositionResult biot_savart_gradient(const FieldStack& stack, int j, const Eigen::Vector3d& x,
                                         double rho, const SplitOptions& opts = {});
// grad u = V + H, V = grad N[(curl w) phi], H harmonic on B_{3 rho/4}.
DecompositionResult curl_tensor_split(const FieldStack& stack, int j, const Eigen::Vector3d& x,
                                      double rho, const SplitOptions& opts = {});

enum class HarmonicPart { biot_savart_gradient, curl_tensor };

struct HarmonicTrace {
  std::vector<double> radii;
  std::vector<double> g;
  std::optional<double> slope;  // d log g / d log r
  bool decreasing = false;      // monotone toward 0 as r shrinks, within noise
};

// g(u;r) = r^{3/p-1} (int_{t-r^2}^t |(H)_r(s)|^q ds)^{1/q} with H the harmonic part
// of the chosen split at cutoff radius rho (p = 3, q = 1 gives the TH3-4 remainder).
HarmonicTrace harmonic_mean_trace(const FieldStack& stack, HarmonicPart part,
                                  const Eigen::Vector3d& x, double t,
                                  const std::vector<double>& radii, double rho, const Exponent& p,
                                  const Exponent& q, const SplitOptions& opts = {},
                                  double floor_cells = kResolutionFloorCells);

// Same reduction for a caller-supplied harmonic field per slice, given on block `block`.
HarmonicTrace harmonic_mean_trace(const Grid& grid,
                                  const std::function<Slice(int)>& harmonic_on_block,
                                  const LocalBlock& block, double t, const std::vector<double>& radii,
                                  const Exponent& p, const Exponent& q, int subsamples = 4,
                                  double floor_cells = kResolutionFloorCells);

}  // namespace nsrlab
