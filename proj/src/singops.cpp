#include "nsrlab/singops.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <tuple>

#include "nsrlab/quadrature.hpp"

namespace nsrlab {

namespace {

// Integral of 1/|x| over the unit cube centred at the origin.
constexpr double kUnitCubeInverseDistance = 2.3800772;
// Densities must fall below this fraction of their peak on the block faces.
constexpr double kSupportTolerance = 1e-8;

bool fft_friendly(int n) {
  for (int f : {2, 3, 5, 7})
    while (n % f == 0) n /= f;
  return n == 1;
}

std::int64_t block_index(int m, int i, int j, int k) { return (std::int64_t(k) * m + j) * m + i; }

int signed_index(int i, int n) { return i < n / 2 ? i : i - n; }

}  // namespace

// ------------------------------------------------------------ potential

NewtonianPotential::NewtonianPotential(int m, double h, KernelRule rule) : m_(m), h_(h), rule_(rule) {
  if (m < 2 || !(h > 0)) throw ValidationError("potential block must have m >= 2 and h > 0");
  const int M = 2 * m;
  Slice kernel(std::int64_t(M) * M * M, 1);
  if (rule == KernelRule::cell_average) {
    const double h3 = h * h * h;
    for (int k = 0; k < M; ++k)
      for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) {
          const double d = h * std::sqrt(double(signed_index(i, M)) * signed_index(i, M) +
                                         double(signed_index(j, M)) * signed_index(j, M) +
                                         double(signed_index(k, M)) * signed_index(k, M));
          kernel(block_index(M, i, j, k), 0) =
              d == 0.0 ? kUnitCubeInverseDistance * h * h / (4 * std::numbers::pi)
                       : h3 / (4 * std::numbers::pi * d);
        }
  } else {
    // Truncated kernel 1/(4 pi |x|) on |x| < L has symbol 2 (sin(L|k|/2)/|k|)^2; it is
    // sampled on a 4m grid (box side 4mh > m h + L) and cropped to offsets in [-m, m).
    const int F = 4 * m;
    const double L = 1.01 * std::sqrt(3.0) * m * h;
    spectral::Wavenumbers wk(F, F * h);
    Eigen::ArrayXd symbol(spectral::half_size(F));
    for (std::int64_t r = 0; r < symbol.size(); ++r) {
      int ix, iy, iz;
      wk.unpack(r, ix, iy, iz);
      const double kk =
          std::sqrt(wk.k[ix] * wk.k[ix] + wk.k[iy] * wk.k[iy] + wk.k[iz] * wk.k[iz]);
      symbol[r] = kk == 0.0 ? L * L / 2 : 2 * std::pow(std::sin(L * kk / 2) / kk, 2);
    }
    const Slice fine = spectral::inverse_real(symbol, F);
    for (int k = 0; k < M; ++k)
      for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) {
          const int a = (signed_index(i, M) + F) % F;
          const int b = (signed_index(j, M) + F) % F;
          const int c = (signed_index(k, M) + F) % F;
          kernel(block_index(M, i, j, k), 0) = fine(block_index(F, a, b, c), 0);
        }
  }
  kernel_hat_ = spectral::forward(kernel, M).col(0).real();
}

Slice NewtonianPotential::apply(const Slice& density) const {
  const int m = m_, M = 2 * m_;
  if (density.rows() != std::int64_t(m) * m * m)
    throw ValidationError("density does not match the potential block");
  const double peak = density.abs().maxCoeff();
  if (peak == 0.0) return Slice::Zero(density.rows(), density.cols());
  double face = 0.0;
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        if (i != 0 && j != 0 && k != 0 && i != m - 1 && j != m - 1 && k != m - 1) continue;
        face = std::max(face, density.row(block_index(m, i, j, k)).abs().maxCoeff());
      }
  if (face > kSupportTolerance * peak) {
    std::ostringstream os;
    os << "density support reaches the block faces (face/peak = " << face / peak
       << "); enlarge the padding margin";
    throw ValidationError(os.str());
  }
  Slice padded = Slice::Zero(std::int64_t(M) * M * M, density.cols());
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) padded.row(block_index(M, i, j, k)) = density.row(block_index(m, i, j, k));
  spectral::Spectrum s = spectral::forward(padded, M);
  for (Eigen::Index c = 0; c < s.cols(); ++c) s.col(c) *= kernel_hat_;
  const Slice full = spectral::inverse(s, M);
  Slice out(density.rows(), density.cols());
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) out.row(block_index(m, i, j, k)) = full.row(block_index(M, i, j, k));
  return out;
}

std::shared_ptr<const NewtonianPotential> newtonian_operator(int m, double h, KernelRule rule) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, int>, std::shared_ptr<const NewtonianPotential>> cache;
  {
    std::lock_guard lock(mu);
    auto it = cache.find({m, h, int(rule)});
    if (it != cache.end()) return it->second;
  }
  auto op = std::make_shared<const NewtonianPotential>(m, h, rule);
  std::lock_guard lock(mu);
  return cache.emplace(std::make_tuple(m, h, int(rule)), op).first->second;
}

Slice newtonian_potential(const Slice& density, int m, double h, KernelRule rule) {
  return newtonian_operator(m, h, rule)->apply(density);
}

// ---------------------------------------------------------------- blocks

LocalBlock make_block(const Grid& grid, const Eigen::Vector3d& x, double radius, int margin) {
  const double h = grid.h();
  const int half = int(std::ceil(radius / h)) + margin;
  int m = 2 * half + 1;
  while (!fft_friendly(m)) ++m;
  if (m > grid.n) {
    std::ostringstream os;
    os << "cutoff radius " << radius << " with margin does not fit the periodic box (needs " << m
       << " nodes per axis, grid has " << grid.n << ")";
    throw ValidationError(os.str());
  }
  LocalBlock b;
  b.m = m;
  b.h = h;
  for (int a = 0; a < 3; ++a) {
    const int c = int(std::lround(x[a] / h));
    b.origin[a] = c - half;
    b.center[a] = x[a] - b.origin[a] * h;
  }
  b.grid_cells.resize(std::size_t(m) * m * m);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        b.grid_cells[block_index(m, i, j, k)] =
            grid.index(grid.wrap(b.origin[0] + i), grid.wrap(b.origin[1] + j), grid.wrap(b.origin[2] + k));
  return b;
}

Slice restrict_to_block(const Slice& f, const LocalBlock& b) {
  Slice out(std::int64_t(b.grid_cells.size()), f.cols());
  for (std::size_t c = 0; c < b.grid_cells.size(); ++c) out.row(c) = f.row(b.grid_cells[c]);
  return out;
}

// --------------------------------------------------------------- defects

double harmonic_defect(const Slice& field, int m, double h, const Eigen::Vector3d& x0, double r,
                       int subsamples) {
  Eigen::Vector3i node;
  for (int a = 0; a < 3; ++a) node[a] = int(std::lround(x0[a] / h));
  const Eigen::Vector3d c = node.cast<double>() * h;
  if ((node.array() < 0).any() || (node.array() >= m).any())
    throw ValidationError("defect centre outside the block");
  BallMask mask = local_ball_mask(m, h, c, r, subsamples);
  if (mask.cells.empty()) throw ValidationError("defect ball is empty");
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(field.cols());
  for (std::size_t i = 0; i < mask.cells.size(); ++i)
    mean += mask.weights[i] * field.row(mask.cells[i]).matrix().transpose();
  mean /= mask.volume();
  double sup = 0.0;
  for (std::size_t i = 0; i < mask.cells.size(); ++i) {
    const std::int64_t cell = mask.cells[i];
    const Eigen::Vector3d p(double(cell % m), double((cell / m) % m), double(cell / (std::int64_t(m) * m)));
    if ((p * h - c).norm() > r * (1 + 1e-12)) continue;
    sup = std::max(sup, field.row(cell).matrix().norm());
  }
  const std::int64_t center_cell = block_index(m, node[0], node[1], node[2]);
  const double d = (field.row(center_cell).matrix().transpose() - mean).norm();
  return sup == 0.0 ? 0.0 : d / sup;
}

double harmonic_defect(const SampledField& field, const Grid& grid, int j, const Eigen::Vector3d& x0,
                       double r, int subsamples) {
  LocalBlock b = make_block(grid, x0, r, 2);
  return harmonic_defect(restrict_to_block(field.slice(j), b), b.m, b.h, b.center, r, subsamples);
}

HarmonicityReport DecompositionResult::harmonicity(int subsamples) const {
  HarmonicityReport rep;
  rep.radius = interior_radius / 2;
  BallMask mask = local_ball_mask(block.m, block.h, block.center, rep.radius, subsamples);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < mask.cells.size(); ++i) {
    num += mask.weights[i] * harmonic_laplacian.row(mask.cells[i]).square().sum();
    den += mask.weights[i] * input_laplacian.row(mask.cells[i]).square().sum();
  }
  rep.residual = den > 0 ? std::sqrt(num / den) : (num > 0 ? INFINITY : 0.0);
  rep.mean_value_defect = harmonic_defect(harmonic, block.m, block.h, block.center, rep.radius, subsamples);
  return rep;
}

// ---------------------------------------------------------- decompositions

namespace {

using spectral::Spectrum;
using spectral::Wavenumbers;

// Cutoff and its first two derivatives at the block nodes. Densities are assembled by the
// product rule from these and spectral derivatives of the smooth periodic fields, so they
// vanish identically outside B_rho.
struct CutoffNodes {
  Eigen::ArrayXd phi;
  Eigen::ArrayXXd grad;  // cells x 3
  Eigen::ArrayXXd hess;  // cells x 9, column 3a+b
};

CutoffNodes cutoff_nodes(const LocalBlock& b, const Cutoff& phi, bool need_hessian) {
  const std::int64_t cells = std::int64_t(b.m) * b.m * b.m;
  CutoffNodes c;
  c.phi.resize(cells);
  c.grad.resize(cells, 3);
  if (need_hessian) c.hess.resize(cells, 9);
  for (int k = 0; k < b.m; ++k)
    for (int j = 0; j < b.m; ++j)
      for (int i = 0; i < b.m; ++i) {
        const std::int64_t r = block_index(b.m, i, j, k);
        const Eigen::Vector3d xi = Eigen::Vector3d(i, j, k) * b.h - b.center;
        c.phi[r] = phi(xi.norm());
        c.grad.row(r) = phi.gradient(xi).transpose().array();
        if (need_hessian) {
          const Eigen::Matrix3d H = phi.hessian(xi);
          for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y) c.hess(r, 3 * x + y) = H(x, y);
        }
      }
  return c;
}

// Eighth-order central Laplacian on the block; rows within 4 nodes of a face are left zero.
Slice block_laplacian(const Slice& f, const LocalBlock& b) {
  static constexpr double c[5] = {-205.0 / 72, 8.0 / 5, -1.0 / 5, 8.0 / 315, -1.0 / 560};
  const int m = b.m;
  const double s = 1.0 / (b.h * b.h);
  Slice out = Slice::Zero(f.rows(), f.cols());
  for (int k = 4; k < m - 4; ++k)
    for (int j = 4; j < m - 4; ++j)
      for (int i = 4; i < m - 4; ++i) {
        const std::int64_t r = block_index(m, i, j, k);
        Eigen::ArrayXd acc = 3 * c[0] * f.row(r).transpose();
        for (int o = 1; o <= 4; ++o)
          acc += c[o] * (f.row(block_index(m, i + o, j, k)) + f.row(block_index(m, i - o, j, k)) +
                         f.row(block_index(m, i, j + o, k)) + f.row(block_index(m, i, j - o, k)) +
                         f.row(block_index(m, i, j, k + o)) + f.row(block_index(m, i, j, k - o)))
                            .transpose();
        out.row(r) = s * acc.transpose();
      }
  return out;
}

DecompositionResult assemble(const LocalBlock& b, const Cutoff& phi, double interior, Slice input,
                             Slice input_lap, const Slice& dens, const SplitOptions& opts) {
  auto op = newtonian_operator(b.m, b.h, opts.kernel);
  DecompositionResult d;
  d.block = b;
  d.cutoff = phi;
  d.interior_radius = interior;
  d.input = std::move(input);
  d.primary = op->apply(dens);
  d.harmonic = d.input - d.primary;
  d.input_laplacian = std::move(input_lap);
  d.harmonic_laplacian = d.input_laplacian - block_laplacian(d.primary, b);
  return d;
}

Slice vorticity_slice(const FieldStack& s, int j) {
  if (s.w) return s.w->slice(j);
  return spectral::curl(s.u.slice(j), s.grid);
}

void check_slice(const FieldStack& s, int j) {
  if (j < 0 || j >= s.grid.nt) throw ValidationError("slice index out of range");
}

// (a x b) component i for 3-column arrays.
Eigen::ArrayXd cross_col(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b, int i) {
  const int j = (i + 1) % 3, k = (i + 2) % 3;
  return a.col(j) * b.col(k) - a.col(k) * b.col(j);
}

}  // namespace

DecompositionResult pressure_split(const FieldStack& s, int j, const Eigen::Vector3d& x, double rho,
                                   const SplitOptions& opts) {
  check_slice(s, j);
  if (!s.p) throw ValidationError("pressure_split needs the pressure field");
  const Grid& g = s.grid;
  const LocalBlock b = make_block(g, x, rho, opts.margin);
  const Cutoff phi(rho, opts.plateau_fraction, opts.profile);
  const CutoffNodes cn = cutoff_nodes(b, phi, true);
  const Slice& u = s.u.slice(j);

  const BallMask mask = ball_mask(g, x, rho, opts.subsamples);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < mask.cells.size(); ++i)
    mean += mask.weights[i] * u.row(mask.cells[i]).matrix().transpose();
  mean /= mask.volume();

  // T_ab = (u_a - m_a)(u_b - m_b), column 3a+b
  Slice T(g.cells(), 9);
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) T.col(3 * a + c) = (u.col(a) - mean[a]) * (u.col(c) - mean[c]);
  const Wavenumbers k(g.n, g.length);
  const Spectrum That = spectral::forward(T, g.n);
  // divT_a = d_b T_ab ; ddT = d_a d_b T_ab
  const Spectrum gT = spectral::gradient(That, k);  // column 3*(3a+b)+c = d_c T_ab
  Spectrum divT(That.rows(), 3);
  for (int a = 0; a < 3; ++a) {
    divT.col(a).setZero();
    for (int c = 0; c < 3; ++c) divT.col(a) += gT.col(3 * (3 * a + c) + c);
  }
  const Spectrum ddT = spectral::divergence(divT, k);
  const Slice Tb = restrict_to_block(T, b);
  const Slice divTb = restrict_to_block(spectral::inverse(divT, g.n), b);
  const Slice ddTb = restrict_to_block(spectral::inverse(ddT, g.n), b);

  Slice dens(Tb.rows(), 1);
  dens.col(0) = cn.phi * ddTb.col(0);
  for (int a = 0; a < 3; ++a) {
    dens.col(0) += 2 * cn.grad.col(a) * divTb.col(a);
    for (int c = 0; c < 3; ++c) dens.col(0) += Tb.col(3 * a + c) * cn.hess.col(3 * a + c);
  }
  if (s.f) {
    const Slice fb = restrict_to_block(s.f->slice(j), b);
    const Slice divf = restrict_to_block(spectral::divergence(s.f->slice(j), g), b);
    dens.col(0) -= cn.phi * divf.col(0);
    for (int a = 0; a < 3; ++a) dens.col(0) -= fb.col(a) * cn.grad.col(a);
  }
  Slice input = restrict_to_block(s.p->slice(j), b);
  Slice input_lap = restrict_to_block(spectral::laplacian(s.p->slice(j), g), b);
  return assemble(b, phi, rho / 2, std::move(input), std::move(input_lap), dens, opts);
}

DecompositionResult biot_savart_local(const FieldStack& s, int j, const Eigen::Vector3d& x, double rho,
                                      const SplitOptions& opts) {
  check_slice(s, j);
  const Grid& g = s.grid;
  const LocalBlock b = make_block(g, x, rho, opts.margin);
  const Cutoff phi(rho, opts.plateau_fraction, opts.profile);
  const CutoffNodes cn = cutoff_nodes(b, phi, false);
  const Slice w = vorticity_slice(s, j);
  const Slice wb = restrict_to_block(w, b);
  const Slice cwb = restrict_to_block(spectral::curl(w, g), b);
  // curl(w phi) = phi curl w + grad phi x w
  Slice dens(wb.rows(), 3);
  for (int i = 0; i < 3; ++i) dens.col(i) = cn.phi * cwb.col(i) + cross_col(cn.grad, wb, i);
  Slice input = restrict_to_block(s.u.slice(j), b);
  Slice input_lap = restrict_to_block(spectral::laplacian(s.u.slice(j), g), b);
  return assemble(b, phi, 0.75 * rho, std::move(input), std::move(input_lap), dens, opts);
}

DecompositionResult biot_savart_gradient(const FieldStack& s, int j, const Eigen::Vector3d& x,
                                         double rho, const SplitOptions& opts) {
  check_slice(s, j);
  const Grid& g = s.grid;
  const LocalBlock b = make_block(g, x, rho, opts.margin);
  const Cutoff phi(rho, opts.plateau_fraction, opts.profile);
  const CutoffNodes cn = cutoff_nodes(b, phi, true);
  const Wavenumbers k(g.n, g.length);
  const Slice w = vorticity_slice(s, j);
  const Spectrum what = spectral::forward(w, g.n);
  const Spectrum cw = spectral::curl(what, k);
  const Slice wb = restrict_to_block(w, b);
  const Slice gwb = restrict_to_block(spectral::inverse(spectral::gradient(what, k), g.n), b);
  const Slice cwb = restrict_to_block(spectral::inverse(cw, g.n), b);
  const Slice gcwb = restrict_to_block(spectral::inverse(spectral::gradient(cw, k), g.n), b);
  // d_j [phi curl w + grad phi x w]_i
  Slice dens(wb.rows(), 9);
  for (int jj = 0; jj < 3; ++jj) {
    Eigen::ArrayXXd dgrad(wb.rows(), 3), dw(wb.rows(), 3);
    for (int a = 0; a < 3; ++a) {
      dgrad.col(a) = cn.hess.col(3 * a + jj);
      dw.col(a) = gwb.col(3 * a + jj);
    }
    for (int i = 0; i < 3; ++i)
      dens.col(3 * i + jj) = cn.grad.col(jj) * cwb.col(i) + cn.phi * gcwb.col(3 * i + jj) +
                             cross_col(dgrad, wb, i) + cross_col(cn.grad, dw, i);
  }
  const Spectrum grad = spectral::gradient(spectral::forward(s.u.slice(j), g.n), k);
  Slice input = restrict_to_block(spectral::inverse(grad, g.n), b);
  Slice input_lap = restrict_to_block(spectral::inverse(spectral::laplacian(grad, k), g.n), b);
  return assemble(b, phi, 0.75 * rho, std::move(input), std::move(input_lap), dens, opts);
}

DecompositionResult curl_tensor_split(const FieldStack& s, int j, const Eigen::Vector3d& x, double rho,
                                      const SplitOptions& opts) {
  check_slice(s, j);
  const Grid& g = s.grid;
  const LocalBlock b = make_block(g, x, rho, opts.margin);
  const Cutoff phi(rho, opts.plateau_fraction, opts.profile);
  const CutoffNodes cn = cutoff_nodes(b, phi, false);
  const Wavenumbers k(g.n, g.length);
  const Spectrum cw = spectral::curl(spectral::forward(vorticity_slice(s, j), g.n), k);
  const Slice cwb = restrict_to_block(spectral::inverse(cw, g.n), b);
  const Slice gcwb = restrict_to_block(spectral::inverse(spectral::gradient(cw, k), g.n), b);
  // d_j((curl w)_i phi)
  Slice dens(cwb.rows(), 9);
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj)
      dens.col(3 * i + jj) = cn.phi * gcwb.col(3 * i + jj) + cwb.col(i) * cn.grad.col(jj);
  const Spectrum grad = spectral::gradient(spectral::forward(s.u.slice(j), g.n), k);
  Slice input = restrict_to_block(spectral::inverse(grad, g.n), b);
  Slice input_lap = restrict_to_block(spectral::inverse(spectral::laplacian(grad, k), g.n), b);
  return assemble(b, phi, 0.75 * rho, std::move(input), std::move(input_lap), dens, opts);
}

// ------------------------------------------------------------- g(u; r)

HarmonicTrace harmonic_mean_trace(const Grid& grid, const std::function<Slice(int)>& harmonic_on_block,
                                  const LocalBlock& block, double t, const std::vector<double>& radii,
                                  const Exponent& p, const Exponent& q, int subsamples,
                                  double floor_cells) {
  HarmonicTrace tr;
  tr.radii = radii;
  std::map<int, Slice> cache;
  auto field = [&](int j) -> const Slice& {
    auto it = cache.find(j);
    if (it == cache.end()) it = cache.emplace(j, harmonic_on_block(j)).first;
    return it->second;
  };
  for (double r : radii) {
    check_cylinder(grid, ParabolicCylinder{Eigen::Vector3d::Zero(), t, r}, floor_cells);
    const BallMask mask = local_ball_mask(block.m, block.h, block.center, r, subsamples);
    auto mean_norm = [&](int j) {
      const Slice& H = field(j);
      Eigen::VectorXd m = Eigen::VectorXd::Zero(H.cols());
      for (std::size_t i = 0; i < mask.cells.size(); ++i)
        m += mask.weights[i] * H.row(mask.cells[i]).matrix().transpose();
      return (m / mask.volume()).norm();
    };
    double integral;
    if (q.is_infinite()) {
      const std::vector<int> js = sup_slices(grid, t - r * r, t);
      std::vector<double> vals;
      for (int j : js) vals.push_back(mean_norm(j));
      integral = interpolated_sup(grid, t - r * r, t, js, vals);
    } else {
      const double qd = q.to_double();
      const TimeQuadrature tq = time_quadrature(grid, t - r * r, t);
      double s = 0.0;
      for (std::size_t i = 0; i < tq.slices.size(); ++i)
        s += tq.weights[i] * std::pow(mean_norm(tq.slices[i]), qd);
      integral = std::pow(s, 1.0 / qd);
    }
    const double ex = boost::rational_cast<double>(3 * p.reciprocal()) - 1.0;
    tr.g.push_back(std::pow(r, ex) * integral);
  }
  // log-log slope over positive entries
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < tr.g.size(); ++i)
    if (tr.g[i] > 0) {
      lx.push_back(std::log(tr.radii[i]));
      ly.push_back(std::log(tr.g[i]));
    }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx > 0) tr.slope = sxy / sxx;
  }
  // order by decreasing radius, then require g not to grow beyond noise
  std::vector<std::size_t> order(radii.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return radii[a] > radii[b]; });
  tr.decreasing = true;
  for (std::size_t i = 1; i < order.size(); ++i)
    if (tr.g[order[i]] > tr.g[order[i - 1]] * (1 + 1e-6) + 1e-14) tr.decreasing = false;
  return tr;
}

HarmonicTrace harmonic_mean_trace(const FieldStack& stack, HarmonicPart part, const Eigen::Vector3d& x,
                                  double t, const std::vector<double>& radii, double rho,
                                  const Exponent& p, const Exponent& q, const SplitOptions& opts,
                                  double floor_cells) {
  if (radii.empty()) throw ValidationError("empty radius ladder");
  const LocalBlock block = make_block(stack.grid, x, rho, opts.margin);
  auto harmonic = [&](int j) {
    return part == HarmonicPart::curl_tensor ? curl_tensor_split(stack, j, x, rho, opts).harmonic
                                             : biot_savart_gradient(stack, j, x, rho, opts).harmonic;
  };
  return harmonic_mean_trace(stack.grid, harmonic, block, t, radii, p, q, opts.subsamples, floor_cells);
}

}  // namespace nsrlab
