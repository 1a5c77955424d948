#include "nsrlab/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>

namespace nsrlab::spectral {

namespace {

// FFTW planning is not thread safe; execution with new-array calls is.
struct PlanCache {
  std::mutex mu;
  std::map<std::pair<int, int>, fftw_plan> plans;

  fftw_plan get(int n, int dir) {
    std::lock_guard lock(mu);
    auto it = plans.find({n, dir});
    if (it != plans.end()) return it->second;
    const std::int64_t real_size = std::int64_t(n) * n * n;
    double* r = fftw_alloc_real(real_size);
    fftw_complex* c = fftw_alloc_complex(half_size(n));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan p = dir > 0 ? fftw_plan_dft_r2c_3d(n, n, n, r, c, flags)
                          : fftw_plan_dft_c2r_3d(n, n, n, c, r, flags | FFTW_DESTROY_INPUT);
    fftw_free(r);
    fftw_free(c);
    plans.emplace(std::make_pair(n, dir), p);
    return p;
  }
};

PlanCache& plans() {
  static PlanCache cache;
  return cache;
}

}  // namespace

Spectrum forward(const Slice& f, int n) {
  const std::int64_t cells = std::int64_t(n) * n * n;
  if (f.rows() != cells) throw ValidationError("slice size does not match transform size");
  fftw_plan plan = plans().get(n, +1);
  Spectrum s(half_size(n), f.cols());
  Slice in = f;  // r2c may not preserve input with some planners
  for (Eigen::Index c = 0; c < f.cols(); ++c)
    fftw_execute_dft_r2c(plan, in.col(c).data(),
                         reinterpret_cast<fftw_complex*>(s.col(c).data()));
  return s;
}

Slice inverse(const Spectrum& s, int n) {
  const std::int64_t cells = std::int64_t(n) * n * n;
  fftw_plan plan = plans().get(n, -1);
  Slice out(cells, s.cols());
  Spectrum work = s;
  for (Eigen::Index c = 0; c < s.cols(); ++c)
    fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(work.col(c).data()),
                         out.col(c).data());
  out /= double(cells);
  return out;
}

Slice inverse_real(const Eigen::ArrayXd& symbol, int n) {
  Spectrum s = symbol.cast<Complex>();
  return inverse(s, n);
}

Wavenumbers::Wavenumbers(int n_, double length_) : n(n_), length(length_), k(n_), kd(n_) {
  const double base = 2 * std::numbers::pi / length;
  for (int i = 0; i < n; ++i) {
    const int m = i <= n / 2 ? i : i - n;
    k[i] = base * m;
    kd[i] = (2 * i == n) ? 0.0 : k[i];
  }
}

namespace {

template <class Fn>
void for_each_mode(const Wavenumbers& w, Fn fn) {
  const int n = w.n, nh = n / 2 + 1;
  std::int64_t r = 0;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < nh; ++ix, ++r) fn(r, ix, iy, iz);
}

const Complex I(0.0, 1.0);

}  // namespace

Spectrum gradient(const Spectrum& s, const Wavenumbers& w) {
  Spectrum g(s.rows(), 3 * s.cols());
  for_each_mode(w, [&](std::int64_t r, int ix, int iy, int iz) {
    const double kk[3] = {w.kd[ix], w.kd[iy], w.kd[iz]};
    for (Eigen::Index c = 0; c < s.cols(); ++c)
      for (int j = 0; j < 3; ++j) g(r, 3 * c + j) = I * kk[j] * s(r, c);
  });
  return g;
}

Spectrum divergence(const Spectrum& s, const Wavenumbers& w) {
  if (s.cols() != 3) throw ValidationError("divergence needs a 3-vector field");
  Spectrum d(s.rows(), 1);
  for_each_mode(w, [&](std::int64_t r, int ix, int iy, int iz) {
    d(r, 0) = I * (w.kd[ix] * s(r, 0) + w.kd[iy] * s(r, 1) + w.kd[iz] * s(r, 2));
  });
  return d;
}

Spectrum curl(const Spectrum& s, const Wavenumbers& w) {
  if (s.cols() != 3) throw ValidationError("curl needs a 3-vector field");
  Spectrum c(s.rows(), 3);
  for_each_mode(w, [&](std::int64_t r, int ix, int iy, int iz) {
    const double kx = w.kd[ix], ky = w.kd[iy], kz = w.kd[iz];
    c(r, 0) = I * (ky * s(r, 2) - kz * s(r, 1));
    c(r, 1) = I * (kz * s(r, 0) - kx * s(r, 2));
    c(r, 2) = I * (kx * s(r, 1) - ky * s(r, 0));
  });
  return c;
}

Spectrum laplacian(const Spectrum& s, const Wavenumbers& w) {
  Spectrum l(s.rows(), s.cols());
  for_each_mode(w, [&](std::int64_t r, int ix, int iy, int iz) {
    const double k2 = w.k[ix] * w.k[ix] + w.k[iy] * w.k[iy] + w.k[iz] * w.k[iz];
    l.row(r) = -k2 * s.row(r);
  });
  return l;
}

Spectrum inverse_minus_laplacian(const Spectrum& s, const Wavenumbers& w) {
  Spectrum l(s.rows(), s.cols());
  for_each_mode(w, [&](std::int64_t r, int ix, int iy, int iz) {
    const double k2 = w.k[ix] * w.k[ix] + w.k[iy] * w.k[iy] + w.k[iz] * w.k[iz];
    if (k2 == 0.0)
      l.row(r).setZero();
    else
      l.row(r) = s.row(r) / k2;
  });
  return l;
}

Spectrum project(const Spectrum& s, const Wavenumbers& w) {
  if (s.cols() != 3) throw ValidationError("projection needs a 3-vector field");
  Spectrum out = s;
  for_each_mode(w, [&](std::int64_t r, int ix, int iy, int iz) {
    const double kk[3] = {w.kd[ix], w.kd[iy], w.kd[iz]};
    const double k2 = kk[0] * kk[0] + kk[1] * kk[1] + kk[2] * kk[2];
    if (k2 == 0.0) return;
    const Complex dot = kk[0] * s(r, 0) + kk[1] * s(r, 1) + kk[2] * s(r, 2);
    for (int a = 0; a < 3; ++a) out(r, a) -= kk[a] * dot / k2;
  });
  return out;
}

namespace {

template <class Op>
Slice apply(const Slice& f, const Grid& g, Op op) {
  Wavenumbers w(g.n, g.length);
  return inverse(op(forward(f, g.n), w), g.n);
}

template <class Op>
SampledField apply_all(const SampledField& f, const Grid& g, int comps, Op op) {
  SampledField out(g, comps);
  for (int j = 0; j < f.slices(); ++j) out.slice(j) = op(f.slice(j), g);
  return out;
}

}  // namespace

Slice gradient(const Slice& f, const Grid& g) {
  return apply(f, g, [](const Spectrum& s, const Wavenumbers& w) { return gradient(s, w); });
}
Slice divergence(const Slice& f, const Grid& g) {
  return apply(f, g, [](const Spectrum& s, const Wavenumbers& w) { return divergence(s, w); });
}
Slice curl(const Slice& f, const Grid& g) {
  return apply(f, g, [](const Spectrum& s, const Wavenumbers& w) { return curl(s, w); });
}
Slice laplacian(const Slice& f, const Grid& g) {
  return apply(f, g, [](const Spectrum& s, const Wavenumbers& w) { return laplacian(s, w); });
}

SampledField gradient(const SampledField& f, const Grid& g) {
  return apply_all(f, g, 3 * f.components(),
                   [](const Slice& s, const Grid& gg) { return gradient(s, gg); });
}
SampledField divergence(const SampledField& f, const Grid& g) {
  return apply_all(f, g, 1, [](const Slice& s, const Grid& gg) { return divergence(s, gg); });
}
SampledField curl(const SampledField& f, const Grid& g) {
  return apply_all(f, g, 3, [](const Slice& s, const Grid& gg) { return curl(s, gg); });
}
SampledField laplacian(const SampledField& f, const Grid& g) {
  return apply_all(f, g, f.components(),
                   [](const Slice& s, const Grid& gg) { return laplacian(s, gg); });
}

}  // namespace nsrlab::spectral
