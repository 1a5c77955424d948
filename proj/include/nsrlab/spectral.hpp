#pragma once

#include <complex>

#include "nsrlab/fieldlab.hpp"

namespace nsrlab::spectral {

using Complex = std::complex<double>;
// Half spectrum of an n^3 real block: rows (kz*n + ky)*(n/2+1) + kx, one column per component.
using Spectrum = Eigen::ArrayXXcd;

inline std::int64_t half_size(int n) { return std::int64_t(n) * n * (n / 2 + 1); }

Spectrum forward(const Slice& f, int n);
Slice inverse(const Spectrum& s, int n);  // normalised so inverse(forward(f)) == f

// Wavenumbers of an n^3 periodic block of side length.
struct Wavenumbers {
  int n = 0;
  double length = 0.0;
  std::vector<double> k;   // full axis, Nyquist kept (for Laplacians)
  std::vector<double> kd;  // full axis, Nyquist zeroed (for odd derivatives)
  Wavenumbers(int n, double length);
  // Axis indices of half-spectrum row r.
  void unpack(std::int64_t r, int& ix, int& iy, int& iz) const {
    const int nh = n / 2 + 1;
    ix = int(r % nh);
    iy = int((r / nh) % n);
    iz = int(r / (std::int64_t(nh) * n));
  }
};

// Column 3c + j of the result is d_j of component c.
Spectrum gradient(const Spectrum& s, const Wavenumbers& k);
Spectrum divergence(const Spectrum& s, const Wavenumbers& k);
Spectrum curl(const Spectrum& s, const Wavenumbers& k);
Spectrum laplacian(const Spectrum& s, const Wavenumbers& k);
// Solves -Lap x = s with zero mean.
Spectrum inverse_minus_laplacian(const Spectrum& s, const Wavenumbers& k);
// Leray projection onto divergence-free fields.
Spectrum project(const Spectrum& s, const Wavenumbers& k);

// Slice-level conveniences on the periodic grid.
Slice gradient(const Slice& f, const Grid& g);
Slice divergence(const Slice& f, const Grid& g);
Slice curl(const Slice& f, const Grid& g);
Slice laplacian(const Slice& f, const Grid& g);

// Same operators applied slice by slice.
SampledField gradient(const SampledField& f, const Grid& g);
SampledField divergence(const SampledField& f, const Grid& g);
SampledField curl(const SampledField& f, const Grid& g);
SampledField laplacian(const SampledField& f, const Grid& g);

// Real c2r transform of a real even symbol given on the half spectrum (one column).
Slice inverse_real(const Eigen::ArrayXd& symbol, int n);

}  // namespace nsrlab::spectral
