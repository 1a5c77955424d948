#include "nsrlab/genflow.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "nsrlab/quadrature.hpp"
#include "nsrlab/spectral.hpp"

namespace nsrlab {

const char* to_string(FlowFamily f) {
  switch (f) {
    case FlowFamily::abc: return "abc";
    case FlowFamily::single_mode_beltrami: return "single_mode_beltrami";
    case FlowFamily::homogeneous_minus_one: return "homogeneous_minus_one";
    case FlowFamily::random_solenoidal: return "random_solenoidal";
  }
  return "?";
}

FlowFamily parse_family(const std::string& name) {
  for (auto f : {FlowFamily::abc, FlowFamily::single_mode_beltrami, FlowFamily::homogeneous_minus_one,
                 FlowFamily::random_solenoidal})
    if (name == to_string(f)) return f;
  throw ValidationError("unknown flow family '" + name + "'");
}

namespace {

using spectral::Complex;
using spectral::Spectrum;
using spectral::Wavenumbers;

double base_wavenumber(const Grid& g) { return 2 * std::numbers::pi / g.length; }

void remove_mean(Slice& s) {
  for (Eigen::Index c = 0; c < s.cols(); ++c) s.col(c) -= s.col(c).mean();
}

Slice pressure_from_velocity(const Slice& u, const Slice* f, const Grid& g, bool dealias) {
  const Wavenumbers k(g.n, g.length);
  Slice prod(g.cells(), 6);
  const int pairs[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};
  for (int c = 0; c < 6; ++c) prod.col(c) = u.col(pairs[c][0]) * u.col(pairs[c][1]);
  const Spectrum P = spectral::forward(prod, g.n);
  std::optional<Spectrum> F;
  if (f) F = spectral::forward(*f, g.n);
  Spectrum ph(P.rows(), 1);
  const int cut = g.n / 3;
  for (std::int64_t r = 0; r < P.rows(); ++r) {
    int ix, iy, iz;
    k.unpack(r, ix, iy, iz);
    const double kf[3] = {k.k[ix], k.k[iy], k.k[iz]};
    const double kd[3] = {k.kd[ix], k.kd[iy], k.kd[iz]};
    const double k2 = kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2];
    const int mx = ix, my = iy <= g.n / 2 ? iy : g.n - iy, mz = iz <= g.n / 2 ? iz : g.n - iz;
    if (k2 == 0.0 || (dealias && (mx > cut || my > cut || mz > cut))) {
      ph(r, 0) = 0.0;
      continue;
    }
    Complex acc = 0.0;
    for (int c = 0; c < 6; ++c) {
      const int a = pairs[c][0], b = pairs[c][1];
      acc -= (a == b ? kf[a] * kf[a] : 2 * kd[a] * kd[b]) * P(r, c);
    }
    if (F) acc -= Complex(0, 1) * (kd[0] * (*F)(r, 0) + kd[1] * (*F)(r, 1) + kd[2] * (*F)(r, 2));
    ph(r, 0) = acc / k2;
  }
  return spectral::inverse(ph, g.n);
}

FieldStack generate_abc(const FlowSpec& s, const Grid& g) {
  FieldStack st{g, SampledField(g, 3), SampledField(g, 1), std::nullopt, std::nullopt};
  const double k = base_wavenumber(g);
  std::vector<double> sn(g.n), cs(g.n);
  for (int i = 0; i < g.n; ++i) {
    sn[i] = std::sin(k * i * g.h());
    cs[i] = std::cos(k * i * g.h());
  }
  for (int j = 0; j < g.nt; ++j) {
    const double decay = std::exp(-s.nu * k * k * g.time(j));
    Slice& u = st.u.slice(j);
    for (int z = 0; z < g.n; ++z)
      for (int y = 0; y < g.n; ++y)
        for (int x = 0; x < g.n; ++x) {
          const std::int64_t c = g.index(x, y, z);
          u(c, 0) = decay * (s.A * sn[z] + s.C * cs[y]);
          u(c, 1) = decay * (s.B * sn[x] + s.A * cs[z]);
          u(c, 2) = decay * (s.C * sn[y] + s.B * cs[x]);
        }
    Slice& p = st.p->slice(j);
    p.col(0) = -0.5 * u.square().rowwise().sum();
    remove_mean(p);
  }
  return st;
}

FieldStack generate_single_mode(const FlowSpec& s, const Grid& g) {
  if (s.wavenumber < 1 || 2 * s.wavenumber >= g.n) throw ValidationError("single mode wavenumber not resolved");
  FieldStack st{g, SampledField(g, 3), SampledField(g, 1), std::nullopt, std::nullopt};
  const double k = base_wavenumber(g) * s.wavenumber;
  for (int j = 0; j < g.nt; ++j) {
    const double amp = s.amplitude * std::exp(-s.nu * k * k * g.time(j));
    Slice& u = st.u.slice(j);
    for (std::int64_t c = 0; c < g.cells(); ++c) {
      const double z = g.node(c)[2];
      u(c, 0) = amp * std::sin(k * z);
      u(c, 1) = amp * std::cos(k * z);
      u(c, 2) = 0.0;
    }
    // |u| is constant, so -|u|^2/2 minus its mean vanishes
  }
  return st;
}

// Core profile m(rho)^2 = S(z) + S(z)(1 - S(z-1))/2 with z = 2 rho / r_moll. It equals 1 for
// rho >= r_moll and int_0^inf (m^2 - 1) drho = 0, so int_{B_r} |u|^2 is exactly linear in r
// once r >= r_moll.
double core_profile(double rho, double r_moll) {
  const double z = 2 * rho / r_moll;
  const double s = smooth_step(z);
  return std::sqrt(s + 0.5 * s * (1 - smooth_step(z - 1)));
}

FieldStack generate_homogeneous(const FlowSpec& s, const Grid& g) {
  const double ell = s.r_moll > 0 ? s.r_moll : 4 * g.h();
  if (ell <= 2 * g.h()) {
    std::ostringstream os;
    os << "mollification radius " << ell << " must exceed 2h = " << 2 * g.h();
    throw ValidationError(os.str());
  }
  const Eigen::Vector3d x0 = s.center.value_or(Eigen::Vector3d::Constant(g.length / 2));
  FieldStack st{g, SampledField(g, 3), SampledField(g, 1), std::nullopt, std::nullopt};
  st.ns_solution = false;
  const double r_in = 0.3 * g.length, width = 0.15 * g.length;
  Slice u(g.cells(), 3);
  for (std::int64_t c = 0; c < g.cells(); ++c) {
    const Eigen::Vector3d xi = periodic_offset(g, x0, g.node(c));
    const double rho = xi.norm();
    const double taper = 1.0 - smooth_step((rho - r_in) / width);
    const double f = rho == 0.0 ? 0.0 : s.amplitude * taper * core_profile(rho, ell) / (rho * rho);
    u(c, 0) = -f * xi[1];
    u(c, 1) = f * xi[0];
    u(c, 2) = 0.0;
  }
  Slice p(g.cells(), 1);
  p.col(0) = -0.5 * u.square().rowwise().sum();
  remove_mean(p);
  for (int j = 0; j < g.nt; ++j) {
    st.u.slice(j) = u;
    st.p->slice(j) = p;
  }
  return st;
}

FieldStack generate_random(const FlowSpec& s, const Grid& g) {
  const int K = s.wavenumber;
  if (K < 1 || 2 * K >= g.n) throw ValidationError("random field band limit not resolved by the grid");
  std::mt19937_64 rng(s.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  struct Mode {
    Eigen::Vector3i m;
    Eigen::Vector3d a, b;
  };
  std::vector<Mode> modes;
  double energy = 0.0;
  for (int mz = -K; mz <= K; ++mz)
    for (int my = -K; my <= K; ++my)
      for (int mx = 0; mx <= K; ++mx) {
        if (mx == 0 && (my < 0 || (my == 0 && mz <= 0))) continue;
        Mode md;
        md.m = Eigen::Vector3i(mx, my, mz);
        for (int c = 0; c < 3; ++c) md.a[c] = normal(rng);
        for (int c = 0; c < 3; ++c) md.b[c] = normal(rng);
        const Eigen::Vector3d e = md.m.cast<double>().normalized();
        const double w = 1.0 / md.m.cast<double>().squaredNorm();
        md.a = w * (md.a - e * e.dot(md.a));
        md.b = w * (md.b - e * e.dot(md.b));
        energy += 0.5 * (md.a.squaredNorm() + md.b.squaredNorm());
        modes.push_back(md);
      }
  const double scale = energy > 0 ? s.amplitude / std::sqrt(energy) : 0.0;
  const double k0 = base_wavenumber(g);
  const double cells = double(g.cells());
  FieldStack st{g, SampledField(g, 3), SampledField(g, 1), std::nullopt, std::nullopt};
  st.ns_solution = false;
  const int n = g.n, nh = n / 2 + 1;
  for (int j = 0; j < g.nt; ++j) {
    Spectrum F = Spectrum::Zero(spectral::half_size(n), 3);
    for (const auto& md : modes) {
      const double decay = scale * std::exp(-s.nu * k0 * k0 * md.m.squaredNorm() * g.time(j));
      auto put = [&](int mx, int my, int mz, const Eigen::Vector3cd& v) {
        const std::int64_t r = (std::int64_t((mz + n) % n) * n + (my + n) % n) * nh + mx;
        for (int c = 0; c < 3; ++c) F(r, c) += v[c];
      };
      const Eigen::Vector3cd cpos =
          0.5 * cells * decay * (md.a.cast<Complex>() - Complex(0, 1) * md.b.cast<Complex>());
      put(md.m[0], md.m[1], md.m[2], cpos);
      if (md.m[0] == 0) put(0, -md.m[1], -md.m[2], cpos.conjugate());
    }
    st.u.slice(j) = spectral::inverse(F, n);
    st.p->slice(j) = pressure_from_velocity(st.u.slice(j), nullptr, g, false);
  }
  return st;
}

bool power_of_two(double lambda, int& out) {
  if (!(lambda >= 1) || lambda != std::floor(lambda) || lambda > (1 << 20)) return false;
  const int l = int(lambda);
  if ((l & (l - 1)) != 0) return false;
  out = l;
  return true;
}

}  // namespace

FieldStack generate(const FlowSpec& spec, const Grid& grid) {
  FieldStack st;
  switch (spec.family) {
    case FlowFamily::abc: st = generate_abc(spec, grid); break;
    case FlowFamily::single_mode_beltrami: st = generate_single_mode(spec, grid); break;
    case FlowFamily::homogeneous_minus_one: st = generate_homogeneous(spec, grid); break;
    case FlowFamily::random_solenoidal: st = generate_random(spec, grid); break;
  }
  if (spec.with_vorticity) {
    st.w = spectral::curl(st.u, grid);
    st.w_derived = true;
  }
  // -0.0 + 0.0 == +0.0: zero fields then encode as all-zero bytes
  for (SampledField* f : {&st.u, st.p ? &*st.p : nullptr, st.w ? &*st.w : nullptr, st.f ? &*st.f : nullptr})
    if (f)
      for (int j = 0; j < f->slices(); ++j) f->slice(j) += 0.0;
  return st;
}

FieldStack rescale(const FieldStack& s, double lambda, const RescaleOptions& opts) {
  int l = 0;
  if (!power_of_two(lambda, l)) {
    std::ostringstream os;
    os << "rescale needs lambda = 2^k >= 1 so that lambda^2 t lands on stored slices, got " << lambda;
    throw ValidationError(os.str());
  }
  const Grid& g = s.grid;
  const int step = l * l;
  const int nt = (g.nt - 1) / step + 1;
  if (nt < 2) throw ValidationError("time extent too short for this lambda");
  Grid ng = g;
  ng.nt = nt;
  ng.t0 = g.t0 / step;
  std::vector<std::int64_t> src(g.cells());
  for (int z = 0; z < g.n; ++z)
    for (int y = 0; y < g.n; ++y)
      for (int x = 0; x < g.n; ++x)
        src[g.index(x, y, z)] = g.index((l * x) % g.n, (l * y) % g.n, (l * z) % g.n);
  auto map_field = [&](const SampledField& f, double factor) {
    SampledField out(ng, f.components());
    for (int j = 0; j < nt; ++j) {
      const Slice& in = f.slice(j * step);
      Slice& o = out.slice(j);
      for (std::int64_t c = 0; c < g.cells(); ++c) o.row(c) = factor * in.row(src[c]);
    }
    return out;
  };
  FieldStack out;
  out.grid = ng;
  out.ns_solution = s.ns_solution;
  out.u = map_field(s.u, std::pow(double(l), opts.velocity_power));
  if (s.p) out.p = map_field(*s.p, double(l) * l);
  if (s.w) out.w = map_field(*s.w, double(l) * l);
  if (s.f) out.f = map_field(*s.f, double(l) * l * l);
  out.w_derived = s.w_derived;
  return out;
}

// ------------------------------------------------------------- integrator

FieldStack ns_integrate(const Slice& u0, const std::optional<Slice>& force, double nu, const Grid& grid,
                        int steps, const IntegrateOptions& opts) {
  const int n = grid.n;
  if (u0.rows() != grid.cells() || u0.cols() != 3) throw ValidationError("initial velocity does not match the grid");
  if (force && (force->rows() != grid.cells() || force->cols() != 3))
    throw ValidationError("force does not match the grid");
  if (steps < 1 || opts.save_every < 1 || steps % opts.save_every != 0)
    throw ValidationError("steps must be a positive multiple of save_every");
  if (!(nu >= 0)) throw ValidationError("viscosity must be non-negative");
  const Wavenumbers k(n, grid.length);
  const double dt = grid.dt;
  const int cut = n / 3;

  std::vector<double> k2(spectral::half_size(n));
  std::vector<char> keep(k2.size());
  for (std::int64_t r = 0; r < std::int64_t(k2.size()); ++r) {
    int ix, iy, iz;
    k.unpack(r, ix, iy, iz);
    k2[r] = k.k[ix] * k.k[ix] + k.k[iy] * k.k[iy] + k.k[iz] * k.k[iz];
    const int my = iy <= n / 2 ? iy : n - iy, mz = iz <= n / 2 ? iz : n - iz;
    keep[r] = ix <= cut && my <= cut && mz <= cut;
  }
  std::optional<Spectrum> fhat;
  if (force) fhat = spectral::forward(*force, n);

  auto rhs = [&](const Spectrum& uh) {
    const Slice u = spectral::inverse(uh, n);
    const Slice w = spectral::inverse(spectral::curl(uh, k), n);
    Slice cross(u.rows(), 3);
    cross.col(0) = u.col(1) * w.col(2) - u.col(2) * w.col(1);
    cross.col(1) = u.col(2) * w.col(0) - u.col(0) * w.col(2);
    cross.col(2) = u.col(0) * w.col(1) - u.col(1) * w.col(0);
    Spectrum N = spectral::forward(cross, n);
    if (fhat) N += *fhat;
    for (std::int64_t r = 0; r < N.rows(); ++r)
      if (!keep[r]) N.row(r).setZero();
    return spectral::project(N, k);
  };
  auto decay = [&](Spectrum s, double tau) {
    for (std::int64_t r = 0; r < s.rows(); ++r) s.row(r) *= std::exp(-nu * k2[r] * tau);
    return s;
  };

  Grid out_grid = grid;
  out_grid.nt = steps / opts.save_every + 1;
  out_grid.dt = dt * opts.save_every;
  FieldStack st;
  st.grid = out_grid;
  st.u = SampledField(out_grid, 3);
  if (opts.store_pressure) st.p = SampledField(out_grid, 1);
  if (force) {
    st.f = SampledField(out_grid, 3);
    for (int j = 0; j < out_grid.nt; ++j) st.f->slice(j) = *force;
  }
  const Slice* fptr = force ? &*force : nullptr;
  auto store = [&](int j, const Slice& u) {
    st.u.slice(j) = u;
    if (opts.store_pressure) st.p->slice(j) = pressure_from_velocity(u, fptr, grid, true);
  };

  Spectrum uh = spectral::project(spectral::forward(u0, n), k);
  store(0, spectral::inverse(uh, n));
  const double h = grid.h();
  for (int step = 0; step < steps; ++step) {
    const Slice u = spectral::inverse(uh, n);
    if (!u.allFinite()) throw NumericError("non-finite velocity at step " + std::to_string(step));
    const double umax = u.square().rowwise().sum().sqrt().maxCoeff();
    if (umax * dt / h > opts.cfl_max) {
      std::ostringstream os;
      os << "CFL violated at step " << step << ": max|u| dt/h = " << umax * dt / h << " > " << opts.cfl_max;
      throw NumericError(os.str());
    }
    const Spectrum k1 = rhs(uh);
    const Spectrum k2s = rhs(decay(uh + 0.5 * dt * k1, 0.5 * dt));
    const Spectrum k3 = rhs(decay(uh, 0.5 * dt) + 0.5 * dt * k2s);
    const Spectrum k4 = rhs(decay(uh, dt) + dt * decay(k3, 0.5 * dt));
    uh = decay(uh, dt) + (dt / 6.0) * (decay(k1, dt) + 2.0 * decay(k2s + k3, 0.5 * dt) + k4);
    if ((step + 1) % opts.save_every == 0) {
      const Slice un = spectral::inverse(uh, n);
      if (!un.allFinite()) throw NumericError("non-finite velocity at step " + std::to_string(step + 1));
      store((step + 1) / opts.save_every, un);
    }
  }
  return st;
}

// ----------------------------------------------------------- energy ledger

namespace {

struct PhiValues {
  Eigen::ArrayXd s, lap;     // spatial factor and its Laplacian
  Eigen::ArrayXXd grad;      // cells x 3
};

PhiValues spatial_phi(const PhiSpec& phi, const Grid& g) {
  PhiValues v{Eigen::ArrayXd(g.cells()), Eigen::ArrayXd(g.cells()), Eigen::ArrayXXd(g.cells(), 3)};
  const double k = base_wavenumber(g);
  for (std::int64_t c = 0; c < g.cells(); ++c) {
    const Eigen::Vector3d x = g.node(c);
    if (phi.shape == PhiShape::periodic_cosine) {
      const int m = phi.power;
      double f[3], d1[3], d2[3];
      for (int a = 0; a < 3; ++a) {
        const double th = k * (x[a] - phi.center[a]);
        const double b = 0.5 * (1 + std::cos(th));
        const double db = -0.5 * k * std::sin(th);
        const double ddb = -0.5 * k * k * std::cos(th);
        f[a] = std::pow(b, m);
        d1[a] = m * std::pow(b, m - 1) * db;
        d2[a] = m * (m - 1) * (m >= 2 ? std::pow(b, m - 2) : 0.0) * db * db + m * std::pow(b, m - 1) * ddb;
      }
      v.s[c] = f[0] * f[1] * f[2];
      v.grad(c, 0) = d1[0] * f[1] * f[2];
      v.grad(c, 1) = f[0] * d1[1] * f[2];
      v.grad(c, 2) = f[0] * f[1] * d1[2];
      v.lap[c] = d2[0] * f[1] * f[2] + f[0] * d2[1] * f[2] + f[0] * f[1] * d2[2];
    } else {
      const Eigen::Vector3d d = periodic_offset(g, phi.center, x);
      const double R = phi.radius;
      const double q = d.squaredNorm() / (R * R);
      if (q >= 1) {
        v.s[c] = v.lap[c] = 0.0;
        v.grad.row(c).setZero();
        continue;
      }
      // b(q) = exp(1 - 1/(1-q)), q = |d|^2/R^2
      const double e = std::exp(1 - 1 / (1 - q));
      const double bq = -e / ((1 - q) * (1 - q));
      const double bqq = e / std::pow(1 - q, 4) - 2 * e / std::pow(1 - q, 3);
      v.s[c] = e;
      for (int a = 0; a < 3; ++a) v.grad(c, a) = bq * 2 * d[a] / (R * R);
      v.lap[c] = bqq * 4 * d.squaredNorm() / std::pow(R, 4) + bq * 6 / (R * R);
    }
  }
  return v;
}

double ramp_up(const PhiSpec& p, double x) {
  if (p.ramp_profile == CutoffProfile::smooth) return smooth_step(x);
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (10 - 15 * x + 6 * x * x);
}

double ramp_up_derivative(const PhiSpec& p, double x) {
  if (p.ramp_profile == CutoffProfile::smooth) return smooth_step_derivative(x);
  if (x <= 0 || x >= 1) return 0.0;
  return 30 * x * x * (1 - x) * (1 - x);
}

double psi(const PhiSpec& p, double t) {
  double v = 1.0;
  if (p.ramp > 0) {
    v *= ramp_up(p, (t - (p.t_on - p.ramp)) / p.ramp);
    if (std::isfinite(p.t_off)) v *= 1 - ramp_up(p, (t - p.t_off) / p.ramp);
  } else if (t < p.t_on || t > p.t_off) {
    v = 0.0;
  }
  return v;
}

double psi_dot(const PhiSpec& p, double t) {
  if (!(p.ramp > 0)) return 0.0;
  const double up = ramp_up(p, (t - (p.t_on - p.ramp)) / p.ramp);
  const double dup = ramp_up_derivative(p, (t - (p.t_on - p.ramp)) / p.ramp) / p.ramp;
  if (!std::isfinite(p.t_off)) return dup;
  const double down = 1 - ramp_up(p, (t - p.t_off) / p.ramp);
  const double ddown = -ramp_up_derivative(p, (t - p.t_off) / p.ramp) / p.ramp;
  return dup * down + up * ddown;
}

}  // namespace

EnergyLedger local_energy_residual(const FieldStack& s, const PhiSpec& phi, double t_start, double t_eval,
                                   const EnergyOptions& opts) {
  const Grid& g = s.grid;
  if (!s.ns_solution) throw ValidationError("energy ledger refuses fields marked as non-solutions");
  if (!s.p) throw ValidationError("energy ledger needs the pressure field");
  const double support_start = phi.ramp > 0 ? phi.t_on - phi.ramp : phi.t_on;
  const double tol = 1e-9 * g.dt;
  if (support_start <= g.t0 + tol)
    throw ValidationError("test function support touches the initial time of the extent");
  if (std::isfinite(phi.t_off) && phi.t_off + phi.ramp >= g.t_end() - tol)
    throw ValidationError("test function support touches the final time of the extent");
  if (t_start > support_start + tol) throw ValidationError("t_start must precede the support of phi");
  if (t_start < g.t0 - tol || t_eval > g.t_end() + tol || t_eval <= t_start)
    throw ValidationError("energy window outside the time extent");
  const int je = nearest_slice(g, t_eval);
  if (std::abs(g.time(je) - t_eval) > 1e-6 * g.dt) throw ValidationError("t_eval must coincide with a stored slice");

  EnergyLedger L;
  L.phi = phi;
  L.t_start = t_start;
  L.t_eval = t_eval;
  const PhiValues pv = spatial_phi(phi, g);
  const double h3 = std::pow(g.h(), 3);
  const TimeQuadrature tq = time_quadrature(g, t_start, t_eval);
  for (std::size_t i = 0; i < tq.slices.size(); ++i) {
    const int j = tq.slices[i];
    const double t = g.time(j), w = tq.weights[i] * h3;
    const double ps = psi(phi, t), pd = psi_dot(phi, t);
    if (ps == 0.0 && pd == 0.0) continue;
    const Slice& u = s.u.slice(j);
    const Eigen::ArrayXd u2 = u.square().rowwise().sum();
    const Slice grad = spectral::gradient(u, g);
    const Eigen::ArrayXd g2 = grad.square().rowwise().sum();
    const Eigen::ArrayXd udotgrad = (u * pv.grad).rowwise().sum();
    L.dissipation += w * 2 * opts.nu * (g2 * pv.s).sum() * ps;
    L.time_term += w * (u2 * pv.s).sum() * pd;
    L.diffusion += w * opts.nu * (u2 * pv.lap).sum() * ps;
    L.transport += w * ((u2 + 2 * s.p->slice(j).col(0)) * udotgrad).sum() * ps;
    if (s.f) L.force += w * 2 * ((s.f->slice(j) * u).rowwise().sum() * pv.s).sum() * ps;
  }
  L.dissipation *= opts.dissipation_scale;
  L.kinetic = h3 * (s.u.slice(je).square().rowwise().sum() * pv.s).sum() * psi(phi, g.time(je));
  L.lhs = L.kinetic + L.dissipation;
  L.rhs = L.time_term + L.diffusion + L.transport + L.force;
  L.residual = L.rhs - L.lhs;
  L.scale = std::abs(L.kinetic) + std::abs(L.dissipation) + std::abs(L.time_term) + std::abs(L.diffusion) +
            std::abs(L.transport) + std::abs(L.force);
  L.relative_residual = L.scale > 0 ? L.residual / L.scale : 0.0;
  L.satisfied = L.residual >= -opts.tolerance * L.scale;
  return L;
}

}  // namespace nsrlab
