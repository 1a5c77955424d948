#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "nsrlab/fieldlab.hpp"

namespace nsrlab {

enum class FlowFamily { abc, single_mode_beltrami, homogeneous_minus_one, random_solenoidal };

const char* to_string(FlowFamily f);
FlowFamily parse_family(const std::string& name);

struct FlowSpec {
  FlowFamily family = FlowFamily::abc;
  double A = 1.0, B = 1.0, C = 1.0;  // abc amplitudes
  double nu = 0.1;
  double amplitude = 1.0;  // swirl strength (homogeneous), rms speed (random), mode amplitude
  int wavenumber = 1;      // single mode k; random: max |m| per axis
  std::uint64_t seed = 0;
  double r_moll = 0.0;     // homogeneous core radius, 0 picks 4h
  std::optional<Eigen::Vector3d> center;  // homogeneous centre, default box centre
  bool with_vorticity = false;           // also store w = curl u, marked derived
};

// abc: e^{-nu k^2 t}(A sin kz + C cos ky, B sin kx + A cos kz, C sin ky + B cos kx) with
// k = 2 pi / L, p = -|u|^2/2 minus its box mean.
// homogeneous_minus_one: stationary swirl a m(|xi|) (e3 x xi)/|xi|^2 about the centre, with a
// compensated core m inside r_moll and a smooth taper beyond 0.3 L; p = -|u|^2/2. Not a solution.
// random_solenoidal: band-limited divergence-free modes under heat decay, pressure from
// -Lap p = d_i d_j(u_i u_j). Not a solution either.
FieldStack generate(const FlowSpec& spec, const Grid& grid);

struct RescaleOptions {
  double velocity_power = 1.0;  // test hook: 1 is the true scaling
};

// u -> lambda u(lambda x, lambda^2 t), p -> lambda^2 p, f -> lambda^3 f, w -> lambda^2 w.
// lambda must be a power of two; the time extent shrinks by lambda^2.
FieldStack rescale(const FieldStack& stack, double lambda, const RescaleOptions& opts = {});

struct IntegrateOptions {
  int save_every = 1;
  double cfl_max = 1.0;
  bool store_pressure = true;
};

// Pseudo-spectral solve of u_t - nu Lap u + u.grad u + grad p = f on the grid's box with
// time step grid.dt from t0. Output slices are every save_every steps.
FieldStack ns_integrate(const Slice& u0, const std::optional<Slice>& force, double nu,
                        const Grid& grid, int steps, const IntegrateOptions& opts = {});

enum class PhiShape { periodic_cosine, compact_bump };

// phi(x,t) = s(x) psi(t). psi rises smoothly from 0 at t_on - ramp to 1 at t_on and falls
// from 1 at t_off to 0 at t_off + ramp (t_off = inf keeps the plateau).
struct PhiSpec {
  PhiShape shape = PhiShape::periodic_cosine;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  int power = 4;        // cosine: prod ((1 + cos k(x_i - c_i))/2)^power
  double radius = 1.0;  // bump: exp(1 - 1/(1 - |x-c|^2/radius^2))
  double t_on = 0.0;
  double ramp = 0.0;
  double t_off = INFINITY;
  CutoffProfile ramp_profile = CutoffProfile::polynomial_c2;  // C2 quintic keeps trapezoid error O(dt^2)
};

struct EnergyOptions {
  double nu = 1.0;
  double dissipation_scale = 1.0;  // test hook for the sign convention
  double tolerance = 1e-6;         // relative
};

struct EnergyLedger {
  PhiSpec phi;
  double t_start = 0.0, t_eval = 0.0;
  double kinetic = 0.0, dissipation = 0.0;
  double time_term = 0.0, diffusion = 0.0, transport = 0.0, force = 0.0;
  double lhs = 0.0, rhs = 0.0, residual = 0.0, scale = 0.0, relative_residual = 0.0;
  bool satisfied = true;
};

// Both sides of the local energy inequality integrated over [t_start, t_eval].
EnergyLedger local_energy_residual(const FieldStack& stack, const PhiSpec& phi, double t_start,
                                   double t_eval, const EnergyOptions& opts = {});

}  // namespace nsrlab
