#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nsrlab/fieldlab.hpp"
#include "nsrlab/quadrature.hpp"
#include "nsrlab/spectral.hpp"

namespace nsrlab {

enum class Quantity {
  velocity,
  pressure,
  force,
  velocity_gradient,   // column 3i+j holds d_j u_i
  vorticity,
  vorticity_gradient,  // column 3i+j holds d_j w_i
  vorticity_curl
};

// Derived quantities of one time slice, computed spectrally on first use.
class SliceView {
 public:
  SliceView(const FieldStack& stack, int j);
  const Slice& get(Quantity q);
  const spectral::Spectrum& velocity_spectrum();
  const spectral::Spectrum& vorticity_spectrum();
  const spectral::Wavenumbers& wavenumbers() const { return k_; }

 private:
  const FieldStack& stack_;
  int j_;
  spectral::Wavenumbers k_;
  std::optional<spectral::Spectrum> u_hat_, w_hat_;
  std::map<Quantity, Slice> cache_;
};

struct NormOptions {
  int subsamples = 4;
  double floor_cells = kResolutionFloorCells;
};

// ||F - c||_{L^{spatial,temporal}(Q_{x,t,r})}, c the ball mean when centered.
struct NormRequest {
  Quantity quantity = Quantity::velocity;
  bool centered = false;
  Exponent spatial;
  Exponent temporal;
  double r = 0.0;
};

// Visits every needed slice once; results in request order.
std::vector<double> evaluate_norms(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                   const std::vector<NormRequest>& requests,
                                   const NormOptions& opts = {});

double mixed_norm(const SampledField& field, const Grid& grid, const ParabolicCylinder& q,
                  const Exponent& p, const Exponent& qt, const NormOptions& opts = {});

// Weighted mean over B_{x,r} at the slice nearest to s.
Eigen::VectorXd spatial_average(const SampledField& field, const Grid& grid,
                                const Eigen::Vector3d& x, double r, double s,
                                const NormOptions& opts = {});

// ------------------------------------------------------------- functionals

enum class Functional { A, E, C, Ctilde, D, Gtilde, G1, W, W1, Wtilde1 };

const char* to_string(Functional f);
Functional parse_functional(const std::string& name);
const std::vector<Functional>& all_functionals();

// Pair on the line 3/p + 2/q = 3 used by Gtilde (through p*), G1, W, W1, Wtilde1 (through p#).
struct FunctionalExponents {
  Exponent p;
  Exponent q;
  FunctionalExponents();  // (3/2, 2)
  FunctionalExponents(Exponent p_, Exponent q_);
  static FunctionalExponents from_q(const Exponent& q);
  std::optional<Exponent> p_star() const;
  std::optional<Exponent> p_sharp() const;
};

// Why a functional is undefined for these exponents or fields, empty when defined.
std::string functional_unavailable(Functional f, const FieldStack& stack,
                                   const FunctionalExponents& e);

double functional(Functional f, const FieldStack& stack, const ParabolicCylinder& q,
                  const FunctionalExponents& e = {}, const NormOptions& opts = {});

struct FunctionalRequest {
  Functional name;
  double r;
};
// Batched form of functional(); throws on the first unavailable entry.
std::vector<double> evaluate_functionals(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                         const std::vector<FunctionalRequest>& requests,
                                         const FunctionalExponents& e = {},
                                         const NormOptions& opts = {});

// --------------------------------------------------------------- criteria

struct CriterionOptions {
  bool centered_velocity = true;  // u - (u)_r rather than u
  bool use_curl_w = false;        // curl w in place of grad w (needs p# > 1)
};

// Power of r multiplying the norm: -(3/p+2/q-c) with the kind's own p.
double criterion_r_exponent(CriterionKind kind, const Exponent& p, const Exponent& q);

std::vector<double> criterion_ladder(CriterionKind kind, const FieldStack& stack,
                                     const Eigen::Vector3d& x, double t,
                                     const std::vector<double>& radii, const Exponent& p,
                                     const Exponent& q, const CriterionOptions& copts = {},
                                     const NormOptions& opts = {});

double criterion_quantity(CriterionKind kind, const FieldStack& stack, const ParabolicCylinder& q,
                          const Exponent& p, const Exponent& qt,
                          const CriterionOptions& copts = {}, const NormOptions& opts = {});

// ------------------------------------------------------------------ Morrey

struct MorreyParams {
  double gamma = 1.0;
  int center_stride = 4;       // lattice stride in cells
  std::vector<double> radii;   // empty: r_max * ratio^k down to the floor
  double r_max = 0.0;          // 0: min(L/4, sqrt(time extent))
  double ratio = 0.5;
  NormOptions norm;
};

struct MorreyResult {
  double value = 0.0;
  ParabolicCylinder maximizer;
  std::int64_t sample_cylinders = 0;
};

MorreyResult morrey_norm(const SampledField& f, const MorreyParams& params, const Grid& grid);

// ------------------------------------------------------------------ ladder

struct FunctionalLadder {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  double t = 0.0;
  std::vector<double> radii;
  std::vector<std::map<Functional, double>> values;
  FunctionalExponents exponents;
  std::vector<std::string> omissions;
  std::vector<std::string> warnings;
};

FunctionalLadder build_ladder(const FieldStack& stack, const Eigen::Vector3d& x, double t, double r0,
                              double theta, int k_max, const FunctionalExponents& e = {},
                              const NormOptions& opts = {});

// Radii r0*ratio^k that clear the floor and fit the time extent; drops the rest into warnings.
std::vector<double> feasible_radii(const Grid& grid, double t, double r0, double ratio, int k_max,
                                   double floor_cells, std::vector<std::string>* warnings);

}  // namespace nsrlab
