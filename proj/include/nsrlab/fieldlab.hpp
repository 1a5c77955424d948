#pragma once

#include <Eigen/Dense>
#include <boost/rational.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nsrlab/errors.hpp"

namespace nsrlab {

// Smallest admissible quadrature radius, in cells.
inline constexpr double kResolutionFloorCells = 4.0;

// Cubic periodic grid. Node i sits at x = i*h, slice j at t = t0 + j*dt.
struct Grid {
  int n = 0;
  int nt = 0;
  double length = 0.0;
  double dt = 0.0;
  double t0 = 0.0;

  double h() const { return length / n; }
  double t_end() const { return t0 + (nt - 1) * dt; }
  double time(int j) const { return t0 + j * dt; }
  std::int64_t cells() const { return std::int64_t(n) * n * n; }
  std::int64_t index(int i, int j, int k) const { return (std::int64_t(k) * n + j) * n + i; }
  int wrap(int i) const { return ((i % n) + n) % n; }
  Eigen::Vector3d node(std::int64_t c) const;

  bool operator==(const Grid&) const = default;
};

Grid make_grid(int nx, int nt, double length, double dt, double t0);
// Rejects nx != ny or ny != nz.
Grid make_grid(int nx, int ny, int nz, int nt, double length, double dt, double t0);

// One time slice: rows are cells (x fastest), columns are components.
using Slice = Eigen::ArrayXXd;

class SampledField {
 public:
  SampledField() = default;
  SampledField(const Grid& grid, int components);

  int components() const { return components_; }
  int slices() const { return int(slices_.size()); }
  Slice& slice(int j) { return slices_.at(j); }
  const Slice& slice(int j) const { return slices_.at(j); }
  bool all_finite() const;
  double max_abs() const;

 private:
  int components_ = 0;
  std::vector<Slice> slices_;
};

struct FieldStack {
  Grid grid;
  SampledField u;
  std::optional<SampledField> p;
  std::optional<SampledField> w;
  std::optional<SampledField> f;
  bool w_derived = false;
  bool ns_solution = true;

  // Shapes and finiteness; throws ValidationError or NumericError.
  void validate() const;
};

struct ParabolicCylinder {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  double t = 0.0;
  double r = 0.0;
};

// Throws if the cylinder leaves the time extent or r < floor_cells*h.
void check_cylinder(const Grid& grid, const ParabolicCylinder& q,
                    double floor_cells = kResolutionFloorCells);

// Minimal-image distance on the periodic box.
double periodic_distance(const Grid& grid, const Eigen::Vector3d& a, const Eigen::Vector3d& b);
Eigen::Vector3d periodic_offset(const Grid& grid, const Eigen::Vector3d& from,
                                const Eigen::Vector3d& to);

// ---------------------------------------------------------------- exponents

using Rational = boost::rational<std::int64_t>;

// Lebesgue exponent in [1, inf], stored as its reciprocal so inf is exact.
class Exponent {
 public:
  Exponent() : inv_(1) {}
  Exponent(std::int64_t num, std::int64_t den = 1);
  explicit Exponent(Rational value);

  static Exponent infinity();
  static Exponent from_reciprocal(Rational inv);
  // Accepts "inf", integers, fractions "a/b" and decimals "1.25".
  static Exponent parse(const std::string& text);

  bool is_infinite() const { return inv_ == Rational(0); }
  Rational reciprocal() const { return inv_; }
  Rational value() const;  // throws for inf
  double to_double() const;
  std::string str() const;

  bool operator==(const Exponent&) const = default;

 private:
  Rational inv_;
};

enum class CriterionKind { velocity, velocity_gradient, vorticity, vorticity_gradient };

const char* to_string(CriterionKind kind);
CriterionKind parse_kind(const std::string& name);

struct ExponentPair {
  Exponent p;
  Exponent q;
  CriterionKind kind = CriterionKind::velocity;
};

struct RegionVerdict {
  bool admissible = false;
  Rational scaling_sum;  // 3/p + 2/q with the kind's own p (p*, p or p#)
  bool on_lower_boundary = false;
  bool on_upper_boundary = false;
  std::string rejection_reason;
};

// Region test of Theorem 1.1; p is p* for velocity and p# for vorticity_gradient.
RegionVerdict classify_exponents(CriterionKind kind, const Exponent& p, const Exponent& q);

struct ConjugateExponents {
  std::optional<Exponent> p_star;
  std::optional<Exponent> p_sharp;
  std::string note;
};

// 1/p* = 1/p - 1/3 for p < 3; p# = 3p/(3+p) kept only inside [1, 3/2].
ConjugateExponents conjugate_exponents(const Exponent& p);
Exponent p_from_p_star(const Exponent& p_star);
Exponent p_from_p_sharp(const Exponent& p_sharp);

// -------------------------------------------------------------------- cutoff

enum class CutoffProfile { polynomial_c2, smooth };

// Radial cutoff: 1 on B_{plateau*rho}, 0 outside B_rho.
class Cutoff {
 public:
  explicit Cutoff(double rho, double plateau_fraction = 0.75,
                  CutoffProfile profile = CutoffProfile::polynomial_c2);

  double rho() const { return rho_; }
  double plateau_fraction() const { return plateau_; }
  double plateau_radius() const { return plateau_ * rho_; }
  CutoffProfile profile() const { return profile_; }
  double operator()(double distance) const;
  double derivative(double distance) const;         // d phi / d|x|
  double second_derivative(double distance) const;  // d^2 phi / d|x|^2
  // Gradient and Hessian at offset xi = x - centre.
  Eigen::Vector3d gradient(const Eigen::Vector3d& xi) const;
  Eigen::Matrix3d hessian(const Eigen::Vector3d& xi) const;

 private:
  double rho_;
  double plateau_;
  CutoffProfile profile_;
};

// C-infinity step: 0 for x <= 0, 1 for x >= 1.
double smooth_step(double x);
double smooth_step_derivative(double x);
double smooth_step_second_derivative(double x);

}  // namespace nsrlab
