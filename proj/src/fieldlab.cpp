#include "nsrlab/fieldlab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace nsrlab {

Eigen::Vector3d Grid::node(std::int64_t c) const {
  const std::int64_t i = c % n;
  const std::int64_t j = (c / n) % n;
  const std::int64_t k = c / (std::int64_t(n) * n);
  return Eigen::Vector3d(double(i), double(j), double(k)) * h();
}

Grid make_grid(int nx, int nt, double length, double dt, double t0) {
  return make_grid(nx, nx, nx, nt, length, dt, t0);
}

Grid make_grid(int nx, int ny, int nz, int nt, double length, double dt, double t0) {
  if (nx != ny || ny != nz) {
    std::ostringstream os;
    os << "grid must be cubic, got " << nx << "x" << ny << "x" << nz;
    throw ValidationError(os.str());
  }
  if (nx < 8) throw ValidationError("grid needs nx >= 8, got " + std::to_string(nx));
  if (nt < 2) throw ValidationError("grid needs nt >= 2, got " + std::to_string(nt));
  if (!(length > 0) || !std::isfinite(length))
    throw ValidationError("domain length must be positive and finite");
  if (!(dt > 0) || !std::isfinite(dt)) throw ValidationError("dt must be positive and finite");
  if (!std::isfinite(t0)) throw ValidationError("t0 must be finite");
  return Grid{nx, nt, length, dt, t0};
}

SampledField::SampledField(const Grid& grid, int components)
    : components_(components),
      slices_(grid.nt, Slice::Zero(grid.cells(), components)) {
  if (components < 1) throw ValidationError("field needs at least one component");
}

bool SampledField::all_finite() const {
  return std::all_of(slices_.begin(), slices_.end(),
                     [](const Slice& s) { return s.allFinite(); });
}

double SampledField::max_abs() const {
  double m = 0.0;
  for (const auto& s : slices_) m = std::max(m, s.abs().maxCoeff());
  return m;
}

namespace {

void check_field(const Grid& g, const SampledField& f, int comps, const char* name) {
  if (f.components() != comps || f.slices() != g.nt)
    throw ValidationError(std::string("field ") + name + " does not match the grid");
  for (int j = 0; j < f.slices(); ++j)
    if (f.slice(j).rows() != g.cells())
      throw ValidationError(std::string("field ") + name + " has the wrong cell count");
  if (!f.all_finite()) throw NumericError(std::string("field ") + name + " has non-finite samples");
}

}  // namespace

void FieldStack::validate() const {
  check_field(grid, u, 3, "u");
  if (p) check_field(grid, *p, 1, "p");
  if (w) check_field(grid, *w, 3, "w");
  if (f) check_field(grid, *f, 3, "f");
}

void check_cylinder(const Grid& grid, const ParabolicCylinder& q, double floor_cells) {
  if (!(q.r > 0)) throw ValidationError("cylinder radius must be positive");
  if (q.r < floor_cells * grid.h() * (1 - 1e-12)) {
    std::ostringstream os;
    os << "radius " << q.r << " is below the resolution floor " << floor_cells << "h = "
       << floor_cells * grid.h();
    throw ValidationError(os.str());
  }
  const double tol = 1e-9 * grid.dt;
  if (q.t - q.r * q.r < grid.t0 - tol || q.t > grid.t_end() + tol) {
    std::ostringstream os;
    os << "cylinder (" << q.t - q.r * q.r << ", " << q.t << ") leaves the time extent ["
       << grid.t0 << ", " << grid.t_end() << "]";
    throw ValidationError(os.str());
  }
}

Eigen::Vector3d periodic_offset(const Grid& grid, const Eigen::Vector3d& from,
                                const Eigen::Vector3d& to) {
  Eigen::Vector3d d = to - from;
  const double L = grid.length;
  for (int a = 0; a < 3; ++a) d[a] -= L * std::nearbyint(d[a] / L);
  return d;
}

double periodic_distance(const Grid& grid, const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return periodic_offset(grid, a, b).norm();
}

// ---------------------------------------------------------------- exponents

Exponent::Exponent(std::int64_t num, std::int64_t den) : Exponent(Rational(num, den)) {}

Exponent::Exponent(Rational value) {
  if (value < 1) throw ValidationError("exponent must lie in [1, inf]");
  inv_ = 1 / value;
}

Exponent Exponent::infinity() { return from_reciprocal(Rational(0)); }

Exponent Exponent::from_reciprocal(Rational inv) {
  if (inv < 0 || inv > 1) throw ValidationError("exponent must lie in [1, inf]");
  Exponent e;
  e.inv_ = inv;
  return e;
}

Exponent Exponent::parse(const std::string& text) {
  std::string s = text;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "inf" || s == "infinity") return infinity();
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      return Exponent(std::stoll(s.substr(0, slash)), std::stoll(s.substr(slash + 1)));
    }
    if (auto dot = s.find('.'); dot != std::string::npos) {
      std::string digits = s.substr(0, dot) + s.substr(dot + 1);
      std::int64_t den = 1;
      for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
      return Exponent(std::stoll(digits), den);
    }
    return Exponent(std::stoll(s));
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse exponent '" + text + "'");
  }
}

Rational Exponent::value() const {
  if (is_infinite()) throw ValidationError("infinite exponent has no rational value");
  return 1 / inv_;
}

double Exponent::to_double() const {
  if (is_infinite()) return std::numeric_limits<double>::infinity();
  return double(inv_.denominator()) / double(inv_.numerator());
}

std::string Exponent::str() const {
  if (is_infinite()) return "inf";
  Rational v = value();
  if (v.denominator() == 1) return std::to_string(v.numerator());
  return std::to_string(v.numerator()) + "/" + std::to_string(v.denominator());
}

const char* to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::velocity: return "velocity";
    case CriterionKind::velocity_gradient: return "velocity_gradient";
    case CriterionKind::vorticity: return "vorticity";
    case CriterionKind::vorticity_gradient: return "vorticity_gradient";
  }
  return "?";
}

CriterionKind parse_kind(const std::string& name) {
  for (auto k : {CriterionKind::velocity, CriterionKind::velocity_gradient,
                 CriterionKind::vorticity, CriterionKind::vorticity_gradient})
    if (name == to_string(k)) return k;
  throw ValidationError("unknown criterion kind '" + name + "'");
}

RegionVerdict classify_exponents(CriterionKind kind, const Exponent& p, const Exponent& q) {
  RegionVerdict v;
  v.scaling_sum = 3 * p.reciprocal() + 2 * q.reciprocal();
  int lo = 0;
  switch (kind) {
    case CriterionKind::velocity: lo = 1; break;
    case CriterionKind::velocity_gradient:
    case CriterionKind::vorticity: lo = 2; break;
    case CriterionKind::vorticity_gradient: lo = 3; break;
  }
  const Rational s = v.scaling_sum;
  v.on_lower_boundary = s == Rational(lo);
  v.on_upper_boundary = s == Rational(lo + 1);
  if (s < lo || s > lo + 1) {
    std::ostringstream os;
    os << "3/p+2/q = " << s.numerator() << "/" << s.denominator() << " outside [" << lo << ", "
       << lo + 1 << "] for " << to_string(kind);
    v.rejection_reason = os.str();
    return v;
  }
  if (kind == CriterionKind::vorticity && p.reciprocal() == Rational(1) && q.is_infinite()) {
    v.rejection_reason = "(p,q) = (1,inf) is excluded for the vorticity criterion";
    return v;
  }
  v.admissible = true;
  return v;
}

ConjugateExponents conjugate_exponents(const Exponent& p) {
  ConjugateExponents c;
  const Rational third(1, 3);
  const Rational inv_star = p.reciprocal() - third;
  if (inv_star > 0) {
    c.p_star = Exponent::from_reciprocal(inv_star);
  } else {
    c.note = "p* undefined for p >= 3";
  }
  const Rational inv_sharp = p.reciprocal() + third;
  if (inv_sharp >= Rational(2, 3) && inv_sharp <= 1) {
    c.p_sharp = Exponent::from_reciprocal(inv_sharp);
  } else {
    if (!c.note.empty()) c.note += "; ";
    c.note += "p# outside [1, 3/2]";
  }
  return c;
}

Exponent p_from_p_star(const Exponent& p_star) {
  return Exponent::from_reciprocal(p_star.reciprocal() + Rational(1, 3));
}

Exponent p_from_p_sharp(const Exponent& p_sharp) {
  const Rational inv = p_sharp.reciprocal() - Rational(1, 3);
  if (inv <= 0) throw ValidationError("p# >= 3 has no finite p");
  return Exponent::from_reciprocal(inv);
}

// -------------------------------------------------------------------- cutoff

double smooth_step(double x) {
  if (x <= 0) return 0.0;
  if (x >= 1) return 1.0;
  const double a = std::exp(-1.0 / x);
  const double b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

double smooth_step_derivative(double x) {
  if (x <= 0 || x >= 1) return 0.0;
  const double a = std::exp(-1.0 / x);
  const double b = std::exp(-1.0 / (1.0 - x));
  const double da = a / (x * x);
  const double db = -b / ((1 - x) * (1 - x));
  return (da * b - a * db) / ((a + b) * (a + b));
}

double smooth_step_second_derivative(double x) {
  if (x <= 0 || x >= 1) return 0.0;
  // S = 1/(1+E), E = exp(g), g = 1/x - 1/(1-x)
  const double g = 1.0 / x - 1.0 / (1.0 - x);
  if (std::abs(g) > 300) return 0.0;
  const double E = std::exp(g);
  const double g1 = -1.0 / (x * x) - 1.0 / ((1 - x) * (1 - x));
  const double g2 = 2.0 / (x * x * x) - 2.0 / std::pow(1 - x, 3);
  const double d = 1 + E;
  return -E * (g1 * g1 + g2) / (d * d) + 2 * E * E * g1 * g1 / (d * d * d);
}

Cutoff::Cutoff(double rho, double plateau_fraction, CutoffProfile profile)
    : rho_(rho), plateau_(plateau_fraction), profile_(profile) {
  if (!(rho > 0)) throw ValidationError("cutoff radius must be positive");
  if (!(plateau_fraction > 0 && plateau_fraction < 1))
    throw ValidationError("plateau fraction must lie in (0,1)");
}

double Cutoff::operator()(double d) const {
  const double s = (d - plateau_ * rho_) / ((1 - plateau_) * rho_);
  if (s <= 0) return 1.0;
  if (s >= 1) return 0.0;
  if (profile_ == CutoffProfile::smooth) return 1.0 - smooth_step(s);
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double Cutoff::derivative(double d) const {
  const double w = (1 - plateau_) * rho_;
  const double s = (d - plateau_ * rho_) / w;
  if (s <= 0 || s >= 1) return 0.0;
  if (profile_ == CutoffProfile::smooth) return -smooth_step_derivative(s) / w;
  return -30.0 * s * s * (1 - s) * (1 - s) / w;
}

double Cutoff::second_derivative(double d) const {
  const double w = (1 - plateau_) * rho_;
  const double s = (d - plateau_ * rho_) / w;
  if (s <= 0 || s >= 1) return 0.0;
  if (profile_ == CutoffProfile::smooth) return -smooth_step_second_derivative(s) / (w * w);
  return -60.0 * s * (1 - s) * (1 - 2 * s) / (w * w);
}

Eigen::Vector3d Cutoff::gradient(const Eigen::Vector3d& xi) const {
  const double d = xi.norm();
  if (d == 0.0) return Eigen::Vector3d::Zero();
  return derivative(d) * xi / d;
}

Eigen::Matrix3d Cutoff::hessian(const Eigen::Vector3d& xi) const {
  const double d = xi.norm();
  if (d == 0.0 || d <= plateau_ * rho_ || d >= rho_) return Eigen::Matrix3d::Zero();
  const Eigen::Vector3d e = xi / d;
  const double f1 = derivative(d), f2 = second_derivative(d);
  return f2 * e * e.transpose() + (f1 / d) * (Eigen::Matrix3d::Identity() - e * e.transpose());
}

}  // namespace nsrlab
