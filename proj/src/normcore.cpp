#include "nsrlab/normcore.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace nsrlab {

// ---------------------------------------------------------------- SliceView

SliceView::SliceView(const FieldStack& stack, int j)
    : stack_(stack), j_(j), k_(stack.grid.n, stack.grid.length) {}

const spectral::Spectrum& SliceView::velocity_spectrum() {
  if (!u_hat_) u_hat_ = spectral::forward(stack_.u.slice(j_), stack_.grid.n);
  return *u_hat_;
}

const spectral::Spectrum& SliceView::vorticity_spectrum() {
  if (!w_hat_) {
    if (stack_.w)
      w_hat_ = spectral::forward(stack_.w->slice(j_), stack_.grid.n);
    else
      w_hat_ = spectral::curl(velocity_spectrum(), k_);
  }
  return *w_hat_;
}

const Slice& SliceView::get(Quantity q) {
  switch (q) {
    case Quantity::velocity: return stack_.u.slice(j_);
    case Quantity::pressure:
      if (!stack_.p) throw ValidationError("pressure field required but absent");
      return stack_.p->slice(j_);
    case Quantity::force:
      if (stack_.f) return stack_.f->slice(j_);
      break;
    case Quantity::vorticity:
      if (stack_.w) return stack_.w->slice(j_);
      break;
    default: break;
  }
  auto it = cache_.find(q);
  if (it != cache_.end()) return it->second;
  const int n = stack_.grid.n;
  Slice s;
  switch (q) {
    case Quantity::force: s = Slice::Zero(stack_.grid.cells(), 3); break;
    case Quantity::velocity_gradient:
      s = spectral::inverse(spectral::gradient(velocity_spectrum(), k_), n);
      break;
    case Quantity::vorticity:
      if (auto g = cache_.find(Quantity::velocity_gradient); g != cache_.end()) {
        const Slice& G = g->second;
        s.resize(G.rows(), 3);
        s.col(0) = G.col(7) - G.col(5);
        s.col(1) = G.col(2) - G.col(6);
        s.col(2) = G.col(3) - G.col(1);
      } else {
        s = spectral::inverse(vorticity_spectrum(), n);
      }
      break;
    case Quantity::vorticity_gradient:
      s = spectral::inverse(spectral::gradient(vorticity_spectrum(), k_), n);
      break;
    case Quantity::vorticity_curl:
      s = spectral::inverse(spectral::curl(vorticity_spectrum(), k_), n);
      break;
    default: break;
  }
  return cache_.emplace(q, std::move(s)).first->second;
}

// ------------------------------------------------------------ norm engine

namespace {

double ipow(double m, double a) {
  if (a == 2.0) return m * m;
  if (a == 3.0) return m * m * m;
  if (a == 1.0) return m;
  return std::pow(m, a);
}

// |F - c| on the mask cells.
std::vector<double> magnitudes(const Slice& F, const BallMask& mask, bool centered) {
  const Eigen::Index comps = F.cols();
  Eigen::VectorXd c = Eigen::VectorXd::Zero(comps);
  if (centered) {
    double vol = 0.0;
    for (std::size_t i = 0; i < mask.cells.size(); ++i) {
      c += mask.weights[i] * F.row(mask.cells[i]).matrix().transpose();
      vol += mask.weights[i];
    }
    c /= vol;
  }
  std::vector<double> m(mask.cells.size());
  for (std::size_t i = 0; i < mask.cells.size(); ++i) {
    double s = 0.0;
    for (Eigen::Index a = 0; a < comps; ++a) {
      const double d = F(mask.cells[i], a) - c[a];
      s += d * d;
    }
    m[i] = std::sqrt(s);
  }
  return m;
}

double spatial_norm(const std::vector<double>& m, const BallMask& mask, const Exponent& a) {
  if (a.is_infinite()) return m.empty() ? 0.0 : *std::max_element(m.begin(), m.end());
  const double ad = a.to_double();
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) s += mask.weights[i] * ipow(m[i], ad);
  return std::pow(s, 1.0 / ad);
}

struct TimePlan {
  std::vector<int> slices;
  std::vector<double> weights;  // empty for sup
  double a = 0.0, b = 0.0;
};

TimePlan time_plan(const Grid& g, double t, double r, const Exponent& b) {
  TimePlan p;
  p.a = t - r * r;
  p.b = t;
  if (b.is_infinite()) {
    p.slices = sup_slices(g, t - r * r, t);
  } else {
    auto tq = time_quadrature(g, t - r * r, t);
    p.slices = tq.slices;
    p.weights = tq.weights;
  }
  return p;
}

double combine(const Grid& g, const TimePlan& plan, const std::vector<double>& norms,
               const Exponent& b) {
  if (b.is_infinite()) return interpolated_sup(g, plan.a, plan.b, plan.slices, norms);
  const double bd = b.to_double();
  double s = 0.0;
  for (std::size_t i = 0; i < norms.size(); ++i) s += plan.weights[i] * ipow(norms[i], bd);
  return std::pow(s, 1.0 / bd);
}

}  // namespace

std::vector<double> evaluate_norms(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                   const std::vector<NormRequest>& requests,
                                   const NormOptions& opts) {
  const Grid& g = stack.grid;
  std::map<double, BallMask> masks;
  std::vector<TimePlan> plans;
  plans.reserve(requests.size());
  std::set<int> needed;
  for (const auto& rq : requests) {
    if (!masks.count(rq.r)) {
      check_cylinder(g, ParabolicCylinder{x, t, rq.r}, opts.floor_cells);
      masks.emplace(rq.r, ball_mask(g, x, rq.r, opts.subsamples));
    }
    plans.push_back(time_plan(g, t, rq.r, rq.temporal));
    needed.insert(plans.back().slices.begin(), plans.back().slices.end());
  }
  // norms[i][k]: spatial norm of request i at its k-th slice
  std::vector<std::vector<double>> norms(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) norms[i].assign(plans[i].slices.size(), 0.0);

  using GroupKey = std::tuple<int, bool, double>;
  for (int j : needed) {
    SliceView view(stack, j);
    std::map<GroupKey, std::vector<double>> mags;
    for (std::size_t i = 0; i < requests.size(); ++i) {
      const auto& sl = plans[i].slices;
      auto it = std::find(sl.begin(), sl.end(), j);
      if (it == sl.end()) continue;
      const auto& rq = requests[i];
      const BallMask& mask = masks.at(rq.r);
      GroupKey key{int(rq.quantity), rq.centered, rq.r};
      auto m = mags.find(key);
      if (m == mags.end())
        m = mags.emplace(key, magnitudes(view.get(rq.quantity), mask, rq.centered)).first;
      norms[i][it - sl.begin()] = spatial_norm(m->second, mask, rq.spatial);
    }
  }
  std::vector<double> out(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i)
    out[i] = combine(g, plans[i], norms[i], requests[i].temporal);
  return out;
}

double mixed_norm(const SampledField& field, const Grid& grid, const ParabolicCylinder& q,
                  const Exponent& p, const Exponent& qt, const NormOptions& opts) {
  if (field.slices() != grid.nt || field.slice(0).rows() != grid.cells())
    throw ValidationError("field does not match the grid");
  BallMask mask = cylinder_mask(grid, q, opts.subsamples, opts.floor_cells);
  TimePlan plan = time_plan(grid, q.t, q.r, qt);
  std::vector<double> norms;
  for (int j : plan.slices) norms.push_back(spatial_norm(magnitudes(field.slice(j), mask, false), mask, p));
  return combine(grid, plan, norms, qt);
}

Eigen::VectorXd spatial_average(const SampledField& field, const Grid& grid,
                                const Eigen::Vector3d& x, double r, double s,
                                const NormOptions& opts) {
  if (field.slices() != grid.nt || field.slice(0).rows() != grid.cells())
    throw ValidationError("field does not match the grid");
  if (r < opts.floor_cells * grid.h() * (1 - 1e-12))
    throw ValidationError("radius below the resolution floor");
  const int j = nearest_slice(grid, s);
  BallMask mask = ball_mask(grid, x, r, opts.subsamples);
  const Slice& F = field.slice(j);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(F.cols());
  for (std::size_t i = 0; i < mask.cells.size(); ++i)
    c += mask.weights[i] * F.row(mask.cells[i]).matrix().transpose();
  return c / mask.volume();
}

// ------------------------------------------------------------- functionals

const char* to_string(Functional f) {
  switch (f) {
    case Functional::A: return "A";
    case Functional::E: return "E";
    case Functional::C: return "C";
    case Functional::Ctilde: return "Ctilde";
    case Functional::D: return "D";
    case Functional::Gtilde: return "Gtilde";
    case Functional::G1: return "G1";
    case Functional::W: return "W";
    case Functional::W1: return "W1";
    case Functional::Wtilde1: return "Wtilde1";
  }
  return "?";
}

const std::vector<Functional>& all_functionals() {
  static const std::vector<Functional> all{Functional::A,  Functional::E,      Functional::C,
                                           Functional::Ctilde, Functional::D,  Functional::Gtilde,
                                           Functional::G1, Functional::W,      Functional::W1,
                                           Functional::Wtilde1};
  return all;
}

Functional parse_functional(const std::string& name) {
  for (auto f : all_functionals())
    if (name == to_string(f)) return f;
  throw ValidationError("unknown functional '" + name + "'");
}

FunctionalExponents::FunctionalExponents() : p(Rational(3, 2)), q(2) {}

FunctionalExponents::FunctionalExponents(Exponent p_, Exponent q_) : p(p_), q(q_) {
  if (3 * p.reciprocal() + 2 * q.reciprocal() != Rational(3))
    throw ValidationError("functional exponents must satisfy 3/p + 2/q = 3, got p=" + p.str() +
                          " q=" + q.str());
}

FunctionalExponents FunctionalExponents::from_q(const Exponent& q) {
  return FunctionalExponents(Exponent::from_reciprocal(1 - Rational(2, 3) * q.reciprocal()), q);
}

std::optional<Exponent> FunctionalExponents::p_star() const { return conjugate_exponents(p).p_star; }
std::optional<Exponent> FunctionalExponents::p_sharp() const {
  return conjugate_exponents(p).p_sharp;
}

namespace {

// F = r^{-r_exp} * ||G||^{power}
struct FunctionalPlan {
  Quantity quantity;
  bool centered;
  Exponent spatial, temporal;
  double power;
  double r_exp;
};

FunctionalPlan plan_for(Functional f, const FunctionalExponents& e) {
  const Exponent two(2), three(3), three_halves(Rational(3, 2));
  switch (f) {
    case Functional::A: return {Quantity::velocity, false, two, Exponent::infinity(), 2, 1};
    case Functional::E: return {Quantity::velocity_gradient, false, two, two, 2, 1};
    case Functional::C: return {Quantity::velocity, false, three, three, 3, 2};
    case Functional::Ctilde: return {Quantity::velocity, true, three, three, 3, 2};
    case Functional::D: return {Quantity::pressure, false, three_halves, three_halves, 1.5, 2};
    case Functional::Gtilde: return {Quantity::velocity, true, *e.p_star(), e.q, 1, 1};
    case Functional::G1: return {Quantity::velocity_gradient, false, e.p, e.q, 1, 1};
    case Functional::W: return {Quantity::vorticity, false, e.p, e.q, 1, 1};
    case Functional::W1: return {Quantity::vorticity_gradient, false, *e.p_sharp(), e.q, 1, 1};
    case Functional::Wtilde1: return {Quantity::vorticity_curl, false, *e.p_sharp(), e.q, 1, 1};
  }
  throw ValidationError("unknown functional");
}

}  // namespace

std::string functional_unavailable(Functional f, const FieldStack& stack,
                                   const FunctionalExponents& e) {
  switch (f) {
    case Functional::D:
      if (!stack.p) return "pressure field absent";
      break;
    case Functional::Gtilde:
      if (!e.p_star()) return "p* undefined for p = " + e.p.str();
      break;
    case Functional::W1:
    case Functional::Wtilde1:
      if (!e.p_sharp()) return "defined only for q <= 2 (p# in [1, 3/2]), got q = " + e.q.str();
      break;
    default: break;
  }
  return {};
}

std::vector<double> evaluate_functionals(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                         const std::vector<FunctionalRequest>& requests,
                                         const FunctionalExponents& e, const NormOptions& opts) {
  std::vector<NormRequest> norms;
  std::vector<FunctionalPlan> plans;
  for (const auto& rq : requests) {
    if (auto why = functional_unavailable(rq.name, stack, e); !why.empty())
      throw ValidationError(std::string(to_string(rq.name)) + ": " + why);
    plans.push_back(plan_for(rq.name, e));
    const auto& p = plans.back();
    norms.push_back({p.quantity, p.centered, p.spatial, p.temporal, rq.r});
  }
  auto vals = evaluate_norms(stack, x, t, norms, opts);
  for (std::size_t i = 0; i < vals.size(); ++i)
    vals[i] = std::pow(vals[i], plans[i].power) / std::pow(requests[i].r, plans[i].r_exp);
  return vals;
}

double functional(Functional f, const FieldStack& stack, const ParabolicCylinder& q,
                  const FunctionalExponents& e, const NormOptions& opts) {
  return evaluate_functionals(stack, q.x, q.t, {{f, q.r}}, e, opts).front();
}

// --------------------------------------------------------------- criteria

double criterion_r_exponent(CriterionKind kind, const Exponent& p, const Exponent& q) {
  const Rational s = 3 * p.reciprocal() + 2 * q.reciprocal();
  int c = 0;
  switch (kind) {
    case CriterionKind::velocity: c = 1; break;
    case CriterionKind::velocity_gradient:
    case CriterionKind::vorticity: c = 2; break;
    case CriterionKind::vorticity_gradient: c = 3; break;
  }
  return -boost::rational_cast<double>(s - c);
}

std::vector<double> criterion_ladder(CriterionKind kind, const FieldStack& stack,
                                     const Eigen::Vector3d& x, double t,
                                     const std::vector<double>& radii, const Exponent& p,
                                     const Exponent& q, const CriterionOptions& copts,
                                     const NormOptions& opts) {
  const RegionVerdict v = classify_exponents(kind, p, q);
  if (!v.admissible) throw ValidationError("inadmissible exponents: " + v.rejection_reason);
  Quantity quantity = Quantity::velocity;
  bool centered = false;
  switch (kind) {
    case CriterionKind::velocity:
      centered = copts.centered_velocity;
      break;
    case CriterionKind::velocity_gradient: quantity = Quantity::velocity_gradient; break;
    case CriterionKind::vorticity: quantity = Quantity::vorticity; break;
    case CriterionKind::vorticity_gradient:
      quantity = Quantity::vorticity_gradient;
      if (copts.use_curl_w) {
        if (p.reciprocal() == Rational(1))
          throw ValidationError("curl w may replace grad w only for p# > 1");
        quantity = Quantity::vorticity_curl;
      }
      break;
  }
  std::vector<NormRequest> rq;
  for (double r : radii) rq.push_back({quantity, centered, p, q, r});
  auto vals = evaluate_norms(stack, x, t, rq, opts);
  const double ex = criterion_r_exponent(kind, p, q);
  for (std::size_t i = 0; i < vals.size(); ++i) vals[i] *= std::pow(radii[i], ex);
  return vals;
}

double criterion_quantity(CriterionKind kind, const FieldStack& stack, const ParabolicCylinder& q,
                          const Exponent& p, const Exponent& qt, const CriterionOptions& copts,
                          const NormOptions& opts) {
  return criterion_ladder(kind, stack, q.x, q.t, {q.r}, p, qt, copts, opts).front();
}

// ------------------------------------------------------------------ Morrey

MorreyResult morrey_norm(const SampledField& f, const MorreyParams& params, const Grid& grid) {
  if (!(params.gamma > 0 && params.gamma <= 2))
    throw ValidationError("Morrey exponent gamma must lie in (0, 2]");
  if (f.slices() != grid.nt || f.slice(0).rows() != grid.cells())
    throw ValidationError("force field does not match the grid");
  if (params.center_stride < 1) throw ValidationError("center stride must be >= 1");
  const double floor_r = params.norm.floor_cells * grid.h();
  const double extent = grid.t_end() - grid.t0;
  std::vector<double> radii = params.radii;
  if (radii.empty()) {
    double r = params.r_max > 0 ? params.r_max : std::min(grid.length / 4, std::sqrt(extent));
    for (; r >= floor_r * (1 - 1e-12); r *= params.ratio) radii.push_back(r);
  }
  MorreyResult res;
  if (f.max_abs() == 0.0) return res;

  const int n = grid.n;
  std::vector<spectral::Spectrum> density_hat(grid.nt);
  for (int j = 0; j < grid.nt; ++j)
    density_hat[j] = spectral::forward(f.slice(j).square().rowwise().sum().eval(), n);

  std::vector<std::int64_t> lattice;
  for (int k = 0; k < n; k += params.center_stride)
    for (int jj = 0; jj < n; jj += params.center_stride)
      for (int i = 0; i < n; i += params.center_stride) lattice.push_back(grid.index(i, jj, k));

  double best = -1.0;
  const double tol = 1e-9 * grid.dt;
  for (double r : radii) {
    if (r < floor_r * (1 - 1e-12)) throw ValidationError("Morrey radius below resolution floor");
    if (r * r > extent + tol) continue;
    BallMask mask = ball_mask(grid, Eigen::Vector3d::Zero(), r, params.norm.subsamples);
    Slice kernel = Slice::Zero(grid.cells(), 1);
    for (std::size_t i = 0; i < mask.cells.size(); ++i) kernel(mask.cells[i], 0) = mask.weights[i];
    const spectral::Spectrum khat = spectral::forward(kernel, n);
    // ball integrals of |f|^2 at lattice centres, per slice
    std::vector<std::vector<double>> ball(grid.nt);
    for (int j = 0; j < grid.nt; ++j) {
      Slice conv = spectral::inverse((density_hat[j] * khat.conjugate()).eval(), n);
      ball[j].resize(lattice.size());
      for (std::size_t c = 0; c < lattice.size(); ++c) ball[j][c] = conv(lattice[c], 0);
    }
    const double scale = std::pow(r, 1 + 2 * params.gamma);
    for (int jc = 0; jc < grid.nt; ++jc) {
      const double tc = grid.time(jc);
      if (tc - r * r < grid.t0 - tol) continue;
      const TimeQuadrature tq = time_quadrature(grid, tc - r * r, tc);
      for (std::size_t c = 0; c < lattice.size(); ++c) {
        double v = 0.0;
        for (std::size_t s = 0; s < tq.slices.size(); ++s) v += tq.weights[s] * ball[tq.slices[s]][c];
        v /= scale;
        ++res.sample_cylinders;
        if (v > best) {
          best = v;
          res.maximizer = ParabolicCylinder{grid.node(lattice[c]), tc, r};
        }
      }
    }
  }
  if (res.sample_cylinders == 0) throw ValidationError("no Morrey cylinder fits the grid");
  res.value = std::sqrt(std::max(best, 0.0));
  return res;
}

// ------------------------------------------------------------------ ladder

std::vector<double> feasible_radii(const Grid& grid, double t, double r0, double ratio, int k_max,
                                   double floor_cells, std::vector<std::string>* warnings) {
  std::vector<double> radii;
  const double floor_r = floor_cells * grid.h();
  const double tol = 1e-9 * grid.dt;
  for (int k = 0; k <= k_max; ++k) {
    const double r = r0 * std::pow(ratio, k);
    std::ostringstream os;
    if (r < floor_r * (1 - 1e-12)) {
      os << "rung " << k << " (r=" << r << ") below resolution floor " << floor_r
         << "; ladder truncated";
      if (warnings) warnings->push_back(os.str());
      break;
    }
    if (t - r * r < grid.t0 - tol) {
      os << "rung " << k << " (r=" << r << ") exceeds the time extent; skipped";
      if (warnings) warnings->push_back(os.str());
      continue;
    }
    radii.push_back(r);
  }
  return radii;
}

FunctionalLadder build_ladder(const FieldStack& stack, const Eigen::Vector3d& x, double t, double r0,
                              double theta, int k_max, const FunctionalExponents& e,
                              const NormOptions& opts) {
  if (!(theta > 0 && theta <= 0.5)) throw ValidationError("ladder ratio theta must lie in (0, 1/2]");
  if (k_max < 0) throw ValidationError("k_max must be >= 0");
  FunctionalLadder lad;
  lad.x = x;
  lad.t = t;
  lad.exponents = e;
  lad.radii = feasible_radii(stack.grid, t, r0, theta, k_max, opts.floor_cells, &lad.warnings);
  if (lad.radii.empty()) throw ValidationError("ladder infeasible: no rung clears the floor and time extent");
  std::vector<Functional> names;
  for (auto f : all_functionals()) {
    if (auto why = functional_unavailable(f, stack, e); !why.empty())
      lad.omissions.push_back(std::string(to_string(f)) + ": " + why);
    else
      names.push_back(f);
  }
  std::vector<FunctionalRequest> rq;
  for (double r : lad.radii)
    for (auto f : names) rq.push_back({f, r});
  auto vals = evaluate_functionals(stack, x, t, rq, e, opts);
  lad.values.resize(lad.radii.size());
  for (std::size_t i = 0; i < rq.size(); ++i) lad.values[i / names.size()][rq[i].name] = vals[i];
  return lad;
}

}  // namespace nsrlab
