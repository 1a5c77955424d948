#include "nsrlab/criteria.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace nsrlab {

namespace {

// Least-squares slope of log y against log x over the positive entries.
std::optional<double> log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0 && y[i] > 0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 2) return std::nullopt;
  const double n = double(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0) return std::nullopt;
  return sxy / sxx;
}

std::vector<double> ladder_radii(const FieldStack& s, double t, const LadderSpec& l,
                                 double floor_cells, std::vector<std::string>* warnings) {
  if (!(l.r0 > 0)) throw ValidationError("ladder r0 must be positive");
  if (!(l.ratio > 0 && l.ratio < 1)) throw ValidationError("ladder ratio must lie in (0, 1)");
  if (l.k_max < 0) throw ValidationError("ladder k_max must be >= 0");
  auto radii = feasible_radii(s.grid, t, l.r0, l.ratio, l.k_max, floor_cells, warnings);
  if (radii.empty()) throw ValidationError("ladder infeasible: no rung clears the floor and time extent");
  return radii;
}

void check_point(const FieldStack& s, double t) {
  const double tol = 1e-9 * s.grid.dt;
  if (t < s.grid.t0 - tol || t > s.grid.t_end() + tol) {
    std::ostringstream os;
    os << "time " << t << " outside [" << s.grid.t0 << ", " << s.grid.t_end() << "]";
    throw ValidationError(os.str());
  }
}

}  // namespace

void CriterionConfig::validate() const {
  if (!(epsilon > 0)) throw ValidationError("epsilon must be positive");
  if (!(theta > 0 && theta < 0.25)) throw ValidationError("theta must lie in (0, 1/4)");
  const RegionVerdict v = classify_exponents(kind, p, q);
  if (!v.admissible) throw ValidationError("inadmissible exponents: " + v.rejection_reason);
}

const char* to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::regular: return "regular";
    case VerdictStatus::flagged: return "flagged";
    case VerdictStatus::inconclusive: return "inconclusive";
  }
  return "?";
}

CriterionVerdict evaluate_criterion(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                    const CriterionConfig& cfg) {
  cfg.validate();
  check_point(stack, t);
  CriterionVerdict v;
  v.threshold_used = cfg.epsilon;
  v.radii = ladder_radii(stack, t, cfg.ladder, cfg.norm.floor_cells, &v.warnings);
  CriterionOptions co{cfg.use_centered_velocity, cfg.use_curl_w};
  v.evidence = criterion_ladder(cfg.kind, stack, x, t, v.radii, cfg.p, cfg.q, co, cfg.norm);
  v.trend_slope = log_slope(v.radii, v.evidence);

  const std::size_t n = v.evidence.size();
  const std::size_t first = n > 3 ? n - 3 : 0;
  v.tail_max = *std::max_element(v.evidence.begin() + first, v.evidence.end());
  const bool tail_above =
      std::all_of(v.evidence.begin() + first, v.evidence.end(), [&](double e) { return e >= cfg.epsilon; });
  if (v.tail_max < cfg.epsilon) {
    v.status = VerdictStatus::regular;
  } else if (n >= 3 && tail_above && v.trend_slope && *v.trend_slope <= kFlatSlope) {
    v.status = VerdictStatus::flagged;
  } else {
    v.status = VerdictStatus::inconclusive;
  }
  if (n < 3) v.warnings.push_back("fewer than 3 feasible rungs; limsup proxy uses all of them");
  return v;
}

namespace {

std::vector<double> c_plus_d(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                             const std::vector<double>& radii, const NormOptions& opts) {
  if (!stack.p) throw ValidationError("C + D needs the pressure field");
  std::vector<FunctionalRequest> rq;
  for (double r : radii) {
    rq.push_back({Functional::C, r});
    rq.push_back({Functional::D, r});
  }
  const auto v = evaluate_functionals(stack, x, t, rq, {}, opts);
  std::vector<double> out(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) out[i] = v[2 * i] + v[2 * i + 1];
  return out;
}

}  // namespace

CriterionVerdict ckn_check(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                           const LadderSpec& ladder, double epsilon, const NormOptions& opts) {
  if (!(epsilon > 0)) throw ValidationError("epsilon must be positive");
  if (!stack.p) throw ValidationError("ckn_check needs the pressure field");
  check_point(stack, t);
  CriterionVerdict v;
  v.threshold_used = epsilon;
  v.radii = ladder_radii(stack, t, ladder, opts.floor_cells, &v.warnings);
  v.evidence = c_plus_d(stack, x, t, v.radii, opts);
  v.trend_slope = log_slope(v.radii, v.evidence);
  // ties go to the largest radius
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.evidence.size(); ++i)
    if (v.evidence[i] < v.evidence[best]) best = i;
  v.tail_max = v.evidence[best];
  if (v.evidence[best] < epsilon) {
    v.status = VerdictStatus::regular;
    v.witness_radius = v.radii[best];
  }
  return v;
}

ContractionTrace contraction_trace(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                   double r0, double theta, int k_max, double epsilon,
                                   const NormOptions& opts) {
  if (!(theta > 0 && theta < 0.25)) throw ValidationError("theta must lie in (0, 1/4)");
  check_point(stack, t);
  ContractionTrace tr;
  tr.theta = theta;
  LadderSpec l{r0, theta, k_max};
  tr.radii = ladder_radii(stack, t, l, opts.floor_cells, &tr.warnings);
  tr.values = c_plus_d(stack, x, t, tr.radii, opts);
  for (double r : tr.radii) tr.k.push_back(int(std::lround(std::log(r / r0) / std::log(theta))));
  for (std::size_t i = 0; i < tr.values.size(); ++i)
    if (tr.values[i] < epsilon) {
      tr.first_below = tr.k[i];
      break;
    }
  return tr;
}

// ------------------------------------------------------------------ audits

const std::vector<std::string>& lemma_ids() {
  static const std::vector<std::string> ids = {"lei2",   "basiclemma", "L3-1",  "preest",
                                               "lemma3-6", "TH3-4a",   "TH3-4b", "RK3.7",
                                               "lemma3-7a", "lemma3-7b"};
  return ids;
}

namespace {

void finish(LemmaReport& rep) {
  double sum = 0;
  for (const auto& [name, v] : rep.rhs_terms) sum += v;
  if (rep.lhs == 0.0) {
    rep.trivially_satisfied = true;
    rep.fitted_constant = 0.0;
  } else if (sum == 0.0) {
    rep.fitted_constant = std::numeric_limits<double>::infinity();
  } else {
    rep.fitted_constant = rep.lhs / sum;
  }
}

// Caches functional values at (name, radius, exponents) for one audit point.
class FunctionalCache {
 public:
  FunctionalCache(const FieldStack& s, const Eigen::Vector3d& x, double t, const NormOptions& o)
      : s_(s), x_(x), t_(t), o_(o) {}

  double operator()(Functional f, double r, const FunctionalExponents& e) {
    const auto key = std::make_tuple(int(f), r, e.p.str(), e.q.str());
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const double v = evaluate_functionals(s_, x_, t_, {{f, r}}, e, o_).front();
    cache_.emplace(key, v);
    return v;
  }

  // Batch evaluation to share slice work.
  void prefetch(const std::vector<std::pair<Functional, double>>& items, const FunctionalExponents& e) {
    std::vector<FunctionalRequest> rq;
    for (auto [f, r] : items)
      if (functional_unavailable(f, s_, e).empty() &&
          !cache_.count(std::make_tuple(int(f), r, e.p.str(), e.q.str())))
        rq.push_back({f, r});
    if (rq.empty()) return;
    const auto v = evaluate_functionals(s_, x_, t_, rq, e, o_);
    for (std::size_t i = 0; i < rq.size(); ++i)
      cache_.emplace(std::make_tuple(int(rq[i].name), rq[i].r, e.p.str(), e.q.str()), v[i]);
  }

 private:
  const FieldStack& s_;
  Eigen::Vector3d x_;
  double t_;
  NormOptions o_;
  std::map<std::tuple<int, double, std::string, std::string>, double> cache_;
};

LemmaReport skipped(LemmaReport rep, std::string why) {
  rep.applicable = false;
  rep.regime_note = std::move(why);
  return rep;
}

}  // namespace

std::vector<LemmaReport> lemma_audit(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                     double r, double rho, const FunctionalExponents& e,
                                     const AuditOptions& opts) {
  if (!(r > 0) || 2 * r > rho * (1 + 1e-12)) {
    std::ostringstream os;
    os << "lemma hypothesis 0 < 2r <= rho violated (r = " << r << ", rho = " << rho << ")";
    throw ValidationError(os.str());
  }
  check_cylinder(stack.grid, {x, t, rho}, opts.norm.floor_cells);
  check_cylinder(stack.grid, {x, t, r}, opts.norm.floor_cells);

  auto wanted = [&](const std::string& id) {
    return opts.only.empty() || std::find(opts.only.begin(), opts.only.end(), id) != opts.only.end();
  };
  for (const auto& id : opts.only)
    if (std::find(lemma_ids().begin(), lemma_ids().end(), id) == lemma_ids().end())
      throw ValidationError("unknown lemma id '" + id + "'");

  FunctionalCache F(stack, x, t, opts.norm);
  F.prefetch({{Functional::A, r}, {Functional::E, r}, {Functional::C, r}, {Functional::Ctilde, r},
              {Functional::D, r}, {Functional::Gtilde, r}, {Functional::G1, r}, {Functional::W, r},
              {Functional::C, rho}, {Functional::Ctilde, rho}, {Functional::D, rho},
              {Functional::G1, rho}, {Functional::W, rho}, {Functional::W1, rho},
              {Functional::Wtilde1, rho}},
             e);

  LemmaReport base;
  base.x = x;
  base.t = t;
  base.r = r;
  base.rho = rho;
  base.p = e.p.str();
  base.q = e.q.str();
  const double qinv = boost::rational_cast<double>(e.q.reciprocal());
  const double pinv = boost::rational_cast<double>(e.p.reciprocal());

  // m_gamma of the force, zero without one
  double m_gamma = 0.0;
  bool need_force = stack.f && (wanted("lei2") || wanted("preest"));
  if (need_force) {
    MorreyParams mp = opts.morrey;
    mp.gamma = opts.gamma;
    m_gamma = morrey_norm(*stack.f, mp, stack.grid).value;
  }

  std::vector<LemmaReport> out;

  if (wanted("lei2")) {
    LemmaReport rep = base;
    rep.lemma_id = "lei2";
    rep.m_gamma = m_gamma;
    rep.radius_restriction_met =
        m_gamma == 0.0 || r <= std::pow(m_gamma, -1.0 / (1.0 + opts.gamma)) * (1 + 1e-12);
    if (!stack.p) {
      out.push_back(skipped(rep, "pressure field absent"));
    } else {
      rep.lhs = F(Functional::A, r, e) + F(Functional::E, r, e);
      rep.rhs_terms = {{"1", 1.0}, {"C(2r)", F(Functional::C, 2 * r, e)},
                       {"D(2r)", F(Functional::D, 2 * r, e)}};
      if (!*rep.radius_restriction_met) rep.regime_note = "r exceeds m_gamma^{-1/(1+gamma)}";
      finish(rep);
      out.push_back(rep);
    }
  }

  if (wanted("basiclemma")) {
    LemmaReport rep = base;
    rep.lemma_id = "basiclemma";
    if (!e.p_star()) {
      out.push_back(skipped(rep, "p* undefined for p = " + e.p.str()));
    } else {
      rep.lhs = F(Functional::Ctilde, r, e);
      rep.rhs_terms = {{"A^{1/q} E^{1-1/q} Gtilde(r)", std::pow(F(Functional::A, r, e), qinv) *
                                                           std::pow(F(Functional::E, r, e), 1 - qinv) *
                                                           F(Functional::Gtilde, r, e)}};
      finish(rep);
      out.push_back(rep);
    }
  }

  if (wanted("L3-1")) {
    LemmaReport rep = base;
    rep.lemma_id = "L3-1";
    rep.lhs = F(Functional::C, r, e);
    rep.rhs_terms = {{"(r/rho) C(rho)", (r / rho) * F(Functional::C, rho, e)},
                     {"(rho/r)^2 Ctilde(rho)", std::pow(rho / r, 2) * F(Functional::Ctilde, rho, e)}};
    finish(rep);
    out.push_back(rep);
  }

  if (wanted("preest")) {
    LemmaReport rep = base;
    rep.lemma_id = "preest";
    if (!stack.p) {
      out.push_back(skipped(rep, "pressure field absent"));
    } else {
      rep.m_gamma = m_gamma;
      rep.lhs = F(Functional::D, r, e);
      rep.rhs_terms = {
          {"(rho/r)^2 Ctilde(rho)", std::pow(rho / r, 2) * F(Functional::Ctilde, rho, e)},
          {"(rho/r)^2 rho^{3(gamma+1)/2} m_gamma^{3/2}",
           std::pow(rho / r, 2) * std::pow(rho, 1.5 * (opts.gamma + 1)) * std::pow(m_gamma, 1.5)},
          {"(r/rho) D(rho)", (r / rho) * F(Functional::D, rho, e)}};
      finish(rep);
      out.push_back(rep);
    }
  }

  if (wanted("lemma3-6")) {
    LemmaReport rep = base;
    rep.lemma_id = "lemma3-6";
    if (e.p.reciprocal() < Rational(1, 3)) {
      out.push_back(skipped(rep, "needs 1 <= p <= 3, got p = " + e.p.str()));
    } else {
      rep.lhs = F(Functional::Ctilde, r, e);
      rep.rhs_terms = {{"A^{1/q} E^{1-1/q} G1(r)", std::pow(F(Functional::A, r, e), qinv) *
                                                       std::pow(F(Functional::E, r, e), 1 - qinv) *
                                                       F(Functional::G1, r, e)}};
      finish(rep);
      out.push_back(rep);
    }
  }

  if (wanted("TH3-4a")) {
    LemmaReport rep = base;
    rep.lemma_id = "TH3-4a";
    if (e.q.is_infinite()) {
      out.push_back(skipped(rep, "needs 1 <= q < inf"));
    } else {
      rep.lhs = F(Functional::G1, r, e);
      rep.rhs_terms = {{"(rho/r) W(rho)", (rho / r) * F(Functional::W, rho, e)},
                       {"(r/rho)^{3/p-1} G1(rho)",
                        std::pow(r / rho, 3 * pinv - 1) * F(Functional::G1, rho, e)}};
      finish(rep);
      out.push_back(rep);
    }
  }

  if (wanted("TH3-4b")) {
    // The refined estimate lives at the endpoint (p, q) = (3, 1) whatever pair was requested.
    const FunctionalExponents e31(Exponent(3), Exponent(1));
    LemmaReport rep = base;
    rep.lemma_id = "TH3-4b";
    rep.p = "3";
    rep.q = "1";
    rep.regime_note = "evaluated at the endpoint (p, q) = (3, 1)";
    rep.lhs = F(Functional::G1, r, e31);
    const HarmonicTrace g = harmonic_mean_trace(stack, HarmonicPart::biot_savart_gradient, x, t, {r},
                                                rho, Exponent(3), Exponent(1), opts.split,
                                                opts.norm.floor_cells);
    rep.rhs_terms = {{"(rho/r) W(rho)", (rho / r) * F(Functional::W, rho, e31)},
                     {"(r/rho) G1(rho)", (r / rho) * F(Functional::G1, rho, e31)},
                     {"g(u;r)", g.g.front()}};
    finish(rep);
    out.push_back(rep);
  }

  if (wanted("RK3.7")) {
    // r < rho' <= 2r with rho' = 2r; the u term carries 1/rho' so both sides scale alike.
    LemmaReport rep = base;
    rep.lemma_id = "RK3.7";
    const double rp = 2 * r;
    rep.rho = rp;
    rep.regime_note = "rho' = 2r; u term scaled by 1/rho'";
    const auto v = evaluate_norms(stack, x, t,
                                  {{Quantity::velocity_gradient, false, e.p, e.q, r},
                                   {Quantity::vorticity, false, e.p, e.q, rp},
                                   {Quantity::velocity, false, e.p, e.q, rp}},
                                  opts.norm);
    rep.lhs = v[0];
    rep.rhs_terms = {{"||w||(Q_rho')", v[1]}, {"||u||(Q_rho') / rho'", v[2] / rp}};
    finish(rep);
    out.push_back(rep);
  }

  if (wanted("lemma3-7a")) {
    LemmaReport rep = base;
    rep.lemma_id = "lemma3-7a";
    if (!e.p_sharp()) {
      out.push_back(skipped(rep, "needs 1 <= q <= 2, got q = " + e.q.str()));
    } else {
      rep.lhs = F(Functional::W, r, e);
      rep.rhs_terms = {{"(rho/r) W1(rho)", (rho / r) * F(Functional::W1, rho, e)},
                       {"(r/rho)^{3/p-1} W(rho)", std::pow(r / rho, 3 * pinv - 1) * F(Functional::W, rho, e)}};
      finish(rep);
      out.push_back(rep);
    }
  }

  if (wanted("lemma3-7b")) {
    LemmaReport rep = base;
    rep.lemma_id = "lemma3-7b";
    if (!e.p_sharp() || e.q.reciprocal() <= Rational(1, 2)) {
      out.push_back(skipped(rep, "needs 1 <= q < 2, got q = " + e.q.str()));
    } else {
      rep.lhs = F(Functional::G1, r, e);
      const HarmonicTrace g = harmonic_mean_trace(stack, HarmonicPart::curl_tensor, x, t, {r}, rho,
                                                  e.p, e.q, opts.split, opts.norm.floor_cells);
      rep.rhs_terms = {{"(rho/r) Wtilde1(rho)", (rho / r) * F(Functional::Wtilde1, rho, e)},
                       {"(r/rho)^{3/p} G1(rho)", std::pow(r / rho, 3 * pinv) * F(Functional::G1, rho, e)},
                       {"g(u;r)", g.g.front()}};
      finish(rep);
      out.push_back(rep);
    }
  }
  return out;
}

// ------------------------------------------------------------------ dimension

SingularSetEstimate singular_set_dimension(const std::vector<SpaceTimePoint>& points,
                                           std::vector<double> scales) {
  if (scales.empty()) throw ValidationError("scale list is empty");
  for (double d : scales)
    if (!(d > 0) || !std::isfinite(d)) throw ValidationError("box sizes must be positive and finite");
  for (const auto& pt : points)
    if (!pt.x.allFinite() || !std::isfinite(pt.t)) throw ValidationError("non-finite point");
  std::sort(scales.begin(), scales.end());
  scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
  SingularSetEstimate est;
  est.points = points;
  est.scales = scales;
  for (double d : scales) {
    std::set<std::array<std::int64_t, 4>> boxes;
    for (const auto& pt : points)
      boxes.insert({std::int64_t(std::floor(pt.x[0] / d)), std::int64_t(std::floor(pt.x[1] / d)),
                    std::int64_t(std::floor(pt.x[2] / d)), std::int64_t(std::floor(pt.t / (d * d)))});
    est.counts.push_back(std::int64_t(boxes.size()));
  }
  if (!points.empty() && scales.size() >= 2) {
    std::vector<double> inv(scales.size()), cnt(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i) {
      inv[i] = 1.0 / scales[i];
      cnt[i] = double(est.counts[i]);
    }
    est.dimension = std::clamp(log_slope(inv, cnt).value_or(0.0), 0.0, 5.0);
  }
  est.hausdorff_proxy = double(est.counts.front()) * scales.front();
  return est;
}

}  // namespace nsrlab
