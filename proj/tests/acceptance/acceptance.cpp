// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <unistd.h>

#include "nsrlab/commands.hpp"
#include "nsrlab/container.hpp"
#include "nsrlab/criteria.hpp"
#include "nsrlab/genflow.hpp"
#include "nsrlab/normcore.hpp"
#include "nsrlab/singops.hpp"

using namespace nsrlab;
constexpr double kPi = std::numbers::pi;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_l2(const Slice& a, const Slice& b) { return std::sqrt((a - b).square().sum() / b.square().sum()); }

FieldStack abc(const Grid& g, double a = 1.0, double nu = 0.1) {
  FlowSpec s;
  s.A = s.B = s.C = a;
  s.nu = nu;
  return generate(s, g);
}

FieldStack mock(const Grid& g) {
  FlowSpec s;
  s.family = FlowFamily::homogeneous_minus_one;
  return generate(s, g);
}

// ----------------------------------------------------------------- 1

Outcome scaling_invariance() {
  const Grid g = make_grid(64, 61, 2 * kPi, 0.1, 0);
  const FieldStack s = abc(g);
  const FieldStack sl = rescale(s, 2.0);
  const Eigen::Vector3d x(2.6, 4.2, 1.4);
  const double t = g.t_end();
  const std::vector<Functional> fs{Functional::A,      Functional::E,      Functional::C,  Functional::Ctilde,
                                   Functional::D,      Functional::Gtilde, Functional::G1, Functional::W};
  const std::vector<double> radii{0.6, 0.75, 0.9, 1.2};
  double worst = 0.0;
  std::string at;
  for (double r : radii) {
    std::vector<FunctionalRequest> small, big;
    for (Functional f : fs) {
      small.push_back({f, r});
      big.push_back({f, 2 * r});
    }
    const auto a = evaluate_functionals(sl, x / 2, t / 4, small);
    const auto b = evaluate_functionals(s, x, t, big);
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const double m = std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), 1e-9);
      if (m > worst) {
        worst = m;
        at = fmt("%s at r=%.2f", to_string(fs[i]), r);
      }
    }
  }
  return {worst < 0.02, fmt("8 functionals x 4 rungs, worst mismatch %.4f (%s)", worst, at.c_str())};
}

// ----------------------------------------------------------------- 2

struct RegionRow {
  CriterionKind kind;
  int ip_num, ip_den, iq_num, iq_den;
  bool admissible, lower, upper;
};

const RegionRow kRegionTable[] = {
#include "region_table.inc"
};

Outcome exponent_regions() {
  int checked = 0, wrong = 0;
  std::string first;
  for (const RegionRow& row : kRegionTable) {
    const Exponent p = Exponent::from_reciprocal(Rational(row.ip_num, row.ip_den));
    const Exponent q = Exponent::from_reciprocal(Rational(row.iq_num, row.iq_den));
    const RegionVerdict v = classify_exponents(row.kind, p, q);
    bool ok = v.admissible == row.admissible;
    if (ok && row.admissible) ok = v.on_lower_boundary == row.lower && v.on_upper_boundary == row.upper;
    ++checked;
    if (!ok && wrong++ == 0) first = fmt("%s p=%s q=%s", to_string(row.kind), p.str().c_str(), q.str().c_str());
  }
  // the labelled corners, named explicitly
  struct Corner {
    CriterionKind kind;
    Rational ip, iq;
    bool admissible;
  };
  // (1/3,1/2) and (1/3,1) close the velocity and gradient regions; (2/3,1) and (1,1/2) the
  // vorticity-gradient one; (1,0) is kept for gradients and dropped for vorticity.
  for (const Corner& c : {Corner{CriterionKind::velocity, Rational(1, 3), Rational(1, 2), true},
                          Corner{CriterionKind::velocity_gradient, Rational(1, 3), Rational(1), true},
                          Corner{CriterionKind::vorticity, Rational(1, 3), Rational(1), true},
                          Corner{CriterionKind::vorticity_gradient, Rational(2, 3), Rational(1), true},
                          Corner{CriterionKind::vorticity_gradient, Rational(1), Rational(1, 2), true},
                          Corner{CriterionKind::velocity_gradient, Rational(2, 3), Rational(1), false},
                          Corner{CriterionKind::velocity_gradient, Rational(1), Rational(0), true},
                          Corner{CriterionKind::vorticity, Rational(1), Rational(0), false}}) {
    ++checked;
    if (classify_exponents(c.kind, Exponent::from_reciprocal(c.ip), Exponent::from_reciprocal(c.iq)).admissible !=
            c.admissible &&
        wrong++ == 0)
      first = fmt("corner %s", to_string(c.kind));
  }
  return {wrong == 0 && checked >= 40,
          fmt("%d points, %d mismatches%s%s", checked, wrong, wrong ? ", first: " : "", first.c_str())};
}

// ----------------------------------------------------------------- 3

Outcome lemma_audits() {
  const Eigen::Vector3d x(1.3, 2.1, 0.7);
  const FunctionalExponents e = FunctionalExponents::from_q(Exponent(3, 2));
  int fields = 0, reports = 0, nonfinite = 0, l31_over = 0, unstable = 0;
  double l31_max = 0.0, worst_ratio = 1.0;
  std::string worst_at;
  auto audit = [&](int n, const std::function<FieldStack(const Grid&)>& make) {
    const Grid g = make_grid(n, 5, 2 * kPi, 0.64, 0);
    std::map<std::string, double> out;
    for (const LemmaReport& r : lemma_audit(make(g), x, g.t_end(), 0.8, 1.6, e)) {
      if (!r.applicable) continue;
      ++reports;
      if (!std::isfinite(r.fitted_constant)) ++nonfinite;
      if (r.lemma_id == "L3-1") {
        l31_max = std::max(l31_max, r.fitted_constant);
        if (!(r.fitted_constant <= 32)) ++l31_over;
      }
      out[r.lemma_id] = r.fitted_constant;
    }
    return out;
  };
  auto compare = [&](const std::string& name, const std::map<std::string, double>& a,
                     const std::map<std::string, double>& b) {
    for (const auto& [id, va] : a) {
      auto it = b.find(id);
      if (it == b.end()) continue;
      const double vb = it->second;
      double ratio = 1.0;
      if (std::max(va, vb) > 1e-12) ratio = std::max(va, vb) / std::max(std::min(va, vb), 1e-300);
      if (!(ratio < 2)) ++unstable;
      if (ratio > worst_ratio) {
        worst_ratio = ratio;
        worst_at = name + " " + id;
      }
    }
  };
  for (int seed = 1; seed <= 100; ++seed) {
    auto make = [seed](const Grid& g) {
      FlowSpec s;
      s.family = FlowFamily::random_solenoidal;
      s.wavenumber = 2;
      s.seed = std::uint64_t(seed);
      return generate(s, g);
    };
    compare(fmt("seed %d", seed), audit(32, make), audit(64, make));
    ++fields;
  }
  compare("abc", audit(32, [](const Grid& g) { return abc(g); }), audit(64, [](const Grid& g) { return abc(g); }));
  ++fields;
  return {nonfinite == 0 && l31_over == 0 && unstable == 0,
          fmt("%d fields x {32,64}, %d reports, %d non-finite, max L3-1 N = %.3f, worst 32->64 ratio %.3f (%s)",
              fields, reports, nonfinite, l31_max, worst_ratio, worst_at.c_str())};
}

// ----------------------------------------------------------------- 4

Outcome harmonicity() {
  const Grid g = make_grid(64, 2, 2 * kPi, 0.1, 0);
  const FieldStack s = abc(g);
  const Eigen::Vector3d x(1.3, 2.1, 0.7);
  const double rho = 1.6;
  const HarmonicityReport p2 = pressure_split(s, 0, x, rho).harmonicity();
  const HarmonicityReport h = biot_savart_local(s, 0, x, rho).harmonicity();
  const HarmonicityReport H = curl_tensor_split(s, 0, x, rho).harmonicity();
  bool pass = true;
  for (const auto& r : {p2, h, H}) pass &= r.residual < 1e-2 && r.mean_value_defect < 3e-2;
  return {pass, fmt("residual/defect p2 %.2e/%.2e, h %.2e/%.2e, H %.2e/%.2e", p2.residual, p2.mean_value_defect,
                    h.residual, h.mean_value_defect, H.residual, H.mean_value_defect)};
}

// ----------------------------------------------------------------- 5

Outcome local_energy() {
  const double nu = 0.1, T = 0.1;
  PhiSpec phi;
  phi.center = Eigen::Vector3d(1.3, 2.1, 0.7);
  phi.t_on = 0.04;
  phi.ramp = 0.032;
  EnergyOptions eo;
  eo.nu = nu;
  std::vector<double> dts{4e-3, 2e-3, 1e-3}, res;
  EnergyLedger last;
  for (double dt : dts) {
    const int steps = int(std::lround(T / dt));
    const Grid g = make_grid(64, steps + 1, 2 * kPi, dt, 0);
    const Slice u0 = abc(make_grid(64, 2, 2 * kPi, dt, 0), 1.0, nu).u.slice(0);
    last = local_energy_residual(ns_integrate(u0, std::nullopt, nu, g, steps), phi, 0.0, T, eo);
    res.push_back(std::abs(last.residual));
  }
  const double slope = std::log2(res[1] / res[2]);
  const double slope_coarse = std::log2(res[0] / res[1]);
  return {std::abs(last.relative_residual) < 1e-6 && slope >= 1.8 && slope_coarse >= 1.8,
          fmt("relative residual %.2e at dt=1e-3, refinement slopes %.2f, %.2f", last.relative_residual,
              slope_coarse, slope)};
}

// ----------------------------------------------------------------- 6

Outcome exact_solution() {
  const double dt = 1e-3, nu = 0.1;
  const int steps = 100;
  const Grid g = make_grid(32, steps + 1, 2 * kPi, dt, 0);
  const FieldStack exact = abc(g, 1.0, nu);
  IntegrateOptions o;
  o.save_every = steps;
  const FieldStack out = ns_integrate(exact.u.slice(0), std::nullopt, nu, g, steps, o);
  const double err = rel_l2(out.u.slice(out.u.slices() - 1), exact.u.slice(steps));
  return {err < 1e-6, fmt("relative L2 error %.2e at T=0.1", err)};
}

// ----------------------------------------------------------------- 7

Outcome discrimination() {
  const Grid g = make_grid(64, 9, 2 * kPi, 0.32, 0);
  const FieldStack s = abc(g, 0.02);
  int regular = 0, total = 0;
  std::string bad;
  for (const Eigen::Vector3d& x : {Eigen::Vector3d(1.3, 2.1, 0.7), Eigen::Vector3d(2.6, 4.2, 1.4),
                                   Eigen::Vector3d(4.0, 1.0, 5.5), Eigen::Vector3d(5.2, 3.3, 2.8)})
    for (CriterionKind k : {CriterionKind::velocity, CriterionKind::velocity_gradient, CriterionKind::vorticity,
                            CriterionKind::vorticity_gradient}) {
      const KindSettings ks = default_kind_settings(k);
      CriterionConfig c;
      c.kind = k;
      c.p = ks.p;
      c.q = ks.q;
      c.ladder = {1.6, 0.8, 6};
      const CriterionVerdict v = evaluate_criterion(s, x, g.t_end(), c);
      ++total;
      if (v.status == VerdictStatus::regular)
        ++regular;
      else if (bad.empty())
        bad = fmt(", %s at (%.1f,%.1f,%.1f) is %s", to_string(k), x[0], x[1], x[2], to_string(v.status));
    }

  const Grid gm = make_grid(64, 5, 2 * kPi, 0.64, 0);
  CriterionConfig c;
  c.kind = CriterionKind::velocity;
  const KindSettings ks = default_kind_settings(c.kind);
  c.p = ks.p;
  c.q = ks.q;
  c.ladder = {1.6, 0.8, 6};
  const CriterionVerdict m = evaluate_criterion(mock(gm), Eigen::Vector3d::Constant(kPi), gm.t_end(), c);
  const auto [lo, hi] = std::minmax_element(m.evidence.begin(), m.evidence.end());
  const double spread = m.evidence.empty() ? INFINITY : *hi / *lo - 1;
  const bool mock_ok = m.status == VerdictStatus::flagged && m.evidence.size() >= 3 && spread < 0.05;
  return {regular == total && mock_ok,
          fmt("ABC regular %d/%d%s; mock %s over %zu rungs, spread %.2f%%", regular, total, bad.c_str(),
              to_string(m.status), m.evidence.size(), 100 * spread)};
}

// ----------------------------------------------------------------- 8

Outcome contraction() {
  const Grid g = make_grid(64, 14, 2 * kPi, 0.32, 0);
  const ContractionTrace a = contraction_trace(abc(g, 0.3), Eigen::Vector3d(1.3, 2.1, 0.7), g.t_end(), 2.0, 0.2, 4);
  const Grid gm = make_grid(64, 8, 2 * kPi, 0.64, 0);
  const ContractionTrace m = contraction_trace(mock(gm), Eigen::Vector3d::Constant(kPi), gm.t_end(), 2.0, 0.2, 4);
  std::ostringstream va, vm;
  for (double v : a.values) va << " " << fmt("%.3g", v);
  for (double v : m.values) vm << " " << fmt("%.3g", v);
  const bool pass = a.first_below && *a.first_below <= 4 && !m.first_below;
  return {pass, fmt("ABC C+D:%s, first below eps at k=%s; mock C+D:%s, first below %s", va.str().c_str(),
                    a.first_below ? std::to_string(*a.first_below).c_str() : "none", vm.str().c_str(),
                    m.first_below ? std::to_string(*m.first_below).c_str() : "none")};
}

// ----------------------------------------------------------------- 9

Outcome dimension() {
  const std::vector<double> scales{0.2, 0.1, 0.05, 0.025, 0.0125};
  const SingularSetEstimate pt = singular_set_dimension({{Eigen::Vector3d(0.4, 0.5, 0.6), 0.3}}, scales);
  std::vector<SpaceTimePoint> seg;
  for (int i = 0; i <= 2000; ++i) seg.push_back({Eigen::Vector3d(0.2 + i / 2000.0, 0.5, 0.6), 0.3});
  const SingularSetEstimate line = singular_set_dimension(seg, scales);
  return {pt.dimension == 0.0 && std::abs(line.dimension - 1.0) <= 0.15,
          fmt("point %.3f, unit segment %.3f", pt.dimension, line.dimension)};
}

// ---------------------------------------------------------------- 10

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("nsrlab-acceptance-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string a = (dir / "a.nsrl").string(), b = (dir / "b.nsrl").string();
  write_container(a, abc(make_grid(32, 5, 2 * kPi, 0.64, 0), 0.3));
  write_container(b, read_container(a));
  const bool same_file = read_file(a) == read_file(b);

  RunConfig c;
  c.command = "diagnose";
  c.input = a;
  c.x = Eigen::Vector3d(1.3, 2.1, 0.7);
  c.timestamp = false;
  std::ostringstream r1, r2, err;
  const int e1 = run_command(c, r1, err);
  const int e2 = run_command(c, r2, err);
  std::filesystem::remove_all(dir);
  const bool same_report = e1 == 0 && e2 == 0 && r1.str() == r2.str() && !r1.str().empty();
  return {same_file && same_report, fmt("container round trip %s, report %s (%zu bytes)",
                                        same_file ? "identical" : "DIFFERS", same_report ? "identical" : "DIFFERS",
                                        r1.str().size())};
}

}  // namespace

int main() {
  struct Criterion {
    const char* title;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"scaling invariance", scaling_invariance}, {"exponent regions", exponent_regions},
      {"lemma audits", lemma_audits},             {"harmonic remainders", harmonicity},
      {"local energy inequality", local_energy},  {"exact-solution fidelity", exact_solution},
      {"criterion discrimination", discrimination}, {"contraction trace", contraction},
      {"dimension estimator", dimension},         {"format determinism", determinism},
  };
  int failures = 0;
  for (int i = 0; i < 10; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += !o.pass;
    std::printf("AC%d %s %s: %s [%.1fs]\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].title, o.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
