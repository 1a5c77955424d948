#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "nsrlab/criteria.hpp"
#include "nsrlab/genflow.hpp"

using namespace nsrlab;
constexpr double kPi = std::numbers::pi;

namespace {

Grid grid64() { return make_grid(64, 9, 2 * kPi, 0.32, 0); }  // time extent 2.56 = 1.6^2

FieldStack small_abc(const Grid& g, double a) {
  FlowSpec s;
  s.A = s.B = s.C = a;
  return generate(s, g);
}

FieldStack mock(const Grid& g) {
  FlowSpec s;
  s.family = FlowFamily::homogeneous_minus_one;
  return generate(s, g);
}

const Eigen::Vector3d kX(1.3, 2.1, 0.7);
const Eigen::Vector3d kCentre = Eigen::Vector3d::Constant(kPi);

CriterionConfig velocity_config(Exponent p, Exponent q) {
  CriterionConfig c;
  c.kind = CriterionKind::velocity;
  c.p = p;
  c.q = q;
  c.ladder = {1.6, 0.8, 6};
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  CriterionConfig c;
  c.theta = 0.25;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.theta = 0.2;
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c.epsilon = 0.05;
  c.kind = CriterionKind::vorticity;
  c.p = Exponent(1);
  c.q = Exponent::infinity();
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("zero field is regular for every kind") {
  const Grid g = grid64();
  const auto z = testing::constant_stack(g, Eigen::Vector3d::Zero());
  struct K {
    CriterionKind kind;
    Exponent p, q;
  };
  for (const K& k : {K{CriterionKind::velocity, Exponent(6), Exponent(4)},
                     K{CriterionKind::velocity_gradient, Exponent(3, 2), Exponent(2)},
                     K{CriterionKind::vorticity, Exponent(2), Exponent(2)},
                     K{CriterionKind::vorticity_gradient, Exponent(1), Exponent(2)}}) {
    CriterionConfig c = velocity_config(k.p, k.q);
    c.kind = k.kind;
    const CriterionVerdict v = evaluate_criterion(z, kX, g.t_end(), c);
    CHECK(v.status == VerdictStatus::regular);
    for (double e : v.evidence) CHECK(e == 0.0);
  }
}

TEST_CASE("decaying ABC is regular with positive decay slope") {
  const Grid g = grid64();
  const FieldStack s = small_abc(g, 0.02);
  const CriterionVerdict v = evaluate_criterion(s, kX, g.t_end(), velocity_config(Exponent(6), Exponent(4)));
  CHECK(v.status == VerdictStatus::regular);
  REQUIRE(v.trend_slope);
  CHECK(*v.trend_slope > 0.0);
  CHECK(v.tail_max < v.threshold_used);
  CHECK(v.threshold_used == 0.05);
}

TEST_CASE("homogeneous mock is flagged at its centre") {
  const Grid g = make_grid(64, 5, 2 * kPi, 0.64, 0);
  const FieldStack s = mock(g);
  const CriterionVerdict v = evaluate_criterion(s, kCentre, g.t_end(), velocity_config(Exponent(2), Exponent(4)));
  CHECK(v.status == VerdictStatus::flagged);
  REQUIRE(v.trend_slope);
  CHECK(std::abs(*v.trend_slope) <= kFlatSlope);
}

TEST_CASE("raising epsilon never turns regular into something else") {
  const Grid g = grid64();
  const FieldStack s = small_abc(g, 0.02);
  CriterionConfig c = velocity_config(Exponent(6), Exponent(4));
  bool seen_regular = false;
  for (double eps : {0.001, 0.005, 0.02, 0.05, 0.2, 1.0}) {
    c.epsilon = eps;
    const bool regular = evaluate_criterion(s, kX, g.t_end(), c).status == VerdictStatus::regular;
    if (seen_regular) CHECK(regular);
    seen_regular |= regular;
  }
  CHECK(seen_regular);
}

TEST_CASE("criterion evidence is scale invariant") {
  const Grid g = make_grid(64, 17, 2 * kPi, 0.16, 0);
  FlowSpec spec;
  const FieldStack s = generate(spec, g);
  const FieldStack r = rescale(s, 2.0);
  CriterionConfig big = velocity_config(Exponent(6), Exponent(4));
  big.ladder = {1.6, 0.8, 2};
  big.epsilon = 100.0;
  CriterionConfig small = big;
  small.ladder.r0 = 0.8;
  const CriterionVerdict a = evaluate_criterion(s, kX, g.t_end(), big);
  const CriterionVerdict b = evaluate_criterion(r, kX / 2, g.t_end() / 4, small);
  REQUIRE(a.evidence.size() == b.evidence.size());
  for (std::size_t i = 0; i < a.evidence.size(); ++i)
    CHECK(b.evidence[i] == doctest::Approx(a.evidence[i]).epsilon(0.02));
  CHECK(a.status == b.status);
}

TEST_CASE("ckn_check examples") {
  const Grid g = grid64();
  const LadderSpec ladder{1.6, 0.8, 6};

  const auto z = testing::constant_stack(g, Eigen::Vector3d::Zero());
  const CriterionVerdict vz = ckn_check(z, kX, g.t_end(), ladder);
  CHECK(vz.status == VerdictStatus::regular);
  REQUIRE(vz.witness_radius);
  CHECK(*vz.witness_radius == doctest::Approx(1.6));

  const auto big = testing::constant_stack(g, Eigen::Vector3d(10, 0, 0), 5.0);
  const CriterionVerdict vb = ckn_check(big, kX, g.t_end(), ladder);
  for (double e : vb.evidence) REQUIRE(e >= 1.0);
  CHECK(vb.status == VerdictStatus::inconclusive);
  CHECK_FALSE(vb.witness_radius);

  const FieldStack s = small_abc(g, 0.3);
  const CriterionVerdict va = ckn_check(s, kX, g.t_end(), ladder);
  CHECK(va.status == VerdictStatus::regular);
  REQUIRE(va.witness_radius);
  CHECK(*va.witness_radius < 1.6);

  auto nop = s;
  nop.p.reset();
  CHECK_THROWS_AS(ckn_check(nop, kX, g.t_end(), ladder), ValidationError);
}

TEST_CASE("contraction_trace examples") {
  const Grid g = grid64();
  const auto z = testing::constant_stack(g, Eigen::Vector3d::Zero());
  const ContractionTrace tz = contraction_trace(z, kX, g.t_end(), 1.6, 0.2, 4);
  REQUIRE(tz.first_below);
  CHECK(*tz.first_below == 0);
  for (double v : tz.values) CHECK(v == 0.0);

  // theta-spaced rungs: r0 = 2 keeps two of them above the 4h floor
  const Grid gl = make_grid(64, 14, 2 * kPi, 0.32, 0);
  const ContractionTrace ta = contraction_trace(small_abc(gl, 0.3), kX, gl.t_end(), 2.0, 0.2, 4);
  REQUIRE(ta.first_below);
  CHECK(*ta.first_below <= 4);
  CHECK(ta.values.front() >= 0.05);

  const Grid gm = make_grid(64, 5, 2 * kPi, 0.64, 0);
  const ContractionTrace tm = contraction_trace(mock(gm), kCentre, gm.t_end(), 1.6, 0.2, 4);
  CHECK_FALSE(tm.first_below);
  for (std::size_t i = 1; i < tm.values.size(); ++i) CHECK(tm.values[i] >= tm.values[i - 1] * (1 - 1e-9));

  CHECK_THROWS_AS(contraction_trace(z, kX, g.t_end(), 1.6, 0.3, 4), ValidationError);
}

TEST_CASE("lemma_audit on zero fields is trivially satisfied") {
  const Grid g = make_grid(32, 5, 2 * kPi, 0.64, 0);
  auto z = testing::constant_stack(g, Eigen::Vector3d::Zero());
  const auto reps = lemma_audit(z, kX, g.t_end(), 0.8, 1.6, FunctionalExponents::from_q(Exponent(3, 2)));
  REQUIRE_FALSE(reps.empty());
  for (const LemmaReport& r : reps) {
    if (!r.applicable) continue;
    CHECK_MESSAGE(r.trivially_satisfied, r.lemma_id);
    CHECK(r.fitted_constant == 0.0);
  }
}

TEST_CASE("lemma_audit enforces 0 < 2r <= rho") {
  const Grid g = make_grid(32, 5, 2 * kPi, 0.64, 0);
  const FieldStack s = small_abc(g, 1.0);
  try {
    lemma_audit(s, kX, g.t_end(), 0.9, 1.6, {});
    FAIL("expected a precondition error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("0 < 2r <= rho") != std::string::npos);
  }
}

TEST_CASE("lemma_audit on random fields keeps L3-1 below 32") {
  const Grid g = make_grid(32, 5, 2 * kPi, 0.64, 0);
  AuditOptions opts;
  opts.only = {"L3-1"};
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    FlowSpec spec;
    spec.family = FlowFamily::random_solenoidal;
    spec.wavenumber = 2;
    spec.seed = seed;
    const auto reps = lemma_audit(generate(spec, g), kX, g.t_end(), 0.8, 1.6,
                                  FunctionalExponents::from_q(Exponent(3, 2)), opts);
    REQUIRE(reps.size() == 1);
    CHECK(std::isfinite(reps[0].fitted_constant));
    CHECK(reps[0].fitted_constant <= 32.0);
  }
}

TEST_CASE("basiclemma constant on ABC is stable under refinement 32 -> 64") {
  AuditOptions opts;
  opts.only = {"basiclemma", "L3-1"};
  const FunctionalExponents e = FunctionalExponents::from_q(Exponent(2));  // p projected to 3/2
  std::map<std::string, double> c32, c64;
  for (auto [n, out] : {std::pair{32, &c32}, std::pair{64, &c64}}) {
    const Grid g = make_grid(n, 5, 2 * kPi, 0.64, 0);
    for (const LemmaReport& r : lemma_audit(small_abc(g, 1.0), kX, g.t_end(), 0.8, 1.6, e, opts))
      (*out)[r.lemma_id] = r.fitted_constant;
  }
  for (const auto& [id, v32] : c32) {
    const double v64 = c64.at(id);
    CHECK_MESSAGE(std::max(v32, v64) <= 2 * std::min(v32, v64), id);
  }
}

TEST_CASE("lei2 records m_gamma and the radius restriction") {
  const Grid g = make_grid(32, 5, 2 * kPi, 0.64, 0);
  AuditOptions opts;
  opts.only = {"lei2"};
  const auto reps = lemma_audit(small_abc(g, 1.0), kX, g.t_end(), 0.8, 1.6, {}, opts);
  REQUIRE(reps.size() == 1);
  REQUIRE(reps[0].m_gamma);
  REQUIRE(reps[0].radius_restriction_met);
  CHECK(*reps[0].m_gamma == 0.0);  // ABC carries no force
  CHECK(*reps[0].radius_restriction_met);
}

TEST_CASE("singular_set_dimension examples") {
  const std::vector<double> scales{0.5, 0.25, 0.125, 0.0625};
  const SingularSetEstimate e = singular_set_dimension({}, scales);
  CHECK(e.dimension == 0.0);
  for (auto c : e.counts) CHECK(c == 0);

  const SingularSetEstimate one = singular_set_dimension({{Eigen::Vector3d(0.3, 0.2, 0.1), 0.5}}, scales);
  CHECK(one.dimension == 0.0);
  for (auto c : one.counts) CHECK(c == 1);

  std::vector<SpaceTimePoint> seg;
  for (int i = 0; i <= 1000; ++i) seg.push_back({Eigen::Vector3d(0.1 + i / 1000.0, 0.3, 0.7), 0.5});
  const SingularSetEstimate line = singular_set_dimension(seg, {0.2, 0.1, 0.05, 0.025, 0.0125});
  CHECK(line.dimension == doctest::Approx(1.0).epsilon(0.15));
  for (std::size_t i = 1; i < line.counts.size(); ++i) {
    CHECK(line.scales[i] > line.scales[i - 1]);
    CHECK(line.counts[i] <= line.counts[i - 1]);
  }

  CHECK_THROWS_AS(singular_set_dimension(seg, {}), ValidationError);
}
