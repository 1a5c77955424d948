#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nsrlab/fieldlab.hpp"
#include "nsrlab/normcore.hpp"
#include "nsrlab/singops.hpp"

namespace nsrlab {

inline constexpr double kDefaultEpsilon = 0.05;

// Radii r0 * ratio^k, k = 0..k_max, truncated at the resolution floor.
struct LadderSpec {
  double r0 = 1.0;
  double ratio = 0.5;
  int k_max = 6;
};

struct CriterionConfig {
  double epsilon = kDefaultEpsilon;
  double theta = 0.2;  // contraction ratio, (0, 1/4)
  CriterionKind kind = CriterionKind::velocity;
  Exponent p{6};  // the kind's own exponent: p*, p, p or p#
  Exponent q{4};
  LadderSpec ladder;
  bool use_centered_velocity = true;
  bool use_curl_w = false;
  NormOptions norm;

  void validate() const;
};

enum class VerdictStatus { regular, flagged, inconclusive };
const char* to_string(VerdictStatus s);

struct CriterionVerdict {
  VerdictStatus status = VerdictStatus::inconclusive;
  std::vector<double> radii;
  std::vector<double> evidence;
  std::optional<double> trend_slope;  // d log evidence / d log r; positive means decay as r -> 0
  double tail_max = 0.0;
  double threshold_used = 0.0;
  std::optional<double> witness_radius;  // ckn_check only
  std::vector<std::string> warnings;
};

// Slope above which evidence counts as decaying toward r -> 0.
inline constexpr double kFlatSlope = 0.1;

CriterionVerdict evaluate_criterion(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                    const CriterionConfig& config);

// C(r) + D(r) < epsilon at a single rung suffices; never returns flagged.
CriterionVerdict ckn_check(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                           const LadderSpec& ladder, double epsilon = kDefaultEpsilon,
                           const NormOptions& opts = {});

struct ContractionTrace {
  double theta = 0.0;
  std::vector<int> k;
  std::vector<double> radii;
  std::vector<double> values;       // C + D at theta^k r0
  std::optional<int> first_below;   // smallest k with value < epsilon
  std::vector<std::string> warnings;
};

ContractionTrace contraction_trace(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                   double r0, double theta, int k_max,
                                   double epsilon = kDefaultEpsilon, const NormOptions& opts = {});

// ------------------------------------------------------------------ audits

const std::vector<std::string>& lemma_ids();

struct LemmaReport {
  std::string lemma_id;
  bool applicable = true;
  std::string regime_note;  // why it was skipped, or notes on the regime used
  double lhs = 0.0;
  std::vector<std::pair<std::string, double>> rhs_terms;
  double fitted_constant = 0.0;  // lhs / sum(rhs); inf when the RHS vanishes but lhs does not
  bool trivially_satisfied = false;
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  double t = 0.0, r = 0.0, rho = 0.0;
  std::string p, q;
  std::optional<double> m_gamma;                // lei2
  std::optional<bool> radius_restriction_met;  // lei2: r <= m_gamma^{-1/(1+gamma)}
};

struct AuditOptions {
  double gamma = 1.0;  // Morrey index for the force
  NormOptions norm;
  SplitOptions split;
  MorreyParams morrey;
  std::vector<std::string> only;  // empty: every lemma
};

// Throws ValidationError unless 0 < 2r <= rho and Q_rho fits the time extent.
std::vector<LemmaReport> lemma_audit(const FieldStack& stack, const Eigen::Vector3d& x, double t,
                                     double r, double rho, const FunctionalExponents& e,
                                     const AuditOptions& opts = {});

// ------------------------------------------------------------------ dimension

struct SpaceTimePoint {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  double t = 0.0;
};

struct SingularSetEstimate {
  std::vector<SpaceTimePoint> points;
  std::vector<double> scales;  // ascending box sizes delta
  std::vector<std::int64_t> counts;
  double dimension = 0.0;
  double hausdorff_proxy = 0.0;  // count * delta at the finest scale
};

// Boxes of side delta in space and delta^2 in time; slope of log count against log(1/delta),
// clamped to [0, 5].
SingularSetEstimate singular_set_dimension(const std::vector<SpaceTimePoint>& points,
                                           std::vector<double> scales);

}  // namespace nsrlab
