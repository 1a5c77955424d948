#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsrlab/container.hpp"
#include "nsrlab/criteria.hpp"
#include "nsrlab/genflow.hpp"

namespace nsrlab {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "nsrlab-report";
inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

struct KindSettings {
  CriterionKind kind = CriterionKind::velocity;
  Exponent p;
  Exponent q;
  std::optional<double> epsilon;  // falls back to RunConfig::epsilon
};

// Default exponents per kind: velocity (p*, q) = (2, 4), velocity_gradient and vorticity (3/2, 2),
// vorticity_gradient (p#, q) = (1, 2).
KindSettings default_kind_settings(CriterionKind kind);

// Every knob of every command. Commands read the fields that concern them; reports echo all
// of them so a run can be reproduced from its report.
struct RunConfig {
  std::string command;
  std::string input;
  std::string output;  // container for generate, report for the others ("" = stdout)
  bool timestamp = true;

  // generate
  FlowSpec flow;
  int n = 32;
  int nt = 16;
  double length = 6.283185307179586;
  double dt = 0.01;
  double t0 = 0.0;
  bool integrate = false;  // march the t0 slice with the solver instead of the closed form

  // point of interest; t defaults to the last slice
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
  std::optional<double> t;

  // diagnose
  std::vector<KindSettings> kinds;
  double epsilon = kDefaultEpsilon;
  double ladder_r0 = 0.0;  // 0: largest radius that fits space and time
  double ladder_ratio = 0.8;
  int ladder_k_max = 6;
  double theta = 0.2;
  int trace_k_max = 4;
  bool use_centered_velocity = true;
  bool use_curl_w = false;
  bool contraction = true;

  // audit
  double r = 0.0;
  double rho = 0.0;
  Exponent q{2};  // functional exponents from 3/p + 2/q = 3
  double gamma = 1.0;
  std::vector<std::string> lemmas;

  // scale-check
  double lambda = 2.0;
  std::vector<double> radii;  // empty: four rungs below the largest feasible radius
  std::vector<std::string> functionals;
  double test_velocity_power = 1.0;

  int subsamples = 4;

  bool operator==(const RunConfig&) const;
};

Json to_json(const RunConfig& c);
// Missing keys keep their defaults; unknown keys are a ValidationError.
RunConfig run_config_from_json(const Json& j);

Json number(double v);  // non-finite values become "inf", "-inf" or "nan"
Json to_json(const Grid& g);
Json to_json(const ContainerInfo& info);
Json to_json(const CriterionVerdict& v);
Json to_json(const ContractionTrace& t);
Json to_json(const LemmaReport& r);
Json to_json(const SingularSetEstimate& e);

// Envelope shared by all reports. generated_at is left out when timestamps are off.
Json report_envelope(const RunConfig& c);

std::string dump_report(const Json& j);  // 2-space indent, trailing newline

}  // namespace nsrlab
