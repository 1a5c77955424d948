#include "nsrlab/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <initializer_list>
#include <set>

namespace nsrlab {

namespace {

void only_keys(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ValidationError("config section '" + where + "' must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ValidationError("unknown config key '" + where + "." + it.key() + "'");
}

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

void read_exponent(const Json& j, const char* key, Exponent& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_string()) throw ValidationError(std::string("config key '") + key + "' must be a string");
  out = Exponent::parse(j.at(key).get<std::string>());
}

Json vec3(const Eigen::Vector3d& v) { return Json::array({v[0], v[1], v[2]}); }

Eigen::Vector3d read_vec3(const Json& j, const char* key) {
  const Json& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw ValidationError(std::string("config key '") + key + "' needs 3 numbers");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

}  // namespace

KindSettings default_kind_settings(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::velocity: return {kind, Exponent(2), Exponent(4), std::nullopt};
    case CriterionKind::velocity_gradient:
    case CriterionKind::vorticity: return {kind, Exponent(3, 2), Exponent(2), std::nullopt};
    case CriterionKind::vorticity_gradient: return {kind, Exponent(1), Exponent(2), std::nullopt};
  }
  return {};
}

bool RunConfig::operator==(const RunConfig& o) const { return to_json(*this) == to_json(o); }

Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["command"] = c.command;
  j["input"] = c.input;
  j["output"] = c.output;
  j["timestamp"] = c.timestamp;
  const FlowSpec& f = c.flow;
  j["generate"] = {{"family", to_string(f.family)},
                   {"A", f.A},
                   {"B", f.B},
                   {"C", f.C},
                   {"nu", f.nu},
                   {"amplitude", f.amplitude},
                   {"wavenumber", f.wavenumber},
                   {"seed", f.seed},
                   {"r_moll", f.r_moll},
                   {"center", f.center ? vec3(*f.center) : Json(nullptr)},
                   {"with_vorticity", f.with_vorticity},
                   {"n", c.n},
                   {"nt", c.nt},
                   {"length", c.length},
                   {"dt", c.dt},
                   {"t0", c.t0},
                   {"integrate", c.integrate}};
  j["point"] = {{"x", vec3(c.x)}, {"t", c.t ? Json(*c.t) : Json(nullptr)}};
  Json kinds = Json::array();
  for (const auto& k : c.kinds)
    kinds.push_back({{"kind", to_string(k.kind)},
                     {"p", k.p.str()},
                     {"q", k.q.str()},
                     {"epsilon", k.epsilon ? Json(*k.epsilon) : Json(nullptr)}});
  j["diagnose"] = {{"kinds", kinds},
                   {"epsilon", c.epsilon},
                   {"ladder", {{"r0", c.ladder_r0}, {"ratio", c.ladder_ratio}, {"k_max", c.ladder_k_max}}},
                   {"theta", c.theta},
                   {"trace_k_max", c.trace_k_max},
                   {"use_centered_velocity", c.use_centered_velocity},
                   {"use_curl_w", c.use_curl_w},
                   {"contraction", c.contraction}};
  j["audit"] = {{"r", c.r}, {"rho", c.rho}, {"q", c.q.str()}, {"gamma", c.gamma}, {"lemmas", c.lemmas}};
  j["scale_check"] = {{"lambda", c.lambda},
                      {"radii", c.radii},
                      {"functionals", c.functionals},
                      {"test_velocity_power", c.test_velocity_power}};
  j["subsamples"] = c.subsamples;
  return j;
}

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  only_keys(j, {"command", "input", "output", "timestamp", "generate", "point", "diagnose", "audit", "scale_check",
                "subsamples"},
            "config");
  read(j, "command", c.command);
  read(j, "input", c.input);
  read(j, "output", c.output);
  read(j, "timestamp", c.timestamp);
  read(j, "subsamples", c.subsamples);
  if (j.contains("generate")) {
    const Json& g = j["generate"];
    only_keys(g, {"family", "A", "B", "C", "nu", "amplitude", "wavenumber", "seed", "r_moll", "center",
                  "with_vorticity", "n", "nt", "length", "dt", "t0", "integrate"},
              "generate");
    if (g.contains("family")) c.flow.family = parse_family(g["family"].get<std::string>());
    read(g, "A", c.flow.A);
    read(g, "B", c.flow.B);
    read(g, "C", c.flow.C);
    read(g, "nu", c.flow.nu);
    read(g, "amplitude", c.flow.amplitude);
    read(g, "wavenumber", c.flow.wavenumber);
    read(g, "seed", c.flow.seed);
    read(g, "r_moll", c.flow.r_moll);
    if (g.contains("center") && !g["center"].is_null()) c.flow.center = read_vec3(g, "center");
    read(g, "with_vorticity", c.flow.with_vorticity);
    read(g, "n", c.n);
    read(g, "nt", c.nt);
    read(g, "length", c.length);
    read(g, "dt", c.dt);
    read(g, "t0", c.t0);
    read(g, "integrate", c.integrate);
  }
  if (j.contains("point")) {
    const Json& p = j["point"];
    only_keys(p, {"x", "t"}, "point");
    if (p.contains("x")) c.x = read_vec3(p, "x");
    if (p.contains("t") && !p["t"].is_null()) c.t = p["t"].get<double>();
  }
  if (j.contains("diagnose")) {
    const Json& d = j["diagnose"];
    only_keys(d, {"kinds", "epsilon", "ladder", "theta", "trace_k_max", "use_centered_velocity", "use_curl_w",
                  "contraction"},
              "diagnose");
    if (d.contains("kinds")) {
      for (const Json& k : d["kinds"]) {
        only_keys(k, {"kind", "p", "q", "epsilon"}, "diagnose.kinds");
        KindSettings ks = default_kind_settings(parse_kind(k.at("kind").get<std::string>()));
        read_exponent(k, "p", ks.p);
        read_exponent(k, "q", ks.q);
        if (k.contains("epsilon") && !k["epsilon"].is_null()) ks.epsilon = k["epsilon"].get<double>();
        c.kinds.push_back(ks);
      }
    }
    read(d, "epsilon", c.epsilon);
    if (d.contains("ladder")) {
      const Json& l = d["ladder"];
      only_keys(l, {"r0", "ratio", "k_max"}, "diagnose.ladder");
      read(l, "r0", c.ladder_r0);
      read(l, "ratio", c.ladder_ratio);
      read(l, "k_max", c.ladder_k_max);
    }
    read(d, "theta", c.theta);
    read(d, "trace_k_max", c.trace_k_max);
    read(d, "use_centered_velocity", c.use_centered_velocity);
    read(d, "use_curl_w", c.use_curl_w);
    read(d, "contraction", c.contraction);
  }
  if (j.contains("audit")) {
    const Json& a = j["audit"];
    only_keys(a, {"r", "rho", "q", "gamma", "lemmas"}, "audit");
    read(a, "r", c.r);
    read(a, "rho", c.rho);
    read_exponent(a, "q", c.q);
    read(a, "gamma", c.gamma);
    read(a, "lemmas", c.lemmas);
  }
  if (j.contains("scale_check")) {
    const Json& s = j["scale_check"];
    only_keys(s, {"lambda", "radii", "functionals", "test_velocity_power"}, "scale_check");
    read(s, "lambda", c.lambda);
    read(s, "radii", c.radii);
    read(s, "functionals", c.functionals);
    read(s, "test_velocity_power", c.test_velocity_power);
  }
  return c;
}

Json to_json(const Grid& g) {
  return {{"nx", g.n}, {"ny", g.n}, {"nz", g.n}, {"nt", g.nt}, {"domain_length", g.length},
          {"dt", g.dt}, {"t0", g.t0}, {"h", g.h()}, {"t_end", g.t_end()}};
}

Json to_json(const ContainerInfo& info) {
  char crc[11];
  std::snprintf(crc, sizeof crc, "0x%08x", info.crc);
  Json fields = Json::array();
  for (const auto& e : info.entries)
    fields.push_back({{"name", e.name}, {"components", e.components}, {"offset", e.offset}, {"length", e.length}});
  return {{"format_version", info.version}, {"grid", to_json(info.grid)}, {"crc32", crc},
          {"flags", info.flags}, {"fields", fields}};
}

Json to_json(const CriterionVerdict& v) {
  Json ev = Json::array();
  for (double e : v.evidence) ev.push_back(number(e));
  return {{"status", to_string(v.status)},
          {"radii", v.radii},
          {"evidence", ev},
          {"trend_slope", optional_number(v.trend_slope)},
          {"tail_max", number(v.tail_max)},
          {"threshold_used", v.threshold_used},
          {"witness_radius", optional_number(v.witness_radius)},
          {"warnings", v.warnings}};
}

Json to_json(const ContractionTrace& t) {
  Json vals = Json::array();
  for (double v : t.values) vals.push_back(number(v));
  return {{"theta", t.theta},
          {"k", t.k},
          {"radii", t.radii},
          {"values", vals},
          {"first_below", t.first_below ? Json(*t.first_below) : Json(nullptr)},
          {"warnings", t.warnings}};
}

Json to_json(const LemmaReport& r) {
  Json rhs = Json::object();
  for (const auto& [name, v] : r.rhs_terms) rhs[name] = number(v);
  Json j = {{"lemma_id", r.lemma_id},
            {"applicable", r.applicable},
            {"regime_note", r.regime_note},
            {"lhs", number(r.lhs)},
            {"rhs_terms", rhs},
            {"fitted_constant", number(r.fitted_constant)},
            {"trivially_satisfied", r.trivially_satisfied},
            {"context", {{"x", vec3(r.x)}, {"t", r.t}, {"r", r.r}, {"rho", r.rho}, {"p", r.p}, {"q", r.q}}}};
  if (r.m_gamma) j["m_gamma"] = number(*r.m_gamma);
  if (r.radius_restriction_met) j["radius_restriction_met"] = *r.radius_restriction_met;
  return j;
}

Json to_json(const SingularSetEstimate& e) {
  Json pts = Json::array();
  for (const auto& p : e.points) pts.push_back({{"x", vec3(p.x)}, {"t", p.t}});
  return {{"points", pts}, {"scales", e.scales}, {"counts", e.counts},
          {"dimension", number(e.dimension)}, {"hausdorff_proxy", number(e.hausdorff_proxy)}};
}

Json report_envelope(const RunConfig& c) {
  Json j;
  j["schema"] = kReportSchema;
  j["schema_version"] = kReportSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["container_format_version"] = kContainerVersion;
  j["command"] = c.command;
  if (c.timestamp) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    j["generated_at"] = buf;
  }
  j["config"] = to_json(c);
  return j;
}

std::string dump_report(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace nsrlab
