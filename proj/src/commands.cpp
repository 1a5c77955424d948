#include "nsrlab/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace nsrlab {

int exit_code_for(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const ValidationError&) {
    return kExitUsage;
  } catch (const IntegrityError&) {
    return kExitIntegrity;
  } catch (const NumericError&) {
    return kExitNumeric;
  } catch (const IoError&) {
    return kExitIo;
  } catch (...) {
    return kExitIo;
  }
}

int worker_count() {
  if (const char* env = std::getenv("NSRLAB_WORKERS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024)
      throw ValidationError(std::string("NSRLAB_WORKERS must be an integer in [1, 1024], got '") + env + "'");
    return int(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(std::max(n, 0));
  const int threads = std::clamp(workers, 1, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

struct Loaded {
  FieldStack stack;
  ContainerInfo info;
};

Loaded load(const RunConfig& c) {
  if (c.input.empty()) throw ValidationError("an input container is required");
  Loaded l;
  l.stack = read_container(c.input, &l.info);
  return l;
}

double eval_time(const RunConfig& c, const Grid& g) {
  const double t = c.t.value_or(g.t_end());
  const double tol = 1e-9 * g.dt;
  if (t < g.t0 - tol || t > g.t_end() + tol) {
    std::ostringstream os;
    os << "t = " << t << " lies outside the time extent [" << g.t0 << ", " << g.t_end() << "]";
    throw ValidationError(os.str());
  }
  return t;
}

// Largest radius whose cylinder fits the time extent, capped at a quarter box.
double auto_r0(const Grid& g, double t) {
  return std::min(g.length / 4, std::sqrt(std::max(t - g.t0, 0.0)) * (1 - 1e-9));
}

void check_finite(const std::vector<double>& v, const std::string& what) {
  for (double x : v)
    if (std::isnan(x)) throw NumericError("NaN in " + what);
}

Json point_json(const Eigen::Vector3d& x, double t) { return {{"x", {x[0], x[1], x[2]}}, {"t", t}}; }

NormOptions norm_options(const RunConfig& c) {
  NormOptions o;
  o.subsamples = c.subsamples;
  return o;
}

}  // namespace

Json cmd_generate(const RunConfig& c) {
  const Grid grid = make_grid(c.n, c.nt, c.length, c.dt, c.t0);
  FieldStack stack;
  if (c.integrate) {
    const Grid start = make_grid(c.n, 2, c.length, c.dt, c.t0);
    const FieldStack init = generate(c.flow, start);
    stack = ns_integrate(init.u.slice(0), std::nullopt, c.flow.nu, grid, c.nt - 1);
  } else {
    stack = generate(c.flow, grid);
  }
  if (!stack.u.all_finite()) throw NumericError("generated velocity is not finite");
  const std::string path = c.output.empty() ? "fields.nsrl" : c.output;
  const std::vector<std::uint8_t> bytes = encode_container(stack);
  write_file(path, bytes);
  Json j = report_envelope(c);
  j["output"] = path;
  j["bytes"] = bytes.size();
  j["container"] = to_json(inspect_container(bytes));
  j["ns_solution"] = stack.ns_solution;
  return j;
}

Json cmd_diagnose(const RunConfig& c) {
  const Loaded in = load(c);
  const FieldStack& s = in.stack;
  const double t = eval_time(c, s.grid);
  const int workers = worker_count();

  std::vector<KindSettings> kinds = c.kinds;
  if (kinds.empty())
    for (auto k : {CriterionKind::velocity, CriterionKind::velocity_gradient, CriterionKind::vorticity,
                   CriterionKind::vorticity_gradient})
      kinds.push_back(default_kind_settings(k));

  const double r0 = c.ladder_r0 > 0 ? c.ladder_r0 : auto_r0(s.grid, t);
  const LadderSpec ladder{r0, c.ladder_ratio, c.ladder_k_max};
  const NormOptions norm = norm_options(c);

  // Tasks: one per kind, then ckn_check, then the contraction trace.
  const int nk = int(kinds.size());
  std::vector<CriterionVerdict> verdicts(nk);
  std::optional<CriterionVerdict> ckn;
  std::optional<ContractionTrace> trace;
  std::vector<std::string> task_errors(nk + 2);
  parallel_for(nk + 2, workers, [&](int i) {
    try {
      if (i < nk) {
        CriterionConfig cc;
        cc.epsilon = kinds[i].epsilon.value_or(c.epsilon);
        cc.theta = c.theta;
        cc.kind = kinds[i].kind;
        cc.p = kinds[i].p;
        cc.q = kinds[i].q;
        cc.ladder = ladder;
        cc.use_centered_velocity = c.use_centered_velocity;
        cc.use_curl_w = c.use_curl_w;
        cc.norm = norm;
        verdicts[i] = evaluate_criterion(s, c.x, t, cc);
        check_finite(verdicts[i].evidence, std::string(to_string(cc.kind)) + " evidence");
      } else if (i == nk) {
        ckn = ckn_check(s, c.x, t, ladder, c.epsilon, norm);
        check_finite(ckn->evidence, "C + D");
      } else if (c.contraction) {
        trace = contraction_trace(s, c.x, t, r0, c.theta, c.trace_k_max, c.epsilon, norm);
        check_finite(trace->values, "contraction trace");
      }
    } catch (const ValidationError& e) {
      // Infeasible ladders and missing fields degrade to a partial report.
      task_errors[i] = e.what();
    }
  });

  Json j = report_envelope(c);
  j["input"] = to_json(in.info);
  j["point"] = point_json(c.x, t);
  j["ns_solution"] = s.ns_solution;
  Json warnings = Json::array();
  Json crit = Json::object();
  for (int i = 0; i < nk; ++i) {
    const std::string name = to_string(kinds[i].kind);
    Json e = {{"p", kinds[i].p.str()}, {"q", kinds[i].q.str()}};
    if (!task_errors[i].empty()) {
      CriterionVerdict v;
      v.threshold_used = kinds[i].epsilon.value_or(c.epsilon);
      v.warnings.push_back(task_errors[i]);
      e["verdict"] = to_json(v);
      warnings.push_back(name + ": " + task_errors[i]);
    } else {
      e["verdict"] = to_json(verdicts[i]);
      for (const auto& w : verdicts[i].warnings) warnings.push_back(name + ": " + w);
    }
    crit[name] = e;
  }
  j["criteria"] = crit;
  if (ckn) {
    j["ckn"] = to_json(*ckn);
  } else {
    j["ckn"] = nullptr;
    warnings.push_back("ckn: " + task_errors[nk]);
  }
  if (trace) {
    j["contraction"] = to_json(*trace);
  } else {
    j["contraction"] = nullptr;
    if (!task_errors[nk + 1].empty()) warnings.push_back("contraction: " + task_errors[nk + 1]);
  }
  j["warnings"] = warnings;
  return j;
}

Json cmd_audit(const RunConfig& c) {
  const Loaded in = load(c);
  const FieldStack& s = in.stack;
  const double t = eval_time(c, s.grid);
  const FunctionalExponents e = FunctionalExponents::from_q(c.q);
  AuditOptions ao;
  ao.gamma = c.gamma;
  ao.norm = norm_options(c);
  ao.morrey.gamma = c.gamma;
  ao.morrey.norm = ao.norm;

  for (const auto& id : c.lemmas)
    if (std::find(lemma_ids().begin(), lemma_ids().end(), id) == lemma_ids().end())
      throw ValidationError("unknown lemma id '" + id + "'");
  const std::vector<std::string> ids = c.lemmas.empty() ? lemma_ids() : c.lemmas;

  const int workers = worker_count();
  std::vector<LemmaReport> reports;
  if (workers == 1) {
    ao.only = ids;
    reports = lemma_audit(s, c.x, t, c.r, c.rho, e, ao);
  } else {
    std::vector<std::vector<LemmaReport>> parts(ids.size());
    parallel_for(int(ids.size()), workers, [&](int i) {
      AuditOptions o = ao;
      o.only = {ids[i]};
      parts[i] = lemma_audit(s, c.x, t, c.r, c.rho, e, o);
    });
    for (auto& p : parts) reports.insert(reports.end(), p.begin(), p.end());
    std::stable_sort(reports.begin(), reports.end(), [](const LemmaReport& a, const LemmaReport& b) {
      auto pos = [](const std::string& id) {
        return std::find(lemma_ids().begin(), lemma_ids().end(), id) - lemma_ids().begin();
      };
      return pos(a.lemma_id) < pos(b.lemma_id);
    });
  }

  Json j = report_envelope(c);
  j["input"] = to_json(in.info);
  j["point"] = point_json(c.x, t);
  j["exponents"] = {{"p", e.p.str()}, {"q", e.q.str()},
                    {"p_star", e.p_star() ? Json(e.p_star()->str()) : Json(nullptr)},
                    {"p_sharp", e.p_sharp() ? Json(e.p_sharp()->str()) : Json(nullptr)}};
  Json arr = Json::array();
  double worst = 0.0;
  bool all_trivial = true;
  for (const auto& r : reports) {
    if (std::isnan(r.lhs) || std::isnan(r.fitted_constant)) throw NumericError("NaN in lemma " + r.lemma_id);
    arr.push_back(to_json(r));
    if (r.applicable) {
      worst = std::max(worst, r.fitted_constant);
      all_trivial = all_trivial && r.trivially_satisfied;
    }
  }
  j["lemmas"] = arr;
  j["max_fitted_constant"] = number(worst);
  j["all_trivially_satisfied"] = all_trivial;
  return j;
}

Json cmd_scale_check(const RunConfig& c) {
  const Loaded in = load(c);
  const FieldStack& s = in.stack;
  const double lambda = c.lambda;
  RescaleOptions ro;
  ro.velocity_power = c.test_velocity_power;
  const FieldStack scaled = rescale(s, lambda, ro);  // validates lambda
  const double t = eval_time(c, s.grid);
  const double ts = t / (lambda * lambda);
  const Eigen::Vector3d xs = c.x / lambda;
  const FunctionalExponents e = FunctionalExponents::from_q(c.q);
  const NormOptions norm = norm_options(c);

  std::vector<double> radii = c.radii;
  std::vector<std::string> warnings;
  if (radii.empty()) {
    const double top = std::min(std::sqrt(std::max(ts - scaled.grid.t0, 0.0)) * (1 - 1e-9),
                                0.38 * s.grid.length / lambda);
    radii = feasible_radii(scaled.grid, ts, top, 0.8, 3, norm.floor_cells, &warnings);
    if (radii.empty()) throw ValidationError("no scale-check radius clears the resolution floor");
  }
  for (double r : radii) {
    if (!(r > 0)) throw ValidationError("scale-check radii must be positive");
    check_cylinder(scaled.grid, {xs, ts, r}, norm.floor_cells);
    check_cylinder(s.grid, {c.x, t, lambda * r}, norm.floor_cells);
  }

  std::vector<Functional> fs;
  Json omitted = Json::array();
  if (c.functionals.empty()) {
    for (Functional f : all_functionals()) {
      const std::string why = functional_unavailable(f, s, e);
      if (why.empty())
        fs.push_back(f);
      else
        omitted.push_back({{"functional", to_string(f)}, {"reason", why}});
    }
  } else {
    for (const auto& name : c.functionals) fs.push_back(parse_functional(name));
  }

  std::vector<FunctionalRequest> scaled_req, orig_req;
  for (double r : radii)
    for (Functional f : fs) {
      scaled_req.push_back({f, r});
      orig_req.push_back({f, lambda * r});
    }
  std::vector<double> a, b;
  parallel_for(2, worker_count(), [&](int i) {
    if (i == 0)
      a = evaluate_functionals(scaled, xs, ts, scaled_req, e, norm);
    else
      b = evaluate_functionals(s, c.x, t, orig_req, e, norm);
  });
  check_finite(a, "scaled functionals");
  check_finite(b, "original functionals");

  Json rows = Json::array();
  std::map<std::string, double> worst;
  double overall = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double mismatch = std::abs(a[i] - b[i]) / std::max(std::abs(b[i]), 1e-9);
    const std::string name = to_string(scaled_req[i].name);
    worst[name] = std::max(worst[name], mismatch);
    overall = std::max(overall, mismatch);
    rows.push_back({{"functional", name},
                    {"r", scaled_req[i].r},
                    {"scaled", a[i]},
                    {"original", b[i]},
                    {"relative_mismatch", mismatch}});
  }
  Json per = Json::object();
  for (Functional f : fs) per[to_string(f)] = worst[to_string(f)];

  Json j = report_envelope(c);
  j["input"] = to_json(in.info);
  j["point"] = point_json(c.x, t);
  j["scaled_point"] = point_json(xs, ts);
  j["lambda"] = lambda;
  j["exponents"] = {{"p", e.p.str()}, {"q", e.q.str()}};
  j["radii"] = radii;
  j["comparisons"] = rows;
  j["max_mismatch"] = per;
  j["overall_max_mismatch"] = overall;
  j["omitted"] = omitted;
  j["warnings"] = warnings;
  return j;
}

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    Json report;
    if (config.command == "generate")
      report = cmd_generate(config);
    else if (config.command == "diagnose")
      report = cmd_diagnose(config);
    else if (config.command == "audit")
      report = cmd_audit(config);
    else if (config.command == "scale-check")
      report = cmd_scale_check(config);
    else
      throw ValidationError("unknown command '" + config.command + "'");
    const std::string text = dump_report(report);
    if (config.command != "generate" && !config.output.empty()) {
      std::ofstream f(config.output, std::ios::binary | std::ios::trunc);
      if (!f) throw IoError("cannot open '" + config.output + "' for writing");
      f << text;
      if (!f) throw IoError("write failed on '" + config.output + "'");
    } else {
      out << text;
    }
    return kExitOk;
  } catch (...) {
    const std::exception_ptr e = std::current_exception();
    try {
      std::rethrow_exception(e);
    } catch (const std::exception& ex) {
      err << "nsrlab " << config.command << ": " << ex.what() << "\n";
    } catch (...) {
      err << "nsrlab " << config.command << ": unknown failure\n";
    }
    return exit_code_for(e);
  }
}

}  // namespace nsrlab
