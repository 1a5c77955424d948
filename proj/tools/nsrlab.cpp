#include <CLI11.hpp>

#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "nsrlab/commands.hpp"

using namespace nsrlab;

namespace {

// --config is read before the real parse so that flags override file values.
std::optional<std::string> find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) return std::string(argv[i + 1]);
    if (std::strncmp(argv[i], "--config=", 9) == 0) return std::string(argv[i] + 9);
  }
  return std::nullopt;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  try {
    return run_config_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

// "name=a,b" -> (name, [a, b])
std::pair<std::string, std::vector<std::string>> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos) throw ValidationError("expected name=value, got '" + s + "'");
  std::vector<std::string> parts;
  std::stringstream ss(s.substr(eq + 1));
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  return {s.substr(0, eq), parts};
}

KindSettings& kind_entry(RunConfig& c, CriterionKind k) {
  for (auto& ks : c.kinds)
    if (ks.kind == k) return ks;
  c.kinds.push_back(default_kind_settings(k));
  return c.kinds.back();
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    if (auto path = find_config(argc, argv)) cfg = load_config(*path);
  } catch (...) {
    const auto e = std::current_exception();
    try {
      std::rethrow_exception(e);
    } catch (const std::exception& ex) {
      std::cerr << "nsrlab: " << ex.what() << "\n";
    }
    return exit_code_for(e);
  }

  CLI::App app{"nsrlab: local regularity diagnostics for sampled Navier-Stokes fields"};
  app.require_subcommand(1);
  app.fallthrough();  // --config and --dump-config may follow the subcommand
  std::string config_path;
  bool dump_config = false;
  app.add_option("--config", config_path, "JSON run config; flags given on the command line win");
  app.add_flag("--dump-config", dump_config, "print the effective config as JSON and exit");

  bool no_timestamp = !cfg.timestamp;
  std::vector<double> x_arg;
  double t_arg = 0.0;
  auto common = [&](CLI::App* sub, bool needs_input) {
    sub->add_flag("--no-timestamp", no_timestamp, "leave generated_at out of the report");
    sub->add_option("-o,--output", cfg.output, "output path");
    sub->add_option("--subsamples", cfg.subsamples, "ball quadrature subsamples per axis")->check(CLI::Range(1, 16));
    if (needs_input) {
      sub->add_option("input", cfg.input, "field container")->required();
      sub->add_option("--x", x_arg, "point in space")->expected(3);
      sub->add_option("--t", t_arg, "time (default: last slice)");
    }
  };

  // generate
  auto* gen = app.add_subcommand("generate", "write a field container for a test flow");
  common(gen, false);
  std::string family = to_string(cfg.flow.family);
  std::vector<double> center;
  gen->add_option("--family", family, "abc | single_mode_beltrami | homogeneous_minus_one | random_solenoidal");
  gen->add_option("--n", cfg.n, "samples per axis");
  gen->add_option("--nt", cfg.nt, "time slices");
  gen->add_option("--L,--length", cfg.length, "box side");
  gen->add_option("--dt", cfg.dt, "slice spacing");
  gen->add_option("--t0", cfg.t0, "first slice time");
  gen->add_option("--nu", cfg.flow.nu, "viscosity");
  gen->add_option("--A", cfg.flow.A, "abc amplitude A");
  gen->add_option("--B", cfg.flow.B, "abc amplitude B");
  gen->add_option("--C", cfg.flow.C, "abc amplitude C");
  gen->add_option("--amplitude", cfg.flow.amplitude, "swirl strength, rms speed or mode amplitude");
  gen->add_option("--wavenumber", cfg.flow.wavenumber, "mode wavenumber or random band limit");
  gen->add_option("--seed", cfg.flow.seed, "random seed");
  gen->add_option("--r-moll", cfg.flow.r_moll, "homogeneous core radius (0: 4h)");
  gen->add_option("--center", center, "homogeneous centre")->expected(3);
  gen->add_flag("--with-vorticity", cfg.flow.with_vorticity, "also store w = curl u");
  gen->add_flag("--integrate", cfg.integrate, "march the first slice with the spectral solver");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "run the regularity criteria at a point");
  common(diag, true);
  std::vector<std::string> kind_names, exponents, eps_for;
  bool uncentered = !cfg.use_centered_velocity, no_trace = !cfg.contraction;
  diag->add_option("--kind", kind_names, "criterion kind (repeatable, default all four)")->delimiter(',');
  diag->add_option("--exponents", exponents, "kind=p,q with p*, p or p# as the kind requires");
  diag->add_option("--epsilon", cfg.epsilon, "smallness threshold");
  diag->add_option("--epsilon-for", eps_for, "kind=epsilon override");
  diag->add_option("--r0", cfg.ladder_r0, "largest rung (0: largest feasible)");
  diag->add_option("--ratio", cfg.ladder_ratio, "rung ratio");
  diag->add_option("--k-max", cfg.ladder_k_max, "rungs below r0");
  diag->add_option("--theta", cfg.theta, "contraction ratio in (0, 1/4)");
  diag->add_option("--trace-k-max", cfg.trace_k_max, "contraction trace length");
  diag->add_flag("--uncentered", uncentered, "use u instead of u - (u)_r in the velocity criterion");
  diag->add_flag("--curl-w", cfg.use_curl_w, "use curl w in place of grad w");
  diag->add_flag("--no-contraction", no_trace, "skip the contraction trace");

  // audit
  auto* aud = app.add_subcommand("audit", "fit the constants of the local estimates");
  common(aud, true);
  std::string q_text = cfg.q.str();
  aud->add_option("--r", cfg.r, "inner radius")->required();
  aud->add_option("--rho", cfg.rho, "outer radius, at least 2r")->required();
  aud->add_option("--q", q_text, "time exponent; p follows from 3/p + 2/q = 3");
  aud->add_option("--gamma", cfg.gamma, "Morrey index of the force");
  aud->add_option("--lemma", cfg.lemmas, "lemma id (repeatable, default all)")->delimiter(',');

  // scale-check
  auto* sc = app.add_subcommand("scale-check", "compare functionals of u and its rescaling");
  common(sc, true);
  sc->add_option("--lambda", cfg.lambda, "scale factor, a power of two");
  sc->add_option("--radii", cfg.radii, "radii for the rescaled field")->delimiter(',');
  sc->add_option("--functional", cfg.functionals, "functional name (repeatable, default all available)")
      ->delimiter(',');
  auto* q_sc = sc->add_option("--q", q_text, "time exponent for Gtilde, G1, W, W1, Wtilde1");
  (void)q_sc;
  sc->add_option("--test-velocity-power", cfg.test_velocity_power, "test hook: power of lambda on u")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    cfg.command = sub->get_name();
    cfg.timestamp = !no_timestamp;
    auto given = [&](const char* name) {
      const CLI::Option* o = sub->get_option_no_throw(name);
      return o && o->count() > 0;
    };
    if (given("--x")) cfg.x = Eigen::Vector3d(x_arg[0], x_arg[1], x_arg[2]);
    if (given("--t")) cfg.t = t_arg;
    if (gen->parsed()) {
      cfg.flow.family = parse_family(family);
      if (!center.empty()) cfg.flow.center = Eigen::Vector3d(center[0], center[1], center[2]);
    }
    if (diag->parsed()) {
      cfg.use_centered_velocity = !uncentered;
      cfg.contraction = !no_trace;
      for (const auto& k : kind_names) kind_entry(cfg, parse_kind(k));
      for (const auto& s : exponents) {
        auto [name, parts] = split_assignment(s);
        if (parts.size() != 2) throw ValidationError("--exponents wants kind=p,q, got '" + s + "'");
        KindSettings& ks = kind_entry(cfg, parse_kind(name));
        ks.p = Exponent::parse(parts[0]);
        ks.q = Exponent::parse(parts[1]);
      }
      for (const auto& s : eps_for) {
        auto [name, parts] = split_assignment(s);
        if (parts.size() != 1) throw ValidationError("--epsilon-for wants kind=value, got '" + s + "'");
        kind_entry(cfg, parse_kind(name)).epsilon = std::stod(parts[0]);
      }
    }
    if (aud->parsed() || sc->parsed()) cfg.q = Exponent::parse(q_text);
  } catch (const std::exception& e) {
    std::cerr << "nsrlab: " << e.what() << "\n";
    return kExitUsage;
  }

  if (dump_config) {
    std::cout << to_json(cfg).dump(2) << "\n";
    return kExitOk;
  }
  return run_command(cfg, std::cout, std::cerr);
}
