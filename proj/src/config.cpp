#include "nhsim/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nhsim/mollify.hpp"
#include "nhsim/sleigh.hpp"

namespace nhsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw SimError(ErrorCode::invalid_parameter, "config: " + what);
}

double get_number(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) fail("'" + key + "' must be a number");
  return j.at(key).get<double>();
}

int get_int(const json& j, const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) fail("'" + key + "' must be an integer");
  return j.at(key).get<int>();
}

bool get_bool(const json& j, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail("'" + key + "' must be a boolean");
  return j.at(key).get<bool>();
}

Vec get_vector(const json& j, const std::string& key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    fail("'" + key + "' must be an array of numbers");
  }
  const auto& arr = j.at(key);
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) fail("'" + key + "' must contain numbers only");
    v[static_cast<int>(i)] = arr[i].get<double>();
  }
  return v;
}

Polynomial parse_polynomial(const json& j, int dim, const std::string& where) {
  if (!j.is_array()) fail(where + " must be an array of monomials");
  std::vector<Monomial> terms;
  for (const auto& term : j) {
    if (!term.is_object() || !term.contains("powers") || !term.contains("coeff")) {
      fail(where + ": each monomial needs 'powers' and 'coeff'");
    }
    Monomial mono;
    mono.coeff = term.at("coeff").get<double>();
    for (const auto& p : term.at("powers")) {
      const int e = p.get<int>();
      if (e < 0) fail(where + ": negative exponent");
      mono.powers.push_back(e);
    }
    if (static_cast<int>(mono.powers.size()) != dim) {
      fail(where + ": 'powers' must have one entry per coordinate");
    }
    terms.push_back(std::move(mono));
  }
  return Polynomial(dim, std::move(terms));
}

MechanicalSystem build_system(const json& sys, json& resolved) {
  if (!sys.contains("kind") || !sys.at("kind").is_string()) {
    fail("system.kind missing");
  }
  const std::string kind = sys.at("kind").get<std::string>();
  resolved["kind"] = kind;

  if (kind == "sleigh") {
    const double mass = get_number(sys, "mass", 1.0);
    const double inertia = get_number(sys, "inertia", 1.0);
    const int roughness = get_int(sys, "roughness", 0);
    const double delta = get_number(sys, "delta", 0.3);
    const double h = get_number(sys, "h", 1e6);
    resolved["mass"] = mass;
    resolved["inertia"] = inertia;
    resolved["roughness"] = roughness;
    resolved["delta"] = delta;
    resolved["h"] = h;
    return build_sleigh_system(mass, inertia, roughness, delta, h);
  }

  if (kind == "polynomial") {
    PolynomialSystemSpec spec;
    spec.m = get_int(sys, "m", 0);
    spec.n = get_int(sys, "n", 0);
    if (spec.m < 2 || spec.n < 1 || spec.n >= spec.m) fail("need 1 <= n < m, m >= 2");
    if (!sys.contains("domain")) fail("system.domain missing");
    spec.domain.lo = get_vector(sys.at("domain"), "lo");
    spec.domain.hi = get_vector(sys.at("domain"), "hi");
    if (spec.domain.lo.size() != spec.m || spec.domain.hi.size() != spec.m) {
      fail("domain bounds must have length m");
    }
    for (int i = 0; i < spec.m; ++i) {
      if (!(spec.domain.lo[i] < spec.domain.hi[i])) fail("domain must be non-empty");
    }
    spec.h = get_number(sys, "h", 1e6);

    if (!sys.contains("metric") || !sys.at("metric").is_array()) fail("system.metric missing");
    const auto& gm = sys.at("metric");
    if (static_cast<int>(gm.size()) != spec.m) fail("metric must be m x m");
    spec.metric.resize(spec.m);
    for (int i = 0; i < spec.m; ++i) {
      if (static_cast<int>(gm[i].size()) != spec.m) fail("metric must be m x m");
      spec.metric[i].resize(spec.m);
      for (int j = 0; j < spec.m; ++j) {
        std::ostringstream where;
        where << "metric[" << i << "][" << j << "]";
        spec.metric[i][j] = parse_polynomial(gm[i][j], spec.m, where.str());
      }
    }

    spec.potential = sys.contains("potential")
                         ? parse_polynomial(sys.at("potential"), spec.m, "potential")
                         : Polynomial::constant(spec.m, 0.0);

    if (!sys.contains("constraint") || !sys.at("constraint").is_array()) {
      fail("system.constraint missing");
    }
    const auto& am = sys.at("constraint");
    if (static_cast<int>(am.size()) != spec.n) fail("constraint must be n x m");
    spec.constraint.resize(spec.n);
    for (int k = 0; k < spec.n; ++k) {
      if (static_cast<int>(am[k].size()) != spec.m) fail("constraint must be n x m");
      spec.constraint[k].resize(spec.m);
      for (int j = 0; j < spec.m; ++j) {
        std::ostringstream where;
        where << "constraint[" << k << "][" << j << "]";
        spec.constraint[k][j] = parse_polynomial(am[k][j], spec.m, where.str());
      }
    }
    if (sys.contains("name")) spec.name = sys.at("name").get<std::string>();
    resolved = sys;
    resolved["h"] = spec.h;
    return build_polynomial_system(spec);
  }

  fail("unknown system.kind '" + kind + "' (use 'sleigh' or 'polynomial')");
}

}  // namespace

RunConfig parse_config(const json& j) {
  if (!j.is_object()) fail("top level must be an object");
  if (!j.contains("system") || !j.at("system").is_object()) fail("'system' missing");

  RunConfig cfg;
  json resolved_system;
  cfg.system = build_system(j.at("system"), resolved_system);

  cfg.x0 = get_vector(j, "x0");
  cfg.v0 = get_vector(j, "v0");
  if (cfg.x0.size() != cfg.system.m || cfg.v0.size() != cfg.system.m) {
    fail("x0 and v0 must have length m");
  }

  cfg.tau = get_number(j, "tau", 1.0);
  cfg.dt = get_number(j, "dt", 1e-3);
  if (!(cfg.tau > 0.0) || !(cfg.dt > 0.0)) fail("tau and dt must be positive");
  const double ratio = cfg.tau / cfg.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) {
    fail("dt must divide tau");
  }

  if (j.contains("eps_schedule")) {
    for (const auto& e : j.at("eps_schedule")) {
      cfg.eps_schedule.push_back(e.get<double>());
    }
  } else if (j.contains("epsilon")) {
    cfg.eps_schedule.push_back(get_number(j, "epsilon", 0.0));
  } else {
    cfg.eps_schedule = default_eps_schedule(cfg.system.domain, 5);
  }
  for (std::size_t i = 0; i < cfg.eps_schedule.size(); ++i) {
    if (!(cfg.eps_schedule[i] > 0.0) ||
        (i > 0 && !(cfg.eps_schedule[i] < cfg.eps_schedule[i - 1]))) {
      fail("epsilon schedule must be positive and strictly decreasing");
    }
  }

  cfg.alpha = get_number(j, "alpha", 0.5);
  if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0)) fail("alpha must lie in (0, 1)");
  cfg.basis_size = get_int(j, "basis_size", 4);
  if (cfg.basis_size < 1) fail("basis_size must be >= 1");
  cfg.quad_points = get_int(j, "quad_points", 9);
  if (cfg.quad_points < 2) fail("quad_points must be >= 2");
  cfg.stabilize = get_bool(j, "stabilize", true);

  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    cfg.tol.energy_tol = get_number(t, "energy_tol", cfg.tol.energy_tol);
    cfg.tol.constraint_tol = get_number(t, "constraint_tol", cfg.tol.constraint_tol);
    cfg.tol.residual_tol = get_number(t, "residual_tol", cfg.tol.residual_tol);
  }
  if (!(cfg.tol.energy_tol > 0.0) || !(cfg.tol.constraint_tol > 0.0) ||
      !(cfg.tol.residual_tol > 0.0)) {
    fail("tolerances must be positive");
  }

  cfg.test_degree = get_int(j, "test_degree", 4);
  cfg.test_count = get_int(j, "test_count", 10);
  if (cfg.test_degree < 1 || cfg.test_count < 1) {
    fail("test_degree and test_count must be >= 1");
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.grid_per_axis = get_int(j, "grid_per_axis", 12);
  if (cfg.grid_per_axis < 2) fail("grid_per_axis must be >= 2");
  if (j.contains("trajectory")) {
    cfg.trajectory_path = j.at("trajectory").get<std::string>();
  }

  // Echo the fully-resolved configuration for reports.
  json r;
  r["system"] = resolved_system;
  r["x0"] = std::vector<double>(cfg.x0.data(), cfg.x0.data() + cfg.x0.size());
  r["v0"] = std::vector<double>(cfg.v0.data(), cfg.v0.data() + cfg.v0.size());
  r["tau"] = cfg.tau;
  r["dt"] = cfg.dt;
  r["eps_schedule"] = cfg.eps_schedule;
  r["alpha"] = cfg.alpha;
  r["basis_size"] = cfg.basis_size;
  r["quad_points"] = cfg.quad_points;
  r["stabilize"] = cfg.stabilize;
  r["tolerances"] = {{"energy_tol", cfg.tol.energy_tol},
                     {"constraint_tol", cfg.tol.constraint_tol},
                     {"residual_tol", cfg.tol.residual_tol}};
  r["test_degree"] = cfg.test_degree;
  r["test_count"] = cfg.test_count;
  r["seed"] = cfg.seed;
  r["grid_per_axis"] = cfg.grid_per_axis;
  if (!cfg.trajectory_path.empty()) r["trajectory"] = cfg.trajectory_path;
  cfg.resolved = std::move(r);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw SimError(ErrorCode::malformed_file, "cannot open config '" + path + "'");
  }
  json j;
  try {
    in >> j;
  } catch (const std::exception& err) {
    throw SimError(ErrorCode::invalid_parameter,
                   std::string("config: invalid JSON: ") + err.what());
  }
  return parse_config(j);
}

}  // namespace nhsim
