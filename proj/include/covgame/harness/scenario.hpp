#pragma once

// Scenario files: JSON with an explicit unit on every angle.
//
// An angle is written {"value": 98, "unit": "deg"} or {"value": 1, "unit":
// "rad"}.  A missing or unknown unit is rejected.  Indices in files are
// 1-based; everything in memory is 0-based and in radians.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "covgame/docs.hpp"
#include "covgame/optimize.hpp"
#include "covgame/orbit.hpp"

namespace covgame::harness {

using nlohmann::json;

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class PhaseRule { step, uniform };

struct ConstellationConfig {
  std::size_t n_satellites = 24;
  double semi_major_axis = 6896.27;  // km
  double inclination = 98.0 * std::numbers::pi / 180.0;
  double raan0 = 284.507 * std::numbers::pi / 180.0;
  double gmst0 = 284.507 * std::numbers::pi / 180.0;
  PhaseRule phase_rule = PhaseRule::step;
  double phase_step = 15.0 * std::numbers::pi / 180.0;  // used by PhaseRule::step

  /// M_k(t0) for a constellation of n satellites under this rule.
  orbit::ConstellationSpec spec(std::size_t n) const {
    const double step = phase_rule == PhaseRule::uniform ? 2.0 * std::numbers::pi / static_cast<double>(n) : phase_step;
    return orbit::ConstellationSpec::evenly_phased(n, semi_major_axis, inclination, raan0, gmst0, step);
  }
};

struct GameConfig {
  double gamma = 0.2;
  StrategyInterval theta_bounds{-15.0 * std::numbers::pi / 180.0, 15.0 * std::numbers::pi / 180.0};
  double theta_max = 1.0;  // rad
  std::vector<std::pair<std::size_t, double>> theta_max_overrides;  // (0-based agent, rad)
  std::size_t reach_samples = kDefaultReachSamples;

  std::vector<double> theta_max_for(std::size_t n) const {
    std::vector<double> out(n, theta_max);
    for (const auto& [k, v] : theta_max_overrides)
      if (k < n) out[k] = v;
    return out;
  }
};

struct SweepConfig {
  std::vector<std::size_t> counts{8, 12, 16, 24};
  std::set<std::size_t> count_damaged{9, 14};  // 0-based
  std::size_t energy_agent = 10;               // 0-based
  std::size_t energy_neighbor = 11;            // 0-based
  std::vector<double> energy_theta_max;        // rad
};

struct ScenarioConfig {
  std::string name = "unnamed";
  orbit::OrbitConstants constants;
  ConstellationConfig constellation;
  orbit::TargetSpec target{121.3 * std::numbers::pi / 180.0, 31.1 * std::numbers::pi / 180.0,
                           9.45 * std::numbers::pi / 180.0};
  double t0 = 0.0;           // s
  double duration = 86400.0;  // s
  double dt = 5.0;            // s
  GameConfig game;
  DocsConfig docs;
  PatternSearchConfig centralized;
  std::set<std::size_t> damaged;  // 0-based
  std::uint64_t seed = 0;
  SweepConfig sweep;

  TimeGrid grid() const { return TimeGrid(t0, t0 + duration, dt); }

  void validate() const {
    constants.validate();
    if (constellation.n_satellites < 1) throw ScenarioError("constellation.n_satellites", "must be >= 1");
    constellation.spec(constellation.n_satellites).validate(constants);
    target.validate();
    (void)grid();
    for (std::size_t k : damaged)
      if (k >= constellation.n_satellites)
        throw ScenarioError("damaged", "index " + std::to_string(k + 1) + " exceeds the satellite count");
    for (const auto& [k, v] : game.theta_max_overrides) {
      if (k >= constellation.n_satellites)
        throw ScenarioError("game.theta_max_overrides", "agent " + std::to_string(k + 1) + " exceeds the satellite count");
      if (!(v > 0.0)) throw ScenarioError("game.theta_max_overrides", "theta_max must be > 0");
    }
    if (!(game.theta_max > 0.0)) throw ScenarioError("game.theta_max", "must be > 0");
    if (!(game.gamma >= 0.0)) throw ScenarioError("game.gamma", "must be >= 0");
    if (!(game.theta_bounds.lo <= 0.0 && game.theta_bounds.hi >= 0.0))
      throw ScenarioError("game.theta_bounds", "must contain zero (the unmaneuvered start)");
    if (game.reach_samples < 2) throw ScenarioError("game.reach_samples", "must be >= 2");
    docs.validate();
    centralized.validate();
  }
};

namespace detail {

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ScenarioError(path, "must be finite");
  return v;
}

inline std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ScenarioError(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

inline double angle(const json& j, const std::string& path) {
  if (!j.is_object()) throw ScenarioError(path, "angles are written {\"value\": x, \"unit\": \"deg\"|\"rad\"}");
  const json* v = find(j, "value");
  if (!v) throw ScenarioError(join(path, "value"), "missing");
  const json* u = find(j, "unit");
  if (!u) throw ScenarioError(join(path, "unit"), "missing; the unit must be explicit");
  if (!u->is_string()) throw ScenarioError(join(path, "unit"), "expected \"deg\" or \"rad\"");
  const double x = number(*v, join(path, "value"));
  const auto unit = u->get<std::string>();
  if (unit == "rad") return x;
  if (unit == "deg") return x * std::numbers::pi / 180.0;
  throw ScenarioError(join(path, "unit"), "unknown unit '" + unit + "'");
}

inline std::size_t one_based(const json& j, const std::string& path) {
  const std::size_t k = count(j, path);
  if (k < 1) throw ScenarioError(path, "indices are 1-based");
  return k - 1;
}

inline std::set<std::size_t> index_set(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected a list of 1-based indices");
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.insert(one_based(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ScenarioError(path.empty() ? "<root>" : path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ScenarioError(join(path, it.key()), "unknown field");
  }
}

}  // namespace detail

/// Parses an already-loaded document.  Fields left out keep their defaults,
/// which are the reference parameter set.
inline ScenarioConfig parse_scenario(const json& root) {
  using namespace detail;
  ScenarioConfig c;
  reject_unknown(root, "",
                 {"name", "constants", "constellation", "target", "grid", "game", "docs", "centralized", "damaged",
                  "seed", "sweep"});
  if (const json* v = find(root, "name")) {
    if (!v->is_string()) throw ScenarioError("name", "expected a string");
    c.name = v->get<std::string>();
  }
  if (const json* s = find(root, "constants")) {
    reject_unknown(*s, "constants", {"mu_km3_s2", "j2", "earth_radius_km", "earth_rotation_rad_s"});
    if (const json* v = find(*s, "mu_km3_s2")) c.constants.mu = number(*v, "constants.mu_km3_s2");
    if (const json* v = find(*s, "j2")) c.constants.j2 = number(*v, "constants.j2");
    if (const json* v = find(*s, "earth_radius_km")) c.constants.re = number(*v, "constants.earth_radius_km");
    if (const json* v = find(*s, "earth_rotation_rad_s"))
      c.constants.omega_e = number(*v, "constants.earth_rotation_rad_s");
  }
  if (const json* s = find(root, "constellation")) {
    const std::string p = "constellation";
    reject_unknown(*s, p, {"n_satellites", "semi_major_axis_km", "inclination", "raan0", "gmst0", "phasing"});
    if (const json* v = find(*s, "n_satellites")) c.constellation.n_satellites = count(*v, p + ".n_satellites");
    if (const json* v = find(*s, "semi_major_axis_km"))
      c.constellation.semi_major_axis = number(*v, p + ".semi_major_axis_km");
    if (const json* v = find(*s, "inclination")) c.constellation.inclination = angle(*v, p + ".inclination");
    if (const json* v = find(*s, "raan0")) c.constellation.raan0 = angle(*v, p + ".raan0");
    if (const json* v = find(*s, "gmst0")) c.constellation.gmst0 = angle(*v, p + ".gmst0");
    if (const json* ph = find(*s, "phasing")) {
      const std::string pp = p + ".phasing";
      reject_unknown(*ph, pp, {"rule", "step"});
      const json* rule = find(*ph, "rule");
      if (!rule || !rule->is_string()) throw ScenarioError(pp + ".rule", "expected \"step\" or \"uniform\"");
      const auto r = rule->get<std::string>();
      if (r == "uniform") {
        c.constellation.phase_rule = PhaseRule::uniform;
      } else if (r == "step") {
        c.constellation.phase_rule = PhaseRule::step;
        const json* st = find(*ph, "step");
        if (!st) throw ScenarioError(pp + ".step", "missing for rule \"step\"");
        c.constellation.phase_step = angle(*st, pp + ".step");
      } else {
        throw ScenarioError(pp + ".rule", "unknown rule '" + r + "'");
      }
    }
  }
  if (const json* s = find(root, "target")) {
    reject_unknown(*s, "target", {"longitude", "latitude", "rho_bar"});
    if (const json* v = find(*s, "longitude")) c.target.longitude = angle(*v, "target.longitude");
    if (const json* v = find(*s, "latitude")) c.target.latitude = angle(*v, "target.latitude");
    if (const json* v = find(*s, "rho_bar")) c.target.rho_bar = angle(*v, "target.rho_bar");
  }
  if (const json* s = find(root, "grid")) {
    reject_unknown(*s, "grid", {"t0_s", "duration_s", "dt_s"});
    if (const json* v = find(*s, "t0_s")) c.t0 = number(*v, "grid.t0_s");
    if (const json* v = find(*s, "duration_s")) c.duration = number(*v, "grid.duration_s");
    if (const json* v = find(*s, "dt_s")) c.dt = number(*v, "grid.dt_s");
  }
  if (const json* s = find(root, "game")) {
    const std::string p = "game";
    reject_unknown(*s, p, {"gamma", "theta_bounds", "theta_max", "theta_max_overrides", "reach_samples"});
    if (const json* v = find(*s, "gamma")) c.game.gamma = number(*v, p + ".gamma");
    if (const json* b = find(*s, "theta_bounds")) {
      reject_unknown(*b, p + ".theta_bounds", {"lo", "hi"});
      const json* lo = find(*b, "lo");
      const json* hi = find(*b, "hi");
      if (!lo || !hi) throw ScenarioError(p + ".theta_bounds", "needs both lo and hi");
      const double l = angle(*lo, p + ".theta_bounds.lo");
      const double h = angle(*hi, p + ".theta_bounds.hi");
      if (!(l <= h)) throw ScenarioError(p + ".theta_bounds", "lo exceeds hi");
      c.game.theta_bounds = StrategyInterval(l, h);
    }
    if (const json* v = find(*s, "theta_max")) c.game.theta_max = angle(*v, p + ".theta_max");
    if (const json* o = find(*s, "theta_max_overrides")) {
      if (!o->is_array()) throw ScenarioError(p + ".theta_max_overrides", "expected a list");
      for (std::size_t i = 0; i < o->size(); ++i) {
        const std::string q = p + ".theta_max_overrides[" + std::to_string(i) + "]";
        reject_unknown((*o)[i], q, {"agent", "theta_max"});
        const json* a = find((*o)[i], "agent");
        const json* v = find((*o)[i], "theta_max");
        if (!a || !v) throw ScenarioError(q, "needs agent and theta_max");
        c.game.theta_max_overrides.emplace_back(one_based(*a, q + ".agent"), angle(*v, q + ".theta_max"));
      }
    }
    if (const json* v = find(*s, "reach_samples")) c.game.reach_samples = count(*v, p + ".reach_samples");
  }
  if (const json* s = find(root, "docs")) {
    const std::string p = "docs";
    reject_unknown(*s, p,
                   {"epsilon_s", "max_iterations", "coarse_points", "refine_tolerance", "max_refine_iters",
                    "certify_resolution", "workers", "reuse_best_response"});
    if (const json* v = find(*s, "epsilon_s")) c.docs.epsilon = number(*v, p + ".epsilon_s");
    if (const json* v = find(*s, "max_iterations")) c.docs.max_iterations = count(*v, p + ".max_iterations");
    if (const json* v = find(*s, "coarse_points")) c.docs.scalar.coarse_points = count(*v, p + ".coarse_points");
    if (const json* v = find(*s, "refine_tolerance"))
      c.docs.scalar.refine_tolerance = angle(*v, p + ".refine_tolerance");
    if (const json* v = find(*s, "max_refine_iters"))
      c.docs.scalar.max_refine_iters = count(*v, p + ".max_refine_iters");
    if (const json* v = find(*s, "certify_resolution"))
      c.docs.certify_resolution = angle(*v, p + ".certify_resolution");
    if (const json* v = find(*s, "workers")) c.docs.workers = count(*v, p + ".workers");
    if (const json* v = find(*s, "reuse_best_response")) {
      if (!v->is_boolean()) throw ScenarioError(p + ".reuse_best_response", "expected true or false");
      c.docs.reuse_best_response = v->get<bool>();
    }
  }
  if (const json* s = find(root, "centralized")) {
    const std::string p = "centralized";
    reject_unknown(*s, p, {"initial_step", "step_shrink", "step_expand", "min_step", "max_evals"});
    if (const json* v = find(*s, "initial_step")) c.centralized.initial_step = angle(*v, p + ".initial_step");
    if (const json* v = find(*s, "step_shrink")) c.centralized.step_shrink = number(*v, p + ".step_shrink");
    if (const json* v = find(*s, "step_expand")) c.centralized.step_expand = number(*v, p + ".step_expand");
    if (const json* v = find(*s, "min_step")) c.centralized.min_step = angle(*v, p + ".min_step");
    if (const json* v = find(*s, "max_evals")) c.centralized.max_evals = count(*v, p + ".max_evals");
  }
  if (const json* v = find(root, "damaged")) c.damaged = index_set(*v, "damaged");
  if (const json* v = find(root, "seed")) {
    if (!v->is_number_unsigned()) throw ScenarioError("seed", "expected a non-negative integer");
    c.seed = v->get<std::uint64_t>();
  }
  if (const json* s = find(root, "sweep")) {
    const std::string p = "sweep";
    reject_unknown(*s, p, {"counts", "count_damaged", "energy_agent", "energy_neighbor", "energy_theta_max"});
    if (const json* v = find(*s, "counts")) {
      if (!v->is_array()) throw ScenarioError(p + ".counts", "expected a list");
      c.sweep.counts.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        c.sweep.counts.push_back(count((*v)[i], p + ".counts[" + std::to_string(i) + "]"));
    }
    if (const json* v = find(*s, "count_damaged")) c.sweep.count_damaged = index_set(*v, p + ".count_damaged");
    if (const json* v = find(*s, "energy_agent")) c.sweep.energy_agent = one_based(*v, p + ".energy_agent");
    if (const json* v = find(*s, "energy_neighbor")) c.sweep.energy_neighbor = one_based(*v, p + ".energy_neighbor");
    if (const json* v = find(*s, "energy_theta_max")) {
      if (!v->is_array()) throw ScenarioError(p + ".energy_theta_max", "expected a list of angles");
      c.sweep.energy_theta_max.clear();
      for (std::size_t i = 0; i < v->size(); ++i)
        c.sweep.energy_theta_max.push_back(angle((*v)[i], p + ".energy_theta_max[" + std::to_string(i) + "]"));
    }
  }
  c.validate();
  return c;
}

inline ScenarioConfig parse_scenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError("<document>", std::string("parse error: ") + e.what());
  }
  return parse_scenario(root);
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path, "cannot open scenario file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

inline json angle_json(double rad) { return {{"value", rad * 180.0 / std::numbers::pi}, {"unit", "deg"}}; }

/// Round-trippable echo of a configuration (angles in degrees).
inline json to_json(const ScenarioConfig& c) {
  auto one_based_list = [](const std::set<std::size_t>& s) {
    json a = json::array();
    for (std::size_t k : s) a.push_back(k + 1);
    return a;
  };
  json overrides = json::array();
  for (const auto& [k, v] : c.game.theta_max_overrides)
    overrides.push_back({{"agent", k + 1}, {"theta_max", {{"value", v}, {"unit", "rad"}}}});
  json phasing = c.constellation.phase_rule == PhaseRule::uniform
                     ? json{{"rule", "uniform"}}
                     : json{{"rule", "step"}, {"step", angle_json(c.constellation.phase_step)}};
  json energy = json::array();
  for (double v : c.sweep.energy_theta_max) energy.push_back({{"value", v}, {"unit", "rad"}});
  json counts = json::array();
  for (std::size_t n : c.sweep.counts) counts.push_back(n);
  return {
      {"name", c.name},
      {"constants",
       {{"mu_km3_s2", c.constants.mu},
        {"j2", c.constants.j2},
        {"earth_radius_km", c.constants.re},
        {"earth_rotation_rad_s", c.constants.omega_e}}},
      {"constellation",
       {{"n_satellites", c.constellation.n_satellites},
        {"semi_major_axis_km", c.constellation.semi_major_axis},
        {"inclination", angle_json(c.constellation.inclination)},
        {"raan0", angle_json(c.constellation.raan0)},
        {"gmst0", angle_json(c.constellation.gmst0)},
        {"phasing", phasing}}},
      {"target",
       {{"longitude", angle_json(c.target.longitude)},
        {"latitude", angle_json(c.target.latitude)},
        {"rho_bar", angle_json(c.target.rho_bar)}}},
      {"grid", {{"t0_s", c.t0}, {"duration_s", c.duration}, {"dt_s", c.dt}}},
      {"game",
       {{"gamma", c.game.gamma},
        {"theta_bounds", {{"lo", angle_json(c.game.theta_bounds.lo)}, {"hi", angle_json(c.game.theta_bounds.hi)}}},
        {"theta_max", {{"value", c.game.theta_max}, {"unit", "rad"}}},
        {"theta_max_overrides", overrides},
        {"reach_samples", c.game.reach_samples}}},
      {"docs",
       {{"epsilon_s", c.docs.epsilon},
        {"max_iterations", c.docs.max_iterations},
        {"coarse_points", c.docs.scalar.coarse_points},
        {"refine_tolerance", {{"value", c.docs.scalar.refine_tolerance}, {"unit", "rad"}}},
        {"max_refine_iters", c.docs.scalar.max_refine_iters},
        {"certify_resolution", angle_json(c.docs.certify_resolution)},
        {"workers", c.docs.workers},
        {"reuse_best_response", c.docs.reuse_best_response}}},
      {"centralized",
       {{"initial_step", {{"value", c.centralized.initial_step}, {"unit", "rad"}}},
        {"step_shrink", c.centralized.step_shrink},
        {"step_expand", c.centralized.step_expand},
        {"min_step", {{"value", c.centralized.min_step}, {"unit", "rad"}}},
        {"max_evals", c.centralized.max_evals}}},
      {"damaged", one_based_list(c.damaged)},
      {"seed", c.seed},
      {"sweep",
       {{"counts", counts},
        {"count_damaged", one_based_list(c.sweep.count_damaged)},
        {"energy_agent", c.sweep.energy_agent + 1},
        {"energy_neighbor", c.sweep.energy_neighbor + 1},
        {"energy_theta_max", energy}}},
  };
}

}  // namespace covgame::harness
