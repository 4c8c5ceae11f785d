#pragma once

// The comparison runs and parameter sweeps.  Wall times cover the
// optimization call only; building the visibility tables and the neighbor
// graph happens before the clock starts and is shared by both methods.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "covgame/docs.hpp"
#include "covgame/game.hpp"
#include "covgame/harness/scenario.hpp"
#include "covgame/optimize.hpp"
#include "covgame/orbit.hpp"

namespace covgame::harness {

struct ComparisonReport {
  std::string method;
  double value = 0.0;      // s
  double wall_time = 0.0;  // s
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  bool certified = false;
  double worst_gain = 0.0;  // s, from the certification scan
  std::vector<double> theta;  // rad, one per satellite, 0 for inactive
  std::optional<DocsResult> docs;  // distributed runs only
};

/// Game for `cfg` with `n` satellites (phasing per the configured rule) and
/// the given damaged set.
inline GameInstance build_game(const ScenarioConfig& cfg, std::size_t n, const std::set<std::size_t>& damaged) {
  const auto spec = cfg.constellation.spec(n);
  std::vector<StrategyInterval> bounds(n, cfg.game.theta_bounds);
  const auto tmax = cfg.game.theta_max_for(n);
  return orbit::build_constellation_game(cfg.constants, spec, cfg.target, cfg.grid(), cfg.game.gamma, bounds, tmax,
                                         damaged, cfg.game.reach_samples);
}

inline GameInstance build_game(const ScenarioConfig& cfg) {
  return build_game(cfg, cfg.constellation.n_satellites, cfg.damaged);
}

/// Loose but valid bounds on the potential: no coverage at the largest
/// penalty, and full coverage at none.
struct PotentialEnvelope {
  double phi_min = 0.0;
  double phi_max = 0.0;
};

inline PotentialEnvelope potential_envelope(const GameInstance& g) {
  PotentialEnvelope e;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto& a = g.agent(k);
    if (!a.active) continue;
    const double edge = std::max(std::abs(a.strategy_space.lo), std::abs(a.strategy_space.hi));
    e.phi_min -= g.penalty(k, edge);
  }
  e.phi_max = g.grid().duration();
  return e;
}

inline std::size_t round_bound(const GameInstance& g, double epsilon) {
  const auto e = potential_envelope(g);
  return iteration_bound(e.phi_min, e.phi_max, epsilon);
}

inline ComparisonReport run_distributed(const GameInstance& g, const DocsConfig& docs,
                                        AccessObserver* observer = nullptr) {
  auto res = run_docs(g, g.zero_profile(), docs, observer);
  ComparisonReport r;
  r.method = "distributed";
  r.value = global_value(g, res.final_profile);
  r.wall_time = res.wall_time;
  r.iterations = res.converged_at.value_or(res.traces.size());
  r.evaluations = res.evaluations;
  r.certified = res.certified;
  r.worst_gain = res.certification.worst_gain;
  r.theta = res.final_profile.theta;
  r.docs = std::move(res);
  return r;
}

/// Pattern search over the active coordinates, starting from the zero
/// profile.  The objective is the same global_value the distributed run
/// reports.  The result is certified with the distributed run's settings so
/// the two rows are comparable.
inline ComparisonReport run_centralized(const GameInstance& g, const PatternSearchConfig& ps, const DocsConfig& docs) {
  const auto active = g.active_agents();
  ComparisonReport r;
  r.method = "centralized";
  StrategyProfile profile = g.zero_profile();
  if (!active.empty()) {
    std::vector<StrategyInterval> box;
    for (std::size_t k : active) box.push_back(g.agent(k).strategy_space);
    std::vector<double> start(active.size(), 0.0);
    auto objective = [&](std::span<const double> x) {
      StrategyProfile p = g.zero_profile();
      for (std::size_t i = 0; i < active.size(); ++i) p[active[i]] = x[i];
      return global_value(g, p);
    };
    const auto t0 = std::chrono::steady_clock::now();
    const auto res = pattern_search(objective, box, start, ps);
    r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (std::size_t i = 0; i < active.size(); ++i) profile[active[i]] = res.theta[i];
    r.iterations = res.accepted_moves;
    r.evaluations = res.evaluations;
  }
  r.value = global_value(g, profile);
  const auto cert =
      certify_epsilon_equilibrium(g, profile, docs.epsilon, docs.certify_resolution, docs.scalar, docs.workers);
  r.certified = cert.certified;
  r.worst_gain = cert.worst_gain;
  r.theta = profile.theta;
  return r;
}

inline ComparisonReport run_distributed(const ScenarioConfig& cfg) { return run_distributed(build_game(cfg), cfg.docs); }
inline ComparisonReport run_centralized(const ScenarioConfig& cfg) {
  return run_centralized(build_game(cfg), cfg.centralized, cfg.docs);
}

struct SweepRow {
  std::size_t n = 0;
  std::string method;
  double value = 0.0;
  double time = 0.0;
};

/// Both methods for each satellite count.  Damaged indices beyond a count
/// are dropped; phasing is uniform so every count closes the ring.
inline std::vector<SweepRow> sweep_satellite_count(const ScenarioConfig& cfg, const std::vector<std::size_t>& counts,
                                                   std::vector<ComparisonReport>* reports = nullptr) {
  std::vector<SweepRow> rows;
  ScenarioConfig c = cfg;
  c.constellation.phase_rule = PhaseRule::uniform;
  for (std::size_t n : counts) {
    if (n < 1) throw std::invalid_argument("sweep_satellite_count: counts must be >= 1");
    std::set<std::size_t> damaged;
    for (std::size_t k : cfg.sweep.count_damaged)
      if (k < n) damaged.insert(k);
    const auto g = build_game(c, n, damaged);
    auto d = run_distributed(g, c.docs);
    auto z = run_centralized(g, c.centralized, c.docs);
    rows.push_back({n, d.method, d.value, d.wall_time});
    rows.push_back({n, z.method, z.value, z.wall_time});
    if (reports) {
      reports->push_back(std::move(d));
      reports->push_back(std::move(z));
    }
  }
  return rows;
}

struct EnergyRow {
  double theta_max = 0.0;          // rad
  double abs_theta_agent = 0.0;    // rad
  double abs_theta_neighbor = 0.0;  // rad
  bool certified = false;
};

/// Distributed run per value of agent k's theta_max, reporting |theta_k| and
/// |theta_neighbor|.
inline std::vector<EnergyRow> sweep_energy_coefficient(const ScenarioConfig& cfg, std::size_t k,
                                                       std::size_t neighbor, const std::vector<double>& values) {
  const std::size_t n = cfg.constellation.n_satellites;
  if (k >= n || neighbor >= n) throw std::invalid_argument("sweep_energy_coefficient: agent index out of range");
  std::vector<EnergyRow> rows;
  for (double v : values) {
    if (!(v > 0.0)) throw std::invalid_argument("sweep_energy_coefficient: theta_max must be > 0");
    ScenarioConfig c = cfg;
    std::erase_if(c.game.theta_max_overrides, [&](const auto& o) { return o.first == k; });
    c.game.theta_max_overrides.emplace_back(k, v);
    const auto r = run_distributed(build_game(c), c.docs);
    rows.push_back({v, std::abs(r.theta[k]), std::abs(r.theta[neighbor]), r.certified});
  }
  return rows;
}

}  // namespace covgame::harness
