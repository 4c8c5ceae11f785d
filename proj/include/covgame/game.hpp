#pragma once

// The coverage game: agents choose a scalar strategy from an interval, each
// strategy induces a coverage set, and
//
//   F(theta)   = |U_k C_k(theta_k)| - gamma * sum_k E_k(theta_k)
//   f_k(theta) = |C_k(theta_k) - U_{l in N_k} C_l(theta_l)| - gamma * E_k(theta_k)
//
// with E_k(theta) = theta^2 / theta_max_k^2.  F is an exact potential for the
// local objectives whenever the neighbor graph contains every pair of agents
// whose coverages can intersect, which is why the graph is built once from
// reachable coverage rather than from the current profile.
//
// Agents are indexed 0..N-1 here; files and the CLI use 1-based ids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <bit>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "covgame/measure.hpp"
#include "covgame/optimize.hpp"
#include "covgame/parallel.hpp"

namespace covgame {

struct AgentSpec {
  StrategyInterval strategy_space;
  double theta_max = 1.0;  // radians
  bool active = true;      // false: damaged, excluded from the game

  void validate() const {
    if (!(theta_max > 0.0) || !std::isfinite(theta_max)) throw std::invalid_argument("AgentSpec: theta_max must be > 0");
  }
};

inline double energy_penalty(const AgentSpec& agent, double theta) {
  return (theta * theta) / (agent.theta_max * agent.theta_max);
}

struct StrategyProfile {
  std::vector<double> theta;

  std::size_t size() const { return theta.size(); }
  double operator[](std::size_t k) const { return theta[k]; }
  double& operator[](std::size_t k) { return theta[k]; }

  /// Copy with agent k's strategy replaced.
  StrategyProfile with(std::size_t k, double value) const {
    StrategyProfile p = *this;
    p.theta.at(k) = value;
    return p;
  }

  friend bool operator==(const StrategyProfile&, const StrategyProfile&) = default;
};

/// Undirected, loop-free adjacency.
class NeighborGraph {
 public:
  NeighborGraph() = default;

  explicit NeighborGraph(std::vector<std::vector<std::size_t>> adjacency) : adj_(std::move(adjacency)) {
    for (auto& row : adj_) {
      std::sort(row.begin(), row.end());
      row.erase(std::unique(row.begin(), row.end()), row.end());
    }
    for (std::size_t k = 0; k < adj_.size(); ++k) {
      for (std::size_t l : adj_[k]) {
        if (l >= adj_.size()) throw std::invalid_argument("NeighborGraph: neighbor index out of range");
        if (l == k) throw std::invalid_argument("NeighborGraph: agent listed as its own neighbor");
        if (!contains(l, k)) throw std::invalid_argument("NeighborGraph: adjacency is not symmetric");
      }
    }
  }

  static NeighborGraph from_edges(std::size_t n, std::span<const std::pair<std::size_t, std::size_t>> edges) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (auto [a, b] : edges) {
      adj.at(a).push_back(b);
      adj.at(b).push_back(a);
    }
    return NeighborGraph(std::move(adj));
  }

  std::size_t size() const { return adj_.size(); }
  std::span<const std::size_t> neighbors(std::size_t k) const { return adj_.at(k); }
  bool contains(std::size_t k, std::size_t l) const { return std::binary_search(adj_[k].begin(), adj_[k].end(), l); }
  const std::vector<std::vector<std::size_t>>& adjacency() const { return adj_; }

  friend bool operator==(const NeighborGraph&, const NeighborGraph&) = default;

 private:
  std::vector<std::vector<std::size_t>> adj_;
};

/// Pure map (agent, theta) -> coverage set.
using CoverageFn = std::function<CoverageSet(std::size_t agent, double theta)>;

/// Optional sparse form of the same map: replaces `cells` with the indices of
/// the covered cells, in any order.  Must agree exactly with the CoverageFn.
using CoveredCellsFn = std::function<void(std::size_t agent, double theta, std::vector<std::uint32_t>& cells)>;

/// Strategy of one neighbor as delivered to an agent.
struct NeighborStrategy {
  std::size_t agent;
  double theta;
  friend bool operator==(const NeighborStrategy&, const NeighborStrategy&) = default;
};

namespace detail {

// Thread-safe memo for coverage_fn.  Purely an accelerator: entries are the
// exact values coverage_fn returns.
class CoverageMemo {
 public:
  explicit CoverageMemo(std::size_t max_entries) : max_entries_(max_entries) {}

  std::optional<CoverageSet> find(std::size_t k, double theta) const {
    std::shared_lock lock(mu_);
    auto it = map_.find(key(k, theta));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  void insert(std::size_t k, double theta, const CoverageSet& s) {
    std::unique_lock lock(mu_);
    if (map_.size() < max_entries_) map_.emplace(key(k, theta), s);
  }

 private:
  struct Key {
    std::size_t agent;
    std::uint64_t bits;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<std::uint64_t>{}(k.bits ^ (static_cast<std::uint64_t>(k.agent) * 0x9E3779B97F4A7C15ull));
    }
  };
  static Key key(std::size_t k, double theta) { return {k, std::bit_cast<std::uint64_t>(theta)}; }

  mutable std::shared_mutex mu_;
  std::unordered_map<Key, CoverageSet, KeyHash> map_;
  std::size_t max_entries_;
};

}  // namespace detail

/// Reachable coverage of one agent: union of C_k(theta) over `samples`
/// uniformly spaced strategies (endpoints included).
inline CoverageSet reachable_coverage(const CoverageFn& fn, const TimeGrid& grid, std::size_t k,
                                      const StrategyInterval& space, std::size_t samples) {
  CoverageSet reach(grid);
  const std::size_t n = space.width() > 0.0 ? std::max<std::size_t>(samples, 2) : 1;
  for (std::size_t i = 0; i < n; ++i) reach |= fn(k, space.sample(i, n));
  return reach;
}

/// Default reach sample: 64 interior points plus both endpoints.
inline constexpr std::size_t kDefaultReachSamples = 66;

/// l in N_k iff the reachable coverages of k and l intersect.  Inactive
/// agents are isolated.
inline NeighborGraph neighbor_graph_from_reach(std::span<const AgentSpec> agents, const CoverageFn& fn,
                                               const TimeGrid& grid, std::size_t samples = kDefaultReachSamples) {
  const std::size_t n = agents.size();
  std::vector<CoverageSet> reach(n, CoverageSet(grid));
  for (std::size_t k = 0; k < n; ++k)
    if (agents[k].active) reach[k] = reachable_coverage(fn, grid, k, agents[k].strategy_space, samples);
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!agents[k].active) continue;
    for (std::size_t l = k + 1; l < n; ++l) {
      if (!agents[l].active) continue;
      if (!intersect(reach[k], reach[l]).empty()) {
        adj[k].push_back(l);
        adj[l].push_back(k);
      }
    }
  }
  return NeighborGraph(std::move(adj));
}

/// Neighbor sets read off a single profile: l in N_k iff C_k and C_l intersect.
inline NeighborGraph neighbor_graph_from_profile(std::span<const AgentSpec> agents, const CoverageFn& fn,
                                                 const StrategyProfile& profile) {
  const std::size_t n = agents.size();
  std::vector<std::optional<CoverageSet>> cov(n);
  for (std::size_t k = 0; k < n; ++k)
    if (agents[k].active) cov[k] = fn(k, profile[k]);
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = k + 1; l < n; ++l) {
      if (!cov[k] || !cov[l]) continue;
      if (!intersect(*cov[k], *cov[l]).empty()) {
        adj[k].push_back(l);
        adj[l].push_back(k);
      }
    }
  }
  return NeighborGraph(std::move(adj));
}

class GameInstance {
 public:
  GameInstance(TimeGrid grid, std::vector<AgentSpec> agents, CoverageFn coverage_fn, double gamma,
               NeighborGraph graph)
      : grid_(grid), agents_(std::move(agents)), coverage_fn_(std::move(coverage_fn)), gamma_(gamma),
        graph_(std::move(graph)) {
    if (!coverage_fn_) throw std::invalid_argument("GameInstance: coverage function is empty");
    if (!std::isfinite(gamma_) || gamma_ < 0.0) throw std::invalid_argument("GameInstance: gamma must be >= 0");
    if (graph_.size() != agents_.size()) throw std::invalid_argument("GameInstance: graph size differs from agent count");
    for (const auto& a : agents_) a.validate();
    for (std::size_t k = 0; k < agents_.size(); ++k)
      if (!agents_[k].active && !graph_.neighbors(k).empty())
        throw std::invalid_argument("GameInstance: inactive agent has neighbors");
  }

  /// Builds the frozen neighbor graph from reachable coverage.
  static GameInstance with_reach_graph(TimeGrid grid, std::vector<AgentSpec> agents, CoverageFn coverage_fn,
                                       double gamma, std::size_t reach_samples = kDefaultReachSamples) {
    auto graph = neighbor_graph_from_reach(agents, coverage_fn, grid, reach_samples);
    return GameInstance(grid, std::move(agents), std::move(coverage_fn), gamma, std::move(graph));
  }

  const TimeGrid& grid() const { return grid_; }
  std::size_t size() const { return agents_.size(); }
  const std::vector<AgentSpec>& agents() const { return agents_; }
  const AgentSpec& agent(std::size_t k) const { return agents_.at(k); }
  double gamma() const { return gamma_; }
  const NeighborGraph& graph() const { return graph_; }
  std::span<const std::size_t> neighbors(std::size_t k) const { return graph_.neighbors(k); }
  const CoverageFn& coverage_fn() const { return coverage_fn_; }

  std::size_t active_count() const {
    return static_cast<std::size_t>(std::count_if(agents_.begin(), agents_.end(), [](const AgentSpec& a) { return a.active; }));
  }
  std::vector<std::size_t> active_agents() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < agents_.size(); ++k)
      if (agents_[k].active) out.push_back(k);
    return out;
  }

  /// Enables a shared coverage memo.  Results are unchanged.
  void enable_memo(std::size_t max_entries = 1u << 16) { memo_ = std::make_shared<detail::CoverageMemo>(max_entries); }
  void disable_memo() { memo_.reset(); }
  bool memo_enabled() const { return static_cast<bool>(memo_); }

  CoverageSet coverage(std::size_t k, double theta) const {
    if (memo_) {
      if (auto hit = memo_->find(k, theta)) return std::move(*hit);
      CoverageSet s = coverage_fn_(k, theta);
      memo_->insert(k, theta, s);
      return s;
    }
    return coverage_fn_(k, theta);
  }

  /// Installs the sparse coverage map.  Objectives then skip building a full
  /// mask per evaluation; values are unchanged.
  void set_covered_cells_fn(CoveredCellsFn fn) {
    if (grid_.n_steps() > std::numeric_limits<std::uint32_t>::max())
      throw std::invalid_argument("GameInstance: grid too long for sparse coverage");
    cells_fn_ = std::move(fn);
  }
  bool has_covered_cells_fn() const { return static_cast<bool>(cells_fn_); }

  void covered_cells(std::size_t k, double theta, std::vector<std::uint32_t>& out) const {
    if (cells_fn_) {
      cells_fn_(k, theta, out);
      return;
    }
    out.clear();
    const auto c = coverage(k, theta);
    for (std::size_t j = 0; j < c.size(); ++j)
      if (c.contains(j)) out.push_back(static_cast<std::uint32_t>(j));
  }

  /// Declares, per agent, a set containing its coverage for every strategy in
  /// its space.  Lets agents tell that a change elsewhere cannot affect them.
  void set_support(std::vector<CoverageSet> support) {
    if (support.size() != agents_.size()) throw std::invalid_argument("GameInstance: support count differs from agent count");
    for (const auto& s : support)
      if (!(s.grid() == grid_)) throw std::invalid_argument("GameInstance: support lives on a different grid");
    support_ = std::move(support);
  }

  /// Declared support of agent k, or the whole grid when none was declared.
  CoverageSet support(std::size_t k) const {
    if (support_.empty()) return CoverageSet::full(grid_);
    return support_.at(k);
  }

  double penalty(std::size_t k, double theta) const { return gamma_ * energy_penalty(agents_[k], theta); }

  StrategyProfile zero_profile() const { return StrategyProfile{std::vector<double>(agents_.size(), 0.0)}; }

  void validate(const StrategyProfile& p) const {
    if (p.size() != agents_.size()) throw std::invalid_argument("profile length differs from agent count");
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (!std::isfinite(p[k])) throw std::invalid_argument("profile entry is not finite");
      if (agents_[k].active && !agents_[k].strategy_space.contains(p[k]))
        throw std::invalid_argument("profile entry " + std::to_string(k + 1) + " lies outside its strategy space");
    }
  }

 private:
  TimeGrid grid_;
  std::vector<AgentSpec> agents_;
  CoverageFn coverage_fn_;
  CoveredCellsFn cells_fn_;
  double gamma_;
  NeighborGraph graph_;
  std::vector<CoverageSet> support_;
  std::shared_ptr<detail::CoverageMemo> memo_;
};

/// Union of active agents' coverage under `profile`.
inline CoverageSet union_coverage(const GameInstance& g, const StrategyProfile& profile) {
  if (g.has_covered_cells_fn()) {
    thread_local std::vector<std::uint32_t> cells;
    std::vector<CoverageSet::Word> words((g.grid().n_steps() + CoverageSet::kWordBits - 1) / CoverageSet::kWordBits, 0);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!g.agent(k).active) continue;
      g.covered_cells(k, profile[k], cells);
      for (std::uint32_t j : cells) words[j / CoverageSet::kWordBits] |= CoverageSet::Word{1} << (j % CoverageSet::kWordBits);
    }
    return CoverageSet::from_words(g.grid(), std::move(words));
  }
  CoverageSet u(g.grid());
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.agent(k).active) u |= g.coverage(k, profile[k]);
  return u;
}

inline double total_penalty(const GameInstance& g, const StrategyProfile& profile) {
  double e = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (g.agent(k).active) e += energy_penalty(g.agent(k), profile[k]);
  return g.gamma() * e;
}

/// Global objective F, in seconds.
inline double global_value(const GameInstance& g, const StrategyProfile& profile) {
  return union_coverage(g, profile).measure() - total_penalty(g, profile);
}

/// f_k as a function of agent k's own strategy, with the neighbors' strategies
/// fixed to what the agent was told.  Only neighbor strategies are accepted.
class LocalObjective {
 public:
  LocalObjective(const GameInstance& g, std::size_t k, std::span<const NeighborStrategy> neighbors)
      : game_(&g), agent_(k), neighbor_union_(g.grid()) {
    if (!g.agent(k).active) throw std::logic_error("LocalObjective: agent is inactive");
    for (const auto& n : neighbors) {
      if (!g.graph().contains(k, n.agent))
        throw std::logic_error("LocalObjective: agent " + std::to_string(k + 1) + " was handed the strategy of non-neighbor " +
                               std::to_string(n.agent + 1));
      neighbor_union_ |= g.coverage(n.agent, n.theta);
    }
  }

  double operator()(double theta) const {
    if (game_->has_covered_cells_fn()) {
      thread_local std::vector<std::uint32_t> cells;
      game_->covered_cells(agent_, theta, cells);
      std::size_t own = 0;
      for (std::uint32_t j : cells) own += neighbor_union_.contains(j) ? 0 : 1;
      return game_->grid().dt() * static_cast<double>(own) - game_->penalty(agent_, theta);
    }
    return difference_measure(game_->coverage(agent_, theta), neighbor_union_) - game_->penalty(agent_, theta);
  }

  std::size_t agent() const { return agent_; }
  const CoverageSet& neighbor_union() const { return neighbor_union_; }

 private:
  const GameInstance* game_;
  std::size_t agent_;
  CoverageSet neighbor_union_;
};

/// Strategies of k's neighbors, read from the profile and nothing else.
inline std::vector<NeighborStrategy> neighbor_strategies(const GameInstance& g, std::size_t k,
                                                         const StrategyProfile& profile) {
  std::vector<NeighborStrategy> out;
  for (std::size_t l : g.neighbors(k)) out.push_back({l, profile[l]});
  return out;
}

inline double local_value(const GameInstance& g, std::size_t k, const StrategyProfile& profile) {
  const auto nb = neighbor_strategies(g, k, profile);
  return LocalObjective(g, k, nb)(profile[k]);
}

/// R_k = f_k(theta_new, theta_-k) - f_k(theta_k, theta_-k).
inline double regret(const GameInstance& g, std::size_t k, double theta_new, const StrategyProfile& profile) {
  const auto nb = neighbor_strategies(g, k, profile);
  LocalObjective f(g, k, nb);
  return f(theta_new) - f(profile[k]);
}

struct BestResponse {
  double theta = 0.0;
  double value = 0.0;
  double regret = 0.0;
  std::size_t evaluations = 0;
};

/// argmax of the local objective over the agent's strategy space.  The
/// incumbent strategy is kept when the maximizer finds nothing better, so the
/// regret is never negative.
inline BestResponse best_response(const LocalObjective& f, const StrategyInterval& space, double current,
                                  const ScalarMaximizerConfig& cfg) {
  const double incumbent = f(current);
  ScalarMaximum m;
  try {
    m = maximize_scalar(f, space, cfg);
  } catch (const NonFiniteObjective& e) {
    throw std::runtime_error("best response of agent " + std::to_string(f.agent() + 1) + ": " + e.what());
  }
  BestResponse br{current, incumbent, 0.0, m.evaluations + 1};
  if (m.value > incumbent) {
    br.theta = m.theta;
    br.value = m.value;
    br.regret = m.value - incumbent;
  }
  return br;
}

struct CertificationReport {
  bool certified = false;
  std::optional<std::size_t> worst_agent;  // 0-based
  double worst_gain = 0.0;
  std::vector<double> gains;  // per agent, 0 for inactive
};

/// Scan configuration whose coarse spacing is at most `scan_resolution`.
inline ScalarMaximizerConfig certification_scan(const StrategyInterval& space, double scan_resolution,
                                                ScalarMaximizerConfig base = {}) {
  if (!(scan_resolution > 0.0)) throw std::invalid_argument("certify: scan_resolution must be > 0");
  const auto pts = static_cast<std::size_t>(std::ceil(space.width() / scan_resolution)) + 1;
  base.coarse_points = std::max<std::size_t>(3, pts);
  return base;
}

/// Checks f_k(theta*) >= f_k(theta_k, theta*_-k) - epsilon for every active
/// agent, using a scan at `scan_resolution` plus golden refinement.
inline CertificationReport certify_epsilon_equilibrium(const GameInstance& g, const StrategyProfile& profile,
                                                       double epsilon, double scan_resolution,
                                                       ScalarMaximizerConfig base = {}, std::size_t workers = 1) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("certify: epsilon must be > 0");
  g.validate(profile);
  CertificationReport rep;
  rep.gains.assign(g.size(), 0.0);
  parallel_for(g.size(), workers, [&](std::size_t k) {
    if (!g.agent(k).active) return;
    const auto nb = neighbor_strategies(g, k, profile);
    LocalObjective f(g, k, nb);
    const auto& space = g.agent(k).strategy_space;
    const auto br = best_response(f, space, profile[k], certification_scan(space, scan_resolution, base));
    rep.gains[k] = br.regret;
  });
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.agent(k).active) continue;
    if (!rep.worst_agent || rep.gains[k] > rep.worst_gain) {
      rep.worst_agent = k;
      rep.worst_gain = rep.gains[k];
    }
  }
  rep.certified = rep.worst_gain <= epsilon;
  return rep;
}

}  // namespace covgame
