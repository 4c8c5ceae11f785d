#pragma once

// Distributed optimal coverage search: synchronous rounds of best response,
// regret exchange and epsilon-innovator election.
//
// Each round:
//   (a) agents with zeta = 1 post their strategy, read their neighbors'
//       strategies, compute a best response and its regret R_k; agents with
//       zeta = 0 set R_k = 0;
//   (b) every agent posts R_k;
//   (c) epsilon-innovators adopt their best response and set zeta = 1;
//   (d) everyone else keeps its strategy and sets zeta = 1 iff some agent in
//       N_k U {k} posted R > epsilon.
//
// Agents are emulated in one process, but an agent's update only sees its own
// state and the messages its graph neighbors posted.  Every read goes through
// a Board, which reports it to an optional AccessObserver.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "covgame/game.hpp"
#include "covgame/optimize.hpp"
#include "covgame/parallel.hpp"

namespace covgame {

struct DocsConfig {
  double epsilon = 0.1;  // seconds
  std::size_t max_iterations = 20;
  ScalarMaximizerConfig scalar;
  double certify_resolution = 0.05 * 3.14159265358979323846 / 180.0;  // radians
  std::size_t workers = 1;
  /// An agent whose own strategy and neighbor union (within its support) are
  /// unchanged since its last best response reuses that result.
  bool reuse_best_response = true;

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("DocsConfig: epsilon must be > 0");
    if (max_iterations < 1) throw std::invalid_argument("DocsConfig: max_iterations must be >= 1");
    if (!(certify_resolution > 0.0)) throw std::invalid_argument("DocsConfig: certify_resolution must be > 0");
    scalar.validate();
  }
};

struct AgentRoundState {
  double theta = 0.0;
  bool zeta = true;
  double regret = 0.0;
  double proposed_theta = 0.0;
};

struct RoundTrace {
  std::size_t iteration = 0;  // 1-based
  double phi_before = 0.0;    // seconds
  double phi = 0.0;           // global value after the round
  std::vector<std::size_t> innovators;
  std::vector<double> regrets;
  std::vector<bool> zetas;  // gates after the round
  double innovator_regret_sum = 0.0;
  std::size_t best_responses = 0;
  std::size_t evaluations = 0;
  double wall_time = 0.0;  // seconds

  double max_regret() const {
    double m = 0.0;
    for (double r : regrets) m = std::max(m, r);
    return m;
  }
};

struct DocsResult {
  StrategyProfile initial_profile;
  StrategyProfile final_profile;
  double initial_phi = 0.0;
  double final_phi = 0.0;
  std::optional<std::size_t> converged_at;  // 1-based iteration; traces[*converged_at - 1]
  std::vector<RoundTrace> traces;
  bool certified = false;
  CertificationReport certification;
  std::size_t evaluations = 0;
  double wall_time = 0.0;  // optimization rounds only, excludes certification
};

enum class Channel { strategy, regret };

/// Receives every cross-agent read made by agent update logic.
class AccessObserver {
 public:
  virtual ~AccessObserver() = default;
  virtual void on_read(std::size_t reader, std::size_t source, Channel channel) = 0;
};

/// Records reads and flags any whose source is not in N_reader U {reader}.
class LocalityAudit final : public AccessObserver {
 public:
  explicit LocalityAudit(const NeighborGraph& graph) : graph_(&graph) {}

  void on_read(std::size_t reader, std::size_t source, Channel channel) override {
    std::lock_guard lock(mu_);
    ++reads_;
    if (source != reader && !graph_->contains(reader, source)) violations_.push_back({reader, source, channel});
  }

  struct Violation {
    std::size_t reader;
    std::size_t source;
    Channel channel;
  };

  std::size_t reads() const { return reads_; }
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  const NeighborGraph* graph_;
  std::mutex mu_;
  std::size_t reads_ = 0;
  std::vector<Violation> violations_;
};

template <typename T>
struct Message {
  std::size_t from;
  T value;
};

/// One-hop broadcast medium over the neighbor graph.  A posted value stays
/// readable until its sender posts again.
template <typename T>
class Board {
 public:
  Board(const NeighborGraph& graph, Channel channel, AccessObserver* observer)
      : graph_(&graph), channel_(channel), observer_(observer), slots_(graph.size()) {}

  void post(std::size_t from, T value) { slots_.at(from) = value; }

  /// Messages visible to `reader`: those its neighbors have posted.
  std::vector<Message<T>> inbox(std::size_t reader) const {
    std::vector<Message<T>> out;
    for (std::size_t l : graph_->neighbors(reader)) {
      if (!slots_[l]) continue;
      if (observer_) observer_->on_read(reader, l, channel_);
      out.push_back({l, *slots_[l]});
    }
    return out;
  }

 private:
  const NeighborGraph* graph_;
  Channel channel_;
  AccessObserver* observer_;
  std::vector<std::optional<T>> slots_;
};

/// Definition of an epsilon-innovator, evaluated from k's own regret and the
/// regrets its neighbors posted.
inline bool is_innovator(std::size_t k, double own_regret, std::span<const Message<double>> neighbor_regrets,
                         double epsilon) {
  if (!(own_regret > epsilon)) return false;
  for (const auto& m : neighbor_regrets) {
    if (m.value > own_regret) return false;
    if (m.value == own_regret && m.from < k) return false;
  }
  return true;
}

/// Innovator set for a whole regret vector.  No two members are neighbors.
inline std::vector<std::size_t> elect_innovators(std::span<const double> regrets, const NeighborGraph& graph,
                                                 double epsilon) {
  if (regrets.size() != graph.size()) throw std::invalid_argument("elect_innovators: size mismatch");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < regrets.size(); ++k) {
    if (!std::isfinite(regrets[k])) throw std::invalid_argument("elect_innovators: regret is not finite");
    std::vector<Message<double>> inbox;
    for (std::size_t l : graph.neighbors(k)) inbox.push_back({l, regrets[l]});
    if (is_innovator(k, regrets[k], inbox, epsilon)) out.push_back(k);
  }
  return out;
}

/// floor((phi_max - phi_min) / epsilon) + 1.
inline std::size_t iteration_bound(double phi_min, double phi_max, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("iteration_bound: epsilon must be > 0");
  if (!(phi_max >= phi_min)) throw std::invalid_argument("iteration_bound: phi_max < phi_min");
  return static_cast<std::size_t>(std::floor((phi_max - phi_min) / epsilon)) + 1;
}

class DocsEngine {
 public:
  DocsEngine(const GameInstance& game, DocsConfig cfg, AccessObserver* observer = nullptr)
      : game_(&game), cfg_(std::move(cfg)), theta_board_(game.graph(), Channel::strategy, observer),
        observer_(observer) {
    cfg_.validate();
  }

  DocsEngine(const DocsEngine&) = delete;
  DocsEngine& operator=(const DocsEngine&) = delete;

  /// Fresh states with every gate open (all agents start active).
  std::vector<AgentRoundState> initial_states(const StrategyProfile& profile) const {
    game_->validate(profile);
    std::vector<AgentRoundState> s(profile.size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = {profile[k], game_->agent(k).active, 0.0, profile[k]};
    return s;
  }

  /// Strategies last posted by agents that currently have zeta = 0 are what
  /// their neighbors remember.  Seeds the board for externally built states.
  void seed(std::span<const AgentRoundState> states) {
    for (std::size_t k = 0; k < states.size(); ++k)
      if (game_->agent(k).active) theta_board_.post(k, states[k].theta);
  }

  RoundTrace run_round(std::vector<AgentRoundState>& states, std::size_t iteration) {
    const auto& g = *game_;
    const std::size_t n = g.size();
    if (states.size() != n) throw std::invalid_argument("run_round: state count differs from agent count");
    const auto t_start = std::chrono::steady_clock::now();

    RoundTrace tr;
    tr.iteration = iteration;
    tr.regrets.assign(n, 0.0);

    // (a) strategy exchange and best responses.
    for (std::size_t k = 0; k < n; ++k)
      if (g.agent(k).active && states[k].zeta) theta_board_.post(k, states[k].theta);

    std::vector<std::size_t> evals(n, 0);
    std::vector<char> solved(n, 0);
    if (last_response_.size() != n) last_response_.assign(n, std::nullopt);
    parallel_for(n, cfg_.workers, [&](std::size_t k) {
      auto& s = states[k];
      s.proposed_theta = s.theta;
      s.regret = 0.0;
      if (!g.agent(k).active || !s.zeta) return;
      const auto inbox = theta_board_.inbox(k);
      std::vector<NeighborStrategy> nb;
      nb.reserve(inbox.size());
      for (const auto& m : inbox) nb.push_back({m.from, m.value});
      LocalObjective f(g, k, nb);
      // f depends on the neighbors only through their union inside k's support.
      auto& memo = last_response_[k];
      CoverageSet seen = f.neighbor_union() & g.support(k);
      if (cfg_.reuse_best_response && memo && memo->theta == s.theta && memo->seen == seen) {
        s.proposed_theta = memo->proposed;
        s.regret = memo->regret;
        return;
      }
      const auto br = best_response(f, g.agent(k).strategy_space, s.theta, cfg_.scalar);
      s.proposed_theta = br.theta;
      s.regret = br.regret;
      evals[k] = br.evaluations;
      solved[k] = true;
      memo = LastResponse{s.theta, std::move(seen), br.theta, br.regret};
    });
    for (std::size_t k = 0; k < n; ++k) {
      tr.evaluations += evals[k];
      if (solved[k]) ++tr.best_responses;
    }

    // (b) regret exchange.
    Board<double> regret_board(g.graph(), Channel::regret, observer_);
    for (std::size_t k = 0; k < n; ++k)
      if (g.agent(k).active) regret_board.post(k, states[k].regret);

    // (c), (d) election and gating.
    std::vector<bool> innovator(n, false);
    std::vector<bool> next_zeta(n, false);
    for (std::size_t k = 0; k < n; ++k) {
      if (!g.agent(k).active) continue;
      const auto inbox = regret_board.inbox(k);
      if (is_innovator(k, states[k].regret, inbox, cfg_.epsilon)) {
        innovator[k] = true;
        next_zeta[k] = true;
        continue;
      }
      bool busy = states[k].regret > cfg_.epsilon;
      for (const auto& m : inbox) busy = busy || m.value > cfg_.epsilon;
      next_zeta[k] = busy;
    }
    for (std::size_t k = 0; k < n; ++k) {
      tr.regrets[k] = states[k].regret;
      if (innovator[k]) {
        states[k].theta = states[k].proposed_theta;
        tr.innovators.push_back(k);
        tr.innovator_regret_sum += states[k].regret;
      }
      states[k].zeta = next_zeta[k];
    }
    tr.zetas = next_zeta;
    tr.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return tr;
  }

  DocsResult run(const StrategyProfile& initial) {
    DocsResult res;
    res.initial_profile = initial;
    auto states = initial_states(initial);
    seed(states);
    res.initial_phi = global_value(*game_, initial);
    double phi = res.initial_phi;
    for (std::size_t p = 1; p <= cfg_.max_iterations; ++p) {
      const auto t0 = std::chrono::steady_clock::now();
      auto tr = run_round(states, p);
      res.wall_time += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      tr.phi_before = phi;
      // Global value is instrumentation only; no agent reads it.
      tr.phi = tr.innovators.empty() ? phi : global_value(*game_, profile_of(states));
      phi = tr.phi;
      res.evaluations += tr.evaluations;
      if (!res.converged_at && tr.innovators.empty()) res.converged_at = p;
      res.traces.push_back(std::move(tr));
    }
    res.final_profile = profile_of(states);
    res.final_phi = phi;
    res.certification = certify_epsilon_equilibrium(*game_, res.final_profile, cfg_.epsilon, cfg_.certify_resolution,
                                                    cfg_.scalar, cfg_.workers);
    res.certified = res.certification.certified;
    return res;
  }

  static StrategyProfile profile_of(std::span<const AgentRoundState> states) {
    StrategyProfile p;
    p.theta.reserve(states.size());
    for (const auto& s : states) p.theta.push_back(s.theta);
    return p;
  }

  const DocsConfig& config() const { return cfg_; }

 private:
  const GameInstance* game_;
  DocsConfig cfg_;
  Board<double> theta_board_;
  AccessObserver* observer_;

  // Agent-private memory of the inputs and outcome of its last best response.
  struct LastResponse {
    double theta;
    CoverageSet seen;
    double proposed;
    double regret;
  };
  std::vector<std::optional<LastResponse>> last_response_;
};

/// One synchronous round from `states`.  Agents with zeta = 0 are assumed to
/// have posted their current strategy earlier.
inline std::pair<std::vector<AgentRoundState>, RoundTrace> run_round(const GameInstance& g,
                                                                     std::vector<AgentRoundState> states,
                                                                     const DocsConfig& cfg, std::size_t iteration = 1,
                                                                     AccessObserver* observer = nullptr) {
  DocsEngine engine(g, cfg, observer);
  engine.seed(states);
  const double before = global_value(g, DocsEngine::profile_of(states));
  auto tr = engine.run_round(states, iteration);
  tr.phi_before = before;
  tr.phi = global_value(g, DocsEngine::profile_of(states));
  return {std::move(states), std::move(tr)};
}

inline DocsResult run_docs(const GameInstance& g, const StrategyProfile& initial, const DocsConfig& cfg,
                           AccessObserver* observer = nullptr) {
  DocsEngine engine(g, cfg, observer);
  return engine.run(initial);
}

}  // namespace covgame
