#include <gtest/gtest.h>

#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "covgame/docs.hpp"
#include "support/toy_games.hpp"

using namespace covgame;

namespace {

NeighborGraph path3() {
  const std::pair<std::size_t, std::size_t> e[] = {{0, 1}, {1, 2}};
  return NeighborGraph::from_edges(3, e);
}

DocsConfig fine_docs() {
  DocsConfig cfg;
  cfg.scalar.coarse_points = 401;
  cfg.certify_resolution = 0.05;
  return cfg;
}

// Round-gain and independence checks applied to every trace of a run.
void check_rounds(const GameInstance& g, const DocsResult& r) {
  for (const auto& t : r.traces) {
    EXPECT_NEAR(t.phi - t.phi_before, t.innovator_regret_sum, 1e-6) << "round " << t.iteration;
    EXPECT_GE(t.phi, t.phi_before);
    for (std::size_t a : t.innovators)
      for (std::size_t b : t.innovators) EXPECT_FALSE(g.graph().contains(a, b));
  }
}

}  // namespace

TEST(ElectInnovators, PathExample) {
  const double r[] = {5, 3, 5};
  EXPECT_EQ(elect_innovators(r, path3(), 0.1), (std::vector<std::size_t>{0, 2}));
}

TEST(ElectInnovators, NothingAboveEpsilon) {
  const double r[] = {0.1, 0.05, 0.0};
  EXPECT_TRUE(elect_innovators(r, path3(), 0.1).empty());
}

TEST(ElectInnovators, TieGoesToSmallerIndex) {
  const std::pair<std::size_t, std::size_t> e[] = {{0, 1}};
  const double r[] = {2.0, 2.0};
  EXPECT_EQ(elect_innovators(r, NeighborGraph::from_edges(2, e), 0.1), (std::vector<std::size_t>{0}));
}

TEST(ElectInnovators, ElectedAgentsAreNeverAdjacent) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> val(0, 4);
  std::bernoulli_distribution edge(0.3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::pair<std::size_t, std::size_t>> es;
    for (std::size_t a = 0; a < 8; ++a)
      for (std::size_t b = a + 1; b < 8; ++b)
        if (edge(rng)) es.push_back({a, b});
    auto g = NeighborGraph::from_edges(8, es);
    std::vector<double> r(8);
    for (auto& x : r) x = val(rng);  // many exact ties
    const auto inn = elect_innovators(r, g, 0.1);
    for (std::size_t a : inn) {
      EXPECT_GT(r[a], 0.1);
      for (std::size_t b : inn) EXPECT_FALSE(g.contains(a, b));
    }
  }
}

TEST(IterationBound, Formula) {
  EXPECT_EQ(iteration_bound(0, 10, 1), 11u);
  EXPECT_EQ(iteration_bound(0, 0, 0.1), 1u);
  EXPECT_EQ(iteration_bound(-1, 2.05, 0.5), 7u);
  EXPECT_THROW(iteration_bound(1, 0, 0.1), std::invalid_argument);
  EXPECT_THROW(iteration_bound(0, 1, 0.0), std::invalid_argument);
}

TEST(DocsConfig, RejectsZeroRounds) {
  DocsConfig cfg;
  cfg.max_iterations = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.epsilon = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(RunRound, AllGatesClosedIsANoOp) {
  const auto g = toy::six_agent_game();
  DocsEngine e(g, fine_docs());
  auto states = e.initial_states(g.zero_profile());
  for (auto& s : states) s.zeta = false;
  auto [next, tr] = run_round(g, states, fine_docs());
  EXPECT_TRUE(tr.innovators.empty());
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_EQ(next[k].regret, 0.0);
    EXPECT_FALSE(next[k].zeta);
    EXPECT_EQ(next[k].theta, 0.0);
  }
  EXPECT_EQ(tr.evaluations, 0u);
}

TEST(RunRound, SingleAgentGainsExactlyItsRegret) {
  // A window wholly inside the axis gains nothing by moving.
  toy::SlidingWindows w{TimeGrid(0, 30, 1), {2}, {6}};
  const auto g = toy::make_window_game(w, StrategyInterval(-4, 4), 4.0, 0.5);
  auto [s1, t1] = run_round(g, DocsEngine(g, fine_docs()).initial_states(g.zero_profile()), fine_docs());
  EXPECT_TRUE(t1.innovators.empty());

  toy::SlidingWindows edge{TimeGrid(0, 30, 1), {-3}, {6}};  // starts 3 s before the axis
  const auto h = toy::make_window_game(edge, StrategyInterval(-4, 4), 4.0, 0.5);
  auto [s2, t2] = run_round(h, DocsEngine(h, fine_docs()).initial_states(h.zero_profile()), fine_docs());
  ASSERT_EQ(t2.innovators, (std::vector<std::size_t>{0}));
  EXPECT_NEAR(t2.phi - t2.phi_before, t2.regrets[0], 1e-12);
  EXPECT_GT(t2.regrets[0], 0.1);
}

TEST(RunDocs, TwoDisjointAgentsConvergeAtOnce) {
  toy::SlidingWindows w{TimeGrid(0, 40, 1), {5, 25}, {6, 6}};
  const auto g = toy::make_window_game(w, StrategyInterval(-3, 3), 3.0, 0.5);
  EXPECT_TRUE(g.neighbors(0).empty());
  const auto r = run_docs(g, g.zero_profile(), fine_docs());
  ASSERT_TRUE(r.converged_at.has_value());
  EXPECT_LE(*r.converged_at, 2u);
  EXPECT_TRUE(r.certified);
  EXPECT_EQ(r.final_profile, g.zero_profile());
}

TEST(RunDocs, RoundGainEqualsInnovatorRegretsEveryRound) {
  const auto g = toy::six_agent_game();
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto start = toy::random_profile(g, rng);
    const auto r = run_docs(g, start, fine_docs());
    check_rounds(g, r);
    EXPECT_TRUE(r.converged_at.has_value());
    EXPECT_TRUE(r.certified) << "trial " << trial << " worst gain " << r.certification.worst_gain;
  }
}

TEST(RunDocs, AbsorbingOnceQuiet) {
  const auto g = toy::six_agent_game();
  DocsConfig cfg = fine_docs();
  const auto r = run_docs(g, g.zero_profile(), cfg);
  ASSERT_TRUE(r.converged_at.has_value());
  // Find the first round after which every gate is closed, then require at
  // least three further rounds that change nothing.
  std::size_t quiet = 0;
  for (; quiet < r.traces.size(); ++quiet) {
    bool closed = true;
    for (bool z : r.traces[quiet].zetas) closed = closed && !z;
    if (closed && r.traces[quiet].innovators.empty()) break;
  }
  ASSERT_LT(quiet + 3, r.traces.size());
  for (std::size_t p = quiet + 1; p < r.traces.size(); ++p) {
    EXPECT_TRUE(r.traces[p].innovators.empty());
    EXPECT_EQ(r.traces[p].evaluations, 0u);
    EXPECT_EQ(r.traces[p].phi, r.traces[quiet].phi);
  }
}

TEST(RunDocs, SequentialApplicationMatchesSimultaneousRound) {
  const auto g = toy::six_agent_game();
  DocsConfig cfg = fine_docs();
  std::mt19937_64 rng(17);
  bool found = false;
  for (int trial = 0; trial < 200 && !found; ++trial) {
    const auto start = toy::random_profile(g, rng);
    DocsEngine e(g, cfg);
    auto states = e.initial_states(start);
    const auto [next, tr] = run_round(g, states, cfg);
    if (tr.innovators.size() != 2) continue;
    found = true;
    const std::size_t a = tr.innovators[0], b = tr.innovators[1];
    const auto p0 = DocsEngine::profile_of(states);
    const double ta = next[a].theta, tb = next[b].theta;
    const double ab = global_value(g, p0.with(a, ta).with(b, tb));
    const double via_a = global_value(g, p0.with(a, ta));
    const double via_b = global_value(g, p0.with(b, tb));
    const double F0 = global_value(g, p0);
    EXPECT_NEAR(ab - F0, tr.innovator_regret_sum, 1e-9);
    EXPECT_NEAR((via_a - F0) + (ab - via_a), tr.innovator_regret_sum, 1e-9);
    EXPECT_NEAR((via_b - F0) + (ab - via_b), tr.innovator_regret_sum, 1e-9);
    EXPECT_NEAR(via_a - F0, tr.regrets[a], 1e-9);
    EXPECT_NEAR(via_b - F0, tr.regrets[b], 1e-9);
  }
  EXPECT_TRUE(found) << "no round with exactly two innovators was produced";
}

TEST(Locality, AuditSeesOnlyNeighborReads) {
  const auto g = toy::six_agent_game();
  LocalityAudit audit(g.graph());
  const auto r = run_docs(g, g.zero_profile(), fine_docs(), &audit);
  EXPECT_GT(audit.reads(), 0u);
  EXPECT_TRUE(audit.violations().empty());
  (void)r;
}

TEST(Locality, AuditCatchesAForeignRead) {
  const auto g = toy::six_agent_game();
  LocalityAudit audit(g.graph());
  ASSERT_FALSE(g.graph().contains(0, 5));
  audit.on_read(0, 5, Channel::strategy);
  ASSERT_EQ(audit.violations().size(), 1u);
  EXPECT_EQ(audit.violations()[0].source, 5u);
}

TEST(Locality, NonNeighborStateDoesNotReachAnAgent) {
  // Perturbing agents outside N_0 leaves agent 0's proposal and regret intact.
  const auto g = toy::six_agent_game();
  std::mt19937_64 rng(21);
  const DocsConfig cfg = fine_docs();
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = toy::random_profile(g, rng);
    DocsEngine e(g, cfg);
    auto states = e.initial_states(p);
    auto [a, ta] = run_round(g, states, cfg);
    for (std::size_t l = 1; l < g.size(); ++l)
      if (!g.graph().contains(0, l)) states[l].theta = -states[l].theta;
    auto [b, tb] = run_round(g, states, cfg);
    EXPECT_EQ(ta.regrets[0], tb.regrets[0]);
    EXPECT_EQ(a[0].proposed_theta, b[0].proposed_theta);
  }
}

TEST(RunDocs, ReuseDoesNotChangeTheOutcome) {
  const auto g = toy::six_agent_game();
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto start = toy::random_profile(g, rng);
    DocsConfig on = fine_docs(), off = fine_docs();
    off.reuse_best_response = false;
    const auto a = run_docs(g, start, on);
    const auto b = run_docs(g, start, off);
    EXPECT_EQ(a.final_profile, b.final_profile);
    ASSERT_EQ(a.traces.size(), b.traces.size());
    for (std::size_t p = 0; p < a.traces.size(); ++p) {
      EXPECT_EQ(a.traces[p].regrets, b.traces[p].regrets);
      EXPECT_EQ(a.traces[p].innovators, b.traces[p].innovators);
    }
    EXPECT_LE(a.evaluations, b.evaluations);
  }
}

TEST(RunDocs, DeterministicAndWorkerCountInvariant) {
  const auto g = toy::six_agent_game();
  DocsConfig one = fine_docs(), many = fine_docs();
  many.workers = 4;
  const auto a = run_docs(g, g.zero_profile(), one);
  const auto b = run_docs(g, g.zero_profile(), one);
  const auto c = run_docs(g, g.zero_profile(), many);
  EXPECT_EQ(a.final_profile, b.final_profile);
  EXPECT_EQ(a.final_profile, c.final_profile);
  EXPECT_EQ(a.final_phi, c.final_phi);
}

TEST(RunDocs, ConvergedRoundHasNoInnovators) {
  const auto g = toy::six_agent_game();
  const auto r = run_docs(g, g.zero_profile(), fine_docs());
  ASSERT_TRUE(r.converged_at.has_value());
  EXPECT_TRUE(r.traces[*r.converged_at - 1].innovators.empty());
  for (std::size_t p = 0; p + 1 < *r.converged_at; ++p) EXPECT_FALSE(r.traces[p].innovators.empty());
  EXPECT_EQ(r.traces.size(), fine_docs().max_iterations);
}
