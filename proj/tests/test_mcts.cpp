#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "cnotmin/exact.hpp"
#include "cnotmin/mcts.hpp"

using namespace cnotmin;

namespace {

// Fixed priors and value for every state.
class FixedEvaluator final : public Evaluator {
public:
  FixedEvaluator(std::vector<float> priors, float value) : p_(std::move(priors)), v_(value) {}
  int action_dim() const override { return static_cast<int>(p_.size()); }
  void evaluate(std::span<const ParityMatrix> states, std::span<float> priors, std::span<float> values) const override {
    for (std::size_t b = 0; b < states.size(); ++b) {
      std::copy(p_.begin(), p_.end(), priors.begin() + static_cast<std::ptrdiff_t>(b * p_.size()));
      values[b] = v_;
    }
  }

private:
  std::vector<float> p_;
  float v_;
};

// Fixed priors; the value is a known function of the state.
class HammingEvaluator final : public Evaluator {
public:
  explicit HammingEvaluator(std::vector<float> priors) : p_(std::move(priors)) {}
  static float value_of(const ParityMatrix& m) { return 0.9F - 0.1F * static_cast<float>(hamming_to_identity(m)); }
  int action_dim() const override { return static_cast<int>(p_.size()); }
  void evaluate(std::span<const ParityMatrix> states, std::span<float> priors, std::span<float> values) const override {
    for (std::size_t b = 0; b < states.size(); ++b) {
      std::copy(p_.begin(), p_.end(), priors.begin() + static_cast<std::ptrdiff_t>(b * p_.size()));
      values[b] = value_of(states[b]);
    }
  }

private:
  std::vector<float> p_;
};

SearchConfig literal_puct() {
  SearchConfig c;
  c.minmax_q = false;
  c.parent_fpu = false;
  return c;
}

EpisodeConfig env_for(int n, RewardMode reward = RewardMode::sparse()) {
  auto c = EpisodeConfig::make(all_to_all(n));
  c.reward = reward;
  return c;
}

void simulate(SearchTree& t, const Evaluator& e, int sims) {
  SearchTree* p = &t;
  run_simulations(std::span<SearchTree* const>(&p, 1), e, sims);
}

int total_visits(const SearchTree& t) {
  int s = 0;
  for (const auto& e : t.root_edges()) s += e.visits;
  return s;
}

}  // namespace

TEST(SearchTree, RootExpansionAndVisitAccounting) {
  auto env = env_for(4);
  UniformEvaluator uniform(12);
  SearchTree t(env, RewardKind::Sparse, SearchConfig{}, RngSeed{1});
  t.reset(random_instance(4, RngSeed{2}), 0);
  EXPECT_FALSE(t.root_expanded());
  simulate(t, uniform, 1);
  ASSERT_TRUE(t.root_expanded());
  EXPECT_EQ(t.root_edges().size(), 12u);
  EXPECT_EQ(total_visits(t), 0);
  for (const auto& e : t.root_edges()) EXPECT_FLOAT_EQ(e.prior, 1.0F / 12);
  simulate(t, uniform, 9);
  EXPECT_EQ(total_visits(t), 9);
}

TEST(SearchTree, PuctSelectionOrder) {
  auto env = env_for(3);
  std::vector<float> priors{0.05F, 0.05F, 0.1F, 0.6F, 0.1F, 0.1F};
  FixedEvaluator eval(priors, 0.0F);
  SearchTree t(env, RewardKind::Sparse, literal_puct(), RngSeed{1});
  // Far from the identity so no child in the first few plies is terminal.
  auto m = ParityMatrix::from_bits({{0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  ASSERT_TRUE(is_invertible(m));
  t.reset(m, 0);
  simulate(t, eval, 2);
  // Zero total visits: every score is zero and the lowest id wins.
  EXPECT_EQ(t.root_edges()[0].visits, 1);
  // Hand-computed PUCT scores for the next selections.
  std::vector<int> visits(6, 0);
  visits[0] = 1;
  for (int sim = 0; sim < 6; ++sim) {
    int total = 0;
    for (int v : visits) total += v;
    int best = 0;
    double best_score = -1;
    for (int a = 0; a < 6; ++a) {
      double score = 1.25 * priors[a] * std::sqrt(static_cast<double>(total)) / (1 + visits[a]);
      if (score > best_score) best_score = score, best = a;
    }
    ++visits[best];
    simulate(t, eval, 1);
    for (int a = 0; a < 6; ++a) EXPECT_EQ(t.root_edges()[a].visits, visits[a]) << sim << " " << a;
  }
}

TEST(SearchTree, NormalizedSelectionMatchesReferenceSearch) {
  auto env = env_for(3);
  std::vector<float> priors{0.1F, 0.2F, 0.1F, 0.3F, 0.2F, 0.1F};
  HammingEvaluator eval(priors);
  SearchTree t(env, RewardKind::Sparse, SearchConfig{}, RngSeed{1});
  auto m = ParityMatrix::from_bits({{0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  t.reset(m, 0);

  // Independent sparse-reward search: Q rescaled by the range of all edge Q
  // values seen so far, unvisited edges scored with the node's own value.
  struct RefNode {
    ParityMatrix s;
    bool expanded = false, terminal = false;
    double value = 0;
    std::vector<int> n, child;
    std::vector<double> w, r;
  };
  std::vector<RefNode> nodes{{m}};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto norm = [&](double v) { return hi > lo ? (v - lo) / (hi - lo) : v; };
  auto ref_simulation = [&] {
    std::vector<std::pair<int, int>> path;
    int cur = 0;
    double g = 0;
    for (;;) {
      if (nodes[cur].terminal) break;
      if (!nodes[cur].expanded) {
        RefNode& nd = nodes[cur];
        nd.expanded = true;
        nd.value = HammingEvaluator::value_of(nd.s);
        nd.n.assign(6, 0);
        nd.child.assign(6, -1);
        nd.w.assign(6, 0.0);
        nd.r.assign(6, 0.0);
        g = nd.value;
        break;
      }
      const RefNode& nd = nodes[cur];
      int total = 0;
      for (int v : nd.n) total += v;
      int best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < 6; ++a) {
        const double q = nd.n[a] ? norm(nd.w[a] / nd.n[a]) : norm(nd.value);
        const double score = q + 1.25 * priors[a] * std::sqrt(static_cast<double>(total)) / (1 + nd.n[a]);
        if (score > best_score) best_score = score, best = a;
      }
      path.emplace_back(cur, best);
      if (nd.child[best] < 0) {
        const ParityMatrix next = apply_cnot(nd.s, env.topology.actions()[static_cast<std::size_t>(best)]);
        RefNode c{next};
        c.terminal = next.is_identity();
        nodes[cur].r[best] = c.terminal ? 1.0 : 0.0;
        nodes.push_back(std::move(c));
        nodes[cur].child[best] = static_cast<int>(nodes.size()) - 1;
      }
      cur = nodes[cur].child[best];
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      RefNode& nd = nodes[it->first];
      g = nd.r[it->second] + 0.99 * g;
      nd.n[it->second] += 1;
      nd.w[it->second] += g;
      lo = std::min(lo, nd.w[it->second] / nd.n[it->second]);
      hi = std::max(hi, nd.w[it->second] / nd.n[it->second]);
    }
  };

  bool revisited = false;
  for (int sim = 0; sim < 200; ++sim) {
    ref_simulation();
    simulate(t, eval, 1);
    if (sim == 0) continue;
    for (int a = 0; a < 6; ++a) {
      ASSERT_EQ(t.root_edges()[a].visits, nodes[0].n[a]) << sim << " " << a;
      if (nodes[0].n[a]) EXPECT_NEAR(t.root_edges()[a].q(), nodes[0].w[a] / nodes[0].n[a], 1e-9);
      revisited = revisited || nodes[0].n[a] > 1;
    }
  }
  EXPECT_TRUE(revisited);
  EXPECT_GT(t.node_count(), 50u);
}

TEST(SearchTree, BackupDiscountsLeafValue) {
  auto env = env_for(3);
  FixedEvaluator eval(std::vector<float>(6, 1.0F / 6), 0.5F);
  SearchTree t(env, RewardKind::Sparse, SearchConfig{}, RngSeed{1});
  auto m = ParityMatrix::from_bits({{0, 1, 1}, {1, 0, 1}, {1, 1, 1}});
  t.reset(m, 0);
  simulate(t, eval, 2);
  const auto& e = t.root_edges()[0];
  EXPECT_EQ(e.visits, 1);
  EXPECT_DOUBLE_EQ(e.q(), 0.99 * 0.5);
  EXPECT_NEAR(t.root_value(), 0.99 * 0.5, 1e-12);
}

TEST(SearchTree, TerminalEdgeHasUnitValue) {
  auto env = env_for(3);
  UniformEvaluator uniform(6);
  SearchTree t(env, RewardKind::Sparse, SearchConfig{}, RngSeed{1});
  auto m = apply_cnot(ParityMatrix::identity(3), {2, 1});
  t.reset(m, 0);
  simulate(t, uniform, 64);
  const int solving = static_cast<int>(*env.topology.action_id({2, 1}));
  const auto& e = t.root_edges()[static_cast<std::size_t>(solving)];
  ASSERT_GT(e.visits, 0);
  EXPECT_DOUBLE_EQ(e.q(), 1.0);
  EXPECT_EQ(t.best_action(), solving);
}

TEST(SearchTree, InformedRewardOnEdges) {
  auto env = env_for(3, RewardMode::informed());
  UniformEvaluator uniform(6);
  SearchTree t(env, RewardKind::Informed, SearchConfig{}, RngSeed{1});
  auto m = apply_cnot(ParityMatrix::identity(3), {0, 1});
  t.reset(m, 0);
  simulate(t, uniform, 8);
  for (std::size_t a = 0; a < 6; ++a) {
    const auto& e = t.root_edges()[a];
    if (e.visits == 0) continue;
    EXPECT_DOUBLE_EQ(e.reward, transition_reward(m, apply_cnot(m, env.topology.actions()[a]), RewardKind::Informed));
  }
}

TEST(SearchTree, TreeReuseKeepsSubtree) {
  auto env = env_for(4);
  UniformEvaluator uniform(12);
  SearchTree t(env, RewardKind::Sparse, SearchConfig{}, RngSeed{1});
  t.reset(random_instance(4, RngSeed{5}), 0);
  simulate(t, uniform, 100);
  const int a = t.best_action();
  const int child_visits = t.root_edges()[static_cast<std::size_t>(a)].visits;
  t.advance(a);
  EXPECT_TRUE(t.root_expanded());
  EXPECT_EQ(total_visits(t), child_visits - 1);
}

TEST(SearchTree, LockstepMatchesSingleTreeRuns) {
  auto env = env_for(4);
  UniformEvaluator uniform(12);
  SearchTree a(env, RewardKind::Sparse, SearchConfig{}, RngSeed{1});
  SearchTree b(env, RewardKind::Sparse, SearchConfig{}, RngSeed{2});
  SearchTree solo(env, RewardKind::Sparse, SearchConfig{}, RngSeed{2});
  a.reset(random_instance(4, RngSeed{7}), 0);
  b.reset(random_instance(4, RngSeed{8}), 0);
  solo.reset(random_instance(4, RngSeed{8}), 0);
  std::vector<SearchTree*> both{&a, &b};
  run_simulations(both, uniform, 50);
  simulate(solo, uniform, 50);
  EXPECT_EQ(b.visit_distribution(), solo.visit_distribution());
}

TEST(Search, UniformSearchFindsOptimalOnThreeQubits) {
  auto env = env_for(3);
  UniformEvaluator uniform(6);
  SearchConfig cfg;
  cfg.num_simulations = 1024;
  int optimal = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    auto m = random_instance(3, instance_seed(RngSeed{1}, i));
    auto r = mcts_synth(m, uniform, env, RewardKind::Sparse, cfg);
    EXPECT_EQ(circuit_to_parity(r.circuit), m);
    optimal += r.gate_count() == optimal_synth(m).gate_count();
  }
  EXPECT_GE(optimal, 9);
}

TEST(Search, VisitDistributionSumsToOne) {
  auto env = env_for(4);
  UniformEvaluator uniform(12);
  SearchConfig cfg;
  cfg.num_simulations = 40;
  auto r = search(random_instance(4, RngSeed{3}), uniform, env, RewardKind::Sparse, cfg);
  double s = 0;
  for (double p : r.visit_distribution) s += p;
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_THROW(search(ParityMatrix::identity(4), uniform, env, RewardKind::Sparse, cfg), std::invalid_argument);
}

TEST(Episodes, DeterministicUnderSeed) {
  auto env = env_for(4);
  UniformEvaluator uniform(12);
  SearchConfig cfg;
  cfg.num_simulations = 32;
  cfg.root_noise = true;
  auto m = random_instance(4, RngSeed{9});
  auto a = play_episode(m, uniform, env, RewardKind::Sparse, cfg, PlayMode::Train, RngSeed{4});
  auto b = play_episode(m, uniform, env, RewardKind::Sparse, cfg, PlayMode::Train, RngSeed{4});
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.visit_distributions, b.visit_distributions);
}

TEST(Episodes, TrajectoryBookkeeping) {
  auto env = env_for(4);
  UniformEvaluator uniform(12);
  SearchConfig cfg;
  cfg.num_simulations = 64;
  auto m = random_instance(4, RngSeed{10});
  auto t = play_episode(m, uniform, env, RewardKind::Sparse, cfg, PlayMode::Greedy);
  EXPECT_EQ(t.states.size(), t.length());
  EXPECT_EQ(t.rewards.size(), t.length());
  EXPECT_EQ(t.states.front(), m);
  if (t.solved()) EXPECT_EQ(circuit_to_parity(t.circuit(env.topology)), m);
  else EXPECT_EQ(t.length(), static_cast<std::size_t>(env.step_cap()));
}

TEST(Episodes, KeepGoingCutsEpisodes) {
  auto env = env_for(4);
  UniformEvaluator uniform(12);
  SearchConfig cfg;
  cfg.num_simulations = 8;
  std::vector<EpisodeJob> jobs{{random_instance(4, RngSeed{1}), RngSeed{1}, PlayMode::Train},
                               {random_instance(4, RngSeed{2}), RngSeed{2}, PlayMode::Train}};
  int budget = 3;
  auto out = play_episodes(jobs, uniform, env, RewardKind::Sparse, cfg, [&](std::size_t) { return budget-- > 0; });
  EXPECT_EQ(out[0].length() + out[1].length(), 3u);
}

TEST(Episodes, IdentityStartIsSolved) {
  auto env = env_for(3);
  UniformEvaluator uniform(6);
  EXPECT_EQ(mcts_synth(ParityMatrix::identity(3), uniform, env, RewardKind::Sparse, SearchConfig{}).gate_count(), 0u);
}
