#pragma once

// PUCT tree search over parity matrices with network (or uniform) leaf
// evaluation. Several trees can be advanced in lockstep so that their leaf
// evaluations share one batched forward pass.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "cnotmin/core.hpp"
#include "cnotmin/env.hpp"
#include "cnotmin/heuristics.hpp"
#include "cnotmin/nnet.hpp"

namespace cnotmin {

struct SearchConfig {
  int num_simulations = 128;
  double c_puct = 1.25;
  bool root_noise = false;
  double noise_fraction = 0.25;
  double noise_concentration = 0.3;
  int temperature_moves = -1;  // moves sampled at temperature; -1 selects n
  double temperature = 1.0;
  int rollout_depth = 0;       // > 0 replaces the leaf value by a random rollout
  bool reuse_tree = true;
  bool minmax_q = true;        // rescale Q to [0, 1] by the tree's observed range
  bool parent_fpu = true;      // unvisited edges take the node's value instead of 0

  void validate() const {
    if (num_simulations < 1) throw std::invalid_argument("num_simulations must be >= 1");
    if (!(c_puct > 0)) throw std::invalid_argument("exploration constant must be > 0");
    if (noise_fraction < 0 || noise_fraction > 1) throw std::invalid_argument("noise fraction must be in [0, 1]");
    if (!(noise_concentration > 0)) throw std::invalid_argument("noise concentration must be > 0");
    if (!(temperature > 0)) throw std::invalid_argument("temperature must be > 0");
    if (rollout_depth < 0) throw std::invalid_argument("rollout depth must be >= 0");
  }
};

// Evaluators -----------------------------------------------------------------

/// Priors are written row-major: priors[b * action_dim + a].
class Evaluator {
public:
  virtual ~Evaluator() = default;
  virtual int action_dim() const = 0;
  virtual void evaluate(std::span<const ParityMatrix> states, std::span<float> priors, std::span<float> values) const = 0;
};

/// Uniform priors, zero value: search driven only by rewards.
class UniformEvaluator final : public Evaluator {
public:
  explicit UniformEvaluator(int action_dim) : a_(action_dim) {}
  int action_dim() const override { return a_; }
  void evaluate(std::span<const ParityMatrix> states, std::span<float> priors, std::span<float> values) const override {
    std::fill(priors.begin(), priors.begin() + static_cast<std::ptrdiff_t>(states.size()) * a_, 1.0F / static_cast<float>(a_));
    std::fill(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(states.size()), 0.0F);
  }

private:
  int a_;
};

class NetworkEvaluator final : public Evaluator {
public:
  explicit NetworkEvaluator(std::shared_ptr<const Network> net) : net_(std::move(net)) {
    if (!net_) throw std::invalid_argument("network evaluator needs a network");
  }
  int action_dim() const override { return net_->config().action_dim; }
  const Network& network() const { return *net_; }

  void evaluate(std::span<const ParityMatrix> states, std::span<float> priors, std::span<float> values) const override {
    const int d = net_->config().input_dim;
    const int a = net_->config().action_dim;
    Network::Matrix x(d, static_cast<Eigen::Index>(states.size()));
    for (std::size_t b = 0; b < states.size(); ++b) {
      if (states[b].size() * states[b].size() != d)
        throw std::invalid_argument("state size does not match network input");
      states[b].flatten_into<float>(std::span<float>(x.col(static_cast<Eigen::Index>(b)).data(), static_cast<std::size_t>(d)));
    }
    const auto out = net_->forward(x);
    for (std::size_t b = 0; b < states.size(); ++b) {
      for (int k = 0; k < a; ++k) priors[b * static_cast<std::size_t>(a) + static_cast<std::size_t>(k)] = out.policy(k, static_cast<Eigen::Index>(b));
      values[b] = out.value(static_cast<Eigen::Index>(b));
    }
  }

private:
  std::shared_ptr<const Network> net_;
};

// Tree -----------------------------------------------------------------------

class SearchTree {
public:
  struct Edge {
    float base_prior = 0;  // network prior before root noise
    float prior = 0;
    int visits = 0;
    double value_sum = 0;
    double reward = 0;
    int child = -1;
    double q() const noexcept { return visits > 0 ? value_sum / visits : 0.0; }
  };
  struct Node {
    ParityMatrix state;
    int step_index = 0;
    int first_edge = -1;  // -1 until expanded
    float value = 0;
    std::optional<DoneReason> terminal;
  };

  SearchTree(const EpisodeConfig& env, RewardKind kind, const SearchConfig& cfg, RngSeed seed)
      : env_(&env), kind_(kind), cfg_(cfg), rng_(make_rng(seed)), actions_(env.topology.num_actions()) {
    cfg_.validate();
  }

  void reset(const ParityMatrix& root, int step_index) {
    nodes_.clear();
    edges_.clear();
    root_ = new_node(root, step_index);
    pending_.reset();
    q_min_ = std::numeric_limits<double>::infinity();
    q_max_ = -std::numeric_limits<double>::infinity();
  }

  int num_actions() const noexcept { return static_cast<int>(actions_); }
  const Node& root() const { return nodes_[static_cast<std::size_t>(root_)]; }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  std::span<const Edge> edges(const Node& n) const {
    if (n.first_edge < 0) return {};
    return {edges_.data() + n.first_edge, actions_};
  }
  std::span<const Edge> root_edges() const { return edges(root()); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  bool root_expanded() const { return root().first_edge >= 0; }

  /// Runs selection. Returns the leaf state that needs evaluation, or nullopt
  /// if the simulation ended on a terminal node and was already backed up.
  std::optional<ParityMatrix> begin_simulation() {
    if (pending_) throw std::logic_error("previous simulation is still waiting for its evaluation");
    path_.clear();
    int cur = root_;
    for (;;) {
      Node& nd = nodes_[static_cast<std::size_t>(cur)];
      if (nd.terminal) {
        backup(0.0);
        return std::nullopt;
      }
      if (nd.first_edge < 0) {
        pending_ = cur;
        return nd.state;
      }
      const int a = select_action(cur);
      path_.emplace_back(cur, a);
      Edge& e = edges_[static_cast<std::size_t>(nd.first_edge + a)];
      if (e.child < 0) {
        const ParityMatrix next = apply_cnot(nd.state, env_->topology.actions()[static_cast<std::size_t>(a)]);
        e.reward = transition_reward(nd.state, next, kind_);
        const int step = nd.step_index + 1;
        const int child = new_node(next, step);  // may reallocate nodes_
        edges_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(cur)].first_edge + a)].child = child;
        cur = child;
      } else {
        cur = e.child;
      }
    }
  }

  /// Expands the pending leaf with `priors` and backs up `value`.
  void finish_simulation(std::span<const float> priors, float value) {
    if (!pending_) throw std::logic_error("no simulation is waiting for an evaluation");
    if (priors.size() != actions_) throw std::invalid_argument("evaluator action count does not match the action set");
    const int leaf = *pending_;
    pending_.reset();
    expand(leaf, priors, value);
    double v = value;
    if (cfg_.rollout_depth > 0) v = rollout(nodes_[static_cast<std::size_t>(leaf)]);
    backup(v);
  }

  /// Mixes Dirichlet noise into the root priors (expanded root only).
  void apply_root_noise() {
    Node& r = nodes_[static_cast<std::size_t>(root_)];
    if (r.first_edge < 0) throw std::logic_error("root must be expanded before adding noise");
    std::gamma_distribution<double> gamma(cfg_.noise_concentration, 1.0);
    std::vector<double> eta(actions_);
    double sum = 0;
    for (auto& x : eta) sum += (x = gamma(rng_));
    for (std::size_t a = 0; a < actions_; ++a) {
      Edge& e = edges_[static_cast<std::size_t>(r.first_edge) + a];
      const double noise = sum > 0 ? eta[a] / sum : 1.0 / static_cast<double>(actions_);
      e.prior = static_cast<float>((1 - cfg_.noise_fraction) * e.base_prior + cfg_.noise_fraction * noise);
    }
  }

  std::vector<double> visit_distribution() const {
    std::vector<double> out(actions_, 0.0);
    double total = 0;
    for (std::size_t a = 0; a < actions_ && root_expanded(); ++a) total += (out[a] = root_edges()[a].visits);
    if (total <= 0) return std::vector<double>(actions_, 1.0 / static_cast<double>(actions_));
    for (auto& x : out) x /= total;
    return out;
  }

  double root_value() const {
    double w = 0;
    int n = 0;
    for (const Edge& e : root_edges()) {
      w += e.value_sum;
      n += e.visits;
    }
    return n > 0 ? w / n : root().value;
  }

  /// Most visited root action, lowest id on ties.
  int best_action() const {
    const auto es = root_edges();
    int best = 0;
    for (int a = 1; a < static_cast<int>(es.size()); ++a)
      if (es[static_cast<std::size_t>(a)].visits > es[static_cast<std::size_t>(best)].visits) best = a;
    return best;
  }

  /// Visit-count sampling at temperature tau.
  int sample_action(double tau) {
    const auto es = root_edges();
    std::vector<double> w(es.size());
    const int top = es[static_cast<std::size_t>(best_action())].visits;
    if (top == 0) return best_action();
    for (std::size_t a = 0; a < es.size(); ++a)
      w[a] = es[a].visits > 0 ? std::pow(static_cast<double>(es[a].visits) / top, 1.0 / tau) : 0.0;
    std::discrete_distribution<int> dist(w.begin(), w.end());
    return dist(rng_);
  }

  /// Moves the root to the child reached by `action`, keeping its subtree
  /// when tree reuse is enabled.
  void advance(int action) {
    const Node& r = root();
    if (r.first_edge < 0) throw std::logic_error("cannot advance from an unexpanded root");
    const Edge& e = edges_[static_cast<std::size_t>(r.first_edge + action)];
    if (cfg_.reuse_tree && e.child >= 0) {
      root_ = e.child;
      for (std::size_t a = 0; a < actions_ && root_expanded(); ++a) {
        Edge& child_edge = edges_[static_cast<std::size_t>(root().first_edge) + a];
        child_edge.prior = child_edge.base_prior;
      }
      return;
    }
    const ParityMatrix next = apply_cnot(r.state, env_->topology.actions()[static_cast<std::size_t>(action)]);
    reset(next, r.step_index + 1);
  }

  Rng& rng() noexcept { return rng_; }

private:
  int new_node(const ParityMatrix& s, int step_index) {
    Node nd;
    nd.state = s;
    nd.step_index = step_index;
    if (s.is_identity())
      nd.terminal = DoneReason::Solved;
    else if (step_index >= env_->step_cap())
      nd.terminal = DoneReason::Truncated;
    nodes_.push_back(nd);
    return static_cast<int>(nodes_.size() - 1);
  }

  void expand(int leaf, std::span<const float> priors, float value) {
    double sum = 0;
    bool finite = true;
    for (float p : priors) {
      if (!std::isfinite(p) || p < 0) finite = false;
      sum += p;
    }
    const bool uniform = !finite || !(sum > 0);
    Node& nd = nodes_[static_cast<std::size_t>(leaf)];
    nd.first_edge = static_cast<int>(edges_.size());
    nd.value = value;
    for (std::size_t a = 0; a < actions_; ++a) {
      Edge e;
      e.base_prior = uniform ? 1.0F / static_cast<float>(actions_) : static_cast<float>(priors[a] / sum);
      e.prior = e.base_prior;
      edges_.push_back(e);
    }
  }

  int select_action(int node_index) const {
    const Node& nd = nodes_[static_cast<std::size_t>(node_index)];
    const Edge* es = edges_.data() + nd.first_edge;
    int total = 0;
    for (std::size_t a = 0; a < actions_; ++a) total += es[a].visits;
    const double scale = cfg_.c_puct * std::sqrt(static_cast<double>(total));
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    const double unvisited = cfg_.parent_fpu ? normalized(nd.value) : 0.0;
    for (std::size_t a = 0; a < actions_; ++a) {
      const double q = es[a].visits > 0 ? normalized(es[a].q()) : unvisited;
      const double score = q + scale * es[a].prior / (1.0 + es[a].visits);
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(a);
      }
    }
    return best;
  }

  void backup(double leaf_value) {
    double g = leaf_value;
    for (auto it = path_.rbegin(); it != path_.rend(); ++it) {
      Edge& e = edges_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(it->first)].first_edge + it->second)];
      g = e.reward + env_->discount * g;
      e.visits += 1;
      e.value_sum += g;
      q_min_ = std::min(q_min_, e.q());
      q_max_ = std::max(q_max_, e.q());
    }
  }

  double normalized(double q) const {
    if (!cfg_.minmax_q || !(q_max_ > q_min_)) return q;
    return (q - q_min_) / (q_max_ - q_min_);
  }

  double rollout(const Node& leaf) {
    if (leaf.terminal) return 0.0;
    ParityMatrix s = leaf.state;
    std::uniform_int_distribution<std::size_t> pick(0, actions_ - 1);
    double g = 0, scale = 1;
    int step = leaf.step_index;
    for (int d = 0; d < cfg_.rollout_depth && step < env_->step_cap() && !s.is_identity(); ++d, ++step) {
      const ParityMatrix next = apply_cnot(s, env_->topology.actions()[pick(rng_)]);
      g += scale * transition_reward(s, next, kind_);
      scale *= env_->discount;
      s = next;
    }
    return g;
  }

  const EpisodeConfig* env_;
  RewardKind kind_;
  SearchConfig cfg_;
  Rng rng_;
  std::size_t actions_;
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  int root_ = 0;
  std::vector<std::pair<int, int>> path_;
  std::optional<int> pending_;
  double q_min_ = std::numeric_limits<double>::infinity();
  double q_max_ = -std::numeric_limits<double>::infinity();
};

/// Runs `simulations` simulations on every tree, batching leaf evaluations
/// across trees. Each tree's outcome is independent of the others.
inline void run_simulations(std::span<SearchTree* const> trees, const Evaluator& eval, int simulations) {
  if (trees.empty()) return;
  const int a = eval.action_dim();
  std::vector<ParityMatrix> states;
  std::vector<SearchTree*> waiting;
  std::vector<float> priors, values;
  for (int s = 0; s < simulations; ++s) {
    states.clear();
    waiting.clear();
    for (SearchTree* t : trees) {
      if (t->num_actions() != a) throw std::invalid_argument("network action count does not match the action set");
      if (auto leaf = t->begin_simulation()) {
        states.push_back(*leaf);
        waiting.push_back(t);
      }
    }
    if (states.empty()) continue;
    priors.resize(states.size() * static_cast<std::size_t>(a));
    values.resize(states.size());
    eval.evaluate(states, priors, values);
    for (std::size_t b = 0; b < waiting.size(); ++b)
      waiting[b]->finish_simulation(std::span<const float>(priors.data() + b * static_cast<std::size_t>(a), static_cast<std::size_t>(a)), values[b]);
  }
}

struct SearchResult {
  std::vector<double> visit_distribution;
  double root_value = 0;
};

/// Single-tree search from scratch.
inline SearchResult search(const ParityMatrix& root, const Evaluator& eval, const EpisodeConfig& env, RewardKind kind,
                           const SearchConfig& cfg, RngSeed seed = RngSeed{0}) {
  if (root.is_identity()) throw std::invalid_argument("search root must not be the identity");
  SearchTree tree(env, kind, cfg, seed);
  tree.reset(root, 0);
  SearchTree* t = &tree;
  int sims = cfg.num_simulations;
  if (cfg.root_noise) {
    run_simulations(std::span<SearchTree* const>(&t, 1), eval, 1);
    tree.apply_root_noise();
    --sims;
  }
  run_simulations(std::span<SearchTree* const>(&t, 1), eval, sims);
  return {tree.visit_distribution(), tree.root_value()};
}

// Episodes -------------------------------------------------------------------

enum class PlayMode { Train, Greedy };

struct Trajectory {
  ParityMatrix start;
  std::vector<ParityMatrix> states;                // state before each action
  std::vector<std::vector<double>> visit_distributions;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::optional<DoneReason> done_reason;           // unset if cut short by the caller
  RewardKind kind = RewardKind::Sparse;

  std::size_t length() const noexcept { return actions.size(); }
  bool solved() const noexcept { return done_reason == DoneReason::Solved; }

  /// Decomposition of the start matrix (reversed action trace).
  Circuit circuit(const Topology& t) const {
    Circuit reduction{t.size(), {}};
    for (int a : actions) reduction.gates.push_back(t.actions()[static_cast<std::size_t>(a)]);
    return reduction.reversed();
  }
};

struct EpisodeJob {
  ParityMatrix start;
  RngSeed seed;
  PlayMode mode = PlayMode::Greedy;
};

/// Plays several episodes in lockstep. `keep_going` is consulted before every
/// env step of every episode (in job order); returning false cuts that
/// episode short without a done reason.
template <typename KeepGoing>
std::vector<Trajectory> play_episodes(std::span<const EpisodeJob> jobs, const Evaluator& eval, const EpisodeConfig& env,
                                      RewardKind kind, const SearchConfig& cfg, KeepGoing&& keep_going) {
  env.validate();
  cfg.validate();
  const int temp_moves = cfg.temperature_moves < 0 ? env.n() : cfg.temperature_moves;
  std::vector<Trajectory> out(jobs.size());
  std::vector<std::unique_ptr<SearchTree>> trees;
  std::vector<ParityMatrix> state(jobs.size());
  std::vector<int> step_index(jobs.size(), 0);
  std::vector<bool> active(jobs.size(), true);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    out[j].start = state[j] = jobs[j].start;
    out[j].kind = kind;
    trees.push_back(std::make_unique<SearchTree>(env, kind, cfg, jobs[j].seed));
    trees.back()->reset(jobs[j].start, 0);
    if (jobs[j].start.is_identity()) {
      out[j].done_reason = DoneReason::Solved;
      active[j] = false;
    }
  }

  std::vector<SearchTree*> live;
  for (;;) {
    live.clear();
    for (std::size_t j = 0; j < jobs.size(); ++j)
      if (active[j]) live.push_back(trees[j].get());
    if (live.empty()) break;

    // Every tree gets num_simulations this move; on a fresh root the first
    // one is the root evaluation, so noise goes in after it.
    auto noisy = [&](std::size_t j) { return active[j] && cfg.root_noise && jobs[j].mode == PlayMode::Train; };
    std::vector<bool> fresh(jobs.size(), false);
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (!active[j]) continue;
      fresh[j] = !trees[j]->root_expanded();
      if (!fresh[j] && noisy(j)) trees[j]->apply_root_noise();
    }
    run_simulations(live, eval, 1);
    for (std::size_t j = 0; j < jobs.size(); ++j)
      if (fresh[j] && noisy(j)) trees[j]->apply_root_noise();
    run_simulations(live, eval, cfg.num_simulations - 1);

    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (!active[j]) continue;
      if (!keep_going(j)) {
        active[j] = false;
        continue;
      }
      SearchTree& t = *trees[j];
      int a = t.best_action();
      if (jobs[j].mode == PlayMode::Train && step_index[j] < temp_moves) a = t.sample_action(cfg.temperature);
      Trajectory& tr = out[j];
      tr.states.push_back(state[j]);
      tr.visit_distributions.push_back(t.visit_distribution());
      tr.actions.push_back(a);
      const StepOutcome o = step(state[j], static_cast<std::size_t>(a), step_index[j], env, kind);
      tr.rewards.push_back(o.reward);
      state[j] = o.next_state;
      ++step_index[j];
      if (o.done) {
        tr.done_reason = o.done_reason;
        active[j] = false;
      } else {
        t.advance(a);
      }
    }
  }
  return out;
}

inline std::vector<Trajectory> play_episodes(std::span<const EpisodeJob> jobs, const Evaluator& eval,
                                             const EpisodeConfig& env, RewardKind kind, const SearchConfig& cfg) {
  return play_episodes(jobs, eval, env, kind, cfg, [](std::size_t) { return true; });
}

inline Trajectory play_episode(const ParityMatrix& start, const Evaluator& eval, const EpisodeConfig& env,
                               RewardKind kind, const SearchConfig& cfg, PlayMode mode, RngSeed seed = RngSeed{0}) {
  const EpisodeJob job{start, seed, mode};
  return std::move(play_episodes(std::span<const EpisodeJob>(&job, 1), eval, env, kind, cfg).front());
}

/// MCTS synthesis wrapped as a SynthResult; throws BudgetExceededError when
/// the episode truncates.
inline SynthResult mcts_synth(const ParityMatrix& m, const Evaluator& eval, const EpisodeConfig& env, RewardKind kind,
                              const SearchConfig& cfg, RngSeed seed = RngSeed{0}) {
  if (m.is_identity()) return SynthResult{Circuit{m.size(), {}}, "mcts"};
  detail::require_invertible(m);
  const Trajectory t = play_episode(m, eval, env, kind, cfg, PlayMode::Greedy, seed);
  if (!t.solved()) throw BudgetExceededError("mcts did not reach the identity within " + std::to_string(env.step_cap()) + " steps");
  return SynthResult{t.circuit(env.topology), "mcts"};
}

}  // namespace cnotmin
