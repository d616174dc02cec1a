#pragma once

// Self-play training: lockstep episode generation against a frozen network
// snapshot, replay buffer, Adam updates, reward switching and evaluation.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cnotmin/core.hpp"
#include "cnotmin/env.hpp"
#include "cnotmin/mcts.hpp"
#include "cnotmin/nnet.hpp"

namespace cnotmin {

struct TrainConfig {
  std::uint64_t total_env_steps = 500'000;
  std::size_t buffer_capacity = 100'000;
  int batch_size = 128;
  int env_steps_per_train_step = 4;
  double eval_fraction = 0.02;
  double checkpoint_fraction = 0.10;
  int episodes_per_round = 32;
  int eval_instances = 100;
  int eval_simulations = 256;
  bool retain_buffer_at_switch = false;  // relabel old entries instead of purging
  AdamConfig optimizer;
  RngSeed seed{1};
  std::string checkpoint_dir;  // empty: no checkpoint files

  /// Full-scale defaults: 500k steps unconstrained, 750k * n constrained.
  static TrainConfig defaults_for(const Topology& t) {
    TrainConfig c;
    c.total_env_steps = t.is_complete() ? 500'000 : 750'000ULL * static_cast<std::uint64_t>(t.size());
    return c;
  }

  void validate() const {
    if (total_env_steps < 2) throw std::invalid_argument("total_env_steps must be >= 2");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (buffer_capacity < static_cast<std::size_t>(batch_size)) throw std::invalid_argument("buffer capacity must be >= batch size");
    if (env_steps_per_train_step < 1) throw std::invalid_argument("env steps per train step must be >= 1");
    if (!(eval_fraction > 0 && eval_fraction <= 1)) throw std::invalid_argument("eval fraction must be in (0, 1]");
    if (!(checkpoint_fraction > 0 && checkpoint_fraction <= 1)) throw std::invalid_argument("checkpoint fraction must be in (0, 1]");
    if (episodes_per_round < 1) throw std::invalid_argument("episodes per round must be >= 1");
    if (eval_instances < 1) throw std::invalid_argument("eval instances must be >= 1");
    if (eval_simulations < 1) throw std::invalid_argument("eval simulations must be >= 1");
  }
};

/// Value head range that fits the returns of each reward mode.
inline NetConfig net_config_for(const EpisodeConfig& env, NetConfig base = {}) {
  const int n = env.n();
  base.input_dim = n * n;
  base.action_dim = static_cast<int>(env.topology.num_actions());
  switch (env.reward.variant) {
    case RewardMode::Variant::Informed:
      base.value_output = ValueOutput::Linear;
      break;
    case RewardMode::Variant::Sparse:
      base.value_output = ValueOutput::Bounded;
      base.value_low = 0.0F;
      base.value_high = 1.0F;
      break;
    case RewardMode::Variant::Mixed:
      base.value_output = ValueOutput::Bounded;
      base.value_low = -1.0F;
      base.value_high = 2.0F;
      break;
  }
  return base;
}

/// Reward a trained network expects in its search tree.
inline RewardKind search_kind_for(const NetConfig& c) {
  return c.value_output == ValueOutput::Linear ? RewardKind::Informed : RewardKind::Sparse;
}

// Replay buffer ----------------------------------------------------------------

struct ReplayEntry {
  std::vector<float> state;
  std::vector<float> policy;
  float value_target = 0;
  RewardKind kind = RewardKind::Sparse;
  int steps_to_solve = -1;  // steps from this state to the identity, -1 if never
  float informed_return = 0;
};

class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
  }

  void push(ReplayEntry e) {
    if (entries_.size() < capacity_) {
      entries_.push_back(std::move(e));
    } else {
      entries_[cursor_] = std::move(e);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const ReplayEntry& operator[](std::size_t i) const { return entries_.at(i); }

  void clear() {
    entries_.clear();
    cursor_ = 0;
  }

  /// Rewrites every value target as a sparse return.
  void relabel_sparse(double gamma) {
    for (auto& e : entries_) {
      e.kind = RewardKind::Sparse;
      e.value_target = e.steps_to_solve > 0 ? static_cast<float>(std::pow(gamma, e.steps_to_solve - 1)) : 0.0F;
    }
  }

  Network::Batch sample(std::size_t batch, Rng& rng) const {
    if (entries_.empty()) throw std::logic_error("cannot sample from an empty replay buffer");
    const auto d = static_cast<Eigen::Index>(entries_.front().state.size());
    const auto a = static_cast<Eigen::Index>(entries_.front().policy.size());
    Network::Batch b;
    b.states.resize(d, static_cast<Eigen::Index>(batch));
    b.target_policy.resize(a, static_cast<Eigen::Index>(batch));
    b.target_value.resize(static_cast<Eigen::Index>(batch));
    std::uniform_int_distribution<std::size_t> pick(0, entries_.size() - 1);
    for (std::size_t k = 0; k < batch; ++k) {
      const ReplayEntry& e = entries_[pick(rng)];
      const auto col = static_cast<Eigen::Index>(k);
      b.states.col(col) = Eigen::Map<const Eigen::VectorXf>(e.state.data(), d);
      b.target_policy.col(col) = Eigen::Map<const Eigen::VectorXf>(e.policy.data(), a);
      b.target_value(col) = e.value_target;
    }
    return b;
  }

private:
  std::size_t capacity_;
  std::size_t cursor_ = 0;
  std::vector<ReplayEntry> entries_;
};

/// Buffer entries for every step of a trajectory.
inline std::vector<ReplayEntry> trajectory_entries(const Trajectory& t, double gamma) {
  const std::vector<double> g = returns_to_go(t.rewards, gamma);
  std::vector<ReplayEntry> out;
  const int len = static_cast<int>(t.length());
  for (int k = 0; k < len; ++k) {
    ReplayEntry e;
    const ParityMatrix& s = t.states[static_cast<std::size_t>(k)];
    e.state.resize(static_cast<std::size_t>(s.size() * s.size()));
    s.flatten_into<float>(e.state);
    const auto& vd = t.visit_distributions[static_cast<std::size_t>(k)];
    e.policy.assign(vd.begin(), vd.end());
    e.value_target = static_cast<float>(g[static_cast<std::size_t>(k)]);
    e.kind = t.kind;
    e.steps_to_solve = t.solved() ? len - k : -1;
    e.informed_return = e.value_target;
    out.push_back(std::move(e));
  }
  return out;
}

// Evaluation -------------------------------------------------------------------

struct EvaluationRecord {
  std::vector<int> best_lengths;      // -1 where no shot solved the instance
  std::vector<double> shot0_rewards;  // undiscounted total reward of the first shot
  double mean_length = 0;             // over solved instances
  double success_rate = 0;
  double mean_episode_reward = 0;
};

/// Shot 0 is the greedy episode; further shots sample the first moves at
/// temperature with root noise. Seeds derive from (instance, shot).
inline EvaluationRecord evaluate(const Evaluator& eval, const EpisodeConfig& env, RewardKind kind, SearchConfig search,
                                 std::span<const ParityMatrix> instances, int shots, RngSeed seed) {
  if (shots < 1) throw std::invalid_argument("shots must be >= 1");
  EvaluationRecord r;
  r.best_lengths.assign(instances.size(), -1);
  r.shot0_rewards.assign(instances.size(), 0.0);
  for (int shot = 0; shot < shots; ++shot) {
    std::vector<EpisodeJob> jobs;
    for (std::size_t i = 0; i < instances.size(); ++i)
      jobs.push_back({instances[i], derive_seed(seed, i, static_cast<std::uint64_t>(shot)),
                      shot == 0 ? PlayMode::Greedy : PlayMode::Train});
    SearchConfig sc = search;
    sc.root_noise = shot > 0;
    const auto trajectories = play_episodes(jobs, eval, env, kind, sc);
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const Trajectory& t = trajectories[i];
      if (shot == 0) r.shot0_rewards[i] = std::accumulate(t.rewards.begin(), t.rewards.end(), 0.0);
      if (!t.solved()) continue;
      const int len = static_cast<int>(t.length());
      if (r.best_lengths[i] < 0 || len < r.best_lengths[i]) r.best_lengths[i] = len;
    }
  }
  int solved = 0;
  double sum = 0;
  for (int v : r.best_lengths)
    if (v >= 0) {
      ++solved;
      sum += v;
    }
  r.success_rate = instances.empty() ? 0.0 : static_cast<double>(solved) / static_cast<double>(instances.size());
  r.mean_length = solved > 0 ? sum / solved : 0.0;
  r.mean_episode_reward =
      instances.empty() ? 0.0 : std::accumulate(r.shot0_rewards.begin(), r.shot0_rewards.end(), 0.0) / static_cast<double>(instances.size());
  return r;
}

/// Held-out evaluation instances; drawn from a seed stream training never uses.
inline std::vector<ParityMatrix> held_out_instances(const EpisodeConfig& env, int count, RngSeed seed) {
  std::vector<ParityMatrix> out;
  for (int i = 0; i < count; ++i) out.push_back(reset(env, derive_seed(seed, 2, static_cast<std::uint64_t>(i))));
  return out;
}

// Training ---------------------------------------------------------------------

struct MetricRow {
  std::uint64_t env_step = 0;
  double episode_reward = 0;
  double success_rate = 0;
  double mean_length = 0;
  RewardKind phase = RewardKind::Informed;
};

struct TrainResult {
  std::shared_ptr<Network> network;
  std::vector<MetricRow> metrics;
  std::uint64_t switch_step = 0;
  std::uint64_t env_steps = 0;
  std::uint64_t train_steps = 0;
  std::uint64_t episodes = 0;
  double last_loss = 0;
  std::vector<std::string> checkpoints;
};

using TrainObserver = std::function<void(const MetricRow&, const TrainResult&)>;

inline std::string metrics_csv(std::span<const MetricRow> rows) {
  std::ostringstream out;
  out << "env_step,episode_reward,success_rate,mean_length,phase\n";
  out << std::setprecision(10);
  for (const auto& r : rows)
    out << r.env_step << ',' << r.episode_reward << ',' << r.success_rate << ',' << r.mean_length << ','
        << to_string(r.phase) << '\n';
  return out.str();
}

inline std::vector<MetricRow> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "env_step,episode_reward,success_rate,mean_length,phase")
    throw std::runtime_error("metrics csv header mismatch");
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[5];
    for (auto& x : f)
      if (!std::getline(ss, x, ',')) throw std::runtime_error("metrics csv row has too few fields");
    MetricRow r;
    r.env_step = std::stoull(f[0]);
    r.episode_reward = std::stod(f[1]);
    r.success_rate = std::stod(f[2]);
    r.mean_length = std::stod(f[3]);
    if (f[4] != "informed" && f[4] != "sparse") throw std::runtime_error("unknown phase '" + f[4] + "'");
    r.phase = f[4] == "sparse" ? RewardKind::Sparse : RewardKind::Informed;
    rows.push_back(r);
  }
  return rows;
}

inline TrainResult run_training(const TrainConfig& tc, const EpisodeConfig& env, const NetConfig& net_cfg,
                                SearchConfig search, const TrainObserver& observer = {}) {
  tc.validate();
  env.validate();
  search.validate();
  if (net_cfg.input_dim != env.n() * env.n() || net_cfg.action_dim != static_cast<int>(env.topology.num_actions()))
    throw std::invalid_argument("network dimensions do not match the environment");

  TrainResult result;
  result.network = std::make_shared<Network>(Network::initialized(net_cfg, derive_seed(tc.seed, 10, 0)));
  const std::uint64_t total = tc.total_env_steps;
  result.switch_step = env.reward.switch_step(total);
  const bool mixed = env.reward.variant == RewardMode::Variant::Mixed;

  ReplayBuffer buffer(tc.buffer_capacity);
  AdamState adam;
  Rng sample_rng = make_rng(derive_seed(tc.seed, 11, 0));
  const auto eval_set = held_out_instances(env, tc.eval_instances, tc.seed);
  SearchConfig eval_search = search;
  eval_search.num_simulations = tc.eval_simulations;
  eval_search.root_noise = false;
  SearchConfig train_search = search;
  train_search.root_noise = true;

  const auto eval_every = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(tc.eval_fraction * static_cast<double>(total))));
  const auto ckpt_every = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(tc.checkpoint_fraction * static_cast<double>(total))));
  std::uint64_t next_eval = eval_every;
  std::uint64_t next_ckpt = ckpt_every;
  std::uint64_t pending_train = 0;
  bool switched = !mixed;

  auto checkpoint = [&](const std::string& tag) {
    if (tc.checkpoint_dir.empty()) return;
    std::filesystem::create_directories(tc.checkpoint_dir);
    const std::string path = (std::filesystem::path(tc.checkpoint_dir) / ("checkpoint_" + tag + ".bin")).string();
    save_network(path, *result.network);
    result.checkpoints.push_back(path);
  };
  auto log_eval = [&](RewardKind phase) {
    const NetworkEvaluator ev(result.network);
    const EvaluationRecord rec = evaluate(ev, env, phase, eval_search, eval_set, 1, derive_seed(tc.seed, 12, result.env_steps));
    MetricRow row{result.env_steps, rec.mean_episode_reward, rec.success_rate, rec.mean_length, phase};
    result.metrics.push_back(row);
    if (observer) observer(row, result);
  };

  while (result.env_steps < total) {
    const RewardKind kind = env.reward.active(result.env_steps, total);
    const std::uint64_t boundary = (kind == RewardKind::Informed && mixed) ? result.switch_step : total;

    std::vector<EpisodeJob> jobs;
    for (int k = 0; k < tc.episodes_per_round; ++k) {
      const std::uint64_t id = result.episodes++;
      jobs.push_back({reset(env, derive_seed(tc.seed, 1, id)), derive_seed(tc.seed, 3, id), PlayMode::Train});
    }
    const auto snapshot = std::make_shared<const Network>(*result.network);
    const NetworkEvaluator ev(snapshot);
    const std::uint64_t before = result.env_steps;
    const auto trajectories = play_episodes(jobs, ev, env, kind, train_search, [&](std::size_t) {
      if (result.env_steps >= boundary) return false;
      ++result.env_steps;
      return true;
    });
    for (const auto& t : trajectories)
      for (auto& e : trajectory_entries(t, env.discount)) buffer.push(std::move(e));

    pending_train += result.env_steps - before;
    if (buffer.size() >= static_cast<std::size_t>(tc.batch_size)) {
      for (; pending_train >= static_cast<std::uint64_t>(tc.env_steps_per_train_step); pending_train -= static_cast<std::uint64_t>(tc.env_steps_per_train_step)) {
        result.last_loss = train_step(*result.network, buffer.sample(static_cast<std::size_t>(tc.batch_size), sample_rng), adam, tc.optimizer);
        ++result.train_steps;
      }
    }

    const bool at_switch = !switched && result.env_steps >= result.switch_step;
    const bool at_end = result.env_steps >= total;
    if (result.env_steps >= next_eval || at_switch || at_end) {
      log_eval(kind);
      while (next_eval <= result.env_steps) next_eval += eval_every;
    }
    if (at_switch) {
      switched = true;
      checkpoint("switch");
      if (tc.retain_buffer_at_switch)
        buffer.relabel_sparse(env.discount);
      else
        buffer.clear();
    }
    if (result.env_steps >= next_ckpt && !at_end) {
      checkpoint(std::to_string(result.env_steps));
      while (next_ckpt <= result.env_steps) next_ckpt += ckpt_every;
    }
  }
  checkpoint("final");
  return result;
}

// Reward-switch report -------------------------------------------------------------

struct SwitchReport {
  bool crossed = false;
  bool plateaued = false;
  double pre_switch = 0;   // mean length over the last informed evaluations
  double post_switch = 0;  // mean length over the last sparse evaluations
  double reduction_percent = 0;
};

inline SwitchReport reward_switch_report(std::span<const MetricRow> rows, std::size_t window = 3) {
  std::vector<double> pre, post;
  for (const auto& r : rows) {
    if (r.success_rate <= 0) continue;
    (r.phase == RewardKind::Informed ? pre : post).push_back(r.mean_length);
  }
  SwitchReport s;
  bool has_sparse = false, has_informed = false;
  for (const auto& r : rows) (r.phase == RewardKind::Sparse ? has_sparse : has_informed) = true;
  s.crossed = has_sparse && has_informed;
  if (!s.crossed || pre.empty() || post.empty()) return s;
  auto tail_mean = [window](const std::vector<double>& v) {
    const std::size_t k = std::min(window, v.size());
    return std::accumulate(v.end() - static_cast<std::ptrdiff_t>(k), v.end(), 0.0) / static_cast<double>(k);
  };
  s.pre_switch = tail_mean(pre);
  s.post_switch = tail_mean(post);
  s.reduction_percent = s.pre_switch > 0 ? 100.0 * (s.pre_switch - s.post_switch) / s.pre_switch : 0.0;
  if (pre.size() >= window) {
    const auto [lo, hi] = std::minmax_element(pre.end() - static_cast<std::ptrdiff_t>(window), pre.end());
    s.plateaued = *hi - *lo <= 0.1 * s.pre_switch;
  }
  return s;
}

}  // namespace cnotmin
