#pragma once

// Parity-matrix environment: resets, transitions and rewards.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cnotmin/core.hpp"
#include "cnotmin/topology.hpp"

namespace cnotmin {

/// Reward actually paid by a transition.
enum class RewardKind { Sparse, Informed };

struct RewardMode {
  enum class Variant { Sparse, Informed, Mixed };
  Variant variant = Variant::Mixed;
  double switch_fraction = 0.5;  // Mixed only: informed before, sparse after

  static RewardMode sparse() { return {Variant::Sparse, 0.5}; }
  static RewardMode informed() { return {Variant::Informed, 0.5}; }
  static RewardMode mixed(double fraction) {
    RewardMode m{Variant::Mixed, fraction};
    m.validate();
    return m;
  }

  void validate() const {
    if (variant == Variant::Mixed && !(switch_fraction > 0.0 && switch_fraction < 1.0))
      throw std::invalid_argument("mixed reward switch fraction must be in (0, 1)");
  }

  /// First global env step paid with the sparse reward (total when never).
  std::uint64_t switch_step(std::uint64_t total_steps) const {
    switch (variant) {
      case Variant::Sparse: return 0;
      case Variant::Informed: return total_steps;
      case Variant::Mixed: break;
    }
    return static_cast<std::uint64_t>(std::floor(switch_fraction * static_cast<double>(total_steps)));
  }

  RewardKind active(std::uint64_t env_step, std::uint64_t total_steps) const {
    return env_step < switch_step(total_steps) ? RewardKind::Informed : RewardKind::Sparse;
  }
};

inline std::string_view to_string(RewardKind k) { return k == RewardKind::Sparse ? "sparse" : "informed"; }

inline std::string to_string(const RewardMode& m) {
  switch (m.variant) {
    case RewardMode::Variant::Sparse: return "sparse";
    case RewardMode::Variant::Informed: return "informed";
    case RewardMode::Variant::Mixed: break;
  }
  return "mixed";
}

inline RewardMode parse_reward_mode(std::string_view s, double switch_fraction) {
  if (s == "sparse") return RewardMode::sparse();
  if (s == "informed") return RewardMode::informed();
  if (s == "mixed") return RewardMode::mixed(switch_fraction);
  throw std::invalid_argument("reward mode must be sparse, informed or mixed");
}

struct EpisodeConfig {
  Topology topology;
  RewardMode reward = RewardMode::mixed(0.5);
  int max_steps = 0;       // 0 selects 4 n^2
  double discount = 0.99;
  InstanceWalk walk = InstanceWalk::AllToAll;

  static EpisodeConfig make(const Topology& t) {
    EpisodeConfig c;
    c.topology = t;
    c.max_steps = 4 * t.size() * t.size();
    return c;
  }

  int n() const noexcept { return topology.size(); }
  int step_cap() const noexcept { return max_steps > 0 ? max_steps : 4 * n() * n(); }

  void validate() const {
    if (topology.size() < 2) throw std::invalid_argument("episode config has no topology");
    if (max_steps < 0) throw std::invalid_argument("max_steps must be >= 1");
    if (!(discount > 0.0 && discount <= 1.0)) throw std::invalid_argument("discount must be in (0, 1]");
    reward.validate();
  }
};

enum class DoneReason { Solved, Truncated };

inline std::string_view to_string(DoneReason r) { return r == DoneReason::Solved ? "solved" : "truncated"; }

struct StepOutcome {
  ParityMatrix next_state;
  double reward = 0.0;
  bool done = false;
  std::optional<DoneReason> done_reason;
};

/// Random start state; the identity draw is rejected and resampled.
inline ParityMatrix reset(const EpisodeConfig& cfg, RngSeed seed) {
  cfg.validate();
  std::uint64_t s = seed.value;
  for (;;) {
    ParityMatrix m = sample_instance(cfg.topology, RngSeed{s}, cfg.walk);
    if (!m.is_identity()) return m;
    s = splitmix64(s);
  }
}

inline double transition_reward(const ParityMatrix& state, const ParityMatrix& next, RewardKind kind) {
  const bool solved = next.is_identity();
  if (kind == RewardKind::Sparse) return solved ? 1.0 : 0.0;
  const int n = state.size();
  const double shaped =
      static_cast<double>(hamming_to_identity(state) - hamming_to_identity(next)) / static_cast<double>(n * n);
  return shaped + (solved ? 1.0 : 0.0);
}

inline StepOutcome step(const ParityMatrix& state, std::size_t action_id, int step_index, const EpisodeConfig& cfg,
                        RewardKind kind) {
  const auto& actions = cfg.topology.actions();
  if (action_id >= actions.size())
    throw std::out_of_range("action id " + std::to_string(action_id) + " outside action set of size " +
                            std::to_string(actions.size()));
  if (state.size() != cfg.n()) throw std::invalid_argument("state size does not match the episode");
  if (state.is_identity() || step_index >= cfg.step_cap())
    throw std::logic_error("episode is already finished");
  StepOutcome out;
  out.next_state = apply_cnot(state, actions[action_id]);
  out.reward = transition_reward(state, out.next_state, kind);
  if (out.next_state.is_identity()) {
    out.done = true;
    out.done_reason = DoneReason::Solved;
  } else if (step_index + 1 >= cfg.step_cap()) {
    out.done = true;
    out.done_reason = DoneReason::Truncated;
  }
  return out;
}

/// sum_t gamma^t r_t
inline double episode_return(std::span<const double> rewards, double gamma) {
  double g = 0.0;
  for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) g = *it + gamma * g;
  return g;
}

/// Discounted return-to-go from every step.
inline std::vector<double> returns_to_go(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double g = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    g = rewards[k] + gamma * g;
    out[k] = g;
  }
  return out;
}

}  // namespace cnotmin
