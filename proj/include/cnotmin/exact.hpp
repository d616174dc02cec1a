#pragma once

// Optimal CNOT synthesis by iterative-deepening A* over parity matrices.
//
// States are packed column-major into one 64-bit word (bit j*n + i holds
// M(i, j)), which limits the solver to n <= 8. The heuristic is the maximum
// of two admissible bounds:
//   * rows that still differ from the identity (each CNOT rewrites one row);
//   * pattern databases: exact distances of k-column projections. A row op
//     acts on every column the same way, so reducing k columns of M to the
//     matching identity columns is a relaxation of the full problem. The
//     tables are consulted for M, M^T, M^-1 and M^-T, which all share the
//     optimal length when the topology is undirected.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#if defined(__BMI2__)
#include <immintrin.h>
#endif

#include "cnotmin/core.hpp"
#include "cnotmin/heuristics.hpp"
#include "cnotmin/topology.hpp"

namespace cnotmin {

class SearchTimeoutError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DepthCapError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxExactQubits = 8;

struct ExactConfig {
  std::optional<int> max_depth;       // default: default_max_depth(n, topology)
  double time_budget_seconds = 600.0;
  std::optional<Topology> topology;   // all-to-all when empty
  bool use_pattern_databases = true;
  int pattern_max_bits = 25;          // k * n <= this
  int pattern_max_tables = 16;
  std::size_t transposition_entries = std::size_t{1} << 20;
};

/// ceil(n^2 / log2 n) + 4 for all-to-all. Constrained topologies can need far
/// more than the unconstrained worst case, so they get n^2 + 4n.
inline int default_max_depth(int n, bool constrained) {
  if (constrained) return n * n + 4 * n;
  return static_cast<int>(std::ceil(n * n / std::log2(static_cast<double>(n)))) + 4;
}

namespace packed {

using Word = std::uint64_t;

inline Word low_bits(int count) { return count >= 64 ? ~Word{0} : ((Word{1} << count) - 1); }

/// One bit at the bottom of each of `chunks` n-bit chunks.
inline Word chunk_base(int n, int chunks) {
  Word r = 0;
  for (int j = 0; j < chunks; ++j) r |= Word{1} << (j * n);
  return r;
}

inline Word pack(const ParityMatrix& m) {
  const int n = m.size();
  Word x = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (m.get(i, j)) x |= Word{1} << (j * n + i);
  return x;
}

inline ParityMatrix unpack(Word x, int n) {
  ParityMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if ((x >> (j * n + i)) & 1U) m.set(i, j, true);
  return m;
}

/// Row op R_t ^= R_c on a stack of column chunks.
inline Word row_op(Word x, Word base, int control, int target) { return x ^ (((x >> control) & base) << target); }

/// Column op C_a ^= C_b.
inline Word col_op(Word x, int n, int a, int b) { return x ^ (((x >> (b * n)) & low_bits(n)) << (a * n)); }

inline Word extract(Word x, Word mask) {
#if defined(__BMI2__)
  return _pext_u64(x, mask);
#else
  Word out = 0;
  int k = 0;
  for (Word m = mask; m; m &= m - 1, ++k)
    if (x & (m & -m)) out |= Word{1} << k;
  return out;
#endif
}

}  // namespace packed

/// Exact distance table for the projection onto one column subset.
class PatternDatabase {
public:
  static constexpr std::uint8_t kUnreached = 0xFF;

  PatternDatabase(int n, std::vector<int> columns, const std::vector<CnotGate>& actions)
      : n_(n), columns_(std::move(columns)) {
    const int k = static_cast<int>(columns_.size());
    const int bits = k * n;
    if (bits > 32) throw std::invalid_argument("pattern database too large");
    table_.assign(std::size_t{1} << bits, kUnreached);

    const packed::Word base = packed::chunk_base(n, k);
    packed::Word goal = 0;
    for (int i = 0; i < k; ++i) goal |= packed::Word{1} << (i * n + columns_[i]);

    std::vector<std::uint32_t> frontier{static_cast<std::uint32_t>(goal)};
    table_[goal] = 0;
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const packed::Word x = frontier[head];
      const std::uint8_t d = table_[x];
      for (const auto& g : actions) {
        const packed::Word y = packed::row_op(x, base, g.control, g.target);
        if (table_[y] == kUnreached) {
          table_[y] = static_cast<std::uint8_t>(d + 1);
          frontier.push_back(static_cast<std::uint32_t>(y));
        }
      }
      max_value_ = std::max<int>(max_value_, d);
    }
  }

  /// Distance of the projection whose k column chunks are packed in `index`.
  int at(std::size_t index) const noexcept { return table_[index]; }
  int max_value() const noexcept { return max_value_; }
  const std::vector<int>& columns() const noexcept { return columns_; }
  std::size_t bytes() const noexcept { return table_.size(); }

private:
  int n_;
  std::vector<int> columns_;
  std::vector<std::uint8_t> table_;
  int max_value_ = 0;
};

/// Qubit permutations that map the edge set onto itself.
inline std::vector<std::vector<int>> automorphisms(const Topology& t) {
  const int n = t.size();
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    bool ok = true;
    for (const auto& e : t.edges())
      if (!t.has_edge(p[e.a], p[e.b])) {
        ok = false;
        break;
      }
    if (ok) out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

/// A column subset answered by a table built for a symmetric subset. The
/// relabelling phi (a topology automorphism) maps the table's columns onto
/// this subset; column phi(r) of M, with rows permuted back, is column r of
/// the relabelled matrix.
class PatternView {
public:
  PatternView(const PatternDatabase& db, int n, const std::vector<int>& phi) : db_(&db), n_(n) {
    const auto& rep = db.columns();
    identity_ = true;
    for (std::size_t i = 0; i < rep.size(); ++i) {
      source_.push_back(phi[rep[i]]);
      if (phi[rep[i]] != rep[i]) identity_ = false;
    }
    for (int a = 0; a < n; ++a)
      if (phi[a] != a) identity_ = false;
    for (int c : source_) mask_ |= packed::low_bits(n) << (c * n);
    if (!identity_) {
      bitperm_.resize(std::size_t{1} << n);
      for (std::uint32_t v = 0; v < bitperm_.size(); ++v) {
        std::uint32_t out = 0;
        for (int a = 0; a < n; ++a) out |= ((v >> phi[a]) & 1U) << a;
        bitperm_[v] = static_cast<std::uint8_t>(out);
      }
    }
  }

  int lookup(packed::Word x) const noexcept {
    if (identity_) return db_->at(packed::extract(x, mask_));
    std::size_t index = 0;
    const packed::Word low = packed::low_bits(n_);
    for (std::size_t i = 0; i < source_.size(); ++i)
      index |= static_cast<std::size_t>(bitperm_[(x >> (source_[i] * n_)) & low]) << (i * static_cast<std::size_t>(n_));
    return db_->at(index);
  }

  std::vector<int> columns() const {
    std::vector<int> c = source_;
    std::sort(c.begin(), c.end());
    return c;
  }

private:
  const PatternDatabase* db_;
  int n_;
  bool identity_ = true;
  packed::Word mask_ = 0;
  std::vector<int> source_;
  std::vector<std::uint8_t> bitperm_;
};

/// Pattern databases for one topology: every k-column subset (or cyclic
/// windows when there are more than max_tables), with one table per orbit
/// under the topology's automorphisms.
class PatternSet {
public:
  PatternSet(const Topology& t, int max_bits, int max_tables) {
    const int n = t.size();
    const int k = std::clamp(max_bits / n, 1, n);
    std::vector<std::vector<int>> subsets;
    std::vector<int> pick(static_cast<std::size_t>(k));
    auto all_subsets = [&](auto&& self, int start, int depth) -> void {
      if (depth == k) {
        subsets.push_back(pick);
        return;
      }
      for (int c = start; c < n; ++c) {
        pick[static_cast<std::size_t>(depth)] = c;
        self(self, c + 1, depth + 1);
      }
    };
    all_subsets(all_subsets, 0, 0);
    if (static_cast<int>(subsets.size()) > max_tables) {
      // Cyclic windows cover every column k times.
      subsets.clear();
      for (int s = 0; s < n && static_cast<int>(subsets.size()) < max_tables; ++s) {
        std::vector<int> w;
        for (int i = 0; i < k; ++i) w.push_back((s + i) % n);
        std::sort(w.begin(), w.end());
        subsets.push_back(std::move(w));
      }
    }

    const auto symmetries = automorphisms(t);
    tables_.reserve(subsets.size());
    for (const auto& subset : subsets) {
      bool placed = false;
      for (const auto& db : tables_) {
        for (const auto& phi : symmetries) {
          std::vector<int> image;
          for (int c : db.columns()) image.push_back(phi[c]);
          std::sort(image.begin(), image.end());
          if (image == subset) {
            views_.emplace_back(db, n, phi);
            placed = true;
            break;
          }
        }
        if (placed) break;
      }
      if (!placed) {
        tables_.emplace_back(n, subset, t.actions());
        std::vector<int> id(static_cast<std::size_t>(n));
        std::iota(id.begin(), id.end(), 0);
        views_.emplace_back(tables_.back(), n, id);
      }
    }
  }

  PatternSet(const PatternSet&) = delete;
  PatternSet& operator=(const PatternSet&) = delete;

  const std::vector<PatternView>& views() const noexcept { return views_; }
  std::size_t table_count() const noexcept { return tables_.size(); }

  static std::shared_ptr<const PatternSet> cached(const Topology& t, int max_bits, int max_tables) {
    static std::mutex mutex;
    static std::map<std::string, std::shared_ptr<const PatternSet>> cache;
    std::string key = std::to_string(t.size()) + ":" + std::to_string(max_bits) + ":" + std::to_string(max_tables);
    for (const auto& e : t.edges()) key += "," + std::to_string(e.a) + "-" + std::to_string(e.b);
    std::lock_guard lock(mutex);
    auto& slot = cache[key];
    if (!slot) slot = std::make_shared<const PatternSet>(t, max_bits, max_tables);
    return slot;
  }

private:
  // Views hold pointers into tables_; reserve() above keeps them stable.
  std::vector<PatternDatabase> tables_;
  std::vector<PatternView> views_;
};

struct ExactResult {
  SynthResult synth;
  std::uint64_t nodes_expanded = 0;
  double seconds = 0.0;
  int root_heuristic = 0;
};

namespace detail {

/// The four matrices whose optimal lengths coincide, updated per move.
struct StateViews {
  packed::Word m = 0;       // M
  packed::Word mt = 0;      // M^T
  packed::Word inv = 0;     // M^-1
  packed::Word inv_t = 0;   // M^-T

  StateViews apply(const CnotGate& g, int n, packed::Word base) const {
    StateViews s;
    s.m = packed::row_op(m, base, g.control, g.target);
    s.mt = packed::col_op(mt, n, g.target, g.control);
    s.inv = packed::col_op(inv, n, g.control, g.target);
    s.inv_t = packed::row_op(inv_t, base, g.target, g.control);
    return s;
  }
};

class IdaStar {
public:
  IdaStar(int n, const Topology& topology, const ExactConfig& cfg)
      : n_(n), actions_(topology.actions()), cfg_(cfg), base_(packed::chunk_base(n, n)) {
    for (int i = 0; i < n; ++i) identity_ |= packed::Word{1} << (i * n + i);
    row_masks_.resize(n);
    for (int i = 0; i < n; ++i) row_masks_[i] = base_ << i;
    if (cfg.use_pattern_databases) patterns_ = PatternSet::cached(topology, cfg.pattern_max_bits, cfg.pattern_max_tables);
    commute_.assign(actions_.size() * actions_.size(), 0);
    for (std::size_t a = 0; a < actions_.size(); ++a)
      for (std::size_t b = 0; b < actions_.size(); ++b)
        commute_[a * actions_.size() + b] =
            actions_[a].target != actions_[b].control && actions_[b].target != actions_[a].control;
    std::size_t cap = std::bit_ceil(std::max<std::size_t>(cfg.transposition_entries, 1024));
    tt_.assign(cap, TtEntry{});
    tt_mask_ = cap - 1;
  }

  int row_heuristic(packed::Word m) const noexcept {
    int h = 0;
    for (int i = 0; i < n_; ++i) h += (m & row_masks_[i]) != (identity_ & row_masks_[i]);
    return h;
  }

  /// Largest lower bound found, stopping early once it exceeds `limit`.
  int heuristic(const StateViews& s, int limit) const noexcept {
    int h = row_heuristic(s.m);
    if (h > limit || !patterns_) return h;
    for (const auto& view : patterns_->views()) {
      h = std::max({h, view.lookup(s.m), view.lookup(s.mt), view.lookup(s.inv), view.lookup(s.inv_t)});
      if (h > limit) return h;
    }
    return h;
  }

  ExactResult solve(const ParityMatrix& target, int max_depth) {
    const auto start = Clock::now();
    deadline_ = start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg_.time_budget_seconds));
    StateViews root;
    root.m = packed::pack(target);
    root.mt = packed::pack(target.transposed());
    const ParityMatrix inv = inverse(target);
    root.inv = packed::pack(inv);
    root.inv_t = packed::pack(inv.transposed());

    ExactResult result;
    result.root_heuristic = heuristic(root, 1 << 20);
    int bound = result.root_heuristic;
    path_.clear();
    while (true) {
      if (bound > max_depth)
        throw DepthCapError("no synthesis within depth cap " + std::to_string(max_depth));
      ++iteration_;
      const int next = dfs(root, 0, bound, -1);
      if (next == kFound) break;
      bound = next;
    }
    std::vector<CnotGate> ops;
    for (int a : path_) ops.push_back(actions_[static_cast<std::size_t>(a)]);
    result.synth = SynthResult::from_reduction(Circuit{n_, std::move(ops)}, "exact");
    result.nodes_expanded = nodes_;
    result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
  }

private:
  using Clock = std::chrono::steady_clock;
  static constexpr int kFound = -1;

  struct TtEntry {
    packed::Word state = 0;
    std::uint32_t iteration = 0;
    std::int16_t last = 0;
    std::uint8_t g = 0;
  };

  /// True when (state, last) was already searched at depth <= g this iteration.
  bool seen(packed::Word state, int last, int g) {
    std::uint64_t h = (state ^ (static_cast<std::uint64_t>(last + 1) * 0x9e3779b97f4a7c15ULL)) * 0xbf58476d1ce4e5b9ULL;
    TtEntry& e = tt_[(h >> 20) & tt_mask_];
    if (e.iteration == iteration_ && e.state == state && e.last == last) {
      if (e.g <= g) return true;
      e.g = static_cast<std::uint8_t>(g);
      return false;
    }
    // Keep the shallower entry; its subtree is larger.
    if (e.iteration != iteration_ || g <= e.g) e = TtEntry{state, iteration_, static_cast<std::int16_t>(last), static_cast<std::uint8_t>(g)};
    return false;
  }

  int dfs(const StateViews& s, int g, int bound, int last) {
    if (s.m == identity_) return kFound;
    const int h = heuristic(s, bound - g);
    if (g + h > bound) return g + h;
    if (seen(s.m, last, g)) return std::numeric_limits<int>::max();
    if ((++nodes_ & 0xFFF) == 0 && Clock::now() > deadline_)
      throw SearchTimeoutError("exact search exceeded " + std::to_string(cfg_.time_budget_seconds) + " s");

    int next_bound = std::numeric_limits<int>::max();
    const std::size_t count = actions_.size();
    for (std::size_t a = 0; a < count; ++a) {
      if (last >= 0) {
        if (static_cast<int>(a) == last) continue;
        // Adjacent commuting gates are only explored in increasing id order.
        if (commute_[static_cast<std::size_t>(last) * count + a] && static_cast<int>(a) < last) continue;
      }
      path_.push_back(static_cast<int>(a));
      const int r = dfs(s.apply(actions_[a], n_, base_), g + 1, bound, static_cast<int>(a));
      if (r == kFound) return kFound;
      path_.pop_back();
      next_bound = std::min(next_bound, r);
    }
    return next_bound;
  }

  int n_;
  const std::vector<CnotGate>& actions_;
  ExactConfig cfg_;
  packed::Word base_;
  packed::Word identity_ = 0;
  std::vector<packed::Word> row_masks_;
  std::shared_ptr<const PatternSet> patterns_;
  std::vector<std::uint8_t> commute_;
  std::vector<TtEntry> tt_;
  std::size_t tt_mask_ = 0;
  std::uint32_t iteration_ = 0;
  std::vector<int> path_;
  std::uint64_t nodes_ = 0;
  Clock::time_point deadline_;
};

}  // namespace detail

/// Minimum-length decomposition. Throws SearchTimeoutError or DepthCapError.
inline ExactResult optimal_synth_detailed(const ParityMatrix& m, const ExactConfig& cfg = {}) {
  const int n = m.size();
  if (n > kMaxExactQubits) throw std::invalid_argument("exact solver supports at most 8 qubits");
  if (!is_invertible(m)) throw SingularMatrixError("cannot synthesize a singular matrix");
  const Topology topology = cfg.topology ? *cfg.topology : all_to_all(n);
  if (topology.size() != n) throw TopologyError("topology size does not match matrix");
  const int cap = cfg.max_depth.value_or(default_max_depth(n, !topology.is_complete()));
  if (cap < 0) throw std::invalid_argument("max_depth must be non-negative");
  detail::IdaStar search(n, topology, cfg);
  return search.solve(m, cap);
}

inline SynthResult optimal_synth(const ParityMatrix& m, const ExactConfig& cfg = {}) {
  return optimal_synth_detailed(m, cfg).synth;
}

/// Admissible lower bound used by the search; exposed for testing.
inline int exact_lower_bound(const ParityMatrix& m, const ExactConfig& cfg = {}) {
  const int n = m.size();
  const Topology topology = cfg.topology ? *cfg.topology : all_to_all(n);
  detail::IdaStar search(n, topology, cfg);
  detail::StateViews s;
  s.m = packed::pack(m);
  s.mt = packed::pack(m.transposed());
  const ParityMatrix inv = inverse(m);
  s.inv = packed::pack(inv);
  s.inv_t = packed::pack(inv.transposed());
  return search.heuristic(s, 1 << 20);
}

struct OptimalStats {
  std::vector<int> lengths;          // -1 where the search failed
  std::vector<std::uint64_t> nodes;
  std::vector<double> millis;
  int failures = 0;
  double mean = 0, stddev = 0;
  int min = 0, max = 0;
};

inline OptimalStats summarize_lengths(OptimalStats s) {
  std::vector<int> ok;
  for (int v : s.lengths)
    if (v >= 0) ok.push_back(v);
  if (ok.empty()) return s;
  const double sum = std::accumulate(ok.begin(), ok.end(), 0.0);
  s.mean = sum / static_cast<double>(ok.size());
  double var = 0;
  for (int v : ok) var += (v - s.mean) * (v - s.mean);
  s.stddev = ok.size() > 1 ? std::sqrt(var / static_cast<double>(ok.size() - 1)) : 0.0;
  s.min = *std::min_element(ok.begin(), ok.end());
  s.max = *std::max_element(ok.begin(), ok.end());
  return s;
}

/// Optimal lengths over seeded random instances. Failed instances are
/// recorded with length -1 and counted in `failures`.
inline OptimalStats optimal_mean(int n, const Topology& topology, int num_instances, RngSeed seed,
                                 ExactConfig cfg = {}, InstanceWalk walk = InstanceWalk::AllToAll) {
  if (topology.size() != n) throw TopologyError("topology size does not match qubit count");
  cfg.topology = topology;
  OptimalStats s;
  for (int i = 0; i < num_instances; ++i) {
    const ParityMatrix m = sample_instance(topology, instance_seed(seed, static_cast<std::size_t>(i)), walk);
    try {
      const ExactResult r = optimal_synth_detailed(m, cfg);
      s.lengths.push_back(static_cast<int>(r.synth.gate_count()));
      s.nodes.push_back(r.nodes_expanded);
      s.millis.push_back(r.seconds * 1e3);
    } catch (const SearchTimeoutError&) {
      s.lengths.push_back(-1);
      s.nodes.push_back(0);
      s.millis.push_back(cfg.time_budget_seconds * 1e3);
      ++s.failures;
    }
  }
  return summarize_lengths(std::move(s));
}

}  // namespace cnotmin
