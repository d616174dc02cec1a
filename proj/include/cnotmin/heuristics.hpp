#pragma once

// Polynomial-time synthesizers: Gauss-Jordan elimination, Patel-Markov-Hayes
// and a topology-aware Hamming-greedy descent.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cnotmin/core.hpp"
#include "cnotmin/topology.hpp"

namespace cnotmin {

class BudgetExceededError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct SynthResult {
  Circuit circuit;  // decomposition: circuit_to_parity(circuit) == target
  std::string method;

  std::size_t gate_count() const noexcept { return circuit.size(); }
  /// Gate list that reduces the target to the identity.
  Circuit reduction() const { return circuit.reversed(); }

  static SynthResult from_reduction(Circuit reduction, std::string method) {
    return SynthResult{reduction.reversed(), std::move(method)};
  }
};

namespace detail {

/// Records row operations applied to a working copy.
struct RowOpRecorder {
  ParityMatrix state;
  std::vector<CnotGate> ops;

  void xor_into(int control, int target) {
    state.xor_row(control, target);
    ops.push_back({control, target});
  }
};

inline void require_invertible(const ParityMatrix& m) {
  if (!is_invertible(m)) throw SingularMatrixError("cannot synthesize a singular matrix");
}

}  // namespace detail

inline SynthResult gaussian_synth(const ParityMatrix& m) {
  detail::require_invertible(m);
  const int n = m.size();
  detail::RowOpRecorder rec{m, {}};
  for (int col = 0; col < n; ++col) {
    if (!rec.state.get(col, col)) {
      for (int r = col + 1; r < n; ++r)
        if (rec.state.get(r, col)) {
          rec.xor_into(r, col);
          break;
        }
    }
    for (int r = 0; r < n; ++r)
      if (r != col && rec.state.get(r, col)) rec.xor_into(col, r);
  }
  return SynthResult::from_reduction(Circuit{n, std::move(rec.ops)}, "gauss");
}

namespace detail {

/// One PMH pass: clears everything below the diagonal with sectioned
/// duplicate-sub-row removal followed by elimination. The pivot row is
/// back-reduced whenever that drops more than one shared bit.
inline void pmh_lower_pass(RowOpRecorder& rec, int section) {
  const int n = rec.state.size();
  constexpr int kBackReduceCutoff = 1;
  for (int start = 0; start < n; start += section) {
    const int stop = std::min(start + section, n);
    const Row sec_mask = ((stop - start) == 32 ? ~Row{0} : ((Row{1} << (stop - start)) - 1)) << start;

    // Duplicate sub-rows: later rows are folded into the first occurrence.
    std::unordered_map<Row, int> first_row;
    for (int row = start; row < n; ++row) {
      const Row pattern = rec.state.row(row) & sec_mask;
      if (pattern == 0) continue;
      auto [it, inserted] = first_row.try_emplace(pattern, row);
      if (!inserted) rec.xor_into(it->second, row);
    }

    for (int col = start; col < stop; ++col) {
      bool diag_one = rec.state.get(col, col);
      for (int row = col + 1; row < n; ++row) {
        if (rec.state.get(row, col)) {
          if (!diag_one) {
            rec.xor_into(row, col);
            diag_one = true;
          }
          rec.xor_into(col, row);
        }
        if (std::popcount(rec.state.row(col) & rec.state.row(row)) > kBackReduceCutoff) rec.xor_into(row, col);
      }
    }
  }
}

inline Circuit pmh_reduction(const ParityMatrix& m, int section) {
  const int n = m.size();
  RowOpRecorder lower{m, {}};
  pmh_lower_pass(lower, section);
  // lower.state is upper triangular; the transposed pass works on columns.
  RowOpRecorder upper{lower.state.transposed(), {}};
  pmh_lower_pass(upper, section);
  if (!upper.state.is_identity()) throw SingularMatrixError("matrix is singular over GF(2)");

  // Row op (c,t) on U^T is column op (c,t) on U, i.e. U = E'_hb ... E'_h1
  // with E' the transposed gate. The full reduction is the lower ops
  // followed by the transposed upper ops in reverse order.
  std::vector<CnotGate> ops = std::move(lower.ops);
  for (auto it = upper.ops.rbegin(); it != upper.ops.rend(); ++it) ops.push_back({it->target, it->control});
  return Circuit{n, std::move(ops)};
}

}  // namespace detail

inline int pmh_max_section(int n) { return static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 1; }

/// Patel-Markov-Hayes synthesis. Without a section width, every width in
/// [1, ceil(log2 n) + 1] is tried and the shortest circuit wins (first on ties).
inline SynthResult pmh_synth(const ParityMatrix& m, std::optional<int> section = std::nullopt) {
  detail::require_invertible(m);
  const int n = m.size();
  if (section) {
    if (*section < 1 || *section >= n)
      throw std::invalid_argument("pmh section width must be in [1, n), got " + std::to_string(*section));
    return SynthResult::from_reduction(detail::pmh_reduction(m, *section), "pmh");
  }
  std::optional<Circuit> best;
  for (int w = 1; w <= std::min(pmh_max_section(n), n - 1); ++w) {
    Circuit c = detail::pmh_reduction(m, w);
    if (!best || c.size() < best->size()) best = std::move(c);
  }
  return SynthResult::from_reduction(std::move(*best), "pmh");
}

/// Hamming-greedy descent restricted to topology actions. Raises
/// BudgetExceededError after 8 n^2 steps or when every move revisits a state.
inline SynthResult greedy_hamming_synth(const ParityMatrix& m, const Topology& t) {
  detail::require_invertible(m);
  const int n = m.size();
  if (t.size() != n) throw TopologyError("topology size does not match matrix");
  const auto& actions = t.actions();
  const int budget = 8 * n * n;

  ParityMatrix state = m;
  std::unordered_set<ParityMatrix> visited{state};
  std::vector<CnotGate> ops;
  while (!state.is_identity()) {
    if (static_cast<int>(ops.size()) >= budget)
      throw BudgetExceededError("greedy synthesis exceeded " + std::to_string(budget) + " steps");
    std::optional<std::size_t> best;
    int best_dist = 0;
    for (std::size_t a = 0; a < actions.size(); ++a) {
      ParityMatrix next = state;
      next.xor_row(actions[a].control, actions[a].target);
      const int d = hamming_to_identity(next);
      if (visited.contains(next)) continue;
      if (!best || d < best_dist) {
        best = a;
        best_dist = d;
      }
    }
    if (!best) throw BudgetExceededError("greedy synthesis is stuck: every move revisits a state");
    state.xor_row(actions[*best].control, actions[*best].target);
    visited.insert(state);
    ops.push_back(actions[*best]);
  }
  return SynthResult::from_reduction(Circuit{n, std::move(ops)}, "greedy");
}

}  // namespace cnotmin
