#pragma once

// GF(2) parity matrices, CNOT gates and circuits.
//
// A CNOT circuit on n wires is a linear map y = M x over GF(2). Row i of the
// parity matrix M lists which inputs are XOR-ed onto output wire i. Applying
// CNOT(c, t) appends the elementary matrix E_ct (identity plus a 1 at (t, c)),
// which on the matrix is the row operation R_t <- R_t ^ R_c.

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cnotmin {

inline constexpr int kMaxQubits = 32;

using Row = std::uint32_t;

class SingularMatrixError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct CnotGate {
  int control = 0;
  int target = 0;

  friend constexpr bool operator==(const CnotGate&, const CnotGate&) = default;
  friend constexpr auto operator<=>(const CnotGate&, const CnotGate&) = default;

  constexpr bool valid_for(int n) const noexcept {
    return control >= 0 && target >= 0 && control < n && target < n && control != target;
  }
};

inline void check_gate(const CnotGate& g, int n) {
  if (g.control == g.target)
    throw std::invalid_argument("cnot control equals target (" + std::to_string(g.control) + ")");
  if (!g.valid_for(n))
    throw std::out_of_range("cnot(" + std::to_string(g.control) + "," + std::to_string(g.target) +
                            ") out of range for " + std::to_string(n) + " qubits");
}

inline void check_qubit_count(int n) {
  if (n < 2 || n > kMaxQubits)
    throw std::invalid_argument("qubit count must be in [2, 32], got " + std::to_string(n));
}

/// Square Boolean matrix over GF(2), one machine word per row.
/// Bit j of row i is the entry M(i, j).
class ParityMatrix {
public:
  ParityMatrix() = default;

  /// Zero matrix. Use identity() for I_n.
  explicit ParityMatrix(int n) : n_(n) { check_qubit_count(n); }

  static ParityMatrix identity(int n) {
    ParityMatrix m(n);
    for (int i = 0; i < n; ++i) m.rows_[i] = Row{1} << i;
    return m;
  }

  static ParityMatrix from_rows(std::span<const Row> rows) {
    ParityMatrix m(static_cast<int>(rows.size()));
    const Row mask = m.row_mask();
    for (int i = 0; i < m.n_; ++i) {
      if (rows[i] & ~mask) throw std::invalid_argument("row has bits beyond matrix width");
      m.rows_[i] = rows[i];
    }
    return m;
  }

  /// Builds from nested 0/1 lists, row-major (row i = M(i, .)).
  static ParityMatrix from_bits(const std::vector<std::vector<int>>& bits) {
    ParityMatrix m(static_cast<int>(bits.size()));
    for (int i = 0; i < m.n_; ++i) {
      if (static_cast<int>(bits[i].size()) != m.n_) throw std::invalid_argument("matrix is not square");
      for (int j = 0; j < m.n_; ++j) {
        if (bits[i][j] != 0 && bits[i][j] != 1) throw std::invalid_argument("matrix entry is not binary");
        if (bits[i][j]) m.rows_[i] |= Row{1} << j;
      }
    }
    return m;
  }

  int size() const noexcept { return n_; }
  Row row(int i) const { return rows_[i]; }
  std::span<const Row> rows() const noexcept { return {rows_.data(), static_cast<std::size_t>(n_)}; }
  bool get(int i, int j) const { return (rows_[i] >> j) & 1U; }
  void set(int i, int j, bool v) {
    if (v) rows_[i] |= Row{1} << j;
    else rows_[i] &= ~(Row{1} << j);
  }

  Row row_mask() const noexcept { return n_ == 32 ? ~Row{0} : ((Row{1} << n_) - 1); }

  /// In-place R_target ^= R_control. Unchecked; see apply_cnot for the checked form.
  void xor_row(int control, int target) noexcept { rows_[target] ^= rows_[control]; }

  bool is_identity() const noexcept {
    for (int i = 0; i < n_; ++i)
      if (rows_[i] != (Row{1} << i)) return false;
    return true;
  }

  ParityMatrix transposed() const {
    ParityMatrix t(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j)
        if (get(i, j)) t.rows_[j] |= Row{1} << i;
    return t;
  }

  /// Row-major flattening to 0/1 values (network input layout).
  template <typename T>
  void flatten_into(std::span<T> out) const {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) out[static_cast<std::size_t>(i * n_ + j)] = static_cast<T>(get(i, j));
  }

  std::size_t hash() const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(n_);
    for (int i = 0; i < n_; ++i) {
      h ^= rows_[i];
      h *= 0xff51afd7ed558ccdULL;
      h ^= h >> 33;
    }
    return static_cast<std::size_t>(h);
  }

  friend bool operator==(const ParityMatrix& a, const ParityMatrix& b) noexcept {
    if (a.n_ != b.n_) return false;
    return std::equal(a.rows_.begin(), a.rows_.begin() + a.n_, b.rows_.begin());
  }

private:
  int n_ = 0;
  std::array<Row, kMaxQubits> rows_{};
};

struct ParityMatrixHash {
  std::size_t operator()(const ParityMatrix& m) const noexcept { return m.hash(); }
};

/// Ordered CNOT list; gates[0] is applied first.
struct Circuit {
  int n = 0;
  std::vector<CnotGate> gates;

  std::size_t size() const noexcept { return gates.size(); }
  bool empty() const noexcept { return gates.empty(); }

  Circuit reversed() const {
    Circuit r{n, gates};
    std::reverse(r.gates.begin(), r.gates.end());
    return r;
  }

  void validate() const {
    check_qubit_count(n);
    for (const auto& g : gates) check_gate(g, n);
  }

  friend bool operator==(const Circuit&, const Circuit&) = default;
};

inline ParityMatrix apply_cnot(ParityMatrix m, const CnotGate& g) {
  check_gate(g, m.size());
  m.xor_row(g.control, g.target);
  return m;
}

/// M_C = E_h ... E_1 for gates applied in list order.
inline ParityMatrix circuit_to_parity(const Circuit& c) {
  c.validate();
  ParityMatrix m = ParityMatrix::identity(c.n);
  for (const auto& g : c.gates) m.xor_row(g.control, g.target);
  return m;
}

/// y_i = XOR_j M(i,j) x_j.
inline std::vector<int> evaluate_outputs(const ParityMatrix& m, std::span<const int> x) {
  if (static_cast<int>(x.size()) != m.size())
    throw std::invalid_argument("input length " + std::to_string(x.size()) + " does not match " +
                                std::to_string(m.size()) + " qubits");
  Row in = 0;
  for (std::size_t j = 0; j < x.size(); ++j)
    if (x[j] & 1) in |= Row{1} << j;
  std::vector<int> y(x.size());
  for (int i = 0; i < m.size(); ++i) y[i] = std::popcount(m.row(i) & in) & 1;
  return y;
}

/// Classical simulation of the circuit on a bit vector, gate by gate.
inline std::vector<int> simulate_circuit(const Circuit& c, std::span<const int> x) {
  if (static_cast<int>(x.size()) != c.n) throw std::invalid_argument("input length mismatch");
  std::vector<int> w(x.begin(), x.end());
  for (const auto& g : c.gates) w[g.target] ^= w[g.control] & 1;
  return w;
}

inline int hamming_to_identity(const ParityMatrix& m) noexcept {
  int d = 0;
  for (int i = 0; i < m.size(); ++i) d += std::popcount(m.row(i) ^ (Row{1} << i));
  return d;
}

/// Number of rows that differ from the matching identity row.
inline int non_identity_rows(const ParityMatrix& m) noexcept {
  int d = 0;
  for (int i = 0; i < m.size(); ++i) d += m.row(i) != (Row{1} << i);
  return d;
}

inline int rank_gf2(const ParityMatrix& m) {
  std::array<Row, kMaxQubits> rows{};
  std::copy(m.rows().begin(), m.rows().end(), rows.begin());
  const int n = m.size();
  int rank = 0;
  for (int col = 0; col < n && rank < n; ++col) {
    const Row bit = Row{1} << col;
    int pivot = -1;
    for (int r = rank; r < n; ++r)
      if (rows[r] & bit) { pivot = r; break; }
    if (pivot < 0) continue;
    std::swap(rows[rank], rows[pivot]);
    for (int r = 0; r < n; ++r)
      if (r != rank && (rows[r] & bit)) rows[r] ^= rows[rank];
    ++rank;
  }
  return rank;
}

inline bool is_invertible(const ParityMatrix& m) { return rank_gf2(m) == m.size(); }

/// Gauss-Jordan inverse. Throws SingularMatrixError.
inline ParityMatrix inverse(const ParityMatrix& m) {
  const int n = m.size();
  std::array<Row, kMaxQubits> a{};
  std::array<Row, kMaxQubits> inv{};
  for (int i = 0; i < n; ++i) {
    a[i] = m.row(i);
    inv[i] = Row{1} << i;
  }
  for (int col = 0; col < n; ++col) {
    const Row bit = Row{1} << col;
    int pivot = -1;
    for (int r = col; r < n; ++r)
      if (a[r] & bit) { pivot = r; break; }
    if (pivot < 0) throw SingularMatrixError("matrix is singular over GF(2)");
    std::swap(a[col], a[pivot]);
    std::swap(inv[col], inv[pivot]);
    for (int r = 0; r < n; ++r)
      if (r != col && (a[r] & bit)) {
        a[r] ^= a[col];
        inv[r] ^= inv[col];
      }
  }
  return ParityMatrix::from_rows({inv.data(), static_cast<std::size_t>(n)});
}

/// True iff applying c's gates to target, in order, yields the identity.
/// Equivalently c.reversed() is a decomposition of target.
inline bool verify_synthesis(const ParityMatrix& target, const Circuit& reduction) {
  if (reduction.n != target.size())
    throw std::invalid_argument("circuit has " + std::to_string(reduction.n) + " qubits, matrix has " +
                                std::to_string(target.size()));
  ParityMatrix m = target;
  for (const auto& g : reduction.gates) {
    check_gate(g, m.size());
    m.xor_row(g.control, g.target);
  }
  return m.is_identity();
}

// Seeds --------------------------------------------------------------------

struct RngSeed {
  std::uint64_t value = 0;
  friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent child seed for (stream, index) under a master seed.
inline constexpr RngSeed derive_seed(RngSeed master, std::uint64_t stream, std::uint64_t index = 0) noexcept {
  return RngSeed{splitmix64(splitmix64(master.value ^ splitmix64(stream + 0x632be59bd9b4e019ULL)) + index)};
}

/// Seed of the i-th benchmark/evaluation instance under a master seed.
inline constexpr RngSeed instance_seed(RngSeed master, std::size_t i) noexcept { return derive_seed(master, 0, i); }

using Rng = std::mt19937_64;

inline Rng make_rng(RngSeed s) { return Rng{s.value}; }

/// Start from I_n and apply n^2 gates drawn uniformly (with replacement)
/// from `legal`. The caller supplies the action set so topology constraints
/// are honoured; see topology.hpp for the overload taking a Topology.
inline ParityMatrix random_walk_instance(int n, std::span<const CnotGate> legal, RngSeed seed) {
  check_qubit_count(n);
  if (legal.empty()) throw std::invalid_argument("empty action set");
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, legal.size() - 1);
  ParityMatrix m = ParityMatrix::identity(n);
  for (int step = 0; step < n * n; ++step) {
    const CnotGate& g = legal[pick(rng)];
    m.xor_row(g.control, g.target);
  }
  return m;
}

}  // namespace cnotmin

template <>
struct std::hash<cnotmin::ParityMatrix> {
  std::size_t operator()(const cnotmin::ParityMatrix& m) const noexcept { return m.hash(); }
};
