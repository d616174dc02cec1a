#pragma once

// Qubit connectivity graphs and the CNOT action sets they induce.

#include <algorithm>
#include <array>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cnotmin/core.hpp"
#include "cnotmin/io.hpp"

namespace cnotmin {

class TopologyError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Edge {
  int a = 0;
  int b = 0;  // a < b after normalisation
  friend constexpr bool operator==(const Edge&, const Edge&) = default;
  friend constexpr auto operator<=>(const Edge&, const Edge&) = default;
};

/// Undirected, connected coupling graph. Each edge permits CNOT both ways.
class Topology {
public:
  Topology() = default;

  Topology(int n, std::vector<std::pair<int, int>> edges, std::string name = {}) : n_(n), name_(std::move(name)) {
    if (n < 2 || n > kMaxQubits) throw TopologyError("topology qubit count must be in [2, 32]");
    for (auto [i, j] : edges) {
      if (i < 0 || j < 0 || i >= n || j >= n)
        throw TopologyError("edge {" + std::to_string(i) + "," + std::to_string(j) + "} out of range");
      if (i == j) throw TopologyError("self-loop on qubit " + std::to_string(i));
      Edge e{std::min(i, j), std::max(i, j)};
      if (std::find(edges_.begin(), edges_.end(), e) != edges_.end())
        throw TopologyError("duplicate edge {" + std::to_string(e.a) + "," + std::to_string(e.b) + "}");
      edges_.push_back(e);
    }
    std::sort(edges_.begin(), edges_.end());
    if (!connected()) throw TopologyError("topology is not connected");
    actions_.reserve(edges_.size() * 2);
    for (const auto& e : edges_) {
      actions_.push_back({e.a, e.b});
      actions_.push_back({e.b, e.a});
    }
    std::sort(actions_.begin(), actions_.end());
  }

  int size() const noexcept { return n_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Action id -> gate, lexicographic by (control, target).
  const std::vector<CnotGate>& actions() const noexcept { return actions_; }
  std::size_t num_actions() const noexcept { return actions_.size(); }

  bool has_edge(int i, int j) const {
    Edge e{std::min(i, j), std::max(i, j)};
    return std::binary_search(edges_.begin(), edges_.end(), e);
  }

  bool allows(const CnotGate& g) const { return g.valid_for(n_) && has_edge(g.control, g.target); }

  std::optional<std::size_t> action_id(const CnotGate& g) const {
    auto it = std::lower_bound(actions_.begin(), actions_.end(), g);
    if (it == actions_.end() || *it != g) return std::nullopt;
    return static_cast<std::size_t>(it - actions_.begin());
  }

  bool is_complete() const noexcept { return edges_.size() == static_cast<std::size_t>(n_ * (n_ - 1) / 2); }

  /// Hop distance between every pair of qubits.
  std::vector<std::vector<int>> distances() const {
    std::vector<std::vector<int>> d(n_, std::vector<int>(n_, -1));
    for (int s = 0; s < n_; ++s) {
      std::vector<int> queue{s};
      d[s][s] = 0;
      for (std::size_t k = 0; k < queue.size(); ++k) {
        int u = queue[k];
        for (const auto& e : edges_) {
          int v = e.a == u ? e.b : (e.b == u ? e.a : -1);
          if (v >= 0 && d[s][v] < 0) {
            d[s][v] = d[s][u] + 1;
            queue.push_back(v);
          }
        }
      }
    }
    return d;
  }

  friend bool operator==(const Topology& a, const Topology& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

private:
  bool connected() const {
    std::vector<int> parent(n_);
    for (int i = 0; i < n_; ++i) parent[i] = i;
    auto find = [&](int x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    int components = n_;
    for (const auto& e : edges_) {
      int ra = find(e.a), rb = find(e.b);
      if (ra != rb) {
        parent[ra] = rb;
        --components;
      }
    }
    return components == 1;
  }

  int n_ = 0;
  std::string name_;
  std::vector<Edge> edges_;
  std::vector<CnotGate> actions_;
};

inline Topology all_to_all(int n) {
  if (n < 2) throw TopologyError("all-to-all topology needs at least 2 qubits");
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  return Topology(n, std::move(edges), "all-" + std::to_string(n));
}

inline Topology linear_topology(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Topology(n, std::move(edges), std::to_string(n) + "-L");
}

/// Path 0..n-2 with qubit n-1 hung off node (n-2)/2.
inline Topology t_topology(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 2 < n; ++i) edges.emplace_back(i, i + 1);
  edges.emplace_back((n - 2) / 2, n - 1);
  return Topology(n, std::move(edges), std::to_string(n) + "-T");
}

namespace detail {

struct BuiltinTemplate {
  std::string_view name;
  int n;
  std::vector<std::pair<int, int>> edges;
};

inline const std::vector<BuiltinTemplate>& builtin_templates() {
  // L and T shapes follow the generators above. The remaining shapes are
  // reconstructions of hardware drawings; docs/topologies.md lists them.
  static const std::vector<BuiltinTemplate> templates = {
      {"4-L", 4, {{0, 1}, {1, 2}, {2, 3}}},
      {"4-Y", 4, {{0, 1}, {1, 2}, {1, 3}}},
      {"5-L", 5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}},
      {"5-T", 5, {{0, 1}, {1, 2}, {2, 3}, {1, 4}}},
      {"6-L", 6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}}},
      {"6-T", 6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {2, 5}}},
      {"6-Y", 6, {{0, 1}, {1, 2}, {0, 3}, {3, 4}, {0, 5}}},
      {"7-L", 7, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}}},
      {"7-T", 7, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {2, 6}}},
      {"7-Y", 7, {{0, 1}, {1, 2}, {0, 3}, {3, 4}, {0, 5}, {5, 6}}},
      {"8-H", 8, {{0, 1}, {1, 2}, {1, 3}, {3, 4}, {4, 5}, {4, 6}, {6, 7}}},
      {"8-F", 8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 5}, {5, 6}, {2, 7}}},
      {"8-T1", 8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {1, 7}}},
      {"8-T2", 8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {2, 5}, {5, 6}, {6, 7}}},
  };
  return templates;
}

}  // namespace detail

inline std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& t : detail::builtin_templates()) names.emplace_back(t.name);
  return names;
}

inline Topology builtin(std::string_view name) {
  for (const auto& t : detail::builtin_templates())
    if (t.name == name) return Topology(t.n, t.edges, std::string(t.name));
  throw TopologyError("unknown topology template '" + std::string(name) + "'");
}

/// Accepts a builtin template name or "all-<n>".
inline Topology resolve_topology(std::string_view name) {
  if (name.starts_with("all-")) return all_to_all(std::stoi(std::string(name.substr(4))));
  return builtin(name);
}

/// Format:  topology <n>  /  edge <i> <j>  ... ('#' comments allowed)
inline Topology parse_topology(std::istream& in, std::string name = {}) {
  auto lines = detail::content_lines(in);
  const int n = detail::parse_header(lines, "topology");
  std::vector<std::pair<int, int>> edges;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [number, text] = lines[k];
    std::istringstream ss(text);
    std::string kw;
    ss >> kw;
    if (kw == "name") {
      ss >> name;
      continue;
    }
    if (kw != "edge") throw ParseError("expected 'edge <i> <j>', got '" + kw + "'", number);
    int i = detail::parse_int(ss, number, "edge endpoint");
    int j = detail::parse_int(ss, number, "edge endpoint");
    detail::expect_end(ss, number);
    edges.emplace_back(i, j);
  }
  return Topology(n, std::move(edges), std::move(name));
}

inline Topology parse_topology(const std::string& text, std::string name = {}) {
  std::istringstream in(text);
  return parse_topology(in, std::move(name));
}

inline Topology load_topology(const std::string& path) { return parse_topology(detail::read_file(path)); }

inline std::string serialize_topology(const Topology& t) {
  std::ostringstream out;
  out << "topology " << t.size() << '\n';
  if (!t.name().empty()) out << "name " << t.name() << '\n';
  for (const auto& e : t.edges()) out << "edge " << e.a << ' ' << e.b << '\n';
  return out.str();
}

/// n^2 uniformly random legal moves from the identity.
inline ParityMatrix random_instance(int n, const Topology& t, RngSeed seed) {
  if (t.size() != n) throw TopologyError("topology size does not match qubit count");
  return random_walk_instance(n, t.actions(), seed);
}

inline ParityMatrix random_instance(int n, RngSeed seed) { return random_instance(n, all_to_all(n), seed); }

/// Which move set the n^2-step walk draws from. AllToAll walks produce the
/// instance distribution used for benchmarks and training; the matrix is then
/// solved under the topology either way.
enum class InstanceWalk { AllToAll, Topology };

inline ParityMatrix sample_instance(const Topology& t, RngSeed seed, InstanceWalk walk = InstanceWalk::AllToAll) {
  return walk == InstanceWalk::Topology ? random_instance(t.size(), t, seed) : random_instance(t.size(), seed);
}

inline std::string_view to_string(InstanceWalk w) { return w == InstanceWalk::Topology ? "topology" : "all-to-all"; }

inline InstanceWalk parse_instance_walk(std::string_view s) {
  if (s == "all-to-all") return InstanceWalk::AllToAll;
  if (s == "topology") return InstanceWalk::Topology;
  throw std::invalid_argument("instance walk must be 'all-to-all' or 'topology'");
}

}  // namespace cnotmin
