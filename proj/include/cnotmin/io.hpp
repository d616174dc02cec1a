#pragma once

// Text formats for circuits and parity matrices.
//
//   circuit:  qubits <n>           matrix:  matrix <n>
//             cnot <c> <t>                  0110...   (n rows of n chars)
//             ...
//
// Indices are 0-based. '#' starts a comment in both formats.

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cnotmin/core.hpp"

namespace cnotmin {

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

namespace detail {

inline std::string strip_comment(std::string line) {
  if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
  std::size_t start = line.find_first_not_of(" \t");
  return start == std::string::npos ? std::string{} : line.substr(start);
}

/// Non-empty, comment-stripped lines with their 1-based line numbers.
inline std::vector<std::pair<int, std::string>> content_lines(std::istream& in) {
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto s = strip_comment(line);
    if (!s.empty()) out.emplace_back(number, std::move(s));
  }
  return out;
}

inline int parse_int(std::istringstream& ss, int line, const char* what) {
  long long v = 0;
  if (!(ss >> v)) throw ParseError(std::string("expected ") + what, line);
  if (v < 0 || v > 1'000'000) throw ParseError(std::string(what) + " out of range", line);
  return static_cast<int>(v);
}

inline void expect_end(std::istringstream& ss, int line) {
  std::string extra;
  if (ss >> extra) throw ParseError("unexpected trailing token '" + extra + "'", line);
}

inline int parse_header(const std::vector<std::pair<int, std::string>>& lines, std::string_view keyword) {
  if (lines.empty()) throw ParseError("missing '" + std::string(keyword) + " <n>' header", 1);
  std::istringstream ss(lines.front().second);
  std::string kw;
  ss >> kw;
  if (kw != keyword) throw ParseError("expected '" + std::string(keyword) + "' header, got '" + kw + "'", lines.front().first);
  int n = parse_int(ss, lines.front().first, "qubit count");
  expect_end(ss, lines.front().first);
  if (n < 2 || n > kMaxQubits) throw ParseError("qubit count must be in [2, 32]", lines.front().first);
  return n;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace detail

inline Circuit parse_circuit(std::istream& in) {
  auto lines = detail::content_lines(in);
  Circuit c;
  c.n = detail::parse_header(lines, "qubits");
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& [number, text] = lines[k];
    std::istringstream ss(text);
    std::string kw;
    ss >> kw;
    if (kw != "cnot") throw ParseError("expected 'cnot <control> <target>', got '" + kw + "'", number);
    CnotGate g;
    g.control = detail::parse_int(ss, number, "control index");
    g.target = detail::parse_int(ss, number, "target index");
    detail::expect_end(ss, number);
    if (g.control >= c.n || g.target >= c.n) throw ParseError("qubit index out of range", number);
    if (g.control == g.target) throw ParseError("control equals target", number);
    c.gates.push_back(g);
  }
  return c;
}

inline Circuit parse_circuit(const std::string& text) {
  std::istringstream in(text);
  return parse_circuit(in);
}

inline std::string serialize_circuit(const Circuit& c) {
  std::ostringstream out;
  out << "qubits " << c.n << '\n';
  for (const auto& g : c.gates) out << "cnot " << g.control << ' ' << g.target << '\n';
  return out.str();
}

inline ParityMatrix parse_matrix(std::istream& in) {
  auto lines = detail::content_lines(in);
  const int n = detail::parse_header(lines, "matrix");
  if (static_cast<int>(lines.size()) != n + 1)
    throw ParseError("expected " + std::to_string(n) + " matrix rows, got " + std::to_string(lines.size() - 1),
                     lines.back().first);
  ParityMatrix m(n);
  for (int i = 0; i < n; ++i) {
    const auto& [number, text] = lines[static_cast<std::size_t>(i) + 1];
    if (static_cast<int>(text.size()) != n)
      throw ParseError("row must have exactly " + std::to_string(n) + " entries", number);
    for (int j = 0; j < n; ++j) {
      if (text[j] != '0' && text[j] != '1') throw ParseError("non-binary matrix entry", number);
      m.set(i, j, text[j] == '1');
    }
  }
  return m;
}

inline ParityMatrix parse_matrix(const std::string& text) {
  std::istringstream in(text);
  return parse_matrix(in);
}

inline std::string serialize_matrix(const ParityMatrix& m) {
  std::ostringstream out;
  out << "matrix " << m.size() << '\n';
  for (int i = 0; i < m.size(); ++i) {
    for (int j = 0; j < m.size(); ++j) out << (m.get(i, j) ? '1' : '0');
    out << '\n';
  }
  return out.str();
}

/// OpenQASM 2.0 program with one cx per gate.
inline std::string to_qasm(const Circuit& c) {
  std::ostringstream out;
  out << "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[" << c.n << "];\n";
  for (const auto& g : c.gates) out << "cx q[" << g.control << "],q[" << g.target << "];\n";
  return out.str();
}

inline Circuit load_circuit(const std::string& path) { return parse_circuit(detail::read_file(path)); }
inline ParityMatrix load_matrix(const std::string& path) { return parse_matrix(detail::read_file(path)); }
inline void save_circuit(const std::string& path, const Circuit& c) { detail::write_file(path, serialize_circuit(c)); }
inline void save_matrix(const std::string& path, const ParityMatrix& m) { detail::write_file(path, serialize_matrix(m)); }

}  // namespace cnotmin
