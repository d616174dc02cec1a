#include <gtest/gtest.h>

#include "cnotmin/io.hpp"

using namespace cnotmin;

TEST(CircuitText, RoundTrip) {
  Circuit c{4, {{0, 1}, {3, 2}, {1, 3}}};
  Circuit back = parse_circuit(serialize_circuit(c));
  EXPECT_EQ(back.n, 4);
  EXPECT_EQ(back.gates, c.gates);
}

TEST(CircuitText, CommentsAndBlankLines) {
  Circuit c = parse_circuit("# header\n\nqubits 3   # three\ncnot 0 1\n  cnot 2 0\n");
  EXPECT_EQ(c.n, 3);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.gates[1], (CnotGate{2, 0}));
}

TEST(CircuitText, ErrorsCarryLineNumbers) {
  try {
    parse_circuit("qubits 3\ncnot 0 1\ncnot 0 5\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(parse_circuit("qubits 3\ncnot 1 1\n"), ParseError);
  EXPECT_THROW(parse_circuit("qubits 3\ncx 0 1\n"), ParseError);
  EXPECT_THROW(parse_circuit("qubits 3\ncnot 0 1 2\n"), ParseError);
  EXPECT_THROW(parse_circuit("qubits 1\n"), ParseError);
  EXPECT_THROW(parse_circuit(""), ParseError);
}

TEST(MatrixText, RoundTrip) {
  auto m = ParityMatrix::from_bits({{1, 1, 0}, {0, 1, 0}, {0, 1, 1}});
  EXPECT_EQ(serialize_matrix(m), "matrix 3\n110\n010\n011\n");
  EXPECT_EQ(parse_matrix(serialize_matrix(m)), m);
}

TEST(MatrixText, Errors) {
  EXPECT_THROW(parse_matrix("matrix 2\n10\n"), ParseError);
  EXPECT_THROW(parse_matrix("matrix 2\n10\n012\n"), ParseError);
  EXPECT_THROW(parse_matrix("matrix 2\n10\n02\n"), ParseError);
}

TEST(Qasm, OneCxPerGate) {
  std::string q = to_qasm(Circuit{2, {{0, 1}, {1, 0}}});
  EXPECT_NE(q.find("qreg q[2];"), std::string::npos);
  EXPECT_NE(q.find("cx q[0],q[1];\ncx q[1],q[0];\n"), std::string::npos);
}
