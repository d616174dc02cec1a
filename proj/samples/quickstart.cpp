#include <iostream>

#include "cnotmin/cnotmin.hpp"

using namespace cnotmin;

int main() {
  const Circuit input = parse_circuit("qubits 4\ncnot 0 1\ncnot 1 2\ncnot 2 3\ncnot 0 1\ncnot 1 2\n");
  const ParityMatrix m = circuit_to_parity(input);
  std::cout << serialize_matrix(m);

  const SynthResult pmh = pmh_synth(m);
  const SynthResult best = optimal_synth(m);
  std::cout << "input " << input.size() << " gates, pmh " << pmh.gate_count() << ", optimal " << best.gate_count() << '\n';

  ExactConfig linear;
  linear.topology = builtin("4-L");
  std::cout << "optimal on 4-L: " << optimal_synth(m, linear).gate_count() << '\n';
  std::cout << serialize_circuit(best.circuit);
}
