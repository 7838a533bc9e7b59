// Hand-built circuit: majority of three inputs feeding an XOR-like root.
// Serializes it, reads it back and prints the netlist.

#include <cstdio>
#include <iostream>

#include "bgc/bitcore.hpp"
#include "bgc/circuit.hpp"
#include "bgc/model_io.hpp"

int main() {
  auto tree = bgc::CircuitTree::blank(2, 2, 4);
  tree.gates[0] = bgc::TruthTable::from_bits({0, 1, 1, 0});  // xor
  tree.gates[1] = bgc::TruthTable::from_bits({0, 0, 0, 1});  // and
  tree.gates[2] = bgc::TruthTable::from_bits({0, 1, 1, 1});  // or
  tree.leaf_inputs = {0, 1, 2, 3};

  const auto bytes = bgc::serialize(tree);
  const auto back = bgc::deserialize(bytes);
  std::printf("model file: %zu bytes, round trip %s\n", bytes.size(),
              back.leaf_inputs == tree.leaf_inputs ? "ok" : "mismatch");
  std::cout << bgc::export_netlist(back);

  std::vector<std::vector<std::uint8_t>> rows;
  std::vector<std::uint8_t> labels;
  for (int x = 0; x < 16; ++x) {
    rows.push_back({std::uint8_t(x >> 3 & 1), std::uint8_t(x >> 2 & 1), std::uint8_t(x >> 1 & 1), std::uint8_t(x & 1)});
    labels.push_back(0);
  }
  const auto data = bgc::make_dataset<std::uint64_t>(rows, labels);
  const auto out = bgc::predict(back, data);
  for (int x = 0; x < 16; ++x) std::printf("%d", out.test(x) ? 1 : 0);
  std::printf("\n");
}
