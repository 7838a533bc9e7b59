#pragma once

// Binary model files and textual LUT netlists for CircuitTree.
//
// Model file, little-endian:
//   "BGC1"                     magic
//   u8  arity, u8 depth
//   u32 n_features             input width the tree was trained on
//   u32 leaf_count             must equal arity^depth
//   u32 leaf_inputs[leaf_count]
//   gate tables, breadth-first, ceil(2^arity / 8) bytes each, pattern p at bit p % 8 of byte p / 8
//   u32 crc32                  zlib CRC-32 of every preceding byte
//
// Netlist, UTF-8 text, one record per line, '#' starts a comment:
//   # bgc-netlist 1
//   # arity <a> depth <d> inputs <n_features> luts <count>
//   lut <id> <hex table> <ref_0> ... <ref_{a-1}>
//   ...
//   output n<root id>
// LUT records are ordered children-first (descending breadth-first id, root
// last). A reference is n<id> for another LUT or x<coordinate> for an input
// bit; ref_0 drives the most significant bit of the pattern. The hex table is
// the number whose bit p is the output on pattern p.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "bgc/circuit.hpp"
#include "bgc/errors.hpp"
#include "bgc/truth_table.hpp"

namespace bgc {

inline constexpr std::array<char, 4> kModelMagic = {'B', 'G', 'C', '1'};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t len = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  [[nodiscard]] std::size_t offset() const noexcept { return pos_; }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("truncated model file while reading ") + what, pos_);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint8_t u8(const char* what) { return take(1, what)[0]; }

  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

[[nodiscard]] inline std::vector<std::uint8_t> serialize(const CircuitTree& tree) {
  tree.validate();
  if (tree.depth > 255) throw CapacityError("depth does not fit the model header");
  std::vector<std::uint8_t> out;
  out.reserve(18 + tree.leaf_count() * 4 + tree.internal_count() * TruthTable::byte_count(tree.arity));
  out.insert(out.end(), kModelMagic.begin(), kModelMagic.end());
  out.push_back(static_cast<std::uint8_t>(tree.arity));
  out.push_back(static_cast<std::uint8_t>(tree.depth));
  detail::put_u32(out, tree.n_features);
  detail::put_u32(out, static_cast<std::uint32_t>(tree.leaf_count()));
  for (std::uint32_t leaf : tree.leaf_inputs) detail::put_u32(out, leaf);
  for (const auto& gate : tree.gates) {
    const auto bytes = gate.to_bytes();
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  detail::put_u32(out, detail::crc32_of(out));
  return out;
}

[[nodiscard]] inline CircuitTree deserialize(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  auto magic = in.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kModelMagic.begin())) throw FormatError("bad model magic", 0);

  CircuitTree tree;
  const std::size_t arity_at = in.offset();
  tree.arity = in.u8("arity");
  if (tree.arity < 2 || tree.arity > kMaxArity) throw FormatError("arity out of range [2, 8]", arity_at);
  const std::size_t depth_at = in.offset();
  tree.depth = in.u8("depth");
  if (tree.depth < 1) throw FormatError("depth must be at least 1", depth_at);
  tree.n_features = in.u32("n_features");
  const std::size_t leaves_at = in.offset();
  const std::uint32_t leaf_count = in.u32("leaf count");

  TreeShape shape;
  try {
    shape = tree_shape(tree.arity, tree.depth);
  } catch (const CapacityError&) {
    throw FormatError("tree shape overflows", depth_at);
  }
  if (shape.leaf_count != leaf_count) throw FormatError("leaf count does not equal arity^depth", leaves_at);

  // Everything past the header has a fixed size; check it before allocating.
  const std::size_t table_bytes = TruthTable::byte_count(tree.arity);
  const std::size_t body = std::size_t{leaf_count} * 4 + shape.internal_count * table_bytes + 4;
  if (bytes.size() - in.offset() < body) throw FormatError("truncated model file", bytes.size());
  if (bytes.size() - in.offset() > body) throw FormatError("trailing bytes after model", in.offset() + body);
  const std::size_t crc_at = bytes.size() - 4;
  {
    detail::ByteReader tail(bytes.subspan(crc_at));
    if (tail.u32("checksum") != detail::crc32_of(bytes.first(crc_at))) throw FormatError("checksum mismatch", crc_at);
  }

  tree.leaf_inputs.resize(leaf_count);
  for (std::uint32_t j = 0; j < leaf_count; ++j) {
    const std::size_t at = in.offset();
    tree.leaf_inputs[j] = in.u32("leaf input");
    if (tree.n_features != 0 && tree.leaf_inputs[j] >= tree.n_features) {
      throw FormatError("leaf " + std::to_string(j) + " reads a coordinate outside the input width", at);
    }
  }
  tree.gates.reserve(shape.internal_count);
  for (std::uint64_t g = 0; g < shape.internal_count; ++g) {
    const std::size_t at = in.offset();
    auto raw = in.take(table_bytes, "truth table");
    try {
      tree.gates.push_back(TruthTable::from_bytes(tree.arity, raw));
    } catch (const Error& e) {
      throw FormatError(e.what(), at);
    }
  }
  return tree;
}

[[nodiscard]] inline std::string export_netlist(const CircuitTree& tree) {
  tree.validate();
  std::ostringstream out;
  out << "# bgc-netlist 1\n";
  out << "# arity " << tree.arity << " depth " << tree.depth << " inputs " << tree.n_features << " luts "
      << tree.internal_count() << '\n';
  for (std::size_t node = tree.internal_count(); node-- > 0;) {
    out << "lut " << node << " 0x" << tree.gates[node].to_hex();
    for (unsigned s = 0; s < tree.arity; ++s) {
      const std::size_t c = tree.child(node, s);
      if (tree.is_leaf_node(c)) {
        out << " x" << tree.leaf_inputs[c - tree.internal_count()];
      } else {
        out << " n" << c;
      }
    }
    out << '\n';
  }
  out << "output n0\n";
  return out.str();
}

}  // namespace bgc
