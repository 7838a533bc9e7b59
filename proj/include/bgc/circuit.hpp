#pragma once

// Full a-ary tree circuits of truth-table gates and their bit-parallel
// evaluation.
//
// Nodes are numbered breadth-first from the root (node 0). Internal node i has
// children a*i+1 .. a*i+a; ids at or past internal_count denote leaves, leaf j
// being node internal_count + j. Child s of a gate drives input s, the most
// significant bit of the gate's pattern index.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "bgc/bitcore.hpp"
#include "bgc/errors.hpp"
#include "bgc/parallel.hpp"
#include "bgc/truth_table.hpp"

namespace bgc {

struct TreeShape {
  std::uint64_t internal_count = 0;
  std::uint64_t leaf_count = 0;

  friend bool operator==(const TreeShape&, const TreeShape&) = default;
};

[[nodiscard]] inline TreeShape tree_shape(unsigned arity, unsigned depth) {
  if (arity < 2) throw ValidationError("arity must be at least 2");
  if (depth < 1) throw ValidationError("depth must be at least 1");
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t leaves = 1;
  std::uint64_t internal = 0;
  for (unsigned level = 0; level < depth; ++level) {
    if (internal > kMax - leaves) throw CapacityError("tree node count overflows 64 bits");
    internal += leaves;
    if (leaves > kMax / arity) throw CapacityError("tree leaf count overflows 64 bits");
    leaves *= arity;
  }
  return {internal, leaves};
}

// Number of distinct k-gates, 2^(2^k).
[[nodiscard]] inline boost::multiprecision::cpp_int gate_count_universe(unsigned arity) {
  if (arity < 1 || arity > kMaxArity) throw ValidationError("arity must be in [1, 8]");
  boost::multiprecision::cpp_int one = 1;
  return one << (1u << arity);
}

struct CircuitTree {
  unsigned arity = 2;
  unsigned depth = 1;
  // Width of the input space the tree was built for (0 when unknown).
  std::uint32_t n_features = 0;
  std::vector<std::uint32_t> leaf_inputs;
  std::vector<TruthTable> gates;

  // Tree with constant-zero gates and every leaf on coordinate 0.
  static CircuitTree blank(unsigned arity, unsigned depth, std::uint32_t n_features) {
    if (arity > kMaxArity) throw ValidationError("arity must be at most 8");
    const TreeShape shape = tree_shape(arity, depth);
    if (shape.leaf_count > std::numeric_limits<std::uint32_t>::max()) {
      throw CapacityError("leaf count does not fit 32-bit indices");
    }
    CircuitTree t;
    t.arity = arity;
    t.depth = depth;
    t.n_features = n_features;
    t.leaf_inputs.assign(shape.leaf_count, 0);
    t.gates.assign(shape.internal_count, TruthTable(arity));
    return t;
  }

  [[nodiscard]] TreeShape shape() const { return tree_shape(arity, depth); }
  [[nodiscard]] std::size_t internal_count() const noexcept { return gates.size(); }
  [[nodiscard]] std::size_t leaf_count() const noexcept { return leaf_inputs.size(); }

  [[nodiscard]] std::size_t child(std::size_t node, unsigned slot) const noexcept {
    return arity * node + 1 + slot;
  }
  [[nodiscard]] std::size_t parent(std::size_t node) const noexcept { return (node - 1) / arity; }
  [[nodiscard]] bool is_leaf_node(std::size_t id) const noexcept { return id >= gates.size(); }
  [[nodiscard]] std::size_t leaf_node(std::size_t leaf) const noexcept { return gates.size() + leaf; }

  // First node id of `level` (root is level 0).
  [[nodiscard]] std::size_t level_begin(unsigned level) const noexcept {
    std::size_t begin = 0;
    std::size_t width = 1;
    for (unsigned l = 0; l < level; ++l) {
      begin += width;
      width *= arity;
    }
    return begin;
  }

  void validate() const {
    if (arity < 2 || arity > kMaxArity) throw ValidationError("arity must be in [2, 8]");
    const TreeShape s = shape();
    if (leaf_inputs.size() != s.leaf_count) throw ValidationError("leaf count does not match arity^depth");
    if (gates.size() != s.internal_count) throw ValidationError("gate count does not match tree shape");
    for (const auto& g : gates) {
      if (g.arity() != arity) throw ValidationError("gate arity differs from tree arity");
    }
    if (n_features != 0) {
      for (std::size_t j = 0; j < leaf_inputs.size(); ++j) {
        if (leaf_inputs[j] >= n_features) {
          throw ValidationError("leaf " + std::to_string(j) + " reads coordinate " + std::to_string(leaf_inputs[j]) +
                                " outside the declared input width " + std::to_string(n_features));
        }
      }
    }
  }

  friend bool operator==(const CircuitTree&, const CircuitTree&) = default;
};

namespace detail {

// Logic-op cost of producing one orientation of a gate from the split
// high/low slices, excluding the slice construction itself.
inline std::size_t split_selection_cost(const TruthTable& t, unsigned low_bits) {
  const std::size_t row_len = std::size_t{1} << low_bits;
  const std::size_t rows = t.size() / row_len;
  std::size_t cost = 0;
  std::size_t terms = 0;
  for (std::size_t q = 0; q < rows; ++q) {
    std::size_t ones = 0;
    for (std::size_t r = 0; r < row_len; ++r) ones += t[q * row_len + r] ? 1 : 0;
    if (ones == 0) continue;
    ++terms;
    if (ones == row_len) continue;
    const std::size_t zeros = row_len - ones;
    cost += std::min(ones - 1, zeros) + 1;
  }
  return cost + (terms > 0 ? terms - 1 : 0);
}

// OR over the selected patterns of (high slice AND low slice), evaluated row
// by row: for each high pattern q the row of the table selects a union g_q of
// low slices, and the result is OR_q (H_q AND g_q).
template <PackWord Word>
BitVector<Word> split_selection(const TruthTable& t, const SliceSet<Word>& high, const SliceSet<Word>& low,
                                std::size_t n, WordOpCounter* counter) {
  const std::size_t row_len = low.view.size();
  BitVector<Word> acc(n);
  bool have_acc = false;
  BitVector<Word> row_union;
  BitVector<Word> term;
  for (std::size_t q = 0; q < high.view.size(); ++q) {
    std::size_t ones = 0;
    for (std::size_t r = 0; r < row_len; ++r) ones += t[q * row_len + r] ? 1 : 0;
    if (ones == 0) continue;

    const BitVector<Word>* contribution = high.view[q];
    if (ones != row_len) {
      const std::size_t zeros = row_len - ones;
      // Union of the smaller side; a union of zeros is complemented.
      const bool take_ones = ones - 1 <= zeros;
      const BitVector<Word>* single = nullptr;
      std::size_t picked = 0;
      for (std::size_t r = 0; r < row_len; ++r) {
        if (t[q * row_len + r] != take_ones) continue;
        if (picked == 0) {
          single = low.view[r];
        } else {
          if (picked == 1) row_union = *single;
          or_assign(row_union, *low.view[r], counter);
        }
        ++picked;
      }
      const BitVector<Word>* selected = picked == 1 ? single : &row_union;
      if (!take_ones) {
        BitVector<Word> flipped;
        not_into(flipped, *selected, counter);
        row_union = std::move(flipped);
        selected = &row_union;
      }
      and_into(term, *high.view[q], *selected, counter);
      contribution = &term;
    }
    if (!have_acc) {
      acc = *contribution;
      have_acc = true;
    } else {
      or_assign(acc, *contribution, counter);
    }
  }
  return acc;
}

}  // namespace detail

// Output feature of a gate on the given children, computed without
// materializing all 2^k slices. Positive or negative is built directly,
// whichever is cheaper, and the other is its complement. The logic-op count
// stays within (2^k + 2^(k-1) + 1) vector operations.
template <PackWord Word>
[[nodiscard]] FeaturePair<Word> apply_gate(const TruthTable& table, std::span<const FeaturePair<Word>* const> children,
                                           WordOpCounter* counter = nullptr) {
  detail::check_gate_inputs(children);
  if (table.arity() != children.size()) {
    throw ShapeError("truth table arity " + std::to_string(table.arity()) + " does not match " +
                     std::to_string(children.size()) + " children");
  }
  const std::size_t n = children[0]->size();
  const std::size_t ones = table.ones();
  if (ones == 0) return FeaturePair<Word>(BitVector<Word>(n, false), BitVector<Word>(n, true));
  if (ones == table.size()) return FeaturePair<Word>(BitVector<Word>(n, true), BitVector<Word>(n, false));
  if (table.arity() == 1) {
    // Identity or negation of the single child.
    if (table[1]) return *children[0];
    return FeaturePair<Word>(children[0]->negative, children[0]->positive);
  }

  const unsigned high_bits = table.arity() / 2;
  const unsigned low_bits = table.arity() - high_bits;
  const auto high = detail::build_slices<Word>(children.first(high_bits), counter);
  const auto low = detail::build_slices<Word>(children.subspan(high_bits), counter);

  const TruthTable flipped = table.complement();
  const bool direct_positive =
      detail::split_selection_cost(table, low_bits) <= detail::split_selection_cost(flipped, low_bits);
  FeaturePair<Word> out;
  if (direct_positive) {
    out.positive = detail::split_selection(table, high, low, n, counter);
    not_into(out.negative, out.positive, counter);
  } else {
    out.negative = detail::split_selection(flipped, high, low, n, counter);
    not_into(out.positive, out.negative, counter);
  }
  return out;
}

template <PackWord Word>
[[nodiscard]] FeaturePair<Word> apply_gate(const TruthTable& table, std::span<const FeaturePair<Word>> children,
                                           WordOpCounter* counter = nullptr) {
  std::vector<const FeaturePair<Word>*> ptrs;
  for (const auto& c : children) ptrs.push_back(&c);
  return apply_gate<Word>(table, std::span<const FeaturePair<Word>* const>(ptrs), counter);
}

// Gate output from already materialized slices: OR of the smaller selected
// side, the other side by complement.
template <PackWord Word>
[[nodiscard]] FeaturePair<Word> apply_gate_from_slices(const TruthTable& table, const PatternSlices<Word>& slices,
                                                       WordOpCounter* counter = nullptr) {
  if (table.arity() != slices.arity) throw ShapeError("truth table arity does not match slices");
  const std::size_t n = slices.slices.front().size();
  const std::size_t ones = table.ones();
  const bool collect_ones = ones <= table.size() - ones;
  BitVector<Word> acc(n);
  bool first = true;
  for (std::size_t p = 0; p < table.size(); ++p) {
    if (table[p] != collect_ones) continue;
    if (first) {
      acc = slices.slices[p];
      first = false;
    } else {
      or_assign(acc, slices.slices[p], counter);
    }
  }
  BitVector<Word> other;
  not_into(other, acc, counter);
  if (collect_ones) return FeaturePair<Word>(std::move(acc), std::move(other));
  return FeaturePair<Word>(std::move(other), std::move(acc));
}

// Per-node outputs of a tree on one dataset, indexed by internal node id.
template <PackWord Word = std::uint64_t>
struct EvalCache {
  std::vector<FeaturePair<Word>> nodes;

  [[nodiscard]] bool empty() const noexcept { return nodes.empty(); }
  friend bool operator==(const EvalCache&, const EvalCache&) = default;
};

template <PackWord Word>
void check_leaves(const CircuitTree& tree, const BitDataset<Word>& data) {
  for (std::size_t j = 0; j < tree.leaf_inputs.size(); ++j) {
    if (tree.leaf_inputs[j] >= data.n_features) {
      throw ValidationError("leaf " + std::to_string(j) + " reads coordinate " + std::to_string(tree.leaf_inputs[j]) +
                            " but the dataset has " + std::to_string(data.n_features) + " features");
    }
  }
}

// Input feeding `child_id`: a dataset feature for leaves, a cached output otherwise.
template <PackWord Word>
[[nodiscard]] const FeaturePair<Word>* node_input(const CircuitTree& tree, std::span<const FeaturePair<Word>> nodes,
                                                  const BitDataset<Word>& data, std::size_t child_id) {
  if (tree.is_leaf_node(child_id)) return &data.features[tree.leaf_inputs[child_id - tree.internal_count()]];
  return &nodes[child_id];
}

template <PackWord Word>
struct Evaluation {
  BitVector<Word> predictions;
  EvalCache<Word> cache;
};

// Bottom-up evaluation keeping every node's output.
template <PackWord Word>
[[nodiscard]] Evaluation<Word> evaluate(const CircuitTree& tree, const BitDataset<Word>& data, unsigned threads = 1) {
  tree.validate();
  check_leaves(tree, data);
  Evaluation<Word> out;
  out.cache.nodes.resize(tree.internal_count());
  std::span<const FeaturePair<Word>> nodes(out.cache.nodes);
  for (unsigned level = tree.depth; level-- > 0;) {
    const std::size_t begin = tree.level_begin(level);
    const std::size_t end = tree.level_begin(level + 1);
    parallel_for(end - begin, threads, [&](std::size_t k) {
      const std::size_t node = begin + k;
      std::vector<const FeaturePair<Word>*> inputs(tree.arity);
      for (unsigned s = 0; s < tree.arity; ++s) inputs[s] = node_input(tree, nodes, data, tree.child(node, s));
      out.cache.nodes[node] = apply_gate<Word>(tree.gates[node], inputs);
    });
  }
  out.predictions = out.cache.nodes[0].positive;
  return out;
}

namespace detail {

// Depth-first evaluation of one subtree; holds at most depth * arity outputs.
template <PackWord Word>
FeaturePair<Word> eval_subtree(const CircuitTree& tree, const BitDataset<Word>& data, std::size_t node) {
  std::vector<FeaturePair<Word>> owned(tree.arity);
  std::vector<const FeaturePair<Word>*> inputs(tree.arity);
  for (unsigned s = 0; s < tree.arity; ++s) {
    const std::size_t c = tree.child(node, s);
    if (tree.is_leaf_node(c)) {
      inputs[s] = &data.features[tree.leaf_inputs[c - tree.internal_count()]];
    } else {
      owned[s] = eval_subtree(tree, data, c);
      inputs[s] = &owned[s];
    }
  }
  return apply_gate<Word>(tree.gates[node], inputs);
}

// Level whose subtrees are handed to worker threads.
inline unsigned split_level(const CircuitTree& tree, unsigned threads) {
  unsigned level = 0;
  std::size_t width = 1;
  while (level + 1 < tree.depth && width < 4 * static_cast<std::size_t>(threads)) {
    width *= tree.arity;
    ++level;
  }
  return level;
}

}  // namespace detail

// Root output only, evaluated depth-first so memory stays at O(depth * arity)
// feature vectors per thread.
template <PackWord Word>
[[nodiscard]] BitVector<Word> predict(const CircuitTree& tree, const BitDataset<Word>& data, unsigned threads = 1) {
  tree.validate();
  check_leaves(tree, data);
  if (threads <= 1) return detail::eval_subtree(tree, data, 0).positive;

  const unsigned split = detail::split_level(tree, threads);
  const std::size_t begin = tree.level_begin(split);
  const std::size_t end = tree.level_begin(split + 1);
  // Outputs of levels [0, split] indexed by node id.
  std::vector<FeaturePair<Word>> upper(end);
  parallel_for(end - begin, threads,
               [&](std::size_t k) { upper[begin + k] = detail::eval_subtree(tree, data, begin + k); });
  for (unsigned level = split; level-- > 0;) {
    for (std::size_t node = tree.level_begin(level); node < tree.level_begin(level + 1); ++node) {
      std::vector<const FeaturePair<Word>*> inputs(tree.arity);
      for (unsigned s = 0; s < tree.arity; ++s) inputs[s] = &upper[tree.child(node, s)];
      upper[node] = apply_gate<Word>(tree.gates[node], inputs);
    }
  }
  return upper[0].positive;
}

}  // namespace bgc
