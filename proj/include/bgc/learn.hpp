#pragma once

// Greedy layer-wise fitting of tree circuits and leaf-rewiring hill climbing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bgc/bitcore.hpp"
#include "bgc/circuit.hpp"
#include "bgc/errors.hpp"
#include "bgc/parallel.hpp"
#include "bgc/random.hpp"
#include "bgc/truth_table.hpp"

namespace bgc {

// Per-pattern class tallies of the examples reaching one gate.
struct PatternCounts {
  unsigned arity = 0;
  std::vector<std::uint64_t> c0;
  std::vector<std::uint64_t> c1;

  PatternCounts() = default;
  explicit PatternCounts(unsigned k) : arity(k), c0(std::size_t{1} << k, 0), c1(std::size_t{1} << k, 0) {}

  [[nodiscard]] std::size_t patterns() const noexcept { return c0.size(); }
  [[nodiscard]] std::uint64_t total0() const { return std::accumulate(c0.begin(), c0.end(), std::uint64_t{0}); }
  [[nodiscard]] std::uint64_t total1() const { return std::accumulate(c1.begin(), c1.end(), std::uint64_t{0}); }
  [[nodiscard]] std::uint64_t total() const { return total0() + total1(); }

  friend bool operator==(const PatternCounts&, const PatternCounts&) = default;
};

enum class Criterion { Accuracy, InfoGain };

// Output for patterns whose class counts tie (including unseen patterns).
enum class TiePolicy { GlobalMajority, Zero, One };

template <PackWord Word>
[[nodiscard]] PatternCounts counts_from_slices(const PatternSlices<Word>& slices, const BitVector<Word>& labels) {
  PatternCounts counts(slices.arity);
  for (std::size_t p = 0; p < slices.slices.size(); ++p) {
    const std::uint64_t ones = popcount_and(slices.slices[p], labels);
    counts.c1[p] = ones;
    counts.c0[p] = slices.slices[p].popcount() - ones;
  }
  return counts;
}

template <PackWord Word>
[[nodiscard]] PatternCounts gather_pattern_counts(std::span<const FeaturePair<Word>* const> children,
                                                  const BitVector<Word>& labels) {
  return counts_from_slices(tensor_product<Word>(children), labels);
}

template <PackWord Word>
[[nodiscard]] PatternCounts gather_pattern_counts(std::span<const FeaturePair<Word>> children,
                                                  const BitVector<Word>& labels) {
  return counts_from_slices(tensor_product<Word>(children), labels);
}

namespace detail {

inline bool tie_output(const PatternCounts& counts, TiePolicy tie) {
  switch (tie) {
    case TiePolicy::Zero:
      return false;
    case TiePolicy::One:
      return true;
    case TiePolicy::GlobalMajority:
      break;
  }
  return counts.total1() > counts.total0();
}

// Entropy in bits of a two-way split of `total`.
inline double binary_entropy(double a, double b) {
  const double total = a + b;
  if (total <= 0) return 0.0;
  double h = 0.0;
  for (double x : {a, b}) {
    if (x > 0) {
      const double p = x / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

// Mutual information between gate output and label from the 2x2 contingency
// n[output][label].
inline double contingency_gain(double n00, double n01, double n10, double n11) {
  const double total = n00 + n01 + n10 + n11;
  const double h_label = binary_entropy(n00 + n10, n01 + n11);
  const double h_cond = ((n00 + n01) * binary_entropy(n00, n01) + (n10 + n11) * binary_entropy(n10, n11)) / total;
  return std::clamp(h_label - h_cond, 0.0, 1.0);
}

}  // namespace detail

// Per-pattern majority vote: bit p is 1 iff class 1 outnumbers class 0 there.
[[nodiscard]] inline TruthTable fit_gate_accuracy(const PatternCounts& counts,
                                                  TiePolicy tie = TiePolicy::GlobalMajority) {
  TruthTable t(counts.arity);
  const bool tie_bit = detail::tie_output(counts, tie);
  for (std::size_t p = 0; p < counts.patterns(); ++p) {
    if (counts.c1[p] != counts.c0[p]) {
      t.set(p, counts.c1[p] > counts.c0[p]);
    } else {
      t.set(p, tie_bit);
    }
  }
  return t;
}

// Training examples a table classifies correctly, judged from the counts alone.
[[nodiscard]] inline std::uint64_t table_hits(const PatternCounts& counts, const TruthTable& table) {
  std::uint64_t hits = 0;
  for (std::size_t p = 0; p < counts.patterns(); ++p) hits += table[p] ? counts.c1[p] : counts.c0[p];
  return hits;
}

// H(label) - H(label | gate output), in bits.
[[nodiscard]] inline double info_gain_of_split(const PatternCounts& counts, const TruthTable& table) {
  if (table.arity() != counts.arity) throw ShapeError("truth table arity does not match counts");
  double n[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t p = 0; p < counts.patterns(); ++p) {
    const int out = table[p] ? 1 : 0;
    n[out][0] += static_cast<double>(counts.c0[p]);
    n[out][1] += static_cast<double>(counts.c1[p]);
  }
  if (n[0][0] + n[0][1] + n[1][0] + n[1][1] <= 0) throw DomainError("information gain of empty counts");
  return detail::contingency_gain(n[0][0], n[0][1], n[1][0], n[1][1]);
}

// Gain ties closer than this are broken by accuracy, then by lower threshold.
inline constexpr double kGainTolerance = 1e-12;

// Sorts patterns by class-1 proportion (unseen patterns count as 1/2) and
// returns the threshold split of that order with the largest information gain.
[[nodiscard]] inline TruthTable fit_gate_infogain(const PatternCounts& counts) {
  const std::size_t patterns = counts.patterns();
  if (counts.total() == 0) throw DomainError("cannot fit a gate on empty counts");

  std::vector<std::size_t> order(patterns);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto ratio = [&](std::size_t p) -> std::pair<std::uint64_t, std::uint64_t> {
    const std::uint64_t t = counts.c0[p] + counts.c1[p];
    if (t == 0) return {1, 2};
    return {counts.c1[p], t};
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto [na, da] = ratio(a);
    const auto [nb, db] = ratio(b);
    return static_cast<unsigned __int128>(na) * db < static_cast<unsigned __int128>(nb) * da;
  });

  // Patterns order[j..] output 1. Start at j = 0 (constant one) and move the
  // threshold up one pattern at a time.
  double n10 = static_cast<double>(counts.total0());
  double n11 = static_cast<double>(counts.total1());
  double n00 = 0;
  double n01 = 0;
  std::size_t best_threshold = 0;
  double best_gain = detail::contingency_gain(n00, n01, n10, n11);
  double best_hits = n11;
  for (std::size_t j = 1; j <= patterns; ++j) {
    const std::size_t p = order[j - 1];
    n00 += static_cast<double>(counts.c0[p]);
    n01 += static_cast<double>(counts.c1[p]);
    n10 -= static_cast<double>(counts.c0[p]);
    n11 -= static_cast<double>(counts.c1[p]);
    const double gain = detail::contingency_gain(n00, n01, n10, n11);
    const double hits = n00 + n11;
    if (gain > best_gain + kGainTolerance || (gain >= best_gain - kGainTolerance && hits > best_hits)) {
      best_gain = gain;
      best_hits = hits;
      best_threshold = j;
    }
  }
  TruthTable t(counts.arity);
  for (std::size_t j = best_threshold; j < patterns; ++j) t.set(order[j], true);
  return t;
}

[[nodiscard]] inline TruthTable fit_gate(const PatternCounts& counts, Criterion criterion, TiePolicy tie) {
  return criterion == Criterion::Accuracy ? fit_gate_accuracy(counts, tie) : fit_gate_infogain(counts);
}

template <PackWord Word>
[[nodiscard]] double error_rate(const BitVector<Word>& predictions, const BitVector<Word>& labels) {
  if (predictions.size() != labels.size()) throw ShapeError("prediction and label lengths differ");
  if (labels.size() == 0) throw DomainError("error rate of an empty set");
  return static_cast<double>(popcount_xor(predictions, labels)) / static_cast<double>(labels.size());
}

struct TrainConfig {
  unsigned arity = 4;
  unsigned depth = 8;
  // Levels above a rewired leaf whose tables are re-fitted (1 <= t <= depth).
  unsigned propagation = 4;
  std::uint64_t trials = 0;
  Criterion inner_criterion = Criterion::InfoGain;
  Criterion root_criterion = Criterion::Accuracy;
  TiePolicy tie = TiePolicy::GlobalMajority;
  std::uint64_t seed = 0;
  // Keep rewirings that leave the training error unchanged.
  bool accept_equal = false;
  unsigned threads = 1;
  // Keep every node's output after greedy fitting (required by hill_climb).
  bool retain_cache = true;

  [[nodiscard]] Criterion criterion_for(std::size_t node) const noexcept {
    return node == 0 ? root_criterion : inner_criterion;
  }

  void validate() const {
    if (arity < 2 || arity > kMaxArity) throw ValidationError("arity must be in [2, 8]");
    if (depth < 1) throw ValidationError("depth must be at least 1");
    if (propagation < 1 || propagation > depth) throw ValidationError("propagation depth t must be in [1, depth]");
    const TreeShape shape = tree_shape(arity, depth);
    if (shape.leaf_count > std::numeric_limits<std::uint32_t>::max()) {
      throw CapacityError("arity^depth leaves exceed 32-bit indexing");
    }
  }
};

struct PhaseTiming {
  std::string phase;
  double ms = 0.0;
};

struct TrainReport {
  double train_error = 0.0;
  std::optional<double> test_error;
  std::uint64_t trials = 0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  // Hill-climbing work: tables re-fitted and node outputs recomputed.
  std::uint64_t nodes_refit = 0;
  std::uint64_t nodes_recomputed = 0;
  std::string rng_algorithm = kRngAlgorithm;
  std::vector<PhaseTiming> timings;

  [[nodiscard]] double timing(std::string_view phase) const {
    for (const auto& t : timings) {
      if (t.phase == phase) return t.ms;
    }
    return 0.0;
  }
};

template <PackWord Word>
struct TrainResult {
  CircuitTree tree;
  EvalCache<Word> cache;
  TrainReport report;
};

namespace detail {

class Stopwatch {
 public:
  [[nodiscard]] double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Fits node's table on its inputs and returns the node's new output.
template <PackWord Word>
FeaturePair<Word> fit_node(CircuitTree& tree, std::size_t node, std::span<const FeaturePair<Word>* const> inputs,
                           const BitVector<Word>& labels, const TrainConfig& cfg) {
  const auto slices = tensor_product<Word>(inputs);
  const auto counts = counts_from_slices(slices, labels);
  tree.gates[node] = fit_gate(counts, cfg.criterion_for(node), cfg.tie);
  return apply_gate_from_slices(tree.gates[node], slices);
}

template <PackWord Word>
FeaturePair<Word> fit_subtree(CircuitTree& tree, const BitDataset<Word>& data, std::size_t node,
                              const TrainConfig& cfg) {
  std::vector<FeaturePair<Word>> owned(tree.arity);
  std::vector<const FeaturePair<Word>*> inputs(tree.arity);
  for (unsigned s = 0; s < tree.arity; ++s) {
    const std::size_t c = tree.child(node, s);
    if (tree.is_leaf_node(c)) {
      inputs[s] = &data.features[tree.leaf_inputs[c - tree.internal_count()]];
    } else {
      owned[s] = fit_subtree(tree, data, c, cfg);
      inputs[s] = &owned[s];
    }
  }
  return fit_node<Word>(tree, node, inputs, data.labels, cfg);
}

}  // namespace detail

// Fits every truth table of `tree` greedily, bottom-up, keeping its leaf
// wiring. Returns the evaluation cache (empty unless cfg.retain_cache) and
// the root's output.
template <PackWord Word>
std::pair<EvalCache<Word>, BitVector<Word>> fit_tables(CircuitTree& tree, const BitDataset<Word>& data,
                                                       const TrainConfig& cfg) {
  tree.validate();
  check_leaves(tree, data);
  if (data.n_examples == 0) throw ValidationError("cannot train on an empty dataset");
  EvalCache<Word> cache;

  if (cfg.retain_cache) {
    cache.nodes.resize(tree.internal_count());
    for (unsigned level = tree.depth; level-- > 0;) {
      const std::size_t begin = tree.level_begin(level);
      const std::size_t end = tree.level_begin(level + 1);
      parallel_for(end - begin, cfg.threads, [&](std::size_t k) {
        const std::size_t node = begin + k;
        std::vector<const FeaturePair<Word>*> inputs(tree.arity);
        for (unsigned s = 0; s < tree.arity; ++s) {
          inputs[s] = node_input<Word>(tree, cache.nodes, data, tree.child(node, s));
        }
        cache.nodes[node] = detail::fit_node<Word>(tree, node, inputs, data.labels, cfg);
      });
    }
    BitVector<Word> root = cache.nodes[0].positive;
    return {std::move(cache), std::move(root)};
  }

  if (cfg.threads <= 1) return {std::move(cache), detail::fit_subtree(tree, data, 0, cfg).positive};

  // Independent subtrees below the split level go to worker threads.
  const unsigned split = detail::split_level(tree, cfg.threads);
  const std::size_t begin = tree.level_begin(split);
  const std::size_t end = tree.level_begin(split + 1);
  std::vector<FeaturePair<Word>> upper(end);
  parallel_for(end - begin, cfg.threads,
               [&](std::size_t k) { upper[begin + k] = detail::fit_subtree(tree, data, begin + k, cfg); });
  for (unsigned level = split; level-- > 0;) {
    for (std::size_t node = tree.level_begin(level); node < tree.level_begin(level + 1); ++node) {
      std::vector<const FeaturePair<Word>*> inputs(tree.arity);
      for (unsigned s = 0; s < tree.arity; ++s) inputs[s] = &upper[tree.child(node, s)];
      upper[node] = detail::fit_node<Word>(tree, node, inputs, data.labels, cfg);
    }
  }
  return {std::move(cache), std::move(upper[0].positive)};
}

// Random leaf wiring (uniform, with replacement) followed by greedy fitting.
template <PackWord Word>
[[nodiscard]] TrainResult<Word> train_greedy(const BitDataset<Word>& data, const BitDataset<Word>* test,
                                             const TrainConfig& cfg) {
  cfg.validate();
  if (data.n_examples == 0 || data.n_features == 0) throw ValidationError("cannot train on an empty dataset");
  if (test != nullptr && test->n_features != data.n_features) {
    throw ValidationError("test set width differs from training set width");
  }
  detail::Stopwatch clock;
  TrainResult<Word> result;
  result.tree = CircuitTree::blank(cfg.arity, cfg.depth, static_cast<std::uint32_t>(data.n_features));
  Rng rng(cfg.seed);
  for (auto& leaf : result.tree.leaf_inputs) leaf = static_cast<std::uint32_t>(uniform_below(rng, data.n_features));

  auto [cache, root] = fit_tables(result.tree, data, cfg);
  result.cache = std::move(cache);
  result.report.train_error = error_rate(root, data.labels);
  result.report.timings.push_back({"greedy", clock.elapsed_ms()});
  if (test != nullptr) {
    detail::Stopwatch eval_clock;
    result.report.test_error = error_rate(predict(result.tree, *test, cfg.threads), test->labels);
    result.report.timings.push_back({"eval", eval_clock.elapsed_ms()});
  }
  return result;
}

// Checks that every cached node output equals its gate applied to its
// children's cached outputs.
template <PackWord Word>
[[nodiscard]] bool cache_consistent(const CircuitTree& tree, const EvalCache<Word>& cache,
                                    const BitDataset<Word>& data) {
  if (cache.nodes.size() != tree.internal_count()) return false;
  for (std::size_t node = 0; node < tree.internal_count(); ++node) {
    std::vector<const FeaturePair<Word>*> inputs(tree.arity);
    for (unsigned s = 0; s < tree.arity; ++s) inputs[s] = node_input<Word>(tree, cache.nodes, data, tree.child(node, s));
    if (!(apply_gate<Word>(tree.gates[node], inputs) == cache.nodes[node])) return false;
  }
  return true;
}

// Leaf-rewiring hill climbing. Each trial moves one random leaf to a
// different random coordinate, re-fits the tables of its `propagation`
// nearest ancestors, recomputes the outputs along the whole leaf-to-root path
// and keeps the change only if the training error drops. Rejected trials
// restore the leaf, the tables and the cache exactly.
template <PackWord Word>
TrainReport hill_climb(CircuitTree& tree, EvalCache<Word>& cache, const BitDataset<Word>& data,
                       const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  if (tree.arity != cfg.arity || tree.depth != cfg.depth) throw ValidationError("config does not match tree shape");
  check_leaves(tree, data);
  if (cache.nodes.size() != tree.internal_count()) {
    throw InvariantError("evaluation cache does not match the tree (" + std::to_string(cache.nodes.size()) +
                         " entries for " + std::to_string(tree.internal_count()) + " nodes)");
  }
  for (const auto& out : cache.nodes) {
    if (out.size() != data.n_examples) throw InvariantError("evaluation cache was built on a different dataset");
  }
  {
    std::vector<const FeaturePair<Word>*> inputs(tree.arity);
    for (unsigned s = 0; s < tree.arity; ++s) inputs[s] = node_input<Word>(tree, cache.nodes, data, tree.child(0, s));
    if (!(apply_gate<Word>(tree.gates[0], inputs) == cache.nodes[0])) {
      throw InvariantError("cached root output is stale");
    }
  }

  detail::Stopwatch clock;
  TrainReport report;
  std::size_t errors = popcount_xor(cache.nodes[0].positive, data.labels);
  const std::size_t refit_levels = std::min(cfg.propagation, tree.depth);
  std::vector<std::size_t> path(tree.depth);
  std::vector<TruthTable> saved_tables(refit_levels);
  std::vector<FeaturePair<Word>> saved_outputs(tree.depth);
  std::vector<const FeaturePair<Word>*> inputs(tree.arity);

  for (std::uint64_t trial = 0; trial < cfg.trials; ++trial) {
    ++report.trials;
    const std::size_t leaf = uniform_below(rng, tree.leaf_count());
    if (data.n_features < 2) {
      ++report.rejected;
      continue;
    }
    const std::uint32_t old_input = tree.leaf_inputs[leaf];
    auto replacement = static_cast<std::uint32_t>(uniform_below(rng, data.n_features - 1));
    if (replacement >= old_input) ++replacement;
    tree.leaf_inputs[leaf] = replacement;

    std::size_t node = tree.leaf_node(leaf);
    for (unsigned level = 0; level < tree.depth; ++level) {
      node = tree.parent(node);
      path[level] = node;
    }
    for (unsigned level = 0; level < tree.depth; ++level) {
      const std::size_t n = path[level];
      for (unsigned s = 0; s < tree.arity; ++s) inputs[s] = node_input<Word>(tree, cache.nodes, data, tree.child(n, s));
      FeaturePair<Word> fresh;
      if (level < refit_levels) {
        saved_tables[level] = tree.gates[n];
        fresh = detail::fit_node<Word>(tree, n, inputs, data.labels, cfg);
        ++report.nodes_refit;
      } else {
        fresh = apply_gate<Word>(tree.gates[n], inputs);
      }
      ++report.nodes_recomputed;
      saved_outputs[level] = std::exchange(cache.nodes[n], std::move(fresh));
    }

    const std::size_t candidate = popcount_xor(cache.nodes[0].positive, data.labels);
    if (candidate < errors || (cfg.accept_equal && candidate == errors)) {
      errors = candidate;
      ++report.accepted;
      continue;
    }
    ++report.rejected;
    tree.leaf_inputs[leaf] = old_input;
    for (unsigned level = 0; level < tree.depth; ++level) {
      const std::size_t n = path[level];
      if (level < refit_levels) tree.gates[n] = saved_tables[level];
      cache.nodes[n] = std::move(saved_outputs[level]);
    }
  }
  report.train_error = static_cast<double>(errors) / static_cast<double>(data.n_examples);
  report.timings.push_back({"hill_climb", clock.elapsed_ms()});
  return report;
}

}  // namespace bgc
