#pragma once

// Feature-major (transposed) binary datasets and the tensor-product /
// masked-popcount primitives that gate fitting and evaluation are built on.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bgc/bitvector.hpp"
#include "bgc/errors.hpp"

namespace bgc {

inline constexpr unsigned kMaxArity = 8;

// One binary feature over all examples, with its complement precomputed.
template <PackWord Word = std::uint64_t>
struct FeaturePair {
  BitVector<Word> positive;
  BitVector<Word> negative;

  FeaturePair() = default;

  explicit FeaturePair(BitVector<Word> pos) : positive(std::move(pos)) { not_into(negative, positive); }

  FeaturePair(BitVector<Word> pos, BitVector<Word> neg) : positive(std::move(pos)), negative(std::move(neg)) {}

  [[nodiscard]] std::size_t size() const noexcept { return positive.size(); }

  // Recomputes `negative` from `positive`.
  void refresh_negative(WordOpCounter* counter = nullptr) { not_into(negative, positive, counter); }

  // Complement and padding invariants.
  [[nodiscard]] bool consistent() const {
    if (positive.size() != negative.size() || !positive.padding_is_zero() || !negative.padding_is_zero()) {
      return false;
    }
    if (popcount_and(positive, negative) != 0) return false;
    return positive.popcount() + negative.popcount() == positive.size();
  }

  friend bool operator==(const FeaturePair&, const FeaturePair&) = default;
};

template <PackWord Word = std::uint64_t>
struct BitDataset {
  std::size_t n_examples = 0;
  std::size_t n_features = 0;
  std::vector<FeaturePair<Word>> features;
  BitVector<Word> labels;

  void validate() const {
    if (features.size() != n_features) throw ShapeError("dataset feature count does not match n_features");
    for (const auto& f : features) {
      if (f.size() != n_examples) throw ShapeError("feature length does not match n_examples");
    }
    if (labels.size() != n_examples) throw ShapeError("label vector length does not match n_examples");
  }

  friend bool operator==(const BitDataset&, const BitDataset&) = default;
};

// Builds a BitDataset one row at a time, writing straight into the transposed
// layout. Nothing is visible to the caller until build() succeeds.
template <PackWord Word = std::uint64_t>
class DatasetAssembler {
 public:
  DatasetAssembler(std::size_t n_examples, std::size_t n_features)
      : n_examples_(n_examples), n_features_(n_features), positives_(n_features, BitVector<Word>(n_examples)),
        labels_(n_examples) {}

  // `bits` holds one byte per feature, zero or nonzero.
  void add_row(std::span<const std::uint8_t> bits, bool label) {
    if (bits.size() != n_features_) {
      throw ShapeError("row " + std::to_string(row_) + " has width " + std::to_string(bits.size()) +
                       ", expected " + std::to_string(n_features_));
    }
    if (row_ >= n_examples_) throw ShapeError("more rows than declared examples");
    for (std::size_t f = 0; f < n_features_; ++f) {
      if (bits[f] != 0) positives_[f].set(row_);
    }
    if (label) labels_.set(row_);
    ++row_;
  }

  [[nodiscard]] std::size_t rows_added() const noexcept { return row_; }

  [[nodiscard]] BitDataset<Word> build() && {
    if (row_ != n_examples_) {
      throw ShapeError("assembled " + std::to_string(row_) + " rows, expected " + std::to_string(n_examples_));
    }
    BitDataset<Word> ds;
    ds.n_examples = n_examples_;
    ds.n_features = n_features_;
    ds.features.reserve(n_features_);
    for (auto& p : positives_) ds.features.emplace_back(std::move(p));
    ds.labels = std::move(labels_);
    return ds;
  }

 private:
  std::size_t n_examples_;
  std::size_t n_features_;
  std::size_t row_ = 0;
  std::vector<BitVector<Word>> positives_;
  BitVector<Word> labels_;
};

// Transposes n example rows of m bits into m features of n bits.
template <PackWord Word = std::uint64_t>
[[nodiscard]] std::vector<FeaturePair<Word>> pack_and_transpose(std::span<const std::vector<std::uint8_t>> rows) {
  if (rows.empty()) throw ShapeError("pack_and_transpose needs at least one row");
  DatasetAssembler<Word> assembler(rows.size(), rows.front().size());
  for (const auto& row : rows) assembler.add_row(row, false);
  return std::move(assembler).build().features;
}

template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> make_dataset(std::span<const std::vector<std::uint8_t>> rows,
                                            std::span<const std::uint8_t> labels) {
  if (rows.empty()) throw ShapeError("dataset needs at least one row");
  if (labels.size() != rows.size()) throw ShapeError("label count does not match row count");
  DatasetAssembler<Word> assembler(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) assembler.add_row(rows[i], labels[i] != 0);
  return std::move(assembler).build();
}

// Row `example` of a dataset as one byte per feature.
template <PackWord Word>
[[nodiscard]] std::vector<std::uint8_t> example_row(const BitDataset<Word>& ds, std::size_t example) {
  std::vector<std::uint8_t> row(ds.n_features);
  for (std::size_t f = 0; f < ds.n_features; ++f) row[f] = ds.features[f].positive.test(example) ? 1 : 0;
  return row;
}

// New dataset made of the listed examples, in the listed order.
template <PackWord Word>
[[nodiscard]] BitDataset<Word> select_examples(const BitDataset<Word>& ds, std::span<const std::size_t> indices) {
  BitDataset<Word> out;
  out.n_examples = indices.size();
  out.n_features = ds.n_features;
  out.labels = BitVector<Word>(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= ds.n_examples) throw ShapeError("example index out of range");
    if (ds.labels.test(indices[j])) out.labels.set(j);
  }
  out.features.reserve(ds.n_features);
  for (const auto& f : ds.features) {
    BitVector<Word> pos(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
      if (f.positive.test(indices[j])) pos.set(j);
    }
    out.features.emplace_back(std::move(pos));
  }
  return out;
}

// Examples of `a` followed by examples of `b`.
template <PackWord Word>
[[nodiscard]] BitDataset<Word> concat_examples(const BitDataset<Word>& a, const BitDataset<Word>& b) {
  if (a.n_features != b.n_features) throw ShapeError("cannot concatenate datasets of different widths");
  const std::size_t n = a.n_examples + b.n_examples;
  auto append = [&](BitVector<Word>& dst, const BitVector<Word>& x, const BitVector<Word>& y) {
    dst = BitVector<Word>(n);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x.test(i)) dst.set(i);
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y.test(i)) dst.set(x.size() + i);
    }
  };
  BitDataset<Word> out;
  out.n_examples = n;
  out.n_features = a.n_features;
  append(out.labels, a.labels, b.labels);
  out.features.reserve(a.n_features);
  for (std::size_t f = 0; f < a.n_features; ++f) {
    BitVector<Word> pos;
    append(pos, a.features[f].positive, b.features[f].positive);
    out.features.emplace_back(std::move(pos));
  }
  return out;
}

// One-hot pattern encoding of k features: slices[p] marks the examples whose
// inputs read as pattern p, input 0 being the most significant bit of p.
template <PackWord Word = std::uint64_t>
struct PatternSlices {
  unsigned arity = 0;
  std::vector<BitVector<Word>> slices;
};

namespace detail {

// Slices of a sub-list of inputs. For a single input the slices alias the
// input's own negative/positive vectors instead of copying them.
template <PackWord Word>
struct SliceSet {
  std::vector<BitVector<Word>> owned;
  std::vector<const BitVector<Word>*> view;
};

template <PackWord Word>
SliceSet<Word> build_slices(std::span<const FeaturePair<Word>* const> inputs, WordOpCounter* counter) {
  SliceSet<Word> out;
  if (inputs.size() == 1) {
    out.view = {&inputs[0]->negative, &inputs[0]->positive};
    return out;
  }
  // Split so each half is built independently and crossed once: the final
  // cross costs 2^k ANDs, the halves 2^(k/2) each (recursively).
  const std::size_t high_count = inputs.size() / 2;
  SliceSet<Word> high = build_slices<Word>(inputs.first(high_count), counter);
  SliceSet<Word> low = build_slices<Word>(inputs.subspan(high_count), counter);
  const std::size_t total = high.view.size() * low.view.size();
  out.owned.resize(total);
  out.view.resize(total);
  for (std::size_t h = 0; h < high.view.size(); ++h) {
    for (std::size_t l = 0; l < low.view.size(); ++l) {
      const std::size_t p = h * low.view.size() + l;
      and_into(out.owned[p], *high.view[h], *low.view[l], counter);
      out.view[p] = &out.owned[p];
    }
  }
  return out;
}

template <PackWord Word>
void check_gate_inputs(std::span<const FeaturePair<Word>* const> inputs) {
  if (inputs.empty() || inputs.size() > kMaxArity) {
    throw ShapeError("gate arity must be in [1, " + std::to_string(kMaxArity) + "], got " +
                     std::to_string(inputs.size()));
  }
  for (const auto* in : inputs) {
    if (in->size() != inputs[0]->size()) throw ShapeError("gate inputs have different lengths");
  }
}

}  // namespace detail

template <PackWord Word>
[[nodiscard]] PatternSlices<Word> tensor_product(std::span<const FeaturePair<Word>* const> inputs,
                                                 WordOpCounter* counter = nullptr) {
  detail::check_gate_inputs(inputs);
  auto set = detail::build_slices<Word>(inputs, counter);
  PatternSlices<Word> out;
  out.arity = static_cast<unsigned>(inputs.size());
  if (set.owned.empty()) {
    for (const auto* v : set.view) out.slices.push_back(*v);
  } else {
    out.slices = std::move(set.owned);
  }
  return out;
}

template <PackWord Word>
[[nodiscard]] PatternSlices<Word> tensor_product(std::span<const FeaturePair<Word>> inputs,
                                                 WordOpCounter* counter = nullptr) {
  std::vector<const FeaturePair<Word>*> ptrs;
  ptrs.reserve(inputs.size());
  for (const auto& f : inputs) ptrs.push_back(&f);
  return tensor_product<Word>(std::span<const FeaturePair<Word>* const>(ptrs), counter);
}

// counts[p] = popcount(slices[p] & mask)
template <PackWord Word>
[[nodiscard]] std::vector<std::uint64_t> count_per_slice(const PatternSlices<Word>& slices,
                                                         const BitVector<Word>& mask) {
  std::vector<std::uint64_t> counts(slices.slices.size());
  for (std::size_t p = 0; p < counts.size(); ++p) counts[p] = popcount_and(slices.slices[p], mask);
  return counts;
}

}  // namespace bgc
