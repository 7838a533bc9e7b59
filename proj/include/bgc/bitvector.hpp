#pragma once

// Packed bit vectors and the word-parallel kernels used by every other module.
//
// Bit i of a vector lives in word i / W at bit position i % W (LSB first).
// Bits past size() are padding and are kept at zero by every kernel here.

#include <bit>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bgc/errors.hpp"

namespace bgc {

template <typename W>
concept PackWord = std::same_as<W, std::uint32_t> || std::same_as<W, std::uint64_t>;

// Tallies vector-level logic operations, weighted by the number of words they
// touch. Copies and popcounts are not logic gates and are not counted.
struct WordOpCounter {
  std::uint64_t word_ops = 0;
  std::uint64_t vector_ops = 0;

  void add(std::size_t words) noexcept {
    word_ops += words;
    ++vector_ops;
  }
};

template <PackWord Word = std::uint64_t>
class BitVector {
 public:
  using word_type = Word;
  static constexpr std::size_t kWordBits = std::numeric_limits<Word>::digits;

  BitVector() = default;

  explicit BitVector(std::size_t n_bits, bool value = false)
      : size_(n_bits), words_(words_for(n_bits), value ? ~Word{0} : Word{0}) {
    clear_padding();
  }

  [[nodiscard]] static constexpr std::size_t words_for(std::size_t n_bits) noexcept {
    return (n_bits + kWordBits - 1) / kWordBits;
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] std::size_t word_count() const noexcept { return words_.size(); }
  [[nodiscard]] std::span<const Word> words() const noexcept { return words_; }
  [[nodiscard]] std::span<Word> words() noexcept { return words_; }

  [[nodiscard]] bool test(std::size_t i) const noexcept {
    return (words_[i / kWordBits] >> (i % kWordBits)) & Word{1};
  }

  void set(std::size_t i, bool value = true) noexcept {
    const Word bit = Word{1} << (i % kWordBits);
    if (value) {
      words_[i / kWordBits] |= bit;
    } else {
      words_[i / kWordBits] &= ~bit;
    }
  }

  void flip(std::size_t i) noexcept { words_[i / kWordBits] ^= Word{1} << (i % kWordBits); }

  [[nodiscard]] std::size_t popcount() const noexcept {
    std::size_t total = 0;
    for (Word w : words_) total += static_cast<std::size_t>(std::popcount(w));
    return total;
  }

  // Mask of the valid bits in the last word (all ones if size is a multiple of W).
  [[nodiscard]] Word tail_mask() const noexcept {
    const std::size_t rem = size_ % kWordBits;
    return rem == 0 ? ~Word{0} : static_cast<Word>((Word{1} << rem) - 1);
  }

  void clear_padding() noexcept {
    if (!words_.empty()) words_.back() &= tail_mask();
  }

  [[nodiscard]] bool padding_is_zero() const noexcept {
    return words_.empty() || (words_.back() & ~tail_mask()) == 0;
  }

  friend bool operator==(const BitVector&, const BitVector&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<Word> words_;
};

namespace detail {

template <PackWord Word>
void require_same_size(const BitVector<Word>& a, const BitVector<Word>& b) {
  if (a.size() != b.size()) {
    throw ShapeError("bit vector length mismatch: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
}

template <PackWord Word>
void count_op(WordOpCounter* counter, const BitVector<Word>& v) noexcept {
  if (counter != nullptr) counter->add(v.word_count());
}

}  // namespace detail

// out = a & b
template <PackWord Word>
void and_into(BitVector<Word>& out, const BitVector<Word>& a, const BitVector<Word>& b,
              WordOpCounter* counter = nullptr) {
  detail::require_same_size(a, b);
  if (out.size() != a.size()) out = BitVector<Word>(a.size());
  auto o = out.words();
  auto x = a.words();
  auto y = b.words();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = x[i] & y[i];
  detail::count_op(counter, a);
}

// acc |= v
template <PackWord Word>
void or_assign(BitVector<Word>& acc, const BitVector<Word>& v, WordOpCounter* counter = nullptr) {
  detail::require_same_size(acc, v);
  auto o = acc.words();
  auto x = v.words();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] |= x[i];
  detail::count_op(counter, v);
}

// out = ~a, padding kept at zero
template <PackWord Word>
void not_into(BitVector<Word>& out, const BitVector<Word>& a, WordOpCounter* counter = nullptr) {
  if (out.size() != a.size()) out = BitVector<Word>(a.size());
  auto o = out.words();
  auto x = a.words();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = ~x[i];
  out.clear_padding();
  detail::count_op(counter, a);
}

template <PackWord Word>
[[nodiscard]] BitVector<Word> operator&(const BitVector<Word>& a, const BitVector<Word>& b) {
  BitVector<Word> out(a.size());
  and_into(out, a, b);
  return out;
}

template <PackWord Word>
[[nodiscard]] BitVector<Word> operator|(const BitVector<Word>& a, const BitVector<Word>& b) {
  BitVector<Word> out = a;
  or_assign(out, b);
  return out;
}

template <PackWord Word>
[[nodiscard]] BitVector<Word> operator^(const BitVector<Word>& a, const BitVector<Word>& b) {
  detail::require_same_size(a, b);
  BitVector<Word> out(a.size());
  auto o = out.words();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a.words()[i] ^ b.words()[i];
  return out;
}

template <PackWord Word>
[[nodiscard]] BitVector<Word> operator~(const BitVector<Word>& a) {
  BitVector<Word> out(a.size());
  not_into(out, a);
  return out;
}

// popcount(a & b) without materializing the intersection.
template <PackWord Word>
[[nodiscard]] std::size_t popcount_and(const BitVector<Word>& a, const BitVector<Word>& b) {
  detail::require_same_size(a, b);
  std::size_t total = 0;
  auto x = a.words();
  auto y = b.words();
  for (std::size_t i = 0; i < x.size(); ++i) total += static_cast<std::size_t>(std::popcount(x[i] & y[i]));
  return total;
}

// popcount(a ^ b), i.e. the Hamming distance.
template <PackWord Word>
[[nodiscard]] std::size_t popcount_xor(const BitVector<Word>& a, const BitVector<Word>& b) {
  detail::require_same_size(a, b);
  std::size_t total = 0;
  auto x = a.words();
  auto y = b.words();
  for (std::size_t i = 0; i < x.size(); ++i) total += static_cast<std::size_t>(std::popcount(x[i] ^ y[i]));
  return total;
}

}  // namespace bgc
