#pragma once

#include <bitset>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bgc/bitcore.hpp"
#include "bgc/errors.hpp"

namespace bgc {

// Output bits of a k-gate. bit(p) is the output on input pattern p, where
// input 0 is the most significant bit of p.
class TruthTable {
 public:
  TruthTable() = default;

  explicit TruthTable(unsigned arity) : arity_(arity) {
    if (arity < 1 || arity > kMaxArity) {
      throw ValidationError("truth table arity must be in [1, 8], got " + std::to_string(arity));
    }
  }

  static TruthTable from_bits(std::span<const std::uint8_t> bits) {
    unsigned arity = 0;
    while ((std::size_t{1} << arity) < bits.size()) ++arity;
    if ((std::size_t{1} << arity) != bits.size()) throw ShapeError("truth table length must be a power of two");
    TruthTable t(arity);
    for (std::size_t p = 0; p < bits.size(); ++p) t.set(p, bits[p] != 0);
    return t;
  }

  static TruthTable from_bits(std::initializer_list<int> bits) {
    std::vector<std::uint8_t> v;
    for (int b : bits) v.push_back(b != 0 ? 1 : 0);
    return from_bits(std::span<const std::uint8_t>(v));
  }

  // Table whose bits are the low 2^arity bits of `value` (bit p = pattern p).
  static TruthTable from_index(unsigned arity, std::uint64_t value) {
    TruthTable t(arity);
    for (std::size_t p = 0; p < t.size() && p < 64; ++p) t.set(p, (value >> p) & 1u);
    return t;
  }

  [[nodiscard]] unsigned arity() const noexcept { return arity_; }
  [[nodiscard]] std::size_t size() const noexcept { return std::size_t{1} << arity_; }
  [[nodiscard]] bool operator[](std::size_t p) const { return bits_[p]; }
  void set(std::size_t p, bool v) { bits_[p] = v; }
  [[nodiscard]] std::size_t ones() const noexcept { return bits_.count(); }

  [[nodiscard]] TruthTable complement() const {
    TruthTable t = *this;
    for (std::size_t p = 0; p < size(); ++p) t.bits_.flip(p);
    return t;
  }

  // Little-endian byte image: pattern p is bit p % 8 of byte p / 8.
  [[nodiscard]] std::vector<std::uint8_t> to_bytes() const {
    std::vector<std::uint8_t> out(byte_count(arity_), 0);
    for (std::size_t p = 0; p < size(); ++p) {
      if (bits_[p]) out[p / 8] |= static_cast<std::uint8_t>(1u << (p % 8));
    }
    return out;
  }

  static TruthTable from_bytes(unsigned arity, std::span<const std::uint8_t> bytes) {
    TruthTable t(arity);
    if (bytes.size() != byte_count(arity)) throw ShapeError("truth table byte image has wrong length");
    for (std::size_t i = 0; i < bytes.size() * 8; ++i) {
      const bool bit = (bytes[i / 8] >> (i % 8)) & 1u;
      if (i < t.size()) {
        t.set(i, bit);
      } else if (bit) {
        throw ValidationError("truth table has bits set beyond 2^arity");
      }
    }
    return t;
  }

  [[nodiscard]] static constexpr std::size_t byte_count(unsigned arity) noexcept {
    return ((std::size_t{1} << arity) + 7) / 8;
  }

  // Hex number whose bit p is pattern p, most significant digit first.
  [[nodiscard]] std::string to_hex() const {
    static constexpr char kDigits[] = "0123456789abcdef";
    const std::size_t digits = (size() + 3) / 4;
    std::string out(digits, '0');
    for (std::size_t d = 0; d < digits; ++d) {
      unsigned nibble = 0;
      for (unsigned b = 0; b < 4; ++b) {
        const std::size_t p = d * 4 + b;
        if (p < size() && bits_[p]) nibble |= 1u << b;
      }
      out[digits - 1 - d] = kDigits[nibble];
    }
    return out;
  }

  static TruthTable from_hex(unsigned arity, std::string_view hex) {
    TruthTable t(arity);
    const std::size_t digits = (t.size() + 3) / 4;
    if (hex.size() != digits) throw ShapeError("truth table hex has wrong digit count");
    for (std::size_t d = 0; d < digits; ++d) {
      const char c = hex[digits - 1 - d];
      unsigned nibble = 0;
      if (c >= '0' && c <= '9') {
        nibble = static_cast<unsigned>(c - '0');
      } else if (c >= 'a' && c <= 'f') {
        nibble = static_cast<unsigned>(c - 'a' + 10);
      } else if (c >= 'A' && c <= 'F') {
        nibble = static_cast<unsigned>(c - 'A' + 10);
      } else {
        throw ShapeError("invalid hex digit in truth table");
      }
      for (unsigned b = 0; b < 4; ++b) {
        const std::size_t p = d * 4 + b;
        const bool bit = (nibble >> b) & 1u;
        if (p < t.size()) {
          t.set(p, bit);
        } else if (bit) {
          throw ValidationError("truth table has bits set beyond 2^arity");
        }
      }
    }
    return t;
  }

  friend bool operator==(const TruthTable&, const TruthTable&) = default;

 private:
  unsigned arity_ = 0;
  std::bitset<256> bits_;
};

}  // namespace bgc
