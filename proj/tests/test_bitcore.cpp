#include <gtest/gtest.h>

#include <random>

#include "bgc/bitcore.hpp"
#include "bgc/truth_table.hpp"
#include "oracles.hpp"

namespace {

using bgc::BitVector;
using bgc::FeaturePair;

template <typename Word>
BitVector<Word> from_bits(const std::vector<std::uint8_t>& bits) {
  BitVector<Word> v(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) v.set(i, bits[i] != 0);
  return v;
}

template <typename Word>
std::vector<std::uint8_t> to_bits(const BitVector<Word>& v) {
  std::vector<std::uint8_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v.test(i) ? 1 : 0;
  return out;
}

template <typename Word>
class BitcoreTyped : public ::testing::Test {};
using WordTypes = ::testing::Types<std::uint32_t, std::uint64_t>;
TYPED_TEST_SUITE(BitcoreTyped, WordTypes);

TYPED_TEST(BitcoreTyped, BitwiseOpsMatchPerBitLoop) {
  using Word = TypeParam;
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 7u, 31u, 32u, 33u, 63u, 64u, 65u, 200u}) {
    const auto a = oracle::random_bits(rng, n);
    const auto b = oracle::random_bits(rng, n);
    const auto va = from_bits<Word>(a);
    const auto vb = from_bits<Word>(b);
    const auto and_v = to_bits(va & vb);
    const auto or_v = to_bits(va | vb);
    const auto xor_v = to_bits(va ^ vb);
    const auto not_v = to_bits(~va);
    std::size_t and_count = 0;
    std::size_t xor_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(and_v[i], a[i] & b[i]);
      EXPECT_EQ(or_v[i], a[i] | b[i]);
      EXPECT_EQ(xor_v[i], a[i] ^ b[i]);
      EXPECT_EQ(not_v[i], 1 - a[i]);
      and_count += a[i] & b[i];
      xor_count += a[i] ^ b[i];
    }
    EXPECT_EQ(bgc::popcount_and(va, vb), and_count);
    EXPECT_EQ(bgc::popcount_xor(va, vb), xor_count);
    EXPECT_TRUE((~va).padding_is_zero());
    EXPECT_EQ((~va).popcount(), n - va.popcount());
  }
}

TEST(BitVector, SizeMismatchThrows) {
  BitVector<> a(10), b(11);
  EXPECT_THROW((void)(a & b), bgc::ShapeError);
  EXPECT_THROW((void)bgc::popcount_xor(a, b), bgc::ShapeError);
}

TEST(BitVector, AllOnesConstructorKeepsPaddingZero) {
  BitVector<std::uint64_t> v(70, true);
  EXPECT_EQ(v.popcount(), 70u);
  EXPECT_TRUE(v.padding_is_zero());
  EXPECT_EQ(v.word_count(), 2u);
}

TEST(BitVector, WordOpCounterCountsWordsPerOperation) {
  BitVector<std::uint32_t> a(100, true), b(100), out;
  bgc::WordOpCounter c;
  bgc::and_into(out, a, b, &c);
  bgc::or_assign(out, a, &c);
  bgc::not_into(out, a, &c);
  EXPECT_EQ(c.vector_ops, 3u);
  EXPECT_EQ(c.word_ops, 3u * 4u);
}

TEST(FeaturePair, ComplementIdentity) {
  std::mt19937_64 rng(3);
  for (std::size_t n : {1u, 5u, 64u, 65u, 1000u}) {
    FeaturePair<> f(from_bits<std::uint64_t>(oracle::random_bits(rng, n)));
    EXPECT_TRUE(f.consistent());
    EXPECT_EQ((f.positive ^ f.negative).popcount(), n);
    EXPECT_EQ((f.positive & f.negative).popcount(), 0u);
  }
}

TEST(PackAndTranspose, SingleRowIdentity) {
  const oracle::Rows rows = {{1, 0, 1}};
  const auto fs = bgc::pack_and_transpose<std::uint64_t>(rows);
  ASSERT_EQ(fs.size(), 3u);
  EXPECT_TRUE(fs[0].positive.test(0));
  EXPECT_FALSE(fs[1].positive.test(0));
  EXPECT_TRUE(fs[2].positive.test(0));
  for (const auto& f : fs) EXPECT_TRUE(f.consistent());
}

TEST(PackAndTranspose, MatchesNaiveTranspose) {
  std::mt19937_64 rng(5);
  const auto rows = oracle::random_rows(rng, 5, 4);
  const auto expect = oracle::transpose(rows);
  const auto fs = bgc::pack_and_transpose<std::uint32_t>(rows);
  ASSERT_EQ(fs.size(), 4u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(to_bits(fs[j].positive), expect[j]);
}

TEST(PackAndTranspose, WordCountPerLine) {
  oracle::Rows rows(64000, std::vector<std::uint8_t>(10, 1));
  const auto fs64 = bgc::pack_and_transpose<std::uint64_t>(rows);
  ASSERT_EQ(fs64.size(), 10u);
  for (const auto& f : fs64) EXPECT_EQ(f.positive.word_count(), 1000u);
  const auto fs32 = bgc::pack_and_transpose<std::uint32_t>(rows);
  EXPECT_EQ(fs32[0].positive.word_count(), 2000u);
}

TEST(PackAndTranspose, InvolutionExhaustiveSmall) {
  // Every bit matrix with n*m <= 8 cells.
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t m = 1; n * m <= 8; ++m) {
      for (std::uint32_t code = 0; code < (1u << (n * m)); ++code) {
        oracle::Rows rows(n, std::vector<std::uint8_t>(m));
        for (std::size_t i = 0; i < n * m; ++i) rows[i / m][i % m] = (code >> i) & 1;
        const auto fs = bgc::pack_and_transpose<std::uint64_t>(rows);
        oracle::Rows as_rows;
        for (const auto& f : fs) as_rows.push_back(to_bits(f.positive));
        const auto back = bgc::pack_and_transpose<std::uint64_t>(as_rows);
        ASSERT_EQ(back.size(), n);
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(to_bits(back[i].positive), rows[i]);
      }
    }
  }
}

TEST(PackAndTranspose, InvolutionRandomLarge) {
  std::mt19937_64 rng(9);
  const auto rows = oracle::random_rows(rng, 4096, 3);
  const auto fs = bgc::pack_and_transpose<std::uint32_t>(rows);
  oracle::Rows as_rows;
  for (const auto& f : fs) as_rows.push_back(to_bits(f.positive));
  const auto back = bgc::pack_and_transpose<std::uint32_t>(as_rows);
  for (std::size_t i = 0; i < rows.size(); ++i) ASSERT_EQ(to_bits(back[i].positive), rows[i]);
}

TEST(PackAndTranspose, RaggedRowsRejected) {
  const oracle::Rows rows = {{1, 0, 1}, {1, 0}};
  EXPECT_THROW((void)bgc::pack_and_transpose<std::uint64_t>(rows), bgc::ShapeError);
  EXPECT_THROW((void)bgc::pack_and_transpose<std::uint64_t>(oracle::Rows{}), bgc::ShapeError);
}

TEST(DatasetAssembler, WrongRowCountRejected) {
  bgc::DatasetAssembler<std::uint64_t> a(3, 2);
  const std::vector<std::uint8_t> row = {1, 0};
  a.add_row(row, true);
  EXPECT_THROW((void)std::move(a).build(), bgc::ShapeError);
}

TEST(TensorProduct, ArityOneIsNegativeThenPositive) {
  std::mt19937_64 rng(1);
  FeaturePair<> f(from_bits<std::uint64_t>(oracle::random_bits(rng, 77)));
  const std::vector<FeaturePair<>> in = {f};
  const auto s = bgc::tensor_product<std::uint64_t>(std::span<const FeaturePair<>>(in));
  ASSERT_EQ(s.slices.size(), 2u);
  EXPECT_EQ(s.slices[0], f.negative);
  EXPECT_EQ(s.slices[1], f.positive);
}

TEST(TensorProduct, AllOnesExampleLandsInLastSlice) {
  const oracle::Rows rows = {{1, 1, 1}, {0, 1, 1}};
  const auto fs = bgc::pack_and_transpose<std::uint64_t>(rows);
  const auto s = bgc::tensor_product<std::uint64_t>(std::span<const FeaturePair<>>(fs));
  for (std::size_t p = 0; p < 8; ++p) EXPECT_EQ(s.slices[p].test(0), p == 0b111) << p;
  // Input 0 is the most significant bit: (0,1,1) is pattern 3.
  for (std::size_t p = 0; p < 8; ++p) EXPECT_EQ(s.slices[p].test(1), p == 0b011) << p;
}

TEST(TensorProduct, OneHotAndMatchesPerExamplePattern) {
  std::mt19937_64 rng(21);
  for (unsigned k = 1; k <= 8; ++k) {
    for (std::size_t n : {1u, 8u, 64u, 300u}) {
      const auto rows = oracle::random_rows(rng, n, k);
      const auto fs = bgc::pack_and_transpose<std::uint32_t>(rows);
      const auto s = bgc::tensor_product<std::uint32_t>(std::span<const FeaturePair<std::uint32_t>>(fs));
      ASSERT_EQ(s.slices.size(), std::size_t{1} << k);
      BitVector<std::uint32_t> any(n);
      for (std::size_t p = 0; p < s.slices.size(); ++p) {
        EXPECT_TRUE(s.slices[p].padding_is_zero());
        EXPECT_EQ(bgc::popcount_and(any, s.slices[p]), 0u) << "slices overlap at k=" << k;
        any = any | s.slices[p];
      }
      EXPECT_EQ(any.popcount(), n);
      for (std::size_t e = 0; e < n; ++e) ASSERT_TRUE(s.slices[oracle::pattern_of(rows[e])].test(e));
    }
  }
}

TEST(TensorProduct, RejectsBadArityAndLengths) {
  std::vector<FeaturePair<>> none;
  EXPECT_THROW((void)bgc::tensor_product<std::uint64_t>(std::span<const FeaturePair<>>(none)), bgc::ShapeError);
  std::vector<FeaturePair<>> nine(9, FeaturePair<>(BitVector<>(4)));
  EXPECT_THROW((void)bgc::tensor_product<std::uint64_t>(std::span<const FeaturePair<>>(nine)), bgc::ShapeError);
  std::vector<FeaturePair<>> ragged = {FeaturePair<>(BitVector<>(4)), FeaturePair<>(BitVector<>(5))};
  EXPECT_THROW((void)bgc::tensor_product<std::uint64_t>(std::span<const FeaturePair<>>(ragged)), bgc::ShapeError);
}

TEST(CountPerSlice, ComplementCounting) {
  BitVector<> v(8);
  v.set(1);
  v.set(4);
  v.set(6);
  const std::vector<FeaturePair<>> in = {FeaturePair<>(v)};
  const auto s = bgc::tensor_product<std::uint64_t>(std::span<const FeaturePair<>>(in));
  EXPECT_EQ(bgc::count_per_slice(s, BitVector<>(8, true)), (std::vector<std::uint64_t>{5, 3}));
  EXPECT_EQ(bgc::count_per_slice(s, BitVector<>(8)), (std::vector<std::uint64_t>{0, 0}));
}

TEST(CountPerSlice, ExhaustiveSmallAgainstBitLoop) {
  // All 2-input feature pairs and masks on n <= 4 examples (12 bits per case).
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::uint32_t code = 0; code < (1u << (3 * n)); ++code) {
      oracle::Rows rows(n, std::vector<std::uint8_t>(2));
      std::vector<std::uint8_t> mask(n);
      for (std::size_t e = 0; e < n; ++e) {
        rows[e][0] = (code >> (3 * e)) & 1;
        rows[e][1] = (code >> (3 * e + 1)) & 1;
        mask[e] = (code >> (3 * e + 2)) & 1;
      }
      const auto fs = bgc::pack_and_transpose<std::uint64_t>(rows);
      const auto s = bgc::tensor_product<std::uint64_t>(std::span<const FeaturePair<>>(fs));
      std::vector<std::uint64_t> expect(4, 0);
      for (std::size_t e = 0; e < n; ++e) expect[oracle::pattern_of(rows[e])] += mask[e];
      ASSERT_EQ(bgc::count_per_slice(s, from_bits<std::uint64_t>(mask)), expect);
    }
  }
}

TEST(CountPerSlice, RandomAgainstBitLoop) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 9 + rng() % 248;
    const unsigned k = 1 + rng() % 4;
    const auto rows = oracle::random_rows(rng, n, k);
    const auto mask = oracle::random_bits(rng, n);
    const auto fs = bgc::pack_and_transpose<std::uint32_t>(rows);
    const auto s = bgc::tensor_product<std::uint32_t>(std::span<const FeaturePair<std::uint32_t>>(fs));
    std::vector<std::uint64_t> expect(std::size_t{1} << k, 0);
    for (std::size_t e = 0; e < n; ++e) expect[oracle::pattern_of(rows[e])] += mask[e];
    ASSERT_EQ(bgc::count_per_slice(s, from_bits<std::uint32_t>(mask)), expect);
  }
}

TEST(TruthTable, HexAndBytesForms) {
  const auto and2 = bgc::TruthTable::from_bits({0, 0, 0, 1});
  EXPECT_EQ(and2.to_hex(), "8");
  EXPECT_EQ(bgc::TruthTable::from_hex(2, "8"), and2);
  EXPECT_EQ(and2.to_bytes(), (std::vector<std::uint8_t>{0x08}));
  const auto maj3 = bgc::TruthTable::from_bits({0, 0, 0, 1, 0, 1, 1, 1});
  EXPECT_EQ(maj3.to_hex(), "e8");
  EXPECT_EQ(maj3.complement().to_hex(), "17");
  std::mt19937_64 rng(2);
  for (unsigned k = 1; k <= 8; ++k) {
    bgc::TruthTable t(k);
    for (std::size_t p = 0; p < t.size(); ++p) t.set(p, rng() & 1);
    EXPECT_EQ(bgc::TruthTable::from_hex(k, t.to_hex()), t);
    EXPECT_EQ(bgc::TruthTable::from_bytes(k, t.to_bytes()), t);
  }
  const std::vector<std::uint8_t> stray = {0x18};
  EXPECT_THROW((void)bgc::TruthTable::from_bytes(2, stray), bgc::ValidationError);
  EXPECT_THROW((void)bgc::TruthTable(0), bgc::ValidationError);
  EXPECT_THROW((void)bgc::TruthTable(9), bgc::ValidationError);
}

}  // namespace
