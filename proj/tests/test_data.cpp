#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "bgc/data.hpp"
#include "oracles.hpp"

namespace {

namespace fs = std::filesystem;

template <typename Word>
std::vector<std::uint8_t> row_of(const bgc::BitDataset<Word>& ds, std::size_t e) {
  return bgc::example_row(ds, e);
}

std::size_t overlap_area(const bgc::PlacedSquare& a, const bgc::PlacedSquare& b) {
  const long r0 = std::max<long>(a.row, b.row);
  const long r1 = std::min<long>(a.row + a.size, b.row + b.size);
  const long c0 = std::max<long>(a.col, b.col);
  const long c1 = std::min<long>(a.col + a.size, b.col + b.size);
  return (r1 > r0 && c1 > c0) ? static_cast<std::size_t>((r1 - r0) * (c1 - c0)) : 0;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("bgc_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_file(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

// ---------------------------------------------------------------------------
// CUBES

TEST(Cubes, NoiseFreeAreasAndPlacement) {
  bgc::CubesSpec spec;
  spec.seed = 3;
  std::vector<bgc::CubesLayout> layouts;
  const auto ds = bgc::gen_cubes<std::uint64_t>(400, spec, &layouts);
  ASSERT_EQ(ds.n_features, 1024u);
  ASSERT_EQ(layouts.size(), 400u);
  std::size_t overlapping = 0;
  for (std::size_t e = 0; e < 400; ++e) {
    const auto row = row_of(ds, e);
    const std::size_t set = std::count(row.begin(), row.end(), 1);
    const auto& lay = layouts[e];
    EXPECT_EQ(ds.labels.test(e), lay.label);
    EXPECT_EQ(lay.label, e % 2 == 1);
    for (const auto& sq : lay.squares) {
      EXPECT_LE(sq.row + sq.size, 32u);
      EXPECT_LE(sq.col + sq.size, 32u);
    }
    if (!lay.label) {
      ASSERT_EQ(lay.squares.size(), 1u);
      EXPECT_EQ(lay.squares[0].size, 15u);
      EXPECT_EQ(set, 225u);
    } else {
      ASSERT_EQ(lay.squares.size(), 2u);
      EXPECT_EQ(lay.squares[0].size, 12u);
      EXPECT_EQ(lay.squares[1].size, 9u);
      const std::size_t ov = overlap_area(lay.squares[0], lay.squares[1]);
      overlapping += ov > 0;
      EXPECT_EQ(set, 225u - 2 * ov);
    }
    EXPECT_EQ(row, bgc::render_cubes(lay, 32));
  }
  EXPECT_GT(overlapping, 0u);
}

TEST(Cubes, NoiseFlipFraction) {
  bgc::CubesSpec spec;
  spec.seed = 4;
  spec.delta = 0.2;
  std::vector<bgc::CubesLayout> layouts;
  const auto ds = bgc::gen_cubes<std::uint64_t>(1000, spec, &layouts);
  std::size_t flipped = 0;
  for (std::size_t e = 0; e < 1000; ++e) {
    const auto clean = bgc::render_cubes(layouts[e], 32);
    const auto row = row_of(ds, e);
    for (std::size_t i = 0; i < row.size(); ++i) flipped += row[i] != clean[i];
  }
  EXPECT_NEAR(static_cast<double>(flipped) / (1000.0 * 1024.0), 0.2, 0.01);
}

TEST(Cubes, SeedDeterministic) {
  bgc::CubesSpec spec;
  spec.seed = 9;
  spec.delta = 0.1;
  const auto a = bgc::gen_cubes<std::uint64_t>(300, spec);
  const auto b = bgc::gen_cubes<std::uint64_t>(300, spec);
  EXPECT_EQ(a.labels, b.labels);
  for (std::size_t f = 0; f < a.n_features; ++f) ASSERT_EQ(a.features[f], b.features[f]);
  const auto c32 = bgc::gen_cubes<std::uint32_t>(300, spec);
  for (std::size_t e = 0; e < 300; ++e) ASSERT_EQ(row_of(a, e), row_of(c32, e));
  spec.seed = 10;
  const auto other = bgc::gen_cubes<std::uint64_t>(300, spec);
  EXPECT_NE(row_of(a, 0), row_of(other, 0));
}

TEST(Cubes, InvalidSpecRejected) {
  bgc::CubesSpec spec;
  spec.delta = 1.5;
  EXPECT_THROW((void)bgc::gen_cubes<std::uint64_t>(10, spec), bgc::ValidationError);
  spec.delta = 0;
  EXPECT_THROW((void)bgc::gen_cubes<std::uint64_t>(0, spec), bgc::ValidationError);
}

// ---------------------------------------------------------------------------
// GAUSS

std::vector<std::uint64_t> decode_ints(const std::vector<std::uint8_t>& row, unsigned bits) {
  std::vector<std::uint64_t> out;
  for (std::size_t j = 0; j < row.size() / bits; ++j) {
    std::uint64_t v = 0;
    for (unsigned b = 0; b < bits; ++b) v = v * 2 + row[j * bits + b];
    out.push_back(v);
  }
  return out;
}

TEST(Gauss, ZeroSigmaIsConstant) {
  bgc::GaussSpec spec;
  spec.sigma0 = 0;
  spec.sigma1 = 0;
  spec.mu1 = 1000;
  const auto ds = bgc::gen_gauss<std::uint64_t>(20, spec);
  ASSERT_EQ(ds.n_features, 512u);
  for (std::size_t e = 0; e < 20; ++e) {
    for (auto v : decode_ints(row_of(ds, e), 16)) EXPECT_EQ(v, e % 2 == 0 ? 32768u : 1000u);
  }
}

TEST(Gauss, SampleMeanWithinStandardError) {
  bgc::GaussSpec spec;
  spec.mu0 = 30768;
  spec.sigma0 = 8000;
  spec.mu1 = 30768;
  spec.sigma1 = 8000;
  spec.seed = 12;
  const auto ds = bgc::gen_gauss<std::uint64_t>(10000, spec);
  double sum = 0;
  double sum_sq = 0;
  std::size_t count = 0;
  for (std::size_t e = 0; e < ds.n_examples; ++e) {
    for (auto v : decode_ints(row_of(ds, e), 16)) {
      sum += static_cast<double>(v);
      sum_sq += static_cast<double>(v) * static_cast<double>(v);
      ++count;
    }
  }
  const double mean = sum / count;
  EXPECT_NEAR(mean, 30768.0, 3.0 * 8000.0 / std::sqrt(32.0 * 10000.0));
  const double sd = std::sqrt(sum_sq / count - mean * mean);
  EXPECT_NEAR(sd, 8000.0, 8000.0 * 0.02);
}

TEST(Gauss, ValuesClampedToRange) {
  EXPECT_EQ(bgc::gauss_value(100.0, 10.0, 16, -50.0), 0u);
  EXPECT_EQ(bgc::gauss_value(65000.0, 10.0, 16, 100.0), 65535u);
  EXPECT_EQ(bgc::gauss_value(10.0, 1.0, 16, 0.4), 10u);
  EXPECT_EQ(bgc::gauss_value(10.0, 1.0, 16, 0.6), 11u);
}

// ---------------------------------------------------------------------------
// Quantization

TEST(Quantize, MsbExtraction) {
  const std::vector<std::uint8_t> v255 = {255};
  EXPECT_EQ(bgc::quantize_msb(v255, {2, 1}), (std::vector<std::uint8_t>{1, 1}));
  const std::vector<std::uint8_t> v130 = {130};
  EXPECT_EQ(bgc::quantize_msb(v130, {1, 1}), (std::vector<std::uint8_t>{1}));
  EXPECT_THROW((void)bgc::quantize_msb(v130, {0, 1}), bgc::ValidationError);
  EXPECT_THROW((void)bgc::quantize_msb(v130, {9, 1}), bgc::ValidationError);
}

TEST(Quantize, EightBitsIsByteIdentity) {
  std::mt19937_64 rng(1);
  std::vector<std::uint8_t> image(784);
  for (auto& p : image) p = static_cast<std::uint8_t>(rng());
  const auto bits = bgc::quantize_msb(image, {8, 1});
  ASSERT_EQ(bits.size(), 784u * 8);
  for (std::size_t i = 0; i < image.size(); ++i) {
    std::uint8_t v = 0;
    for (int b = 0; b < 8; ++b) v = static_cast<std::uint8_t>(v * 2 + bits[i * 8 + b]);
    ASSERT_EQ(v, image[i]);
  }
}

TEST(Quantize, MonotoneCodes) {
  for (unsigned k = 1; k <= 8; ++k) {
    std::uint32_t prev = 0;
    for (unsigned v = 0; v < 256; ++v) {
      const std::vector<std::uint8_t> one = {static_cast<std::uint8_t>(v)};
      std::uint32_t code = 0;
      for (auto b : bgc::quantize_msb(one, {k, 1})) code = code * 2 + b;
      ASSERT_GE(code, prev);
      prev = code;
    }
  }
}

// ---------------------------------------------------------------------------
// IDX

std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                     const std::vector<std::uint8_t>& pixels) {
  std::vector<std::uint8_t> out;
  put_be32(out, bgc::kIdxImageMagic);
  put_be32(out, count);
  put_be32(out, rows);
  put_be32(out, cols);
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out;
  put_be32(out, bgc::kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

TEST(Idx, TwoImageFixture) {
  const std::vector<std::uint8_t> pixels = {0, 128, 255, 64, 1, 2, 3, 200};
  const auto img = bgc::parse_idx_images(idx_images(2, 2, 2, pixels));
  EXPECT_EQ(img.count, 2u);
  EXPECT_EQ(img.rows, 2u);
  EXPECT_EQ(img.cols, 2u);
  EXPECT_EQ(img.pixels, pixels);
  EXPECT_EQ(std::vector<std::uint8_t>(img.image(1).begin(), img.image(1).end()),
            (std::vector<std::uint8_t>{1, 2, 3, 200}));
}

TEST(Idx, MalformedFilesRejected) {
  auto bad_magic = idx_images(1, 1, 2, {1, 2});
  bad_magic[3] = 0x04;
  EXPECT_THROW((void)bgc::parse_idx_images(bad_magic), bgc::FormatError);
  EXPECT_THROW((void)bgc::parse_idx_images(idx_images(2, 1, 2, {1, 2, 3})), bgc::FormatError);
  EXPECT_THROW((void)bgc::parse_idx_images(idx_images(1, 1, 2, {1, 2, 3})), bgc::FormatError);
  EXPECT_THROW((void)bgc::parse_idx_images(idx_images(0xffffffffu, 0xffffffffu, 0xffffffffu, {})), bgc::FormatError);
  EXPECT_THROW((void)bgc::parse_idx_images(std::vector<std::uint8_t>{0, 0, 8}), bgc::FormatError);
  auto labels = idx_labels({1, 2});
  labels.pop_back();
  EXPECT_THROW((void)bgc::parse_idx_labels(labels), bgc::FormatError);
  EXPECT_THROW((void)bgc::parse_idx_labels(idx_images(1, 1, 1, {0})), bgc::FormatError);
}

TEST(Idx, FilterAndQuantize) {
  const std::vector<std::uint8_t> pixels = {255, 0, 128, 64, 10, 20, 192, 129, 1};
  const std::vector<std::uint8_t> labels = {5, 7, 3};
  TempDir tmp;
  write_file(tmp.path() / "img", idx_images(3, 1, 3, pixels));
  write_file(tmp.path() / "lbl", idx_labels(labels));
  const auto ds = bgc::load_idx<std::uint64_t>(tmp.path() / "img", tmp.path() / "lbl", 3, 5, {2, 1});
  ASSERT_EQ(ds.n_examples, 2u);
  ASSERT_EQ(ds.n_features, 6u);
  // File order kept: the digit 5 (label 1) first, then the digit 3 (label 0).
  EXPECT_TRUE(ds.labels.test(0));
  EXPECT_FALSE(ds.labels.test(1));
  EXPECT_EQ(row_of(ds, 0), (std::vector<std::uint8_t>{1, 1, 0, 0, 1, 0}));
  EXPECT_EQ(row_of(ds, 1), (std::vector<std::uint8_t>{1, 1, 1, 0, 0, 0}));
  EXPECT_THROW((void)bgc::load_idx<std::uint64_t>(tmp.path() / "img", tmp.path() / "lbl", 8, 9, {2, 1}),
               bgc::ValidationError);
  EXPECT_THROW((void)bgc::load_idx<std::uint64_t>(tmp.path() / "missing", tmp.path() / "lbl", 3, 5, {2, 1}),
               bgc::ValidationError);
  write_file(tmp.path() / "lbl2", idx_labels({5, 3}));
  EXPECT_THROW((void)bgc::load_idx<std::uint64_t>(tmp.path() / "img", tmp.path() / "lbl2", 3, 5, {2, 1}),
               bgc::FormatError);
}

// ---------------------------------------------------------------------------
// CIFAR-10

std::vector<std::uint8_t> cifar_records(const std::vector<std::uint8_t>& labels, std::mt19937_64& rng) {
  std::vector<std::uint8_t> out;
  for (auto l : labels) {
    out.push_back(l);
    for (std::size_t i = 0; i < 3072; ++i) out.push_back(static_cast<std::uint8_t>(rng()));
  }
  return out;
}

TEST(Cifar, ThreeRecordFixture) {
  std::mt19937_64 rng(2);
  const auto batch = cifar_records({2, 5, 1}, rng);
  const std::vector<std::vector<std::uint8_t>> batches = {batch};
  bgc::CifarOptions opt;
  opt.expected_records = 0;
  const auto ds = bgc::cifar_to_dataset<std::uint64_t>(batches, {2, 3}, opt);
  ASSERT_EQ(ds.n_examples, 2u);
  EXPECT_EQ(ds.n_features, 32u * 32u * 3u * 2u);
  EXPECT_TRUE(ds.labels.test(0));   // bird
  EXPECT_FALSE(ds.labels.test(1));  // automobile
  const auto row = row_of(ds, 1);
  for (std::size_t i = 0; i < 3072; ++i) {
    const std::uint8_t v = batch[2 * 3073 + 1 + i];
    ASSERT_EQ(row[2 * i], v >> 7);
    ASSERT_EQ(row[2 * i + 1], (v >> 6) & 1);
  }
}

TEST(Cifar, RecordCountEnforced) {
  std::mt19937_64 rng(3);
  const std::vector<std::vector<std::uint8_t>> batches = {cifar_records({1, 2, 3}, rng)};
  EXPECT_THROW((void)bgc::cifar_to_dataset<std::uint64_t>(batches, {2, 3}), bgc::FormatError);
  bgc::CifarOptions opt;
  opt.expected_records = 3;
  EXPECT_NO_THROW((void)bgc::cifar_to_dataset<std::uint64_t>(batches, {2, 3}, opt));
  auto truncated = batches;
  truncated[0].pop_back();
  opt.expected_records = 0;
  EXPECT_THROW((void)bgc::cifar_to_dataset<std::uint64_t>(truncated, {2, 3}, opt), bgc::FormatError);
  auto bad_label = batches;
  bad_label[0][3073] = 10;
  EXPECT_THROW((void)bgc::cifar_to_dataset<std::uint64_t>(bad_label, {2, 3}, opt), bgc::FormatError);
}

TEST(Cifar, LoadsFromFiles) {
  std::mt19937_64 rng(4);
  TempDir tmp;
  write_file(tmp.path() / "a.bin", cifar_records({1, 1, 0}, rng));
  write_file(tmp.path() / "b.bin", cifar_records({2, 9}, rng));
  const std::vector<fs::path> files = {tmp.path() / "a.bin", tmp.path() / "b.bin"};
  bgc::CifarOptions opt;
  opt.expected_records = 0;
  const auto ds = bgc::load_cifar10<std::uint32_t>(files, {1, 3}, opt);
  EXPECT_EQ(ds.n_examples, 3u);
  EXPECT_EQ(ds.labels.popcount(), 1u);
  EXPECT_TRUE(ds.labels.test(2));
}

// ---------------------------------------------------------------------------
// amat

TEST(Amat, TwoLineFixture) {
  std::istringstream in("0 1 0 1\n1 1 0.2 0\n");
  const auto ds = bgc::parse_amat<std::uint64_t>(in);
  ASSERT_EQ(ds.n_examples, 2u);
  ASSERT_EQ(ds.n_features, 3u);
  EXPECT_EQ(row_of(ds, 0), (std::vector<std::uint8_t>{0, 1, 0}));
  EXPECT_EQ(row_of(ds, 1), (std::vector<std::uint8_t>{1, 1, 0}));
  EXPECT_TRUE(ds.labels.test(0));
  EXPECT_FALSE(ds.labels.test(1));
}

TEST(Amat, ThresholdAndBinaryIdentity) {
  std::mt19937_64 rng(5);
  const auto rows = oracle::random_rows(rng, 30, 12);
  std::ostringstream text;
  for (const auto& r : rows) {
    for (auto b : r) text << (b ? "1.0 " : "0.0 ");
    text << "0\n";
  }
  std::istringstream in(text.str());
  const auto ds = bgc::parse_amat<std::uint64_t>(in);
  for (std::size_t e = 0; e < rows.size(); ++e) ASSERT_EQ(row_of(ds, e), rows[e]);

  std::istringstream grey("0.3 0.7 1\n");
  EXPECT_EQ(row_of(bgc::parse_amat<std::uint64_t>(grey, 0.25), 0), (std::vector<std::uint8_t>{1, 1}));
}

TEST(Amat, MalformedInputNamesTheLine) {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      (void)bgc::parse_amat<std::uint64_t>(in);
    } catch (const bgc::ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("0 1 1\n1 0\n"), 2u);
  EXPECT_EQ(line_of("0 1 1\n1 x 0\n"), 2u);
  EXPECT_EQ(line_of("0 1 2\n"), 1u);
  EXPECT_EQ(line_of("\n"), 1u);
}

// ---------------------------------------------------------------------------
// Dump format

TEST(Dump, RoundTripAndLayout) {
  const oracle::Rows rows = {{1, 0, 0, 0, 1}, {0, 1, 1, 1, 0}};
  const auto ds = bgc::make_dataset<std::uint64_t>(rows, std::vector<std::uint8_t>{1, 0});
  std::ostringstream out;
  bgc::write_dump(ds, out);
  EXPECT_EQ(out.str(), "bgd 2 5\n1 88\n0 70\n");
  std::istringstream in(out.str());
  const auto back = bgc::read_dump<std::uint64_t>(in);
  EXPECT_EQ(back.labels, ds.labels);
  for (std::size_t f = 0; f < 5; ++f) EXPECT_EQ(back.features[f], ds.features[f]);

  std::istringstream bad("bgd 2 5\n1 88\n");
  EXPECT_THROW((void)bgc::read_dump<std::uint64_t>(bad), bgc::ParseError);
}

TEST(Dataset, SelectAndConcat) {
  std::mt19937_64 rng(6);
  const auto rows = oracle::random_rows(rng, 70, 9);
  const auto labels = oracle::random_bits(rng, 70);
  const auto ds = bgc::make_dataset<std::uint32_t>(rows, labels);
  const std::vector<std::size_t> pick = {69, 3, 3, 40};
  const auto sub = bgc::select_examples(ds, pick);
  ASSERT_EQ(sub.n_examples, 4u);
  for (std::size_t i = 0; i < pick.size(); ++i) {
    EXPECT_EQ(row_of(sub, i), rows[pick[i]]);
    EXPECT_EQ(sub.labels.test(i), labels[pick[i]] != 0);
  }
  const auto both = bgc::concat_examples(ds, sub);
  ASSERT_EQ(both.n_examples, 74u);
  EXPECT_EQ(row_of(both, 71), rows[3]);
  EXPECT_NO_THROW(both.validate());
}

}  // namespace
