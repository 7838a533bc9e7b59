#pragma once

// Dataset generators (CUBES, GAUSS) and loaders (MNIST IDX, CIFAR-10 binary,
// amat text), all producing feature-major BitDatasets.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bgc/bitcore.hpp"
#include "bgc/errors.hpp"
#include "bgc/random.hpp"

namespace bgc {

// ---------------------------------------------------------------------------
// CUBES: 32x32 binary images, one 15x15 square (class 0) or a 12x12 and a
// 9x9 square drawn with XOR so that overlaps are white (class 1), followed by
// independent bit flips with probability delta.

struct CubesSpec {
  unsigned side = 32;
  unsigned single_side = 15;
  unsigned pair_large = 12;
  unsigned pair_small = 9;
  double delta = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(delta >= 0.0 && delta <= 1.0)) throw ValidationError("CUBES noise delta must be in [0, 1]");
    for (unsigned s : {single_side, pair_large, pair_small}) {
      if (s == 0 || s > side) throw ValidationError("CUBES square side must be in [1, image side]");
    }
  }
};

struct PlacedSquare {
  unsigned row = 0;
  unsigned col = 0;
  unsigned size = 0;
};

struct CubesLayout {
  bool label = false;
  std::vector<PlacedSquare> squares;
};

// Noise-free pixels of one layout, row-major.
[[nodiscard]] inline std::vector<std::uint8_t> render_cubes(const CubesLayout& layout, unsigned side) {
  std::vector<std::uint8_t> image(std::size_t{side} * side, 0);
  for (const auto& sq : layout.squares) {
    for (unsigned r = sq.row; r < sq.row + sq.size; ++r) {
      for (unsigned c = sq.col; c < sq.col + sq.size; ++c) image[std::size_t{r} * side + c] ^= 1;
    }
  }
  return image;
}

// Example i has class i % 2, so class 0 receives the odd remainder.
template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> gen_cubes(std::size_t count, const CubesSpec& spec,
                                         std::vector<CubesLayout>* layouts = nullptr) {
  spec.validate();
  if (count == 0) throw ValidationError("CUBES example count must be at least 1");
  Rng rng(spec.seed);
  auto place = [&](unsigned size) {
    PlacedSquare sq;
    sq.size = size;
    sq.row = static_cast<unsigned>(uniform_below(rng, spec.side - size + 1));
    sq.col = static_cast<unsigned>(uniform_below(rng, spec.side - size + 1));
    return sq;
  };
  DatasetAssembler<Word> out(count, std::size_t{spec.side} * spec.side);
  if (layouts != nullptr) layouts->clear();
  for (std::size_t i = 0; i < count; ++i) {
    CubesLayout layout;
    layout.label = (i % 2) == 1;
    if (layout.label) {
      layout.squares = {place(spec.pair_large), place(spec.pair_small)};
    } else {
      layout.squares = {place(spec.single_side)};
    }
    auto image = render_cubes(layout, spec.side);
    if (spec.delta > 0.0) {
      for (auto& px : image) {
        if (bernoulli(rng, spec.delta)) px ^= 1;
      }
    }
    out.add_row(image, layout.label);
    if (layouts != nullptr) layouts->push_back(std::move(layout));
  }
  return std::move(out).build();
}

// ---------------------------------------------------------------------------
// GAUSS: lists of 16-bit integers drawn from one of two normal distributions,
// encoded big-endian (most significant bit first).

struct GaussSpec {
  unsigned length = 32;
  unsigned bits = 16;
  double mu0 = 32768.0;
  double sigma0 = 2000.0;
  double mu1 = 32768.0;
  double sigma1 = 8000.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (length == 0) throw ValidationError("GAUSS list length must be positive");
    if (bits == 0 || bits > 32) throw ValidationError("GAUSS bits per integer must be in [1, 32]");
    if (sigma0 < 0.0 || sigma1 < 0.0) throw ValidationError("GAUSS sigma must be non-negative");
  }
};

// Rounded to nearest, clamped to [0, 2^bits - 1].
[[nodiscard]] inline std::uint64_t gauss_value(double mu, double sigma, unsigned bits, double z) {
  const double max_value = std::ldexp(1.0, static_cast<int>(bits)) - 1.0;
  const double v = std::clamp(std::nearbyint(mu + sigma * z), 0.0, max_value);
  return static_cast<std::uint64_t>(v);
}

template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> gen_gauss(std::size_t count, const GaussSpec& spec) {
  spec.validate();
  if (count == 0) throw ValidationError("GAUSS example count must be at least 1");
  Rng rng(spec.seed);
  NormalSampler normal;
  DatasetAssembler<Word> out(count, std::size_t{spec.length} * spec.bits);
  std::vector<std::uint8_t> row(std::size_t{spec.length} * spec.bits);
  for (std::size_t i = 0; i < count; ++i) {
    const bool label = (i % 2) == 1;
    const double mu = label ? spec.mu1 : spec.mu0;
    const double sigma = label ? spec.sigma1 : spec.sigma0;
    for (unsigned j = 0; j < spec.length; ++j) {
      const std::uint64_t v = gauss_value(mu, sigma, spec.bits, normal(rng));
      for (unsigned b = 0; b < spec.bits; ++b) {
        row[std::size_t{j} * spec.bits + b] = static_cast<std::uint8_t>((v >> (spec.bits - 1 - b)) & 1u);
      }
    }
    out.add_row(row, label);
  }
  return std::move(out).build();
}

// ---------------------------------------------------------------------------
// Quantization of 8-bit channel values to their k most significant bits.

struct QuantizeSpec {
  unsigned bits = 2;
  unsigned channels = 1;

  void validate() const {
    if (bits < 1 || bits > 8) throw ValidationError("bits per channel must be in [1, 8]");
    if (channels < 1) throw ValidationError("channel count must be positive");
  }
};

// Appends the top `bits` bits of every value, MSB first.
inline void quantize_msb_into(std::span<const std::uint8_t> values, unsigned bits, std::vector<std::uint8_t>& out) {
  for (std::uint8_t v : values) {
    for (unsigned b = 0; b < bits; ++b) out.push_back(static_cast<std::uint8_t>((v >> (7 - b)) & 1u));
  }
}

[[nodiscard]] inline std::vector<std::uint8_t> quantize_msb(std::span<const std::uint8_t> values,
                                                            const QuantizeSpec& spec) {
  spec.validate();
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * spec.bits);
  quantize_msb_into(values, spec.bits, out);
  return out;
}

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t be_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  if (bytes.size() < at + 4) throw FormatError("truncated IDX header", bytes.size());
  return (static_cast<std::uint32_t>(bytes[at]) << 24) | (static_cast<std::uint32_t>(bytes[at + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[at + 2]) << 8) | static_cast<std::uint32_t>(bytes[at + 3]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// IDX (MNIST) files: big-endian u32 magic, then u32 dimensions, then u8 data.

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;

  [[nodiscard]] std::span<const std::uint8_t> image(std::size_t i) const {
    return std::span<const std::uint8_t>(pixels).subspan(i * rows * cols, rows * cols);
  }
};

[[nodiscard]] inline IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (detail::be_u32(bytes, 0) != kIdxImageMagic) throw FormatError("bad IDX image magic", 0);
  IdxImages out;
  out.count = detail::be_u32(bytes, 4);
  out.rows = detail::be_u32(bytes, 8);
  out.cols = detail::be_u32(bytes, 12);
  const auto wide_need = static_cast<unsigned __int128>(out.count) * out.rows * out.cols;
  if (wide_need > bytes.size()) throw FormatError("IDX image data shorter than its dimensions", bytes.size());
  const auto need = static_cast<std::size_t>(wide_need);
  if (bytes.size() - 16 < need) throw FormatError("IDX image data shorter than its dimensions", bytes.size());
  if (bytes.size() - 16 > need) throw FormatError("IDX image file has trailing bytes", 16 + need);
  out.pixels.assign(bytes.begin() + 16, bytes.end());
  return out;
}

[[nodiscard]] inline std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (detail::be_u32(bytes, 0) != kIdxLabelMagic) throw FormatError("bad IDX label magic", 0);
  const std::size_t count = detail::be_u32(bytes, 4);
  if (bytes.size() - 8 < count) throw FormatError("IDX label data shorter than its count", bytes.size());
  if (bytes.size() - 8 > count) throw FormatError("IDX label file has trailing bytes", 8 + count);
  return {bytes.begin() + 8, bytes.end()};
}

// Keeps examples labelled class_a (-> 0) or class_b (-> 1) in file order.
template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> idx_to_dataset(const IdxImages& images, std::span<const std::uint8_t> labels,
                                              unsigned class_a, unsigned class_b, const QuantizeSpec& spec) {
  spec.validate();
  if (labels.size() != images.count) {
    throw FormatError("IDX label count " + std::to_string(labels.size()) + " differs from image count " +
                          std::to_string(images.count),
                      4);
  }
  std::size_t kept = 0;
  for (std::uint8_t l : labels) kept += (l == class_a || l == class_b) ? 1 : 0;
  if (kept == 0) throw ValidationError("no IDX examples of the requested classes");
  DatasetAssembler<Word> out(kept, images.rows * images.cols * spec.bits);
  std::vector<std::uint8_t> row;
  for (std::size_t i = 0; i < images.count; ++i) {
    if (labels[i] != class_a && labels[i] != class_b) continue;
    row.clear();
    quantize_msb_into(images.image(i), spec.bits, row);
    out.add_row(row, labels[i] == class_b);
  }
  return std::move(out).build();
}

template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> load_idx(const std::filesystem::path& image_file,
                                        const std::filesystem::path& label_file, unsigned class_a, unsigned class_b,
                                        const QuantizeSpec& spec) {
  const auto images = parse_idx_images(detail::read_file(image_file));
  const auto labels = parse_idx_labels(detail::read_file(label_file));
  return idx_to_dataset<Word>(images, labels, class_a, class_b, spec);
}

// ---------------------------------------------------------------------------
// CIFAR-10 binary batches: records of 1 label byte + 3072 bytes (R, G, B
// planes of 32x32, row-major).

inline constexpr std::size_t kCifarRecordBytes = 3073;
inline constexpr std::size_t kCifarRecordsPerBatch = 10000;
inline constexpr unsigned kCifarAutomobile = 1;
inline constexpr unsigned kCifarBird = 2;

struct CifarOptions {
  unsigned class_a = kCifarAutomobile;
  unsigned class_b = kCifarBird;
  // Records each batch must hold; 0 accepts any whole number of records.
  std::size_t expected_records = kCifarRecordsPerBatch;
};

namespace detail {

inline void check_cifar_batch(std::span<const std::uint8_t> bytes, const CifarOptions& opt) {
  const std::size_t whole = bytes.size() / kCifarRecordBytes;
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw FormatError("truncated CIFAR-10 record", whole * kCifarRecordBytes);
  }
  if (opt.expected_records != 0 && whole != opt.expected_records) {
    throw FormatError("CIFAR-10 batch holds " + std::to_string(whole) + " records, expected " +
                          std::to_string(opt.expected_records),
                      bytes.size());
  }
  for (std::size_t r = 0; r < whole; ++r) {
    if (bytes[r * kCifarRecordBytes] > 9) throw FormatError("CIFAR-10 label out of range", r * kCifarRecordBytes);
  }
}

}  // namespace detail

template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> cifar_to_dataset(std::span<const std::vector<std::uint8_t>> batches,
                                                const QuantizeSpec& spec, const CifarOptions& opt = {}) {
  spec.validate();
  std::size_t kept = 0;
  for (const auto& b : batches) {
    detail::check_cifar_batch(b, opt);
    for (std::size_t at = 0; at < b.size(); at += kCifarRecordBytes) {
      kept += (b[at] == opt.class_a || b[at] == opt.class_b) ? 1 : 0;
    }
  }
  if (kept == 0) throw ValidationError("no CIFAR-10 examples of the requested classes");
  DatasetAssembler<Word> out(kept, (kCifarRecordBytes - 1) * spec.bits);
  std::vector<std::uint8_t> row;
  for (const auto& b : batches) {
    for (std::size_t at = 0; at < b.size(); at += kCifarRecordBytes) {
      const unsigned label = b[at];
      if (label != opt.class_a && label != opt.class_b) continue;
      row.clear();
      quantize_msb_into(std::span<const std::uint8_t>(b).subspan(at + 1, kCifarRecordBytes - 1), spec.bits, row);
      out.add_row(row, label == opt.class_b);
    }
  }
  return std::move(out).build();
}

template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> load_cifar10(std::span<const std::filesystem::path> files, const QuantizeSpec& spec,
                                            const CifarOptions& opt = {}) {
  std::vector<std::vector<std::uint8_t>> batches;
  for (const auto& f : files) batches.push_back(detail::read_file(f));
  return cifar_to_dataset<Word>(batches, spec, opt);
}

// ---------------------------------------------------------------------------
// amat text: whitespace-separated numbers, one example per line, label last.

template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> parse_amat(std::istream& in, double threshold = 0.5) {
  std::vector<std::vector<std::uint8_t>> rows;
  std::vector<std::uint8_t> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    values.clear();
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p == end) break;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' && *next != '\r')) {
        throw ParseError("non-numeric token in amat file", line_no);
      }
      values.push_back(v);
      p = next;
    }
    if (values.empty()) continue;
    if (values.size() < 2) throw ParseError("amat row needs at least one pixel and a label", line_no);
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw ParseError("ragged amat row: " + std::to_string(values.size()) + " columns, expected " +
                           std::to_string(width),
                       line_no);
    }
    const double label = values.back();
    if (label != 0.0 && label != 1.0) throw ParseError("amat label must be 0 or 1", line_no);
    std::vector<std::uint8_t> row(width - 1);
    for (std::size_t i = 0; i + 1 < width; ++i) row[i] = values[i] >= threshold ? 1 : 0;
    rows.push_back(std::move(row));
    labels.push_back(label == 1.0 ? 1 : 0);
  }
  if (rows.empty()) throw ParseError("amat input has no examples", line_no);
  return make_dataset<Word>(rows, labels);
}

template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> load_amat(const std::filesystem::path& path, double threshold = 0.5) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return parse_amat<Word>(in, threshold);
}

// ---------------------------------------------------------------------------
// Canonical text dump for fixture exchange:
//   bgd <n_examples> <n_features>
//   <label> <hex row>          (one line per example)
// Row bits are grouped four to a hex digit, first feature in the most
// significant position; the last digit is zero-padded on the right.

template <PackWord Word>
void write_dump(const BitDataset<Word>& ds, std::ostream& out) {
  static constexpr char kDigits[] = "0123456789abcdef";
  out << "bgd " << ds.n_examples << ' ' << ds.n_features << '\n';
  std::string hex((ds.n_features + 3) / 4, '0');
  for (std::size_t e = 0; e < ds.n_examples; ++e) {
    for (std::size_t d = 0; d < hex.size(); ++d) {
      unsigned nibble = 0;
      for (unsigned b = 0; b < 4; ++b) {
        const std::size_t f = d * 4 + b;
        if (f < ds.n_features && ds.features[f].positive.test(e)) nibble |= 8u >> b;
      }
      hex[d] = kDigits[nibble];
    }
    out << (ds.labels.test(e) ? '1' : '0') << ' ' << hex << '\n';
  }
}

template <PackWord Word = std::uint64_t>
[[nodiscard]] BitDataset<Word> read_dump(std::istream& in) {
  std::string tag;
  std::size_t n = 0;
  std::size_t m = 0;
  std::string header;
  if (!std::getline(in, header)) throw ParseError("missing bgd header", 1);
  std::istringstream hs(header);
  if (!(hs >> tag >> n >> m) || tag != "bgd" || n == 0) throw ParseError("bad bgd header", 1);
  DatasetAssembler<Word> out(n, m);
  std::vector<std::uint8_t> row(m);
  std::string line;
  for (std::size_t e = 0; e < n; ++e) {
    const std::size_t line_no = e + 2;
    if (!std::getline(in, line)) throw ParseError("bgd dump ends early", line_no);
    if (line.size() != 2 + (m + 3) / 4 || (line[0] != '0' && line[0] != '1') || line[1] != ' ') {
      throw ParseError("malformed bgd row", line_no);
    }
    for (std::size_t d = 0; d < (m + 3) / 4; ++d) {
      const char c = line[2 + d];
      unsigned nibble = 0;
      if (c >= '0' && c <= '9') {
        nibble = static_cast<unsigned>(c - '0');
      } else if (c >= 'a' && c <= 'f') {
        nibble = static_cast<unsigned>(c - 'a' + 10);
      } else {
        throw ParseError("bad hex digit in bgd row", line_no);
      }
      for (unsigned b = 0; b < 4; ++b) {
        const std::size_t f = d * 4 + b;
        if (f < m) row[f] = static_cast<std::uint8_t>((nibble >> (3 - b)) & 1u);
      }
    }
    out.add_row(row, line[0] == '1');
  }
  return std::move(out).build();
}

}  // namespace bgc
