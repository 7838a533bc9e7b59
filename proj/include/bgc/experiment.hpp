#pragma once

// Experiment driver behind the command-line tool: dataset construction,
// training, evaluation, model/prediction output, CSV rows and sweep tables.
//
// CSV schema (one header line, then one row per run; errors in percent):
//   dataset,source,delta,mu0,sigma0,mu1,sigma1,bits,class_a,class_b,
//   train_size,test_size,a,d,t,n,accept_equal,seed,word_bits,
//   train_err,test_err,accepted,rejected,data_ms,greedy_ms,hill_ms,eval_ms
// Columns that do not apply to the dataset are left empty.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "bgc/bitcore.hpp"
#include "bgc/circuit.hpp"
#include "bgc/data.hpp"
#include "bgc/errors.hpp"
#include "bgc/learn.hpp"
#include "bgc/model_io.hpp"
#include "bgc/random.hpp"

namespace bgc {

enum class DatasetKind { Cubes, Gauss, Mnist, Cifar, Amat };

[[nodiscard]] inline std::string dataset_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Cubes:
      return "cubes";
    case DatasetKind::Gauss:
      return "gauss";
    case DatasetKind::Mnist:
      return "mnist";
    case DatasetKind::Cifar:
      return "cifar";
    case DatasetKind::Amat:
      return "amat";
  }
  return "unknown";
}

[[nodiscard]] inline DatasetKind parse_dataset_kind(std::string_view name) {
  for (auto k : {DatasetKind::Cubes, DatasetKind::Gauss, DatasetKind::Mnist, DatasetKind::Cifar, DatasetKind::Amat}) {
    if (dataset_name(k) == name) return k;
  }
  throw ValidationError("unknown dataset '" + std::string(name) + "'");
}

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::Cubes;
  double delta = 0.1;
  double mu0 = 32768.0;
  double sigma0 = 2000.0;
  double mu1 = 32768.0;
  double sigma1 = 8000.0;
  unsigned bits = 2;
  std::optional<unsigned> class_a;
  std::optional<unsigned> class_b;

  std::filesystem::path mnist_train_images;
  std::filesystem::path mnist_train_labels;
  std::filesystem::path mnist_test_images;
  std::filesystem::path mnist_test_labels;
  std::vector<std::filesystem::path> cifar_train;
  std::vector<std::filesystem::path> cifar_test;
  std::filesystem::path amat_train;
  std::filesystem::path amat_test;

  // Unset sizes take the per-dataset defaults below.
  std::optional<std::size_t> train;
  std::optional<std::size_t> test;

  unsigned arity = 4;
  unsigned depth = 8;
  std::optional<unsigned> t;
  std::uint64_t trials = 0;
  bool accept_equal = false;
  std::uint64_t seed = 0;
  unsigned repeat = 1;
  unsigned threads = 1;
  unsigned word_bits = 64;

  std::filesystem::path model_out;
  std::filesystem::path csv_out;
  std::filesystem::path predict_out;

  [[nodiscard]] std::size_t train_size() const {
    if (train) return *train;
    switch (dataset) {
      case DatasetKind::Gauss:
        return 10000;
      case DatasetKind::Mnist:
        return 2276;
      case DatasetKind::Cifar:
        return 10000;
      case DatasetKind::Amat:
        return 8000;
      case DatasetKind::Cubes:
        break;
    }
    return 12000;
  }

  [[nodiscard]] std::size_t test_size() const {
    if (test) return *test;
    switch (dataset) {
      case DatasetKind::Gauss:
        return 10000;
      case DatasetKind::Mnist:
        return 9662;
      case DatasetKind::Cifar:
        return 2000;
      case DatasetKind::Amat:
      case DatasetKind::Cubes:
        break;
    }
    return 50000;
  }

  [[nodiscard]] unsigned propagation() const { return t.value_or(std::min(4u, depth)); }

  [[nodiscard]] unsigned first_class() const {
    if (class_a) return *class_a;
    return dataset == DatasetKind::Cifar ? kCifarAutomobile : 3;
  }
  [[nodiscard]] unsigned second_class() const {
    if (class_b) return *class_b;
    return dataset == DatasetKind::Cifar ? kCifarBird : 5;
  }

  [[nodiscard]] TrainConfig train_config(std::uint64_t run_seed) const {
    TrainConfig tc;
    tc.arity = arity;
    tc.depth = depth;
    tc.propagation = propagation();
    tc.trials = trials;
    tc.accept_equal = accept_equal;
    tc.seed = derive_seed(run_seed, 3);
    tc.threads = threads;
    tc.retain_cache = trials > 0;
    return tc;
  }

  void validate() const {
    if (train_size() < 1) throw ValidationError("--train must be at least 1");
    if (test_size() < 1) throw ValidationError("--test must be at least 1");
    if (repeat < 1) throw ValidationError("--repeat must be at least 1");
    if (word_bits != 32 && word_bits != 64) throw ValidationError("--word-bits must be 32 or 64");
    if (threads < 1) throw ValidationError("--threads must be at least 1");
    train_config(seed).validate();
    if (dataset == DatasetKind::Cubes && !(delta >= 0.0 && delta <= 1.0)) {
      throw ValidationError("--delta must be in [0, 1]");
    }
    if (dataset == DatasetKind::Gauss && (sigma0 < 0.0 || sigma1 < 0.0)) {
      throw ValidationError("GAUSS sigma must be non-negative");
    }
    if (dataset == DatasetKind::Mnist || dataset == DatasetKind::Cifar) QuantizeSpec{bits, 1}.validate();
    auto must_exist = [](const std::filesystem::path& p, const char* flag) {
      if (p.empty()) throw ValidationError(std::string(flag) + " is required for this dataset");
      if (!std::filesystem::exists(p)) throw ValidationError(std::string(flag) + " file not found: " + p.string());
    };
    switch (dataset) {
      case DatasetKind::Mnist:
        must_exist(mnist_train_images, "--mnist-train-images");
        must_exist(mnist_train_labels, "--mnist-train-labels");
        if (!mnist_test_images.empty() || !mnist_test_labels.empty()) {
          must_exist(mnist_test_images, "--mnist-test-images");
          must_exist(mnist_test_labels, "--mnist-test-labels");
        }
        break;
      case DatasetKind::Cifar:
        if (cifar_train.empty()) throw ValidationError("--cifar-train is required for this dataset");
        if (cifar_test.empty()) throw ValidationError("--cifar-test is required for this dataset");
        for (const auto& p : cifar_train) must_exist(p, "--cifar-train");
        for (const auto& p : cifar_test) must_exist(p, "--cifar-test");
        break;
      case DatasetKind::Amat:
        must_exist(amat_train, "--amat-train");
        must_exist(amat_test, "--amat-test");
        break;
      case DatasetKind::Cubes:
      case DatasetKind::Gauss:
        break;
    }
  }
};

template <PackWord Word>
struct DataSplit {
  BitDataset<Word> train;
  BitDataset<Word> test;
};

namespace detail {

template <PackWord Word>
BitDataset<Word> first_examples(const BitDataset<Word>& ds, std::size_t count, const char* what) {
  if (count > ds.n_examples) {
    throw ValidationError(std::string("requested ") + std::to_string(count) + " " + what + " examples but only " +
                          std::to_string(ds.n_examples) + " are available");
  }
  if (count == ds.n_examples) return ds;
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return select_examples(ds, idx);
}

}  // namespace detail

// Datasets of one run. Synthetic sets are drawn from seed-derived streams;
// MNIST pools all supplied 3/5 examples and splits them after a seeded
// shuffle; CIFAR and amat take the leading examples of each file set.
template <PackWord Word>
[[nodiscard]] DataSplit<Word> build_datasets(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  const std::size_t n_train = cfg.train_size();
  const std::size_t n_test = cfg.test_size();
  DataSplit<Word> out;
  switch (cfg.dataset) {
    case DatasetKind::Cubes: {
      CubesSpec spec;
      spec.delta = cfg.delta;
      spec.seed = derive_seed(run_seed, 1);
      out.train = gen_cubes<Word>(n_train, spec);
      spec.seed = derive_seed(run_seed, 2);
      out.test = gen_cubes<Word>(n_test, spec);
      break;
    }
    case DatasetKind::Gauss: {
      GaussSpec spec;
      spec.mu0 = cfg.mu0;
      spec.sigma0 = cfg.sigma0;
      spec.mu1 = cfg.mu1;
      spec.sigma1 = cfg.sigma1;
      spec.seed = derive_seed(run_seed, 1);
      out.train = gen_gauss<Word>(n_train, spec);
      spec.seed = derive_seed(run_seed, 2);
      out.test = gen_gauss<Word>(n_test, spec);
      break;
    }
    case DatasetKind::Mnist: {
      const QuantizeSpec q{cfg.bits, 1};
      auto pool = load_idx<Word>(cfg.mnist_train_images, cfg.mnist_train_labels, cfg.first_class(),
                                 cfg.second_class(), q);
      if (!cfg.mnist_test_images.empty()) {
        pool = concat_examples(pool, load_idx<Word>(cfg.mnist_test_images, cfg.mnist_test_labels, cfg.first_class(),
                                                    cfg.second_class(), q));
      }
      if (n_train + n_test > pool.n_examples) {
        throw ValidationError("MNIST pool has " + std::to_string(pool.n_examples) + " examples, " +
                              std::to_string(n_train + n_test) + " requested");
      }
      std::vector<std::size_t> order(pool.n_examples);
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(derive_seed(run_seed, 4));
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng, i)]);
      out.train = select_examples(pool, std::span<const std::size_t>(order).first(n_train));
      out.test = select_examples(pool, std::span<const std::size_t>(order).subspan(n_train, n_test));
      break;
    }
    case DatasetKind::Cifar: {
      const QuantizeSpec q{cfg.bits, 3};
      CifarOptions opt;
      opt.class_a = cfg.first_class();
      opt.class_b = cfg.second_class();
      out.train = detail::first_examples(load_cifar10<Word>(cfg.cifar_train, q, opt), n_train, "training");
      out.test = detail::first_examples(load_cifar10<Word>(cfg.cifar_test, q, opt), n_test, "test");
      break;
    }
    case DatasetKind::Amat: {
      out.train = detail::first_examples(load_amat<Word>(cfg.amat_train), n_train, "training");
      out.test = detail::first_examples(load_amat<Word>(cfg.amat_test), n_test, "test");
      break;
    }
  }
  return out;
}

struct RunResult {
  std::uint64_t seed = 0;
  TrainReport report;
  std::string csv_row;
  std::filesystem::path model_path;
};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string source_of(const ExperimentConfig& cfg) {
  std::vector<std::string> parts;
  auto add = [&](const std::filesystem::path& p) {
    if (!p.empty()) parts.push_back(p.string());
  };
  switch (cfg.dataset) {
    case DatasetKind::Mnist:
      add(cfg.mnist_train_images);
      add(cfg.mnist_train_labels);
      add(cfg.mnist_test_images);
      add(cfg.mnist_test_labels);
      break;
    case DatasetKind::Cifar:
      for (const auto& p : cfg.cifar_train) add(p);
      parts.emplace_back("|");
      for (const auto& p : cfg.cifar_test) add(p);
      break;
    case DatasetKind::Amat:
      add(cfg.amat_train);
      add(cfg.amat_test);
      break;
    case DatasetKind::Cubes:
    case DatasetKind::Gauss:
      break;
  }
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ";" : "") + parts[i];
  return out;
}

}  // namespace detail

[[nodiscard]] inline std::string csv_header() {
  return "dataset,source,delta,mu0,sigma0,mu1,sigma1,bits,class_a,class_b,train_size,test_size,a,d,t,n,"
         "accept_equal,seed,word_bits,train_err,test_err,accepted,rejected,data_ms,greedy_ms,hill_ms,eval_ms";
}

[[nodiscard]] inline std::string csv_row(const ExperimentConfig& cfg, std::uint64_t run_seed,
                                         const TrainReport& report) {
  const bool cubes = cfg.dataset == DatasetKind::Cubes;
  const bool gauss = cfg.dataset == DatasetKind::Gauss;
  const bool images = cfg.dataset == DatasetKind::Mnist || cfg.dataset == DatasetKind::Cifar;
  std::vector<std::string> f = {
      dataset_name(cfg.dataset),
      detail::csv_field(detail::source_of(cfg)),
      cubes ? detail::fixed(cfg.delta, 4) : "",
      gauss ? detail::fixed(cfg.mu0, 2) : "",
      gauss ? detail::fixed(cfg.sigma0, 2) : "",
      gauss ? detail::fixed(cfg.mu1, 2) : "",
      gauss ? detail::fixed(cfg.sigma1, 2) : "",
      images ? std::to_string(cfg.bits) : "",
      images ? std::to_string(cfg.first_class()) : "",
      images ? std::to_string(cfg.second_class()) : "",
      std::to_string(cfg.train_size()),
      std::to_string(cfg.test_size()),
      std::to_string(cfg.arity),
      std::to_string(cfg.depth),
      std::to_string(cfg.propagation()),
      std::to_string(cfg.trials),
      cfg.accept_equal ? "1" : "0",
      std::to_string(run_seed),
      std::to_string(cfg.word_bits),
      detail::fixed(100.0 * report.train_error, 4),
      report.test_error ? detail::fixed(100.0 * *report.test_error, 4) : "",
      std::to_string(report.accepted),
      std::to_string(report.rejected),
      detail::fixed(report.timing("data"), 1),
      detail::fixed(report.timing("greedy"), 1),
      detail::fixed(report.timing("hill_climb"), 1),
      detail::fixed(report.timing("eval"), 1),
  };
  std::string row;
  for (std::size_t i = 0; i < f.size(); ++i) row += (i ? "," : "") + f[i];
  return row;
}

// Appends one complete row (plus the header when the file is new or empty)
// with a single write.
inline void append_csv(const std::filesystem::path& path, const std::string& row) {
  std::string chunk;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0) chunk = csv_header() + "\n";
  chunk += row + "\n";
  std::ofstream out(path, std::ios::app | std::ios::binary);
  if (!out) throw ValidationError("cannot open CSV output " + path.string());
  out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  out.flush();
  if (!out) throw ValidationError("failed writing CSV output " + path.string());
}

inline void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("failed writing " + path.string());
}

template <PackWord Word>
void write_predictions(const std::filesystem::path& path, const BitVector<Word>& predictions) {
  std::string text;
  text.reserve(predictions.size() * 2);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    text += predictions.test(i) ? '1' : '0';
    text += '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
  out << text;
}

// Output path for repeat `index`: unchanged for single runs, otherwise with
// ".seed<k>" inserted before the extension.
[[nodiscard]] inline std::filesystem::path per_run_path(const std::filesystem::path& base, unsigned repeat,
                                                        std::uint64_t run_seed) {
  if (base.empty() || repeat <= 1) return base;
  std::filesystem::path p = base;
  p.replace_filename(base.stem().string() + ".seed" + std::to_string(run_seed) + base.extension().string());
  return p;
}

template <PackWord Word>
[[nodiscard]] RunResult run_once(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  detail::Stopwatch data_clock;
  const auto data = build_datasets<Word>(cfg, run_seed);
  const double data_ms = data_clock.elapsed_ms();

  const TrainConfig tc = cfg.train_config(run_seed);
  auto result = train_greedy<Word>(data.train, nullptr, tc);
  TrainReport report = result.report;
  report.timings.insert(report.timings.begin(), {"data", data_ms});
  if (tc.trials > 0) {
    Rng rng(derive_seed(run_seed, 5));
    const TrainReport climb = hill_climb(result.tree, result.cache, data.train, tc, rng);
    report.train_error = climb.train_error;
    report.trials = climb.trials;
    report.accepted = climb.accepted;
    report.rejected = climb.rejected;
    report.nodes_refit = climb.nodes_refit;
    report.nodes_recomputed = climb.nodes_recomputed;
    report.timings.push_back({"hill_climb", climb.timing("hill_climb")});
    result.cache = {};
  }
  detail::Stopwatch eval_clock;
  const auto predictions = predict(result.tree, data.test, cfg.threads);
  report.test_error = error_rate(predictions, data.test.labels);
  report.timings.push_back({"eval", eval_clock.elapsed_ms()});

  RunResult out;
  out.seed = run_seed;
  out.report = report;
  out.csv_row = csv_row(cfg, run_seed, report);
  out.model_path = per_run_path(cfg.model_out, cfg.repeat, run_seed);
  if (!out.model_path.empty()) write_bytes(out.model_path, serialize(result.tree));
  const auto pred_path = per_run_path(cfg.predict_out, cfg.repeat, run_seed);
  if (!pred_path.empty()) write_predictions(pred_path, predictions);
  return out;
}

// Runs cfg.repeat experiments with seeds seed, seed+1, ... Each completed
// run appends its CSV row before the next one starts.
[[nodiscard]] inline std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<RunResult> results;
  for (unsigned i = 0; i < cfg.repeat; ++i) {
    const std::uint64_t run_seed = cfg.seed + i;
    RunResult r = cfg.word_bits == 32 ? run_once<std::uint32_t>(cfg, run_seed) : run_once<std::uint64_t>(cfg, run_seed);
    if (!cfg.csv_out.empty()) append_csv(cfg.csv_out, r.csv_row);
    results.push_back(std::move(r));
  }
  return results;
}

[[nodiscard]] inline double median(std::vector<double> v) {
  if (v.empty()) throw DomainError("median of an empty list");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepGrid {
  std::optional<std::vector<unsigned>> arity;
  std::optional<std::vector<unsigned>> depth;
  std::optional<std::vector<unsigned>> t;
  std::optional<std::vector<std::uint64_t>> trials;
  std::optional<std::vector<double>> delta;
  std::optional<std::vector<unsigned>> bits;

  void validate() const {
    auto check = [](const auto& axis, const char* name) {
      if (axis && axis->empty()) throw ValidationError(std::string("sweep list for ") + name + " is empty");
    };
    check(arity, "a");
    check(depth, "d");
    check(t, "t");
    check(trials, "n");
    check(delta, "delta");
    check(bits, "bits");
  }
};

enum class CellStatus { Done, Skipped, Failed };

struct SweepCell {
  ExperimentConfig config;
  CellStatus status = CellStatus::Done;
  std::string message;
  std::vector<RunResult> runs;

  [[nodiscard]] double median_train() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.report.train_error);
    return median(v);
  }
  [[nodiscard]] double median_test() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.report.test_error.value_or(0.0));
    return median(v);
  }
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::string table;
  std::vector<std::string> csv_rows;
};

namespace detail {

enum class Axis { A, D, T, N, Delta, Bits };

inline const char* axis_name(Axis a) {
  switch (a) {
    case Axis::A:
      return "a";
    case Axis::D:
      return "d";
    case Axis::T:
      return "t";
    case Axis::N:
      return "n";
    case Axis::Delta:
      return "delta";
    case Axis::Bits:
      return "bits";
  }
  return "?";
}

inline std::string axis_value(const ExperimentConfig& c, Axis a) {
  switch (a) {
    case Axis::A:
      return std::to_string(c.arity);
    case Axis::D:
      return std::to_string(c.depth);
    case Axis::T:
      return std::to_string(c.propagation());
    case Axis::N:
      return std::to_string(c.trials);
    case Axis::Delta: {
      std::ostringstream os;
      os << c.delta;
      return os.str();
    }
    case Axis::Bits:
      return std::to_string(c.bits);
  }
  return "";
}

inline std::size_t axis_size(const SweepGrid& g, Axis a) {
  switch (a) {
    case Axis::A:
      return g.arity ? g.arity->size() : 1;
    case Axis::D:
      return g.depth ? g.depth->size() : 1;
    case Axis::T:
      return g.t ? g.t->size() : 1;
    case Axis::N:
      return g.trials ? g.trials->size() : 1;
    case Axis::Delta:
      return g.delta ? g.delta->size() : 1;
    case Axis::Bits:
      return g.bits ? g.bits->size() : 1;
  }
  return 1;
}

inline void apply_axis(ExperimentConfig& c, const SweepGrid& g, Axis a, std::size_t i) {
  switch (a) {
    case Axis::A:
      if (g.arity) c.arity = (*g.arity)[i];
      break;
    case Axis::D:
      if (g.depth) c.depth = (*g.depth)[i];
      break;
    case Axis::T:
      if (g.t) c.t = (*g.t)[i];
      break;
    case Axis::N:
      if (g.trials) c.trials = (*g.trials)[i];
      break;
    case Axis::Delta:
      if (g.delta) c.delta = (*g.delta)[i];
      break;
    case Axis::Bits:
      if (g.bits) c.bits = (*g.bits)[i];
      break;
  }
}

inline constexpr Axis kAxes[] = {Axis::A, Axis::D, Axis::T, Axis::N, Axis::Delta, Axis::Bits};

}  // namespace detail

// Runs the cross product of the grid over `base`. Cells whose tree would
// exceed `leaf_cap` leaves, or with t > d, are skipped and left blank; a cell
// that throws is marked failed and the sweep continues.
[[nodiscard]] inline SweepResult run_sweep(const SweepGrid& grid, const ExperimentConfig& base,
                                           std::uint64_t leaf_cap = std::uint64_t{1} << 20,
                                           std::ostream* log = nullptr) {
  using detail::Axis;
  grid.validate();
  SweepResult out;

  std::vector<std::size_t> sizes;
  for (Axis a : detail::kAxes) sizes.push_back(detail::axis_size(grid, a));
  std::vector<std::size_t> idx(sizes.size(), 0);
  for (bool more = true; more;) {
    SweepCell cell;
    cell.config = base;
    for (std::size_t k = 0; k < sizes.size(); ++k) detail::apply_axis(cell.config, grid, detail::kAxes[k], idx[k]);
    const ExperimentConfig& c = cell.config;
    try {
      const TreeShape shape = tree_shape(c.arity, c.depth);
      if (shape.leaf_count > leaf_cap) {
        cell.status = CellStatus::Skipped;
        cell.message = "a^d = " + std::to_string(shape.leaf_count) + " exceeds leaf cap " + std::to_string(leaf_cap);
      } else if (c.propagation() > c.depth) {
        cell.status = CellStatus::Skipped;
        cell.message = "t > d";
      }
    } catch (const CapacityError& e) {
      cell.status = CellStatus::Skipped;
      cell.message = e.what();
    }
    if (cell.status == CellStatus::Done) {
      try {
        cell.runs = run_experiment(c);
        for (const auto& r : cell.runs) out.csv_rows.push_back(r.csv_row);
      } catch (const std::exception& e) {
        cell.status = CellStatus::Failed;
        cell.message = e.what();
      }
    }
    if (log != nullptr && cell.status != CellStatus::Done) {
      *log << "cell a=" << c.arity << " d=" << c.depth << " t=" << c.propagation() << " n=" << c.trials
           << (cell.status == CellStatus::Skipped ? " skipped: " : " failed: ") << cell.message << '\n';
    }
    out.cells.push_back(std::move(cell));

    more = false;
    for (std::size_t k = sizes.size(); k-- > 0;) {
      if (++idx[k] < sizes[k]) {
        more = true;
        break;
      }
      idx[k] = 0;
    }
  }

  // Table axes: the first two swept axes with several values, falling back to a and d.
  std::vector<Axis> order;
  for (Axis a : detail::kAxes) {
    if (detail::axis_size(grid, a) > 1) order.push_back(a);
  }
  for (Axis a : {Axis::A, Axis::D}) {
    if (std::find(order.begin(), order.end(), a) == order.end()) order.push_back(a);
  }
  const Axis row_axis = order[0];
  const Axis col_axis = order[1];

  auto unique_values = [&](Axis a, const std::vector<const SweepCell*>& cells) {
    std::vector<std::string> vals;
    for (const auto* c : cells) {
      const auto v = detail::axis_value(c->config, a);
      if (std::find(vals.begin(), vals.end(), v) == vals.end()) vals.push_back(v);
    }
    return vals;
  };
  auto block_key = [&](const SweepCell& c) {
    std::string key;
    for (Axis a : detail::kAxes) {
      if (a == row_axis || a == col_axis || detail::axis_size(grid, a) <= 1) continue;
      key += std::string(detail::axis_name(a)) + "=" + detail::axis_value(c.config, a) + " ";
    }
    return key;
  };

  std::vector<std::string> blocks;
  for (const auto& c : out.cells) {
    const auto k = block_key(c);
    if (std::find(blocks.begin(), blocks.end(), k) == blocks.end()) blocks.push_back(k);
  }
  std::ostringstream table;
  for (const auto& block : blocks) {
    std::vector<const SweepCell*> cells;
    for (const auto& c : out.cells) {
      if (block_key(c) == block) cells.push_back(&c);
    }
    if (!block.empty()) table << "# " << block << '\n';
    const auto rows = unique_values(row_axis, cells);
    const auto cols = unique_values(col_axis, cells);
    table << std::left << std::setw(10) << (std::string(detail::axis_name(row_axis)) + "\\" + detail::axis_name(col_axis))
          << std::setw(7) << "";
    for (const auto& cv : cols) table << std::right << std::setw(8) << cv;
    table << '\n';
    for (const auto& rv : rows) {
      for (const char* which : {"Train", "Test"}) {
        table << std::left << std::setw(10) << rv << std::setw(7) << which;
        for (const auto& cv : cols) {
          std::string text;
          for (const auto* c : cells) {
            if (detail::axis_value(c->config, row_axis) != rv || detail::axis_value(c->config, col_axis) != cv) continue;
            if (c->status == CellStatus::Failed) {
              text = "fail";
            } else if (c->status == CellStatus::Done) {
              const double v = std::string(which) == "Train" ? c->median_train() : c->median_test();
              text = detail::fixed(100.0 * v, 2);
            }
          }
          table << std::right << std::setw(8) << text;
        }
        table << '\n';
      }
    }
  }
  out.table = table.str();
  return out;
}

// ---------------------------------------------------------------------------
// Classification with a saved model.

enum class Split { Train, Test };

struct ClassifyResult {
  std::size_t examples = 0;
  std::optional<double> error;
  double seconds = 0.0;
  double examples_per_second = 0.0;
};

template <PackWord Word>
[[nodiscard]] ClassifyResult classify_with(const CircuitTree& tree, const BitDataset<Word>& data, unsigned threads,
                                           const std::filesystem::path& predict_out) {
  if (tree.n_features != 0 && tree.n_features != data.n_features) {
    throw ValidationError("model expects " + std::to_string(tree.n_features) + " input bits but the dataset has " +
                          std::to_string(data.n_features));
  }
  detail::Stopwatch clock;
  const auto predictions = predict(tree, data, threads);
  ClassifyResult out;
  out.seconds = clock.elapsed_ms() / 1000.0;
  out.examples = data.n_examples;
  out.examples_per_second = out.seconds > 0 ? static_cast<double>(data.n_examples) / out.seconds : 0.0;
  out.error = error_rate(predictions, data.labels);
  if (!predict_out.empty()) write_predictions(predict_out, predictions);
  return out;
}

[[nodiscard]] inline CircuitTree load_model(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return deserialize(bytes);
}

// Rebuilds the dataset described by `cfg` (same seed, same split) and
// classifies it with the model stored at `model_path`.
[[nodiscard]] inline ClassifyResult classify(const std::filesystem::path& model_path, const ExperimentConfig& cfg,
                                             Split split) {
  cfg.validate();
  const CircuitTree tree = load_model(model_path);
  auto run = [&]<PackWord Word>() {
    auto data = build_datasets<Word>(cfg, cfg.seed);
    return classify_with(tree, split == Split::Train ? data.train : data.test, cfg.threads, cfg.predict_out);
  };
  return cfg.word_bits == 32 ? run.template operator()<std::uint32_t>() : run.template operator()<std::uint64_t>();
}

}  // namespace bgc
