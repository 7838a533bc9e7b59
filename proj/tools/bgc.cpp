// Command-line front end: run, sweep, classify, netlist, dump.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bgc/experiment.hpp"

namespace {

struct DatasetFlags {
  std::string dataset = "cubes";
  std::string mnist_dir;
  std::string cifar_dir;
  std::vector<std::string> cifar_train;
  std::vector<std::string> cifar_test;
  std::string amat_train;
  std::string amat_test;
  std::string mnist_train_images;
  std::string mnist_train_labels;
  std::string mnist_test_images;
  std::string mnist_test_labels;
  std::optional<unsigned> t;
};

void add_dataset_flags(CLI::App& app, bgc::ExperimentConfig& cfg, DatasetFlags& f) {
  app.add_option("--dataset", f.dataset, "cubes | gauss | mnist | cifar | amat")
      ->check(CLI::IsMember({"cubes", "gauss", "mnist", "cifar", "amat"}));
  app.add_option("--delta", cfg.delta, "CUBES pixel noise probability");
  app.add_option("--mu0", cfg.mu0, "GAUSS class-0 mean");
  app.add_option("--sigma0", cfg.sigma0, "GAUSS class-0 standard deviation");
  app.add_option("--mu1", cfg.mu1, "GAUSS class-1 mean");
  app.add_option("--sigma1", cfg.sigma1, "GAUSS class-1 standard deviation");
  app.add_option("--bits", cfg.bits, "bits kept per pixel channel (MNIST, CIFAR)");
  app.add_option("--class-a", cfg.class_a, "label mapped to 0 (MNIST default 3, CIFAR default 1)");
  app.add_option("--class-b", cfg.class_b, "label mapped to 1 (MNIST default 5, CIFAR default 2)");
  app.add_option("--train", cfg.train, "training set size");
  app.add_option("--test", cfg.test, "test set size");
  app.add_option("--seed", cfg.seed, "base seed; repeat i uses seed + i");
  app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--word-bits", cfg.word_bits, "packing word size")->check(CLI::IsMember({32u, 64u}));
  app.add_option("--mnist-dir", f.mnist_dir, "directory holding the four standard IDX files");
  app.add_option("--mnist-train-images", f.mnist_train_images);
  app.add_option("--mnist-train-labels", f.mnist_train_labels);
  app.add_option("--mnist-test-images", f.mnist_test_images);
  app.add_option("--mnist-test-labels", f.mnist_test_labels);
  app.add_option("--cifar-dir", f.cifar_dir, "directory holding data_batch_1..5.bin and test_batch.bin");
  app.add_option("--cifar-train", f.cifar_train, "CIFAR-10 training batch files");
  app.add_option("--cifar-test", f.cifar_test, "CIFAR-10 test batch files");
  app.add_option("--amat-train", f.amat_train, "training .amat file");
  app.add_option("--amat-test", f.amat_test, "test .amat file");
}

void add_train_flags(CLI::App& app, bgc::ExperimentConfig& cfg, DatasetFlags& f) {
  app.add_option("--arity,-a", cfg.arity, "gate arity");
  app.add_option("--depth,-d", cfg.depth, "tree depth");
  app.add_option("--t", f.t, "levels re-fitted per hill-climbing trial (default min(4, d))");
  app.add_option("--trials,-n", cfg.trials, "hill-climbing trials");
  app.add_flag("--accept-equal", cfg.accept_equal, "also accept trials that keep the error unchanged");
}

void finish_config(bgc::ExperimentConfig& cfg, const DatasetFlags& f) {
  cfg.dataset = bgc::parse_dataset_kind(f.dataset);
  cfg.t = f.t;
  namespace fs = std::filesystem;
  if (!f.mnist_dir.empty()) {
    const fs::path dir(f.mnist_dir);
    cfg.mnist_train_images = dir / "train-images-idx3-ubyte";
    cfg.mnist_train_labels = dir / "train-labels-idx1-ubyte";
    cfg.mnist_test_images = dir / "t10k-images-idx3-ubyte";
    cfg.mnist_test_labels = dir / "t10k-labels-idx1-ubyte";
  }
  if (!f.mnist_train_images.empty()) cfg.mnist_train_images = f.mnist_train_images;
  if (!f.mnist_train_labels.empty()) cfg.mnist_train_labels = f.mnist_train_labels;
  if (!f.mnist_test_images.empty()) cfg.mnist_test_images = f.mnist_test_images;
  if (!f.mnist_test_labels.empty()) cfg.mnist_test_labels = f.mnist_test_labels;
  if (!f.cifar_dir.empty()) {
    const fs::path dir(f.cifar_dir);
    for (int i = 1; i <= 5; ++i) cfg.cifar_train.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    cfg.cifar_test.push_back(dir / "test_batch.bin");
  }
  if (!f.cifar_train.empty()) cfg.cifar_train.assign(f.cifar_train.begin(), f.cifar_train.end());
  if (!f.cifar_test.empty()) cfg.cifar_test.assign(f.cifar_test.begin(), f.cifar_test.end());
  cfg.amat_train = f.amat_train;
  cfg.amat_test = f.amat_test;
}

void print_summary(const bgc::ExperimentConfig& cfg, const bgc::RunResult& r) {
  std::printf("%s a=%u d=%u t=%u n=%llu seed=%llu train_err=%.4f%% test_err=%.4f%% accepted=%llu time_ms=%.1f\n",
              bgc::dataset_name(cfg.dataset).c_str(), cfg.arity, cfg.depth, cfg.propagation(),
              static_cast<unsigned long long>(cfg.trials), static_cast<unsigned long long>(r.seed),
              100.0 * r.report.train_error, 100.0 * r.report.test_error.value_or(0.0),
              static_cast<unsigned long long>(r.report.accepted),
              r.report.timing("data") + r.report.timing("greedy") + r.report.timing("hill_climb") +
                  r.report.timing("eval"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boolean circuit classifier"};
  app.require_subcommand(1);

  bgc::ExperimentConfig run_cfg;
  DatasetFlags run_flags;
  auto* run = app.add_subcommand("run", "train on a dataset and report train/test error");
  add_dataset_flags(*run, run_cfg, run_flags);
  add_train_flags(*run, run_cfg, run_flags);
  run->add_option("--repeat", run_cfg.repeat, "runs with seeds seed, seed+1, ...");
  std::string model_out, csv_out, predict_out;
  run->add_option("--model-out", model_out, "write the trained model here");
  run->add_option("--csv-out", csv_out, "append one CSV row per run");
  run->add_option("--predict-out", predict_out, "write test-set predictions, one per line");

  bgc::ExperimentConfig sweep_cfg;
  DatasetFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "run a grid of configurations and print a table");
  add_dataset_flags(*sweep, sweep_cfg, sweep_flags);
  add_train_flags(*sweep, sweep_cfg, sweep_flags);
  sweep->add_option("--repeat", sweep_cfg.repeat, "seeds per cell; the table shows medians");
  std::vector<unsigned> grid_a, grid_d, grid_t, grid_bits;
  std::vector<std::uint64_t> grid_n;
  std::vector<double> grid_delta;
  std::uint64_t leaf_cap = std::uint64_t{1} << 20;
  std::string sweep_csv;
  sweep->add_option("--grid-a", grid_a, "arity values")->delimiter(',');
  sweep->add_option("--grid-d", grid_d, "depth values")->delimiter(',');
  sweep->add_option("--grid-t", grid_t, "propagation depth values")->delimiter(',');
  sweep->add_option("--grid-n", grid_n, "trial counts")->delimiter(',');
  sweep->add_option("--grid-delta", grid_delta, "CUBES noise values")->delimiter(',');
  sweep->add_option("--grid-bits", grid_bits, "pixel bit depths")->delimiter(',');
  sweep->add_option("--leaf-cap", leaf_cap, "skip cells with more leaves than this");
  sweep->add_option("--csv-out", sweep_csv, "append one CSV row per run");

  bgc::ExperimentConfig cls_cfg;
  DatasetFlags cls_flags;
  auto* cls = app.add_subcommand("classify", "apply a saved model to a dataset");
  add_dataset_flags(*cls, cls_cfg, cls_flags);
  std::string cls_model, cls_split = "test", cls_pred;
  cls->add_option("--model", cls_model, "model file")->required();
  cls->add_option("--split", cls_split, "which split to classify")->check(CLI::IsMember({"train", "test"}));
  cls->add_option("--predict-out", cls_pred, "write predictions, one per line");

  auto* net = app.add_subcommand("netlist", "export a model as a LUT netlist");
  std::string net_model, net_out;
  net->add_option("--model", net_model, "model file")->required();
  net->add_option("--out,-o", net_out, "output file (default stdout)");

  bgc::ExperimentConfig dump_cfg;
  DatasetFlags dump_flags;
  auto* dump = app.add_subcommand("dump", "write a generated or loaded dataset in text form");
  add_dataset_flags(*dump, dump_cfg, dump_flags);
  std::string dump_split = "train", dump_out;
  dump->add_option("--split", dump_split)->check(CLI::IsMember({"train", "test"}));
  dump->add_option("--out,-o", dump_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      finish_config(run_cfg, run_flags);
      run_cfg.model_out = model_out;
      run_cfg.csv_out = csv_out;
      run_cfg.predict_out = predict_out;
      for (const auto& r : bgc::run_experiment(run_cfg)) print_summary(run_cfg, r);
    } else if (sweep->parsed()) {
      finish_config(sweep_cfg, sweep_flags);
      bgc::SweepGrid grid;
      if (sweep->count("--grid-a")) grid.arity = grid_a;
      if (sweep->count("--grid-d")) grid.depth = grid_d;
      if (sweep->count("--grid-t")) grid.t = grid_t;
      if (sweep->count("--grid-n")) grid.trials = grid_n;
      if (sweep->count("--grid-delta")) grid.delta = grid_delta;
      if (sweep->count("--grid-bits")) grid.bits = grid_bits;
      sweep_cfg.csv_out = sweep_csv;
      const auto result = bgc::run_sweep(grid, sweep_cfg, leaf_cap, &std::cerr);
      std::cout << result.table;
    } else if (cls->parsed()) {
      finish_config(cls_cfg, cls_flags);
      cls_cfg.predict_out = cls_pred;
      const auto r = bgc::classify(cls_model, cls_cfg, cls_split == "train" ? bgc::Split::Train : bgc::Split::Test);
      std::printf("examples=%zu error=%.4f%% seconds=%.3f throughput=%.0f/s\n", r.examples,
                  100.0 * r.error.value_or(0.0), r.seconds, r.examples_per_second);
    } else if (net->parsed()) {
      const auto text = bgc::export_netlist(bgc::load_model(net_model));
      if (net_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(net_out, std::ios::binary) << text;
      }
    } else if (dump->parsed()) {
      finish_config(dump_cfg, dump_flags);
      dump_cfg.validate();
      const auto data = bgc::build_datasets<std::uint64_t>(dump_cfg, dump_cfg.seed);
      const auto& ds = dump_split == "train" ? data.train : data.test;
      if (dump_out.empty()) {
        bgc::write_dump(ds, std::cout);
      } else {
        std::ofstream out(dump_out, std::ios::binary);
        bgc::write_dump(ds, out);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
