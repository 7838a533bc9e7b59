// Greedy training on noiseless CUBES, then a short hill-climbing pass.

#include <cstdio>

#include "bgc/data.hpp"
#include "bgc/learn.hpp"

int main() {
  bgc::CubesSpec spec;
  spec.seed = 1;
  const auto train = bgc::gen_cubes<std::uint64_t>(4000, spec);
  spec.seed = 2;
  const auto test = bgc::gen_cubes<std::uint64_t>(10000, spec);

  bgc::TrainConfig cfg;
  cfg.arity = 4;
  cfg.depth = 4;
  cfg.propagation = 2;
  cfg.trials = 2000;
  cfg.seed = 7;

  auto result = bgc::train_greedy(train, &test, cfg);
  std::printf("greedy:      train %.2f%%  test %.2f%%\n", 100 * result.report.train_error,
              100 * *result.report.test_error);

  bgc::Rng rng(cfg.seed + 1);
  const auto climb = bgc::hill_climb(result.tree, result.cache, train, cfg, rng);
  const double test_err = bgc::error_rate(bgc::predict(result.tree, test), test.labels);
  std::printf("hill climb:  train %.2f%%  test %.2f%%  (%llu of %llu trials accepted)\n", 100 * climb.train_error,
              100 * test_err, static_cast<unsigned long long>(climb.accepted),
              static_cast<unsigned long long>(climb.trials));
}
