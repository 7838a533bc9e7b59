#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "bgc/experiment.hpp"
#include "bgc/model_io.hpp"
#include "oracles.hpp"

#ifndef BGC_TEST_DATA_DIR
#define BGC_TEST_DATA_DIR "tests/data"
#endif

namespace {

using bgc::CircuitTree;

TEST(ModelIo, RoundTripRandomTrees) {
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const unsigned a = 2 + rng() % 7;
    const unsigned d = 1 + rng() % (a <= 3 ? 5 : 2);
    const auto tree = oracle::random_tree(rng, a, d, 1 + rng() % 5000);
    const auto bytes = bgc::serialize(tree);
    ASSERT_EQ(bgc::deserialize(bytes), tree);
  }
}

TEST(ModelIo, LayoutOfSmallTree) {
  auto tree = CircuitTree::blank(2, 1, 9);
  tree.gates[0] = bgc::TruthTable::from_bits({0, 0, 0, 1});
  tree.leaf_inputs = {3, 7};
  const auto b = bgc::serialize(tree);
  // magic 4 + a,d 2 + n_features 4 + leaf count 4 + 2 leaves 8 + 1 table byte + crc 4
  ASSERT_EQ(b.size(), 27u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "BGC1");
  EXPECT_EQ(b[4], 2);
  EXPECT_EQ(b[5], 1);
  EXPECT_EQ(b[6], 9);
  EXPECT_EQ(b[10], 2);
  EXPECT_EQ(b[14], 3);
  EXPECT_EQ(b[18], 7);
  EXPECT_EQ(b[22], 0x08);
}

TEST(ModelIo, TruncatedAndCorruptStreamsRejected) {
  std::mt19937_64 rng(2);
  const auto tree = oracle::random_tree(rng, 4, 3, 100);
  const auto bytes = bgc::serialize(tree);
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{9}, std::size_t{20}, bytes.size() - 1}) {
    EXPECT_THROW((void)bgc::deserialize(std::span(bytes).first(cut)), bgc::FormatError) << cut;
  }
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW((void)bgc::deserialize(trailing), bgc::FormatError);

  auto flipped = bytes;
  flipped[30] ^= 0x10;
  EXPECT_THROW((void)bgc::deserialize(flipped), bgc::FormatError);

  auto magic = bytes;
  magic[0] = 'X';
  try {
    (void)bgc::deserialize(magic);
    FAIL();
  } catch (const bgc::FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  auto arity = bytes;
  arity[4] = 9;
  EXPECT_THROW((void)bgc::deserialize(arity), bgc::FormatError);
}

TEST(ModelIo, LeafOutOfRangeRejectedEvenWithValidChecksum) {
  auto tree = CircuitTree::blank(2, 1, 4);
  tree.leaf_inputs = {0, 3};
  auto bytes = bgc::serialize(tree);
  bytes[18] = 4;  // second leaf -> 4, then re-seal the checksum
  const auto crc = bgc::detail::crc32_of(std::span(bytes).first(bytes.size() - 4));
  for (int i = 0; i < 4; ++i) bytes[bytes.size() - 4 + i] = static_cast<std::uint8_t>(crc >> (8 * i));
  EXPECT_THROW((void)bgc::deserialize(bytes), bgc::FormatError);
}

TEST(Netlist, DepthOneAnd) {
  auto tree = CircuitTree::blank(2, 1, 8);
  tree.gates[0] = bgc::TruthTable::from_bits({0, 0, 0, 1});
  tree.leaf_inputs = {1, 6};
  const auto text = bgc::export_netlist(tree);
  EXPECT_NE(text.find("lut 0 0x8 x1 x6\n"), std::string::npos);
  EXPECT_NE(text.find("output n0\n"), std::string::npos);
  const oracle::Netlist net(text);
  EXPECT_EQ(net.lut_count(), 1u);
}

TEST(Netlist, InterpreterMatchesPredict) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const unsigned a = 2 + rng() % 4;
    const unsigned d = 1 + rng() % 3;
    const std::uint32_t m = 1 + rng() % 20;
    const auto tree = oracle::random_tree(rng, a, d, m);
    const oracle::Netlist net(bgc::export_netlist(tree));
    ASSERT_EQ(net.lut_count(), tree.internal_count());
    const auto rows = oracle::random_rows(rng, 64, m);
    const auto data = bgc::make_dataset<std::uint64_t>(rows, std::vector<std::uint8_t>(64, 0));
    const auto pred = bgc::predict(tree, data);
    for (std::size_t e = 0; e < rows.size(); ++e) ASSERT_EQ(net.eval(rows[e]), pred.test(e) ? 1 : 0);
  }
}

TEST(Netlist, ChildrenPrecedeParents) {
  std::mt19937_64 rng(4);
  const auto tree = oracle::random_tree(rng, 3, 3, 10);
  std::istringstream in(bgc::export_netlist(tree));
  std::set<std::string> defined;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind, id, hex, ref;
    ls >> kind;
    if (kind != "lut") continue;
    ls >> id >> hex;
    while (ls >> ref) {
      if (ref[0] == 'n') EXPECT_TRUE(defined.count(ref)) << line;
    }
    defined.insert("n" + id);
  }
}

TEST(ModelIo, GoldenFileReproducesPredictions) {
  const std::filesystem::path dir(BGC_TEST_DATA_DIR);
  const auto tree = bgc::load_model(dir / "golden_cubes_a2d3.bgc");
  EXPECT_EQ(tree.arity, 2u);
  EXPECT_EQ(tree.depth, 3u);
  EXPECT_EQ(tree.n_features, 1024u);

  bgc::ExperimentConfig cfg;
  cfg.dataset = bgc::DatasetKind::Cubes;
  cfg.delta = 0.0;
  cfg.train = 200;
  cfg.test = 100;
  cfg.seed = 0;
  const auto data = bgc::build_datasets<std::uint64_t>(cfg, 0);
  const auto pred = bgc::predict(tree, data.test);

  std::ifstream in(dir / "golden_cubes_a2d3.pred");
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    ASSERT_LT(i, pred.size());
    EXPECT_EQ(line, pred.test(i) ? "1" : "0") << "example " << i;
    ++i;
  }
  EXPECT_EQ(i, pred.size());

  // Retraining with the same seed writes the same bytes.
  cfg.arity = 2;
  cfg.depth = 3;
  const auto retrained = bgc::train_greedy<std::uint64_t>(data.train, nullptr, cfg.train_config(0));
  EXPECT_EQ(bgc::serialize(retrained.tree), bgc::detail::read_file(dir / "golden_cubes_a2d3.bgc"));
}

}  // namespace
