// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "graphlog/data_io.hpp"
#include "graphlog/errors.hpp"

using namespace graphlog;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("graphlog_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset random_dataset(uint64_t seed, size_t count) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.graphs_per_leaf = static_cast<uint32_t>(count / 8 + 1);
  Dataset ds = generate_synthetic(spec);
  ds.graphs.resize(count);
  ds.manifest.num_graphs = static_cast<uint32_t>(count);
  ds.manifest.split_counts.clear();
  for (const auto& g : ds.graphs) ++ds.manifest.split_counts[split_name(g.split)];
  return ds;
}

}  // namespace

TEST_CASE("save then load round-trips 100 graphs structurally") {
  auto dir = temp_dir("roundtrip");
  Dataset ds = random_dataset(5, 100);
  save_dataset(ds, dir.string());
  Dataset back = load_dataset(dir.string());
  REQUIRE(back.graphs.size() == ds.graphs.size());
  CHECK(back.manifest.node_vocab == ds.manifest.node_vocab);
  CHECK(back.manifest.edge_vocab == ds.manifest.edge_vocab);
  CHECK(back.manifest.label_levels == ds.manifest.label_levels);
  for (size_t i = 0; i < ds.graphs.size(); ++i) {
    CAPTURE(i);
    CHECK(back.graphs[i].num_nodes == ds.graphs[i].num_nodes);
    CHECK(back.graphs[i].edge_src == ds.graphs[i].edge_src);
    CHECK(back.graphs[i].edge_dst == ds.graphs[i].edge_dst);
    CHECK(back.graphs[i].node_attrs == ds.graphs[i].node_attrs);
    CHECK(back.graphs[i].edge_attrs == ds.graphs[i].edge_attrs);
    CHECK(back.graphs[i].label == ds.graphs[i].label);
    CHECK(back.graphs[i].split == ds.graphs[i].split);
  }
}

TEST_CASE("loader rejects out-of-vocabulary attributes naming the graph") {
  auto dir = temp_dir("oov");
  Dataset ds = random_dataset(6, 10);
  ds.graphs[4].node_attrs[0] = ds.manifest.node_vocab[0] + 5;
  save_dataset(ds, dir.string());
  try {
    load_dataset(dir.string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("graph 4") != std::string::npos);
    CHECK(msg.find("slot 0") != std::string::npos);
  }
}

TEST_CASE("empty dataset file is an error, never an empty dataset") {
  auto dir = temp_dir("empty");
  Dataset ds = random_dataset(7, 4);
  save_dataset(ds, dir.string());
  std::ofstream(dir / "dataset.jsonl", std::ios::trunc);
  CHECK_THROWS_AS(load_dataset(dir.string()), DataError);
}

TEST_CASE("malformed line reports its line number") {
  auto dir = temp_dir("badline");
  Dataset ds = random_dataset(8, 5);
  save_dataset(ds, dir.string());
  {
    std::ofstream out(dir / "dataset.jsonl", std::ios::app);
    out << "{not json\n";
  }
  // manifest count must match the new line count for the parse to be reached
  {
    auto manifest = slurp(dir / "manifest.json");
    auto pos = manifest.find("\"num_graphs\": 5");
    REQUIRE(pos != std::string::npos);
    manifest.replace(pos, 15, "\"num_graphs\": 6");
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    out << manifest;
  }
  try {
    load_dataset(dir.string());
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 6") != std::string::npos);
  }
}

TEST_CASE("missing files and count mismatches are data errors") {
  auto dir = temp_dir("missing");
  CHECK_THROWS_AS(load_dataset(dir.string()), DataError);
  Dataset ds = random_dataset(9, 4);
  save_dataset(ds, dir.string());
  ds.manifest.num_graphs = 3;
  save_dataset(ds, dir.string());
  CHECK_THROWS_AS(load_dataset(dir.string()), DataError);
}

TEST_CASE("generator is byte-deterministic for a fixed spec") {
  SyntheticSpec spec;
  spec.graphs_per_leaf = 6;
  auto d1 = temp_dir("gen1"), d2 = temp_dir("gen2");
  save_dataset(generate_synthetic(spec), d1.string());
  save_dataset(generate_synthetic(spec), d2.string());
  CHECK(slurp(d1 / "dataset.jsonl") == slurp(d2 / "dataset.jsonl"));
  CHECK(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));

  SyntheticSpec other = spec;
  other.seed = spec.seed + 1;
  auto d3 = temp_dir("gen3");
  save_dataset(generate_synthetic(other), d3.string());
  CHECK(slurp(d1 / "dataset.jsonl") != slurp(d3 / "dataset.jsonl"));
}

TEST_CASE("levels=2, branching=[4,2] gives 8 leaf and 4 parent classes") {
  SyntheticSpec spec;
  spec.graphs_per_leaf = 3;
  Dataset ds = generate_synthetic(spec);
  CHECK(spec.num_leaf_classes() == 8);
  CHECK(ds.manifest.label_levels == std::vector<uint32_t>{4, 8});
  CHECK(ds.graphs.size() == 8 * 3);
  std::set<int32_t> parents, leaves;
  for (const auto& g : ds.graphs) {
    REQUIRE(g.label.size() == 2);
    parents.insert(g.label[0]);
    leaves.insert(g.label[1]);
  }
  CHECK(parents.size() == 4);
  CHECK(leaves.size() == 8);
}

TEST_CASE("parent label is the ancestor of the leaf label") {
  SyntheticSpec spec;
  spec.levels = 3;
  spec.branching = {2, 2, 3};
  spec.graphs_per_leaf = 2;
  Dataset ds = generate_synthetic(spec);
  for (const auto& g : ds.graphs) {
    REQUIRE(g.label.size() == 3);
    // With branching [2,2,3]: level-1 class = leaf / 3, level-0 = leaf / 6.
    CHECK(g.label[1] == g.label[2] / 3);
    CHECK(g.label[0] == g.label[2] / 6);
  }
}

TEST_CASE("zero noise makes every graph of a class an exact motif copy") {
  SyntheticSpec spec;
  spec.edge_noise = 0.0;
  spec.attr_noise = 0.0;
  spec.graphs_per_leaf = 5;
  Dataset ds = generate_synthetic(spec);
  for (size_t i = 1; i < ds.graphs.size(); ++i) {
    if (ds.graphs[i].label == ds.graphs[i - 1].label) {
      CHECK(ds.graphs[i].node_attrs == ds.graphs[i - 1].node_attrs);
      CHECK(ds.graphs[i].edge_src == ds.graphs[i - 1].edge_src);
      CHECK(ds.graphs[i].edge_attrs == ds.graphs[i - 1].edge_attrs);
    }
  }
}

TEST_CASE("generated graphs validate and split counts partition the set") {
  SyntheticSpec spec;
  spec.graphs_per_leaf = 10;
  Dataset ds = generate_synthetic(spec);
  size_t total = 0;
  for (const auto& [name, count] : ds.manifest.split_counts) total += count;
  CHECK(total == ds.graphs.size());
  for (size_t i = 0; i < ds.graphs.size(); ++i) {
    validate_graph(ds.graphs[i], "generated " + std::to_string(i));
  }
}

TEST_CASE("motif size below 2 is rejected") {
  SyntheticSpec spec;
  spec.motif_nodes_min = 1;
  CHECK_THROWS_AS(generate_synthetic(spec), UsageError);
}
