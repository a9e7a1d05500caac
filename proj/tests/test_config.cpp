// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "graphlog/config.hpp"
#include "graphlog/errors.hpp"

using namespace graphlog;

TEST_CASE("config round-trips through its canonical text form") {
  RunConfig cfg;
  cfg.train.seed = 123;
  cfg.train.batch_size = 48;
  cfg.train.mask_mode = MaskMode::edge;
  cfg.train.k_per_layer = {3, 9};
  cfg.train.forest_depth = 2;
  cfg.train.loss_graph = false;
  cfg.synthetic.branching = {2, 2, 2};
  cfg.synthetic.levels = 3;
  const std::string ini = cfg.to_ini();
  RunConfig back = parse_config(ini);
  CHECK(back.to_ini() == ini);
  CHECK(back.hash() == cfg.hash());
  CHECK(back.train.batch_size == 48);
  CHECK(back.train.mask_mode == MaskMode::edge);
  CHECK(back.synthetic.branching == std::vector<uint32_t>{2, 2, 2});
}

TEST_CASE("paper preset pins the published hyperparameters") {
  RunConfig cfg = parse_config("[train]\npreset = paper\n");
  CHECK(cfg.train.batch_size == 512);
  CHECK(cfg.train.forest_depth == 3);
  CHECK(cfg.train.k_per_layer == std::vector<uint32_t>{50, 50, 50});
  CHECK(cfg.train.gnn.layers == 5);
  CHECK(cfg.train.gnn.hidden_dim == 300);
  CHECK(cfg.train.lr == 1e-3);
  CHECK(cfg.train.mask_rate == 0.3);
  CHECK(cfg.train.epochs_local == 1);
  CHECK(cfg.train.epochs_joint == 10);
  CHECK(cfg.train.finetune.batch_size == 32);
  CHECK(cfg.train.finetune.epochs == 100);
}

TEST_CASE("keys override the preset regardless of order") {
  RunConfig cfg = parse_config("[train]\nbatch_size = 16\npreset = paper\n");
  CHECK(cfg.train.batch_size == 16);
  CHECK(cfg.train.gnn.layers == 5);
}

TEST_CASE("unknown keys and sections are rejected") {
  CHECK_THROWS_AS(parse_config("[train]\nbogus = 1\n"), UsageError);
  CHECK_THROWS_AS(parse_config("[nope]\nx = 1\n"), UsageError);
  CHECK_THROWS_AS(parse_config("[train]\nmask_rate = 1.5\n"), UsageError);
  CHECK_THROWS_AS(parse_config("[forest]\ndepth = 2\nk_per_layer = 1,2,3\n"), UsageError);
}

TEST_CASE("overrides apply to a parsed config") {
  RunConfig cfg;
  apply_override(cfg, "train.epochs_joint=3");
  CHECK(cfg.train.epochs_joint == 3);
  apply_override(cfg, "forest.depth=2");
  apply_override(cfg, "forest.k_per_layer=4,8");
  cfg.train.validate();
  CHECK(cfg.train.k_per_layer == std::vector<uint32_t>{4, 8});
  CHECK_THROWS_AS(apply_override(cfg, "no_dot"), UsageError);
  CHECK_THROWS_AS(apply_override(cfg, "train.bogus=1"), UsageError);
  // depth without a matching k_per_layer fails validation at use time
  apply_override(cfg, "forest.depth=5");
  CHECK_THROWS_AS(cfg.train.validate(), UsageError);
}

TEST_CASE("hash differs when any field differs") {
  RunConfig a, b;
  b.train.seed = a.train.seed + 1;
  CHECK(a.hash() != b.hash());
  CHECK(a.hash_hex().size() == 16);
}
