// SPDX-License-Identifier: Apache-2.0
//
// End-to-end exercise of the installed CLI: generate -> pretrain -> finetune
// -> embed -> project -> eval, plus the documented exit codes.
#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace std;
namespace fs = std::filesystem;

namespace {

string g_cli;

int run(const string& args) {
  const string cmd = g_cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const string& name) {
  auto p = fs::temp_directory_path() / ("graphlog_cli_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("full pipeline through the CLI") {
  const auto data = fresh_dir("data");
  const auto run1 = fresh_dir("run1");
  const auto run2 = fresh_dir("run2");
  const auto ft = fresh_dir("ft");
  const auto emb = fresh_dir("emb");
  const auto proj = fresh_dir("proj");
  const auto ev = fresh_dir("eval");

  // A small config keeps the whole pipeline near-instant.
  const auto cfg_path = fs::temp_directory_path() / "graphlog_cli_cfg.ini";
  {
    std::ofstream cfg(cfg_path);
    cfg << "[train]\nseed = 5\nbatch_size = 16\nepochs_local = 1\nepochs_joint = 1\n"
        << "nodes_per_graph = 4\n"
        << "[gnn]\nlayers = 2\nhidden_dim = 8\n"
        << "[forest]\ndepth = 2\nk_per_layer = 2,4\n"
        << "[finetune]\nepochs = 4\n"
        << "[synthetic]\ngraphs_per_leaf = 6\nmotif_nodes_min = 4\nmotif_nodes_max = 5\nseed = 5\n";
  }

  REQUIRE(run("generate --spec " + cfg_path.string() + " --out " + data.string()) == 0);
  CHECK(fs::exists(data / "dataset.jsonl"));
  CHECK(fs::exists(data / "manifest.json"));
  CHECK(fs::exists(data / "config.resolved.ini"));

  REQUIRE(run("pretrain --config " + cfg_path.string() + " --data " + data.string() +
              " --out " + run1.string()) == 0);
  CHECK(fs::exists(run1 / "checkpoint.bin"));
  CHECK(fs::exists(run1 / "metrics.csv"));
  CHECK(fs::exists(run1 / "em_histogram.csv"));
  {
    std::ifstream csv(run1 / "metrics.csv");
    string header;
    std::getline(csv, header);
    CHECK(header == "step,loss_local,loss_global,monitored_mb_loglik,lr");
  }

  // Re-running from the written resolved config reproduces the checkpoint.
  REQUIRE(run("pretrain --config " + (run1 / "config.resolved.ini").string() + " --data " +
              data.string() + " --out " + run2.string()) == 0);
  CHECK(slurp(run1 / "checkpoint.bin") == slurp(run2 / "checkpoint.bin"));

  REQUIRE(run("finetune --checkpoint " + (run1 / "checkpoint.bin").string() + " --data " +
              data.string() + " --out " + ft.string() + " --mode probe") == 0);
  CHECK(fs::exists(ft / "finetuned.bin"));
  CHECK(fs::exists(ft / "report.txt"));

  REQUIRE(run("embed --checkpoint " + (run1 / "checkpoint.bin").string() + " --data " +
              data.string() + " --out " + emb.string()) == 0);
  CHECK(fs::exists(emb / "embeddings.csv"));

  REQUIRE(run("project --checkpoint " + (run1 / "checkpoint.bin").string() + " --data " +
              data.string() + " --out " + proj.string()) == 0);
  {
    std::ifstream csv(proj / "projection.csv");
    string header;
    std::getline(csv, header);
    CHECK(header == "x,y,leaf_label,is_prototype,layer");
    size_t protos = 0, graphs = 0;
    string line;
    while (std::getline(csv, line)) {
      std::vector<string> fields;
      std::istringstream ls(line);
      string f;
      while (std::getline(ls, f, ',')) fields.push_back(f);
      REQUIRE(fields.size() == 5);
      if (fields[3] == "1") ++protos;
      else ++graphs;
    }
    CHECK(graphs == 48);  // 8 leaves x 6 graphs
    CHECK(protos >= 3);   // 2 top + >= 1 bottom survivors
  }

  REQUIRE(run("eval --checkpoint " + (run1 / "checkpoint.bin").string() + " --data " +
              data.string() + " --out " + ev.string()) == 0);
  const string report = slurp(ev / "report.txt");
  CHECK(report.find("nmi = ") != string::npos);
  CHECK(report.find("purity = ") != string::npos);
  // Provenance: the eval report carries the hash of the checkpoint's config.
  const string run_cfg = slurp(run1 / "config.resolved.ini");
  const string eval_cfg = slurp(ev / "config.resolved.ini");
  CHECK(run_cfg == eval_cfg);
  std::istringstream rep(report);
  string first_line;
  std::getline(rep, first_line);
  CHECK(first_line.rfind("config_hash = ", 0) == 0);
}

TEST_CASE("resume through the CLI reproduces the uninterrupted run") {
  const auto data = fresh_dir("rdata");
  const auto full = fresh_dir("rfull");
  const auto part = fresh_dir("rpart");
  const auto cont = fresh_dir("rcont");
  const auto cfg_path = fs::temp_directory_path() / "graphlog_cli_rcfg.ini";
  {
    std::ofstream cfg(cfg_path);
    cfg << "[train]\nseed = 6\nbatch_size = 16\nepochs_local = 1\nepochs_joint = 2\n"
        << "nodes_per_graph = 4\n[gnn]\nlayers = 2\nhidden_dim = 8\n"
        << "[forest]\ndepth = 2\nk_per_layer = 2,4\n"
        << "[synthetic]\ngraphs_per_leaf = 6\nmotif_nodes_min = 4\nmotif_nodes_max = 5\nseed = 6\n";
  }
  REQUIRE(run("generate --spec " + cfg_path.string() + " --out " + data.string()) == 0);
  REQUIRE(run("pretrain --config " + cfg_path.string() + " --data " + data.string() +
              " --out " + full.string()) == 0);
  REQUIRE(run("pretrain --config " + cfg_path.string() + " --data " + data.string() +
              " --out " + part.string() + " --stop-after-steps 5") == 0);
  REQUIRE(run("pretrain --resume " + (part / "checkpoint.bin").string() + " --data " +
              data.string() + " --out " + cont.string()) == 0);
  CHECK(slurp(full / "checkpoint.bin") == slurp(cont / "checkpoint.bin"));
}

TEST_CASE("exit codes: usage 1, data 2") {
  CHECK(run("bogus-subcommand") == 1);
  CHECK(run("pretrain --out /tmp/graphlog_cli_x") == 1);            // missing --data
  CHECK(run("pretrain --data /nonexistent-graphlog --out /tmp/graphlog_cli_x") == 2);
  CHECK(run("generate --spec default --out /tmp/graphlog_cli_gen --unknown-flag") == 1);
  // No partial outputs on the data error.
  CHECK(!fs::exists("/tmp/graphlog_cli_x"));
}

int main(int argc, char** argv) {
  doctest::Context ctx;
  ctx.applyCommandLine(argc > 1 ? 1 : argc, argv);
  if (argc > 1) g_cli = argv[1];
  if (g_cli.empty()) {
    std::fprintf(stderr, "usage: test_cli_pipeline <path-to-graphlog-binary>\n");
    return 1;
  }
  return ctx.run();
}
