// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point: generate | pretrain | finetune | embed |
// project | eval. Every run writes its fully-resolved config next to its
// outputs; outputs are reproducible bit-for-bit from that config.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphlog/checkpoint.hpp"
#include "graphlog/config.hpp"
#include "graphlog/data_io.hpp"
#include "graphlog/errors.hpp"
#include "graphlog/forest.hpp"
#include "graphlog/metrics.hpp"
#include "graphlog/trainer.hpp"

namespace fs = std::filesystem;
using namespace graphlog;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string data_dir;
  std::string out_dir;
  std::string checkpoint_path;
  std::string mode = "full";
  int64_t seed = -1;
  bool strict = false;
  std::vector<std::string> overrides;
};

RunConfig resolve_config(const CommonArgs& args, const RunConfig* from_checkpoint = nullptr) {
  RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = load_config_file(args.config_path);
  } else if (from_checkpoint) {
    cfg = *from_checkpoint;
  }
  for (const auto& o : args.overrides) apply_override(cfg, o);
  if (args.seed >= 0) {
    cfg.train.seed = static_cast<uint64_t>(args.seed);
    cfg.synthetic.seed = static_cast<uint64_t>(args.seed);
  }
  if (args.strict) cfg.train.strict_numerics = true;
  cfg.train.validate();
  cfg.synthetic.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

void write_resolved_config(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "config.resolved.ini", cfg.to_ini());
}

std::ofstream open_metrics_csv(const std::string& out_dir) {
  std::ofstream csv(fs::path(out_dir) / "metrics.csv");
  csv << "step,loss_local,loss_global,monitored_mb_loglik,lr\n";
  csv.precision(17);
  return csv;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

int cmd_generate(const CommonArgs& args, const std::string& spec_arg) {
  RunConfig cfg;
  if (spec_arg != "default") {
    CommonArgs file_args = args;
    file_args.config_path = spec_arg;
    cfg = resolve_config(file_args);
  } else {
    cfg = resolve_config(args);
  }
  Dataset ds = generate_synthetic(cfg.synthetic);
  save_dataset(ds, args.out_dir);
  write_resolved_config(cfg, args.out_dir);
  std::cout << "generated " << ds.graphs.size() << " graphs ("
            << cfg.synthetic.num_leaf_classes() << " leaf classes) in " << args.out_dir << "\n";
  return 0;
}

int cmd_pretrain(const CommonArgs& args, const std::string& resume_path,
                 uint64_t stop_after_steps) {
  Dataset ds = load_dataset(args.data_dir);
  Checkpoint resume;
  const Checkpoint* resume_ptr = nullptr;
  RunConfig cfg;
  if (!resume_path.empty()) {
    resume = load_checkpoint(resume_path);
    CommonArgs no_cfg = args;
    no_cfg.config_path.clear();  // resumed runs keep the recorded config
    cfg = resolve_config(no_cfg, &resume.config);
    resume_ptr = &resume;
  } else {
    cfg = resolve_config(args);
  }

  write_resolved_config(cfg, args.out_dir);
  auto csv = open_metrics_csv(args.out_dir);
  EmDiagnostics diag;
  const StepCallback cb = [&](const StepRecord& r) {
    csv << r.step << "," << fmt(r.loss_local) << "," << fmt(r.loss_global) << ","
        << fmt(r.mb_loglik) << "," << fmt(r.lr) << "\n";
  };
  Checkpoint out = pretrain(ds, cfg, cb, &diag, stop_after_steps, resume_ptr);
  save_checkpoint(out, (fs::path(args.out_dir) / "checkpoint.bin").string());

  if (!diag.chain_usage.empty()) {
    std::ofstream hist(fs::path(args.out_dir) / "em_histogram.csv");
    hist << "layer,prototype,count\n";
    for (size_t l = 0; l < diag.chain_usage.size(); ++l) {
      for (size_t i = 0; i < diag.chain_usage[l].size(); ++i) {
        hist << l << "," << i << "," << diag.chain_usage[l][i] << "\n";
      }
    }
  }
  std::cout << "pretrain finished at step " << out.global_step << " (phase " << out.phase
            << "), checkpoint: " << (fs::path(args.out_dir) / "checkpoint.bin").string() << "\n";
  return 0;
}

void write_report(const fs::path& path, const RunConfig& cfg,
                  const std::vector<std::pair<std::string, std::string>>& fields) {
  std::ostringstream os;
  os << "config_hash = " << cfg.hash_hex() << "\n";
  os << "seed = " << cfg.train.seed << "\n";
  for (const auto& [k, v] : fields) os << k << " = " << v << "\n";
  write_text(path, os.str());
}

int cmd_finetune(const CommonArgs& args) {
  Dataset ds = load_dataset(args.data_dir);
  Checkpoint base = load_checkpoint(args.checkpoint_path);
  RunConfig cfg = resolve_config(args, &base.config);
  base.config = cfg;
  const FinetuneMode mode = args.mode == "probe" ? FinetuneMode::probe : FinetuneMode::full;

  write_resolved_config(cfg, args.out_dir);
  auto csv = open_metrics_csv(args.out_dir);
  const StepCallback cb = [&](const StepRecord& r) {
    csv << r.step << "," << fmt(r.loss_local) << "," << fmt(r.loss_global) << ","
        << fmt(r.mb_loglik) << "," << fmt(r.lr) << "\n";
  };
  FinetuneOutput out = finetune(base, ds, mode, cb);
  for (const auto& w : out.metrics.warnings) std::cerr << "warning: " << w << "\n";
  save_checkpoint(out.checkpoint, (fs::path(args.out_dir) / "finetuned.bin").string());

  std::vector<std::pair<std::string, std::string>> fields;
  fields.emplace_back("mode", args.mode);
  fields.emplace_back("mean_auc", fmt(out.metrics.mean_auc));
  fields.emplace_back("defined_tasks", std::to_string(out.metrics.defined_tasks));
  fields.emplace_back("accuracy", fmt(out.metrics.accuracy));
  for (size_t t = 0; t < out.metrics.per_task_auc.size(); ++t) {
    fields.emplace_back("task_" + std::to_string(t) + "_auc", fmt(out.metrics.per_task_auc[t]));
  }
  write_report(fs::path(args.out_dir) / "report.txt", cfg, fields);
  std::cout << "finetune (" << args.mode << ") mean ROC-AUC " << fmt(out.metrics.mean_auc)
            << " over " << out.metrics.defined_tasks << " tasks\n";
  return 0;
}

int cmd_embed(const CommonArgs& args) {
  Dataset ds = load_dataset(args.data_dir);
  Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  auto emb = embed_dataset(ds, ckpt.gin);
  write_resolved_config(ckpt.config, args.out_dir);
  std::ofstream out(fs::path(args.out_dir) / "embeddings.csv");
  out.precision(17);
  out << "graph,split,label";
  for (size_t c = 0; c < ckpt.gin.hidden_dim; ++c) out << ",e" << c;
  out << "\n";
  for (size_t i = 0; i < emb.size(); ++i) {
    const Graph& g = ds.graphs[i];
    out << i << "," << split_name(g.split) << ",";
    for (size_t l = 0; l < g.label.size(); ++l) out << (l ? ";" : "") << g.label[l];
    for (double v : emb[i]) out << "," << v;
    out << "\n";
  }
  std::cout << "wrote " << emb.size() << " embeddings\n";
  return 0;
}

int cmd_project(const CommonArgs& args) {
  Dataset ds = load_dataset(args.data_dir);
  Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  auto emb = embed_dataset(ds, ckpt.gin);
  PcaBasis basis = pca_fit(emb);
  auto coords = pca_apply(basis, emb);
  write_resolved_config(ckpt.config, args.out_dir);
  std::ofstream out(fs::path(args.out_dir) / "projection.csv");
  out.precision(17);
  out << "x,y,leaf_label,is_prototype,layer\n";
  const bool has_hierarchy = !ds.manifest.label_levels.empty();
  for (size_t i = 0; i < coords.size(); ++i) {
    const int32_t leaf = has_hierarchy && !ds.graphs[i].label.empty() ? ds.graphs[i].label.back() : -1;
    out << coords[i][0] << "," << coords[i][1] << "," << leaf << ",0,-1\n";
  }
  if (ckpt.forest) {
    for (uint32_t l = 0; l < ckpt.forest->depth; ++l) {
      std::vector<std::vector<double>> protos(ckpt.forest->layer_size(l));
      for (size_t i = 0; i < protos.size(); ++i) protos[i] = ckpt.forest->prototype(l, i);
      auto pc = pca_apply(basis, protos);
      for (const auto& p : pc) {
        out << p[0] << "," << p[1] << ",-1,1," << l << "\n";
      }
    }
  }
  std::cout << "wrote projection for " << coords.size() << " graphs\n";
  return 0;
}

int cmd_eval(const CommonArgs& args) {
  Dataset ds = load_dataset(args.data_dir);
  Checkpoint ckpt = load_checkpoint(args.checkpoint_path);
  std::vector<std::pair<std::string, std::string>> fields;

  auto emb = embed_dataset(ds, ckpt.gin);
  if (ckpt.forest && !ds.manifest.label_levels.empty()) {
    const auto assign = nearest_bottom_prototypes(emb, *ckpt.forest);
    const auto agreement = cluster_metrics(assign, ds.leaf_labels());
    fields.emplace_back("nmi", fmt(agreement.nmi));
    fields.emplace_back("purity", fmt(agreement.purity));
  }
  if (ckpt.head) {
    const auto targets = task_targets(ds);
    const size_t tasks = targets[0].size();
    auto eval_rows = ds.split_indices(Split::test);
    if (eval_rows.empty()) {
      eval_rows.resize(ds.graphs.size());
      std::iota(eval_rows.begin(), eval_rows.end(), 0);
    }
    double auc_sum = 0.0;
    size_t defined = 0;
    for (size_t t = 0; t < tasks; ++t) {
      std::vector<double> s;
      std::vector<int> l;
      for (size_t i : eval_rows) {
        if (targets[i][t] >= 0) {
          double dot = 0.0;
          for (size_t c = 0; c < emb[i].size(); ++c) dot += emb[i][c] * ckpt.head->w->value(c, t);
          s.push_back(dot + ckpt.head->b->value(0, t));
          l.push_back(targets[i][t]);
        }
      }
      auto auc = s.empty() ? std::nullopt : roc_auc(s, l);
      fields.emplace_back("task_" + std::to_string(t) + "_auc", auc ? fmt(*auc) : "nan");
      if (auc) {
        auc_sum += *auc;
        ++defined;
      }
    }
    fields.emplace_back("mean_auc", defined ? fmt(auc_sum / defined) : "nan");
  }
  if (fields.empty()) {
    throw DataError("eval: checkpoint has neither a forest nor a classifier head to evaluate");
  }
  write_resolved_config(ckpt.config, args.out_dir);
  write_report(fs::path(args.out_dir) / "report.txt", ckpt.config, fields);
  std::cout << "wrote " << (fs::path(args.out_dir) / "report.txt").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GraphLoG: self-supervised whole-graph representation learning"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string spec_arg = "default";
  std::string resume_path;
  uint64_t stop_after_steps = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_data, bool needs_ckpt) {
    cmd->add_option("--config", args.config_path, "Config file (INI schema)");
    cmd->add_option("--out", args.out_dir, "Output directory")->required();
    cmd->add_option("--seed", args.seed, "Seed override");
    cmd->add_flag("--strict-numerics", args.strict, "Hard-error on non-finite values");
    cmd->add_option("--override", args.overrides, "Config override, e.g. train.epochs_joint=3");
    if (needs_data) cmd->add_option("--data", args.data_dir, "Dataset directory")->required();
    if (needs_ckpt) {
      cmd->add_option("--checkpoint", args.checkpoint_path, "Checkpoint file")->required();
    }
  };

  CLI::App* generate = app.add_subcommand("generate", "Generate a planted-hierarchy dataset");
  generate->add_option("--spec", spec_arg, "'default' or a config file with a [synthetic] section");
  add_common(generate, false, false);

  CLI::App* pretrain_cmd = app.add_subcommand("pretrain", "Self-supervised pre-training");
  add_common(pretrain_cmd, true, false);
  pretrain_cmd->add_option("--resume", resume_path, "Checkpoint to resume from");
  pretrain_cmd->add_option("--stop-after-steps", stop_after_steps,
                           "Stop and snapshot after this many optimizer steps");

  CLI::App* finetune_cmd = app.add_subcommand("finetune", "Supervised fine-tuning / probing");
  add_common(finetune_cmd, true, true);
  finetune_cmd->add_option("--mode", args.mode, "full | probe")
      ->check(CLI::IsMember({"full", "probe"}));

  CLI::App* embed_cmd = app.add_subcommand("embed", "Write graph embeddings");
  add_common(embed_cmd, true, true);

  CLI::App* project_cmd = app.add_subcommand("project", "2D PCA plot data with prototypes");
  add_common(project_cmd, true, true);

  CLI::App* eval_cmd = app.add_subcommand("eval", "Cluster-recovery and AUC report");
  add_common(eval_cmd, true, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (generate->parsed()) return cmd_generate(args, spec_arg);
    if (pretrain_cmd->parsed()) return cmd_pretrain(args, resume_path, stop_after_steps);
    if (finetune_cmd->parsed()) return cmd_finetune(args);
    if (embed_cmd->parsed()) return cmd_embed(args);
    if (project_cmd->parsed()) return cmd_project(args);
    if (eval_cmd->parsed()) return cmd_eval(args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
