// SPDX-License-Identifier: Apache-2.0
#include "graphlog/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "graphlog/errors.hpp"
#include "graphlog/local_loss.hpp"
#include "graphlog/metrics.hpp"
#include "graphlog/optim.hpp"

namespace graphlog {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Batch boundaries over a permuted index array: ceil(M/N) chunks, except
// that a trailing chunk of a single graph merges into its predecessor so
// every batch has at least two graphs.
std::vector<std::pair<size_t, size_t>> epoch_chunks(size_t m, size_t n) {
  std::vector<std::pair<size_t, size_t>> chunks;
  for (size_t lo = 0; lo < m; lo += n) {
    chunks.emplace_back(lo, std::min(m, lo + n));
  }
  if (chunks.size() >= 2 && chunks.back().second - chunks.back().first == 1) {
    chunks[chunks.size() - 2].second = m;
    chunks.pop_back();
  }
  return chunks;
}

std::vector<const Graph*> select(const std::vector<Graph>& graphs,
                                 const std::vector<uint32_t>& perm, size_t lo, size_t hi) {
  std::vector<const Graph*> out;
  out.reserve(hi - lo);
  for (size_t i = lo; i < hi; ++i) out.push_back(&graphs[perm[i]]);
  return out;
}

std::vector<Graph> mask_counterparts(const std::vector<const Graph*>& graphs,
                                     const TrainConfig& cfg, Rng rng) {
  std::vector<Graph> out;
  out.reserve(graphs.size());
  for (const Graph* g : graphs) {
    out.push_back(mask_attributes(*g, cfg.mask_rate, cfg.mask_mode, rng));
  }
  return out;
}

std::vector<std::vector<double>> rows_of(const TensorPtr& t) {
  std::vector<std::vector<double>> out(t->rows());
  for (size_t r = 0; r < t->rows(); ++r) t->copy_row_to(r, out[r]);
  return out;
}

// Training mutates parameters in place; checkpoints handed in by the caller
// stay untouched.
GinParams clone_gin(const GinParams& src) {
  GinParams out = src;
  for (auto& t : out.node_tables) t = t->clone();
  for (auto& t : out.edge_tables) t = t->clone();
  for (auto& m : out.mlps) {
    m.w1 = m.w1->clone();
    m.b1 = m.b1->clone();
    m.w2 = m.w2->clone();
    m.b2 = m.b2->clone();
  }
  return out;
}

PrototypeForest clone_forest(const PrototypeForest& src) {
  PrototypeForest out = src;
  for (auto& layer : out.layers) layer = layer->clone();
  return out;
}

struct JointStepOut {
  double loss_local = kNaN;
  double loss_global = kNaN;
  double mb_loglik = kNaN;
};

}  // namespace

std::vector<std::vector<double>> embed_dataset(const Dataset& data, const GinParams& gin,
                                               size_t chunk_graphs) {
  std::vector<std::vector<double>> out;
  out.reserve(data.graphs.size());
  for (size_t lo = 0; lo < data.graphs.size(); lo += chunk_graphs) {
    const size_t hi = std::min(data.graphs.size(), lo + chunk_graphs);
    std::vector<const Graph*> slice;
    for (size_t i = lo; i < hi; ++i) slice.push_back(&data.graphs[i]);
    auto emb = encode_graph_embeddings(make_batch(slice), gin);
    for (auto& row : emb) out.push_back(std::move(row));
  }
  return out;
}

Checkpoint pretrain(const Dataset& data, const RunConfig& run_cfg, const StepCallback& on_step,
                    EmDiagnostics* diag, uint64_t stop_after_steps, const Checkpoint* resume) {
  const TrainConfig& cfg = run_cfg.train;
  cfg.validate();
  const size_t m = data.graphs.size();
  if (m < 2) {
    throw DataError("pretrain: dataset has " + std::to_string(m) + " graphs, need at least 2");
  }
  if (!cfg.loss_graph && !cfg.loss_sub && !cfg.loss_global) {
    throw UsageError("pretrain: every objective is disabled");
  }

  const Rng root(cfg.seed);
  const bool local_enabled = cfg.loss_graph || cfg.loss_sub;

  GinParams gin = resume ? clone_gin(resume->gin)
                         : GinParams::init(cfg.gnn, data.manifest.node_vocab,
                                           data.manifest.edge_vocab, cfg.dtype,
                                           root.fork("gin_init"));
  std::optional<PrototypeForest> forest;
  uint32_t phase = 0, start_epoch = 0, start_step = 0;
  uint64_t global_step = 0;
  if (resume) {
    if (resume->phase >= 1 && resume->forest) forest = clone_forest(*resume->forest);
    phase = std::min<uint32_t>(resume->phase, 1);
    start_epoch = resume->epoch;
    start_step = resume->step_in_epoch;
    global_step = resume->global_step;
    if (resume->phase == 2) {
      return *resume;  // already complete
    }
  }

  auto snapshot = [&](uint32_t ph, uint32_t epoch, uint32_t step, const Adam* adam) {
    Checkpoint c;
    c.config = run_cfg;
    c.gin = gin;
    c.forest = forest;
    c.phase = ph;
    c.epoch = epoch;
    c.step_in_epoch = step;
    c.global_step = global_step;
    if (adam) {
      c.has_optim = true;
      c.adam_step = adam->step_count();
      c.adam_m = adam->moment1();
      c.adam_v = adam->moment2();
    }
    return c;
  };

  auto run_local_step = [&](const std::vector<const Graph*>& graphs, Adam& adam) {
    Rng mask_rng = root.fork("mask", global_step);
    auto masked = mask_counterparts(graphs, cfg, mask_rng);
    GraphBatch b = make_batch(graphs);
    std::vector<const Graph*> mp;
    for (const auto& g : masked) mp.push_back(&g);
    GraphBatch bp = make_batch(mp);

    Tape tape(cfg.strict_numerics);
    Encoded enc = encode(b, gin, tape);
    Encoded encp = encode(bp, gin, tape);
    LocalBatchView view{enc.graph_embeddings, encp.graph_embeddings, enc.node_embeddings,
                        encp.node_embeddings, &b};
    Rng loss_rng = root.fork("local_neg", global_step);
    TensorPtr loss = local_loss(tape, view, cfg, loss_rng);
    const double loss_val = loss->item();
    adam.zero_grad();
    tape.backward(loss);
    adam.step();
    return loss_val;
  };

  // Phase 0: local warm-up.
  if (phase == 0 && local_enabled && cfg.epochs_local > 0) {
    Adam adam(gin.parameters(), AdamConfig{cfg.lr}, cfg.strict_numerics);
    if (resume && resume->phase == 0 && resume->has_optim) {
      adam.load_state(resume->adam_step, resume->adam_m, resume->adam_v);
    }
    for (uint32_t e = start_epoch; e < cfg.epochs_local; ++e) {
      std::vector<uint32_t> perm(m);
      std::iota(perm.begin(), perm.end(), 0);
      Rng shuffle_rng = root.fork("shuffle_local", e);
      shuffle_rng.shuffle(perm);
      const auto chunks = epoch_chunks(m, cfg.batch_size);
      for (size_t s = (e == start_epoch ? start_step : 0); s < chunks.size(); ++s) {
        auto graphs = select(data.graphs, perm, chunks[s].first, chunks[s].second);
        const double loss = run_local_step(graphs, adam);
        ++global_step;
        if (on_step) on_step({global_step, loss, kNaN, kNaN, cfg.lr});
        if (stop_after_steps && global_step >= stop_after_steps) {
          return snapshot(0, e, static_cast<uint32_t>(s + 1), &adam);
        }
      }
    }
  }

  // Forest initialization from evaluation-mode embeddings of unmasked graphs.
  if (phase == 0) {
    auto embeddings = embed_dataset(data, gin);
    Rng forest_rng = root.fork("forest_init");
    forest = init_forest(embeddings, cfg, forest_rng);
    phase = 1;
    start_epoch = 0;
    start_step = 0;
  }

  // Phase 1: joint local + global EM training. The optimizer restarts at the
  // phase boundary because the parameter set grows by the prototypes.
  std::vector<TensorPtr> joint_params = gin.parameters();
  for (const auto& layer : forest->parameters()) joint_params.push_back(layer);
  Adam adam(joint_params, AdamConfig{cfg.lr}, cfg.strict_numerics);
  if (resume && resume->phase == 1 && resume->has_optim) {
    adam.load_state(resume->adam_step, resume->adam_m, resume->adam_v);
  }

  auto run_joint_step = [&](const std::vector<const Graph*>& graphs) {
    JointStepOut out;
    Rng mask_rng = root.fork("mask", global_step);
    auto masked = mask_counterparts(graphs, cfg, mask_rng);
    GraphBatch b = make_batch(graphs);
    std::vector<const Graph*> mp;
    for (const auto& g : masked) mp.push_back(&g);
    GraphBatch bp = make_batch(mp);

    Tape tape(cfg.strict_numerics);
    Encoded enc = encode(b, gin, tape);
    Encoded encp = encode(bp, gin, tape);

    TensorPtr loss;
    if (local_enabled) {
      LocalBatchView view{enc.graph_embeddings, encp.graph_embeddings, enc.node_embeddings,
                          encp.node_embeddings, &b};
      Rng loss_rng = root.fork("local_neg", global_step);
      loss = local_loss(tape, view, cfg, loss_rng);
      out.loss_local = loss->item();
    }

    if (cfg.loss_global) {
      // E-step with the previous step's parameters; sampling sees values
      // only, no gradient path.
      const TensorPtr& estep_src =
          cfg.e_step_on_masked ? encp.graph_embeddings : enc.graph_embeddings;
      auto estep_rows = rows_of(estep_src);
      std::vector<LatentChain> chains;
      chains.reserve(b.num_graphs);
      for (uint32_t n = 0; n < b.num_graphs; ++n) {
        Rng estep_rng = root.fork("estep", global_step, n);
        chains.push_back(e_step_sample(estep_rows[n], *forest, cfg.temperature, estep_rng));
      }

      // The local objective must not have touched the prototypes.
      const size_t watermark = tape.node_count();
      for (const auto& layer : forest->parameters()) {
        if (tape.uses_before(layer, watermark)) {
          throw std::logic_error("pretrain: local objective read a prototype tensor");
        }
      }

      Rng nce_rng = root.fork("nce", global_step);
      TensorPtr l_global = nce_global_loss(tape, enc.graph_embeddings, chains, *forest,
                                           cfg.nce_sum_negatives, nce_rng);
      out.loss_global = l_global->item();
      loss = loss ? tape.add(loss, l_global) : l_global;

      auto h_rows = rows_of(enc.graph_embeddings);
      out.mb_loglik = monitored_mb_loglik(h_rows, chains, *forest);
      if (diag) {
        diag->record_step(out.loss_global, out.mb_loglik / static_cast<double>(b.num_graphs),
                          chains, *forest);
      }
    }

    adam.zero_grad();
    tape.backward(loss);
    adam.step();
    return out;
  };

  for (uint32_t e = start_epoch; e < cfg.epochs_joint; ++e) {
    std::vector<uint32_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng = root.fork("shuffle_joint", e);
    shuffle_rng.shuffle(perm);
    const auto chunks = epoch_chunks(m, cfg.batch_size);
    for (size_t s = (e == start_epoch ? start_step : 0); s < chunks.size(); ++s) {
      auto graphs = select(data.graphs, perm, chunks[s].first, chunks[s].second);
      const JointStepOut step = run_joint_step(graphs);
      ++global_step;
      if (on_step) on_step({global_step, step.loss_local, step.loss_global, step.mb_loglik, cfg.lr});
      if (stop_after_steps && global_step >= stop_after_steps &&
          !(e + 1 == cfg.epochs_joint && s + 1 == chunks.size())) {
        return snapshot(1, e, static_cast<uint32_t>(s + 1), &adam);
      }
    }
  }

  Checkpoint done = snapshot(2, 0, 0, nullptr);
  return done;
}

// ---------------------------------------------------------------------------
// Fine-tuning

std::vector<std::vector<int32_t>> task_targets(const Dataset& data) {
  std::vector<std::vector<int32_t>> y(data.graphs.size());
  if (data.manifest.num_tasks > 0) {
    for (size_t i = 0; i < data.graphs.size(); ++i) {
      const auto& lbl = data.graphs[i].label;
      if (lbl.size() != data.manifest.num_tasks) {
        throw DataError("graph " + std::to_string(i) + " label arity " +
                        std::to_string(lbl.size()) + " != declared tasks");
      }
      for (int32_t v : lbl) {
        if (v != 0 && v != 1 && v != -1) {
          throw DataError("task labels must be 0, 1 or -1 (missing)");
        }
      }
      y[i] = lbl;
    }
    return y;
  }
  if (!data.manifest.label_levels.empty()) {
    const uint32_t leaves = data.manifest.label_levels.back();
    const auto leaf = data.leaf_labels();
    for (size_t i = 0; i < data.graphs.size(); ++i) {
      y[i].assign(leaves, 0);
      y[i][static_cast<size_t>(leaf[i])] = 1;
    }
    return y;
  }
  throw DataError("finetune: dataset has neither task labels nor hierarchy labels");
}

namespace {

// Numerically stable masked logistic loss:
//   mean over defined entries of relu(x) - x*y + log(1 + exp(-|x|)).
TensorPtr bce_masked(Tape& tape, const TensorPtr& logits, const TensorPtr& targets,
                     const TensorPtr& mask, size_t defined) {
  auto rx = tape.relu(logits);
  auto rnx = tape.relu(tape.scale(logits, -1.0));
  auto absx = tape.add(rx, rnx);
  auto ones = Tensor::zeros(logits->rows(), logits->cols(), logits->dtype());
  for (size_t i = 0; i < ones->size(); ++i) ones->set_value(i, 1.0);
  auto log1p = tape.log(tape.add(tape.exp(tape.scale(absx, -1.0)), ones));
  auto xy = tape.hadamard(logits, targets);
  auto elem = tape.add(tape.subtract(rx, xy), log1p);
  auto masked = tape.hadamard(elem, mask);
  auto per_task = tape.sum_rows(masked);  // 1 x T
  auto ones_row = Tensor::zeros(static_cast<size_t>(1), per_task->cols(), logits->dtype());
  for (size_t i = 0; i < ones_row->size(); ++i) ones_row->set_value(i, 1.0);
  auto total = tape.dot_rows(per_task, ones_row);
  return tape.scale(total, 1.0 / static_cast<double>(defined));
}

struct TargetTensors {
  TensorPtr y;
  TensorPtr mask;
  size_t defined = 0;
};

TargetTensors build_targets(const std::vector<std::vector<int32_t>>& targets,
                            const std::vector<size_t>& rows, size_t tasks, DType dt) {
  TargetTensors out;
  out.y = Tensor::zeros(rows.size(), tasks, dt);
  out.mask = Tensor::zeros(rows.size(), tasks, dt);
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t t = 0; t < tasks; ++t) {
      const int32_t v = targets[rows[r]][t];
      if (v >= 0) {
        out.y->set_value(r, t, v);
        out.mask->set_value(r, t, 1.0);
        ++out.defined;
      }
    }
  }
  return out;
}

}  // namespace

FinetuneOutput finetune(const Checkpoint& base, const Dataset& data, FinetuneMode mode,
                        const StepCallback& on_step) {
  const TrainConfig& cfg = base.config.train;
  const auto targets = task_targets(data);
  const size_t tasks = targets.empty() ? 0 : targets[0].size();
  if (tasks == 0) throw DataError("finetune: zero tasks");

  std::vector<size_t> train_rows = data.split_indices(Split::train);
  std::vector<size_t> eval_rows = data.split_indices(Split::test);
  FinetuneMetrics metrics;
  if (train_rows.empty()) {
    throw DataError("finetune: dataset has no train-tagged graphs");
  }
  if (eval_rows.empty()) {
    metrics.warnings.push_back("no test split; evaluating on the whole dataset");
    eval_rows.resize(data.graphs.size());
    std::iota(eval_rows.begin(), eval_rows.end(), 0);
  }

  GinParams gin = clone_gin(base.gin);
  const size_t d = gin.hidden_dim;
  const Rng root(cfg.seed);
  LinearHead head;
  {
    Rng hr = root.fork("finetune_head");
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    head.w = Tensor::zeros(d, tasks, cfg.dtype, true);
    head.b = Tensor::zeros(1, tasks, cfg.dtype, true);
    for (size_t i = 0; i < head.w->size(); ++i) head.w->set_value(i, hr.uniform(-bound, bound));
    for (size_t i = 0; i < head.b->size(); ++i) head.b->set_value(i, hr.uniform(-bound, bound));
  }

  // Probe mode freezes the encoder, so embeddings are computed once.
  TensorPtr cached;
  if (mode == FinetuneMode::probe) {
    auto emb = embed_dataset(data, gin);
    cached = Tensor::zeros(emb.size(), d, cfg.dtype, false);
    for (size_t i = 0; i < emb.size(); ++i) {
      for (size_t c = 0; c < d; ++c) cached->set_value(i, c, emb[i][c]);
    }
  }

  std::vector<TensorPtr> params;
  if (mode == FinetuneMode::full) {
    params = gin.parameters();
  }
  params.push_back(head.w);
  params.push_back(head.b);
  Adam adam(params, AdamConfig{cfg.finetune.lr}, cfg.strict_numerics);

  uint64_t global_step = 0;
  for (uint32_t epoch = 0; epoch < cfg.finetune.epochs; ++epoch) {
    adam.set_lr(lr_schedule(epoch, cfg.finetune.lr, cfg.finetune.scheduler));
    std::vector<uint32_t> perm(train_rows.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng = root.fork("ft_shuffle", epoch);
    shuffle_rng.shuffle(perm);
    const auto chunks = epoch_chunks(train_rows.size(), cfg.finetune.batch_size);
    for (const auto& [lo, hi] : chunks) {
      std::vector<size_t> rows;
      for (size_t i = lo; i < hi; ++i) rows.push_back(train_rows[perm[i]]);
      auto tt = build_targets(targets, rows, tasks, cfg.dtype);
      if (tt.defined == 0) continue;

      Tape tape(cfg.strict_numerics);
      TensorPtr h;
      if (mode == FinetuneMode::probe) {
        std::vector<int64_t> idx(rows.begin(), rows.end());
        h = tape.row_gather(cached, idx);
      } else {
        std::vector<const Graph*> graphs;
        for (size_t r : rows) graphs.push_back(&data.graphs[r]);
        h = encode(make_batch(graphs), gin, tape).graph_embeddings;
      }
      auto logits = tape.add(tape.matmul(h, head.w), head.b);
      auto loss = bce_masked(tape, logits, tt.y, tt.mask, tt.defined);
      const double loss_val = loss->item();
      adam.zero_grad();
      tape.backward(loss);
      adam.step();
      ++global_step;
      if (on_step) on_step({global_step, loss_val, kNaN, kNaN, adam.lr()});
    }
  }

  // Evaluation scores on the eval split.
  std::vector<std::vector<double>> scores(eval_rows.size(), std::vector<double>(tasks));
  {
    Tape tape(false);
    TensorPtr h;
    if (mode == FinetuneMode::probe) {
      std::vector<int64_t> idx(eval_rows.begin(), eval_rows.end());
      h = tape.row_gather(cached, idx);
    } else {
      std::vector<const Graph*> graphs;
      for (size_t r : eval_rows) graphs.push_back(&data.graphs[r]);
      h = encode(make_batch(graphs), gin, tape).graph_embeddings;
    }
    auto logits = tape.add(tape.matmul(h, head.w), head.b);
    for (size_t i = 0; i < eval_rows.size(); ++i) {
      for (size_t t = 0; t < tasks; ++t) scores[i][t] = logits->value(i, t);
    }
    tape.clear();
  }

  metrics.per_task_auc.assign(tasks, kNaN);
  double auc_sum = 0.0;
  for (size_t t = 0; t < tasks; ++t) {
    std::vector<double> s;
    std::vector<int> l;
    for (size_t i = 0; i < eval_rows.size(); ++i) {
      const int32_t v = targets[eval_rows[i]][t];
      if (v >= 0) {
        s.push_back(scores[i][t]);
        l.push_back(v);
      }
    }
    std::optional<double> auc = s.empty() ? std::nullopt : roc_auc(s, l);
    if (auc) {
      metrics.per_task_auc[t] = *auc;
      auc_sum += *auc;
      ++metrics.defined_tasks;
    } else {
      metrics.warnings.push_back("task " + std::to_string(t) +
                                 ": single-class labels in the evaluation split; "
                                 "AUC undefined, excluded from the mean");
    }
  }
  metrics.mean_auc = metrics.defined_tasks
                         ? auc_sum / static_cast<double>(metrics.defined_tasks)
                         : kNaN;

  if (!data.manifest.label_levels.empty()) {
    const auto leaf = data.leaf_labels();
    size_t correct = 0;
    for (size_t i = 0; i < eval_rows.size(); ++i) {
      size_t arg = 0;
      for (size_t t = 1; t < tasks; ++t) {
        if (scores[i][t] > scores[i][arg]) arg = t;
      }
      if (static_cast<int32_t>(arg) == leaf[eval_rows[i]]) ++correct;
    }
    metrics.accuracy = static_cast<double>(correct) / static_cast<double>(eval_rows.size());
  } else {
    metrics.accuracy = kNaN;
  }

  FinetuneOutput out;
  out.checkpoint = base;
  out.checkpoint.gin = gin;
  out.checkpoint.head = head;
  out.checkpoint.has_optim = false;
  out.checkpoint.adam_m.clear();
  out.checkpoint.adam_v.clear();
  out.checkpoint.phase = 2;
  out.metrics = std::move(metrics);
  return out;
}

}  // namespace graphlog
