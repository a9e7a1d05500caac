// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "graphlog/checkpoint.hpp"
#include "graphlog/config.hpp"
#include "graphlog/data_io.hpp"
#include "graphlog/global_em.hpp"

namespace graphlog {

struct StepRecord {
  uint64_t step = 0;        // 1-based completed optimizer steps
  double loss_local = 0.0;  // NaN when the component is inactive
  double loss_global = 0.0;
  double mb_loglik = 0.0;
  double lr = 0.0;
};
using StepCallback = std::function<void(const StepRecord&)>;

// Full pre-training: a local-objective warm-up phase, forest initialization
// from the embedded dataset, then joint local+global EM epochs with one
// E-step and one optimizer update per sampled batch. Deterministic for a
// fixed seed; stop_after_steps > 0 snapshots mid-run, and a snapshot passed
// as `resume` continues bit-exactly.
Checkpoint pretrain(const Dataset& data, const RunConfig& cfg,
                    const StepCallback& on_step = {}, EmDiagnostics* diag = nullptr,
                    uint64_t stop_after_steps = 0, const Checkpoint* resume = nullptr);

enum class FinetuneMode { full, probe };

struct FinetuneMetrics {
  std::vector<double> per_task_auc;  // NaN where undefined (single-class task)
  double mean_auc = 0.0;             // averaged over defined tasks only
  size_t defined_tasks = 0;
  double accuracy = 0.0;             // argmax accuracy for hierarchy-labeled data, else NaN
  std::vector<std::string> warnings;
};

struct FinetuneOutput {
  Checkpoint checkpoint;
  FinetuneMetrics metrics;
};

// Appends a linear d->T head and trains with masked logistic loss on the
// train split (full fine-tune or frozen-encoder probe), then reports
// per-task and mean ROC-AUC on the test split.
FinetuneOutput finetune(const Checkpoint& base, const Dataset& data, FinetuneMode mode,
                        const StepCallback& on_step = {});

// Unmasked evaluation-mode graph embeddings of the whole dataset.
std::vector<std::vector<double>> embed_dataset(const Dataset& data, const GinParams& gin,
                                               size_t chunk_graphs = 256);

// Per-task 0/1 targets with -1 for missing entries. Hierarchy-labeled
// datasets are exposed as one-vs-rest tasks over leaf classes.
std::vector<std::vector<int32_t>> task_targets(const Dataset& data);

}  // namespace graphlog
