#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptnlab/dataset.hpp"
#include "ptnlab/eval.hpp"

namespace ptnlab {

struct DistillConfig {
  double alpha = 0.5;            // blending factor
  double gamma = 0.25;           // selection fraction
  double fine_tune_lr = 0.01;
  int frozen_depth = 2;          // conv units frozen after pretraining
  int max_rounds = 10;
  double convergence_tol = 0.002;  // negative: never stop early
  int fine_tune_epochs = 4;
  int retrain_epochs = 4;
  bool hard_labels = false;

  void validate() const;
};

/// KL divergence sum_i y_i log(y_i / yhat_i) with 0 log 0 := 0 and yhat
/// clamped to >= 1e-12 before the log. For one-hot y this is -log
/// yhat_true.
double kld(const LabelDistribution& y, const LabelDistribution& yhat);

/// The ceil(gamma*N) ids with the largest scores; ties break by ascending
/// id. The result is sorted by id.
std::vector<std::string> select_top(
    std::vector<std::pair<std::string, double>> scores, double gamma);

/// alpha*y + (1-alpha)*yhat, renormalized only when numerical drift
/// exceeds 1e-12.
LabelDistribution blend_labels(const LabelDistribution& y,
                               const LabelDistribution& yhat, double alpha);

struct LabelChange {
  std::string case_id;
  LabelDistribution old_label;
  LabelDistribution prediction;
  LabelDistribution new_label;
  double score = 0.0;
};

struct DistillRound {
  int round = 0;
  std::vector<LabelChange> changes;
  double val_accuracy = 0.0;
  std::optional<double> val_dauc;  // absent when every split is degenerate
};

struct DistillState {
  double pretrain_val_accuracy = 0.0;
  std::optional<double> pretrain_val_dauc;
  std::vector<DistillRound> rounds;
};

/// The iterative label-distillation loop. `model` must arrive pretrained on
/// all of D unless `pretrain` options are given, in which case pretraining
/// runs first. Each round fine-tunes on D_s with the first conv units
/// frozen, scores every D_r case by the divergence between its current
/// label and the case-level prediction, rewrites the top-gamma fraction
/// (blend, or argmax one-hot when hard_labels is set), retrains on
/// D_s union D_r, and evaluates on the validation split. Stops when the
/// validation accuracy improves by less than the tolerance, or after
/// max_rounds. D_s labels are never modified.
DistillState run_distillation(DensityModel& model, LoadedDataset& data,
                              const DistillConfig& config, int batch_size,
                              Rng rng,
                              std::optional<TrainOptions> pretrain = {},
                              const EvalOptions& eval_options = {});

/// Same loop with selected labels replaced by the argmax one-hot of the
/// prediction instead of a blend.
DistillState run_hard_label(DensityModel& model, LoadedDataset& data,
                            DistillConfig config, int batch_size, Rng rng,
                            std::optional<TrainOptions> pretrain = {},
                            const EvalOptions& eval_options = {});

/// JSON-lines audit trail: one line per label change with its round and the
/// round's validation accuracy.
void write_audit_log(const DistillState& state,
                     const std::filesystem::path& path);

}  // namespace ptnlab
