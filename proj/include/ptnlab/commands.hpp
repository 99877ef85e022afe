#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptnlab/config.hpp"
#include "ptnlab/distill.hpp"

namespace ptnlab {

nlohmann::ordered_json model_config_to_json(const DensityModel::Config& mc);
DensityModel::Config model_config_from_json(const nlohmann::json& j);

/// generate: build the synthetic dataset under data_dir and print a per-split
/// grade summary table.
void cmd_generate(const RunConfig& config);

struct TrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_curve_csv;
  std::filesystem::path val_metrics_json;
  MetricsSummary val_metrics;
};

/// train: fit the baseline or PTN-equipped model on D_s + D_r, write the
/// checkpoint, the loss curve and validation metrics (and, with PTN, a
/// per-image slope dump for the validation split).
TrainOutputs cmd_train(const RunConfig& config, bool use_ptn);

struct DistillOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path audit_log;
  std::filesystem::path rounds_json;
  DistillState state;
};

/// distill: run the label-distillation loop (soft blending or hard argmax
/// labels) from a pretrained checkpoint.
DistillOutputs cmd_distill(const RunConfig& config, bool hard_labels,
                           std::optional<int> rounds_override = {},
                           std::optional<std::filesystem::path> checkpoint = {});

struct EvalOutputs {
  std::filesystem::path predictions_csv;
  std::filesystem::path metrics_json;
  MetricsSummary metrics;
};

/// eval: per-view predictions, case-level averaging, metrics report.
EvalOutputs cmd_eval(const RunConfig& config,
                     const std::filesystem::path& checkpoint, Split split);

/// reproduce: generate -> train(baseline) -> train(ptn) -> distill(soft) ->
/// distill(hard) -> eval for each seed; consolidated mean/std report. A
/// failed stage is recorded and the remaining seeds continue.
struct ReproduceOutputs {
  std::filesystem::path report_md;
  std::filesystem::path report_json;
};

ReproduceOutputs cmd_reproduce(const RunConfig& config,
                               const std::vector<uint64_t>& seeds);

}  // namespace ptnlab
