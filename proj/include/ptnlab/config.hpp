#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "ptnlab/distill.hpp"
#include "ptnlab/model.hpp"
#include "ptnlab/synthdata.hpp"

namespace ptnlab {

/// One run configuration document. Loaded from a single JSON file with
/// per-section overrides; command-line flags win over file values.
struct RunConfig {
  uint64_t seed = 42;
  std::string data_dir = "data";
  std::string out_dir = "out";
  DataConfig data;
  PtnConfig ptn;
  ClassifierConfig classifier;
  DistillConfig distill;

  TrainOptions train_options() const {
    TrainOptions t;
    t.learning_rate = classifier.learning_rate;
    t.epochs = classifier.epochs;
    t.batch_size = classifier.batch_size;
    return t;
  }
};

RunConfig default_run_config();
RunConfig load_run_config(const std::optional<std::filesystem::path>& path);

nlohmann::ordered_json run_config_to_json(const RunConfig& config);
void apply_json_overrides(RunConfig& config, const nlohmann::json& j);

/// Resolved-config snapshot written beside every command's outputs.
void write_config_snapshot(const RunConfig& config,
                           const std::filesystem::path& path);

}  // namespace ptnlab
