#pragma once

#include "ptnlab/dataset.hpp"
#include "ptnlab/metrics.hpp"
#include "ptnlab/model.hpp"

namespace ptnlab {

struct EvalOptions {
  int threads = 1;  // evaluation parallelism cap (PTNLAB_THREADS)
};

/// Case-level prediction: every view through the model, then averaged.
LabelDistribution predict_case(DensityModel& model, const LoadedDataset& data,
                               const LoadedCase& c);

/// Case-level eval records for a split, truth taken from the gold grade
/// (falling back to the assigned reader grade). Evaluation may fan out over
/// threads; results are index-ordered and deterministic either way.
std::vector<EvalRecord> evaluate_split(ParameterStore& store,
                                       const DensityModel::Config& config,
                                       const LoadedDataset& data, Split split,
                                       const EvalOptions& options = {});

/// Per-view prediction rows (case id, view id, four probabilities, argmax).
struct ViewPrediction {
  std::string case_id;
  int view_id = 0;
  LabelDistribution prediction;
};

std::vector<ViewPrediction> predict_views(DensityModel& model,
                                          const LoadedDataset& data,
                                          Split split);

int eval_threads_from_env();

}  // namespace ptnlab
