#include "ptnlab/eval.hpp"

#include <cstdlib>
#include <thread>

namespace ptnlab {

LabelDistribution predict_case(DensityModel& model, const LoadedDataset& data,
                               const LoadedCase& c) {
  const int segments =
      model.has_ptn() ? model.config().ptn->window.segments : 10;
  std::vector<LabelDistribution> views;
  views.reserve(c.view_indices.size());
  for (size_t vi : c.view_indices)
    views.push_back(
        model.predict(data.view(vi).image, data.window_of(vi, segments)));
  return case_average(views);
}

std::vector<EvalRecord> evaluate_split(ParameterStore& store,
                                       const DensityModel::Config& config,
                                       const LoadedDataset& data, Split split,
                                       const EvalOptions& options) {
  const std::vector<size_t> indices = data.case_indices(split);
  if (indices.empty())
    throw std::runtime_error("eval: split " + split_name(split) +
                             " has no cases");

  std::vector<EvalRecord> records(indices.size());
  auto worker = [&](size_t begin, size_t end) {
    // every worker gets its own model instance; the store is shared
    // read-only (prediction never touches gradients)
    DensityModel model(store, config, Rng(0));
    for (size_t i = begin; i < end; ++i) {
      const LoadedCase& c = data.cases()[indices[i]];
      records[i] = EvalRecord{c.id, c.gold_grade.value_or(c.assigned_grade),
                              predict_case(model, data, c)};
    }
  };

  const int threads =
      std::max(1, std::min<int>(options.threads,
                                static_cast<int>(indices.size())));
  if (threads == 1) {
    worker(0, indices.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk =
        (indices.size() + static_cast<size_t>(threads) - 1) /
        static_cast<size_t>(threads);
    for (int t = 0; t < threads; ++t) {
      const size_t begin = static_cast<size_t>(t) * chunk;
      const size_t end = std::min(indices.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }
  return records;
}

std::vector<ViewPrediction> predict_views(DensityModel& model,
                                          const LoadedDataset& data,
                                          Split split) {
  const int segments =
      model.has_ptn() ? model.config().ptn->window.segments : 10;
  std::vector<ViewPrediction> out;
  for (size_t ci : data.case_indices(split)) {
    const LoadedCase& c = data.cases()[ci];
    for (size_t vi : c.view_indices) {
      ViewPrediction vp;
      vp.case_id = c.id;
      vp.view_id = data.view(vi).view_id;
      vp.prediction =
          model.predict(data.view(vi).image, data.window_of(vi, segments));
      out.push_back(std::move(vp));
    }
  }
  return out;
}

int eval_threads_from_env() {
  if (const char* env = std::getenv("PTNLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

}  // namespace ptnlab
