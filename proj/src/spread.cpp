#include "ptnlab/spread.hpp"

#include <cmath>

namespace ptnlab {

namespace {

double masked_mean(const Tensor& image, const Tensor& mask_source) {
  double sum = 0.0;
  Index n = 0;
  for (Index i = 0; i < image.numel(); ++i) {
    if (mask_source[i] > kMaskThreshold) {
      sum += image[i];
      ++n;
    }
  }
  if (n == 0) return image.data.mean();
  return sum / static_cast<double>(n);
}

double population_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

}  // namespace

SpreadResult normalization_spread(DensityModel& model,
                                  const LoadedDataset& data, Split split) {
  const std::vector<size_t> cases = data.case_indices(split);
  if (cases.empty())
    throw std::invalid_argument("spread: split has no images");
  const int segments =
      model.has_ptn() ? model.config().ptn->window.segments : 10;

  std::vector<double> before, after;
  for (size_t ci : cases) {
    for (size_t vi : data.cases()[ci].view_indices) {
      const Tensor& raw = data.view(vi).image;
      before.push_back(masked_mean(raw, raw));
      const Tensor normalized =
          model.normalize(raw, data.window_of(vi, segments));
      // the breast mask comes from the raw image either way
      after.push_back(masked_mean(normalized, raw));
    }
  }
  return {population_std(before), population_std(after)};
}

}  // namespace ptnlab
