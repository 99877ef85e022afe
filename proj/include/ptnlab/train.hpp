#pragma once

#include <vector>

#include "ptnlab/model.hpp"
#include "ptnlab/rng.hpp"

namespace ptnlab {

/// One training example: a view image, its tone-curve window, and the case
/// label (possibly soft). Images are referenced, not copied.
struct TrainSample {
  const Tensor* image = nullptr;
  IntensityWindow window;
  LabelDistribution label;
};

struct TrainOptions {
  double learning_rate = 0.1;
  int epochs = 12;
  int batch_size = 32;
  double decay_factor = 0.1;  // learning rate scale after 2/3 of the epochs
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean per-sample loss per epoch
};

/// Mini-batch SGD on mean cross entropy plus, when the model carries a
/// photometric transformer, the slope hinge penalty. Throws on a non-finite
/// loss with the offending epoch/batch.
TrainResult train_model(DensityModel& model, std::vector<TrainSample> samples,
                        const TrainOptions& options, Rng rng);

/// Forward pass + loss of one sample without updating anything.
double sample_loss(DensityModel& model, const TrainSample& sample);

}  // namespace ptnlab
