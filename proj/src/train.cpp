#include "ptnlab/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ptnlab {

namespace {

double step_sample(DensityModel& model, const TrainSample& sample) {
  auto fwd = model.forward(*sample.image, sample.window);
  LossResult ce = softmax_cross_entropy(fwd.logits, sample.label);
  double loss = ce.loss;
  Eigen::ArrayXd dslopes_extra;
  if (model.has_ptn()) {
    const PtnConfig& ptn = *model.config().ptn;
    HingeResult hinge = hinge_penalty(
        fwd.slopes, ptn.epsilon, ptn.lambda,
        ptn.printed_hinge_form ? HingeForm::kPrinted : HingeForm::kCorrected);
    loss += hinge.penalty;
    dslopes_extra = hinge.dslopes;
  }
  model.backward(ce.dlogits, dslopes_extra);
  return loss;
}

}  // namespace

double sample_loss(DensityModel& model, const TrainSample& sample) {
  auto fwd = model.forward(*sample.image, sample.window);
  double loss = softmax_cross_entropy(fwd.logits, sample.label).loss;
  if (model.has_ptn()) {
    const PtnConfig& ptn = *model.config().ptn;
    loss += hinge_penalty(fwd.slopes, ptn.epsilon, ptn.lambda).penalty;
  }
  return loss;
}

TrainResult train_model(DensityModel& model, std::vector<TrainSample> samples,
                        const TrainOptions& options, Rng rng) {
  if (samples.empty())
    throw std::invalid_argument("train: empty sample set");
  for (const TrainSample& s : samples) s.label.validate();

  TrainResult result;
  const int decay_at = (2 * options.epochs) / 3;
  std::vector<size_t> order(samples.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    const double lr = options.learning_rate *
                      (epoch >= decay_at ? options.decay_factor : 1.0);
    Rng shuffle_rng = rng.stream("shuffle", static_cast<uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(options.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(options.batch_size));
      model.store().zero_grads();
      const std::string where =
          "epoch " + std::to_string(epoch) + ", batch " +
          std::to_string(start / static_cast<size_t>(options.batch_size));
      double batch_loss = 0.0;
      try {
        for (size_t i = start; i < end; ++i)
          batch_loss += step_sample(model, samples[order[i]]);
      } catch (const std::runtime_error& e) {
        // non-finite activations surface here from the layer checks
        throw std::runtime_error("train: diverged at " + where + ": " +
                                 e.what());
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: diverged (non-finite loss) at " +
                                 where);
      const double inv_n = 1.0 / static_cast<double>(end - start);
      model.store().scale_grads(inv_n);
      sgd_step(model.store(), lr);
      epoch_loss += batch_loss;
    }
    result.epoch_loss.push_back(epoch_loss /
                                static_cast<double>(samples.size()));
  }
  return result;
}

}  // namespace ptnlab
