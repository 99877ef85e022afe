#pragma once

#include <optional>
#include <vector>

#include "ptnlab/layers.hpp"
#include "ptnlab/tone_curve.hpp"

namespace ptnlab {

/// Configuration of the photometric transformer: the fallback intensity
/// window (per-image metadata wins when available), the slope-predictor
/// conv stack, and the hinge regularizer constants.
struct PtnConfig {
  IntensityWindow window;            // fallback u, v and the segment count K
  int conv_layers = 6;
  std::vector<int> channels;         // empty: 8,8,16,16,32,32,... per depth
  int downsample_factor = 3;
  double epsilon = 1e-2;             // hinge floor
  double lambda = 1.0;               // hinge scale
  double slope_floor = 1e-3;
  bool printed_hinge_form = false;   // keep the paper-printed form selectable

  std::vector<int> resolved_channels() const;
  void validate() const;
};

/// The CNN that predicts a tone-curve slope set from a mean-pooled copy of
/// the input image: conv/instance-norm/relu blocks with stride 2 on every
/// other conv, a global average pool, a linear head to K+2 raw outputs, and
/// softplus plus a small floor so every slope is positive.
///
/// The head starts at zero weights with its bias solving softplus(b) = 1,
/// so a fresh predictor emits slopes ~= 1 and the initial tone curve is the
/// identity.
class SlopePredictor : public DifferentiableOp {
 public:
  SlopePredictor(ParameterStore& store, const PtnConfig& config, Rng init);

  std::string name() const override { return "slope_predictor"; }

  /// image {1,H,W} -> slope tensor {K+2}
  Tensor forward(const Tensor& image) override;
  Tensor backward(const Tensor& dslopes) override;
  std::vector<std::string> param_names() const override;
  ParameterStore* store() override { return &store_; }

  SlopeSet predict(const Tensor& image);

  /// Conv-unit parameter groups in depth order (conv + its instance norm),
  /// used by fine-tuning to freeze the first layers.
  const std::vector<std::vector<std::string>>& conv_units() const {
    return conv_units_;
  }

 private:
  ParameterStore& store_;
  PtnConfig config_;
  Sequential net_;
  std::vector<std::vector<std::string>> conv_units_;
  int min_input_ = 1;  // minimum spatial size after downsampling
};

}  // namespace ptnlab
