#pragma once

#include <memory>
#include <optional>

#include "ptnlab/labels.hpp"
#include "ptnlab/layers.hpp"
#include "ptnlab/loss.hpp"
#include "ptnlab/slope_predictor.hpp"
#include "ptnlab/tone_curve.hpp"

namespace ptnlab {

/// Compact residual classifier on single-channel inputs: stride-2 stem conv,
/// residual blocks (stride 2 from the second block on), global average pool,
/// 4-way linear head. A scaled-down stand-in for a full-resolution ResNet.
struct ClassifierConfig {
  int residual_blocks = 3;
  std::vector<int> widths = {8, 16, 32};  // output channels per block
  int input_size = 64;
  double learning_rate = 0.1;
  int epochs = 12;
  int batch_size = 32;

  int downsampling_factor() const;
  void validate() const;
};

class DensityClassifier : public DifferentiableOp {
 public:
  DensityClassifier(ParameterStore& store, const ClassifierConfig& config,
                    Rng init);

  std::string name() const override { return "classifier"; }
  Tensor forward(const Tensor& image) override;  // {1,H,W} -> logits {4}
  Tensor backward(const Tensor& dlogits) override;
  std::vector<std::string> param_names() const override;
  ParameterStore* store() override { return &store_; }

  const std::vector<std::vector<std::string>>& conv_units() const {
    return conv_units_;
  }

 private:
  ParameterStore& store_;
  ClassifierConfig config_;
  Sequential net_;
  std::vector<std::vector<std::string>> conv_units_;
};

/// The composed density estimator: an optional photometric transformer
/// (slope predictor + tone curve) feeding the classifier. Per-image window
/// metadata anchors the tone curve; the config window is the fallback.
class DensityModel {
 public:
  struct Config {
    ClassifierConfig classifier;
    std::optional<PtnConfig> ptn;
  };

  struct ForwardResult {
    Tensor logits;
    SlopeSet slopes;  // empty when the model has no transformer
  };

  DensityModel(ParameterStore& store, Config config, Rng init);

  bool has_ptn() const { return ptn_.has_value(); }
  const Config& config() const { return config_; }
  ParameterStore& store() { return store_; }

  ForwardResult forward(const Tensor& image, const IntensityWindow& window);

  /// Backward from the logits gradient plus an extra slope-set gradient
  /// (the hinge term). Accumulates parameter gradients, returns the input
  /// image gradient (both the tone-curve and predictor paths).
  Tensor backward(const Tensor& dlogits, const Eigen::ArrayXd& dslopes_extra);

  LabelDistribution predict(const Tensor& image, const IntensityWindow& window);
  SlopeSet predict_slopes(const Tensor& image);

  /// Normalized copy of an image (identity when the model has no ptn).
  Tensor normalize(const Tensor& image, const IntensityWindow& window);

  /// Conv-unit parameter groups of the composed network in depth order
  /// (transformer units first when present).
  const std::vector<std::vector<std::string>>& conv_units() const {
    return conv_units_;
  }

  /// Freeze the first `depth` conv units; unfreezes the rest.
  void set_frozen_depth(int depth);

 private:
  ParameterStore& store_;
  Config config_;
  std::optional<SlopePredictor> predictor_;
  std::optional<PtnConfig> ptn_;
  DensityClassifier classifier_;
  std::vector<std::vector<std::string>> conv_units_;

  // forward caches
  Tensor input_;
  SlopeSet slopes_;
  IntensityWindow window_;
};

/// Elementwise mean of per-view predictions; the case-level prediction.
LabelDistribution case_average(const std::vector<LabelDistribution>& views);

/// Tone-curve window for an image: per-image metadata when given, else the
/// configured fallback, with the segment count always from config.
IntensityWindow resolve_window(const PtnConfig& config, double u, double v);

}  // namespace ptnlab
