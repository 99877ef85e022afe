#include "ptnlab/slope_predictor.hpp"

#include <cmath>

namespace ptnlab {

std::vector<int> PtnConfig::resolved_channels() const {
  if (!channels.empty()) return channels;
  std::vector<int> out;
  for (int i = 0; i < conv_layers; ++i)
    out.push_back(std::min(32, 8 << (i / 2)));
  return out;
}

void PtnConfig::validate() const {
  window.validate();
  if (conv_layers < 1)
    throw std::invalid_argument("ptn: conv_layers must be >= 1");
  if (downsample_factor < 1)
    throw std::invalid_argument("ptn: downsample_factor must be >= 1");
  if (epsilon <= 0.0) throw std::invalid_argument("ptn: epsilon must be > 0");
  if (lambda < 0.0) throw std::invalid_argument("ptn: lambda must be >= 0");
  if (slope_floor <= 0.0)
    throw std::invalid_argument("ptn: slope_floor must be > 0");
  if (!channels.empty() && static_cast<int>(channels.size()) != conv_layers)
    throw std::invalid_argument("ptn: channels must match conv_layers");
}

SlopePredictor::SlopePredictor(ParameterStore& store, const PtnConfig& config,
                               Rng init)
    : store_(store), config_(config), net_("slope_predictor") {
  config_.validate();
  const std::vector<int> channels = config_.resolved_channels();
  const bool fresh = !store.contains("g/head/w");

  net_.emplace<MeanPool>(config_.downsample_factor);
  int in_ch = 1;
  for (int i = 0; i < config_.conv_layers; ++i) {
    const int stride = (i % 2 == 1) ? 2 : 1;  // stride 2 every other layer
    if (stride == 2) min_input_ *= 2;
    const std::string conv = "g/conv" + std::to_string(i + 1);
    const std::string norm = "g/in" + std::to_string(i + 1);
    net_.emplace<Conv2d>(store, conv, in_ch, channels[static_cast<size_t>(i)],
                         3, stride, 1, init.stream(conv));
    net_.emplace<InstanceNorm>(store, norm, channels[static_cast<size_t>(i)]);
    net_.emplace<Relu>();
    conv_units_.push_back(
        {conv + "/w", conv + "/b", norm + "/gain", norm + "/bias"});
    in_ch = channels[static_cast<size_t>(i)];
  }
  net_.emplace<GlobalAvgPool>();
  net_.emplace<Linear>(store, "g/head", in_ch, config_.window.segments + 2,
                       init.stream("g/head"));
  net_.emplace<Softplus>();

  if (fresh) {
    // Start from the identity tone curve: zero head weights and a bias with
    // softplus(b) = 1, so slopes ~= 1 regardless of the input image.
    store.value("g/head/w").data.setZero();
    store.value("g/head/b").data.setConstant(std::log(std::exp(1.0) - 1.0));
  }
}

Tensor SlopePredictor::forward(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 1)
    throw std::invalid_argument("slope_predictor: expected a {1,H,W} image");
  const Index pooled_h =
      (image.dim(1) + config_.downsample_factor - 1) / config_.downsample_factor;
  const Index pooled_w =
      (image.dim(2) + config_.downsample_factor - 1) / config_.downsample_factor;
  if (pooled_h < min_input_ || pooled_w < min_input_)
    throw std::invalid_argument(
        "slope_predictor: image smaller than the conv stack's reach after "
        "downsampling");

  Tensor slopes = net_.forward(image);
  slopes.data += config_.slope_floor;
  slopes.ensure_finite("slope_predictor");
  return slopes;
}

Tensor SlopePredictor::backward(const Tensor& dslopes) {
  return net_.backward(dslopes);
}

std::vector<std::string> SlopePredictor::param_names() const {
  return net_.param_names();
}

SlopeSet SlopePredictor::predict(const Tensor& image) {
  const Tensor t = forward(image);
  return SlopeSet(t.data);
}

}  // namespace ptnlab
