#include "ptnlab/model.hpp"

#include <stdexcept>

namespace ptnlab {

int ClassifierConfig::downsampling_factor() const {
  // stem stride 2; every block after the first strides 2
  int f = 2;
  for (int i = 1; i < residual_blocks; ++i) f *= 2;
  return f;
}

void ClassifierConfig::validate() const {
  if (residual_blocks < 1)
    throw std::invalid_argument("classifier: needs >= 1 residual block");
  if (static_cast<int>(widths.size()) != residual_blocks)
    throw std::invalid_argument("classifier: widths must match block count");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("classifier: bad channel width");
  if (input_size < 1 || input_size % downsampling_factor() != 0)
    throw std::invalid_argument(
        "classifier: input size must be divisible by the total "
        "downsampling factor " +
        std::to_string(downsampling_factor()));
  if (batch_size < 1) throw std::invalid_argument("classifier: bad batch size");
  if (epochs < 0) throw std::invalid_argument("classifier: bad epoch count");
}

DensityClassifier::DensityClassifier(ParameterStore& store,
                                     const ClassifierConfig& config, Rng init)
    : store_(store), config_(config), net_("classifier") {
  config_.validate();

  const int stem_ch = config.widths[0];
  net_.emplace<Conv2d>(store, "cls/stem/conv", 1, stem_ch, 3, 2, 1,
                       init.stream("stem"));
  net_.emplace<InstanceNorm>(store, "cls/stem/in", stem_ch);
  net_.emplace<Relu>();
  conv_units_.push_back({"cls/stem/conv/w", "cls/stem/conv/b",
                         "cls/stem/in/gain", "cls/stem/in/bias"});

  int in_ch = stem_ch;
  for (int i = 0; i < config.residual_blocks; ++i) {
    const int out_ch = config.widths[static_cast<size_t>(i)];
    const int stride = (i == 0) ? 1 : 2;
    const std::string prefix = "cls/block" + std::to_string(i + 1);
    net_.emplace<ResidualBlock>(store, prefix, in_ch, out_ch, stride,
                                init.stream(prefix));
    conv_units_.push_back({prefix + "/conv1/w", prefix + "/conv1/b",
                           prefix + "/in1/gain", prefix + "/in1/bias"});
    conv_units_.push_back({prefix + "/conv2/w", prefix + "/conv2/b",
                           prefix + "/in2/gain", prefix + "/in2/bias"});
    in_ch = out_ch;
  }
  net_.emplace<GlobalAvgPool>();
  net_.emplace<Linear>(store, "cls/head", in_ch, kNumGrades,
                       init.stream("cls/head"));
}

Tensor DensityClassifier::forward(const Tensor& image) {
  if (image.rank() != 3 || image.dim(0) != 1 ||
      image.dim(1) != config_.input_size || image.dim(2) != config_.input_size)
    throw std::invalid_argument("classifier: expected a {1," +
                                std::to_string(config_.input_size) + "," +
                                std::to_string(config_.input_size) +
                                "} image, got " + image.shape_str());
  Tensor logits = net_.forward(image);
  logits.ensure_finite("classifier");
  return logits;
}

Tensor DensityClassifier::backward(const Tensor& dlogits) {
  return net_.backward(dlogits);
}

std::vector<std::string> DensityClassifier::param_names() const {
  return net_.param_names();
}

// ---------------------------------------------------------------------------
// DensityModel

DensityModel::DensityModel(ParameterStore& store, Config config, Rng init)
    : store_(store),
      config_(std::move(config)),
      ptn_(config_.ptn),
      classifier_(store, config_.classifier, init.stream("classifier")) {
  if (ptn_) {
    ptn_->validate();
    predictor_.emplace(store, *ptn_, init.stream("transformer"));
    for (const auto& unit : predictor_->conv_units())
      conv_units_.push_back(unit);
  }
  for (const auto& unit : classifier_.conv_units()) conv_units_.push_back(unit);
}

DensityModel::ForwardResult DensityModel::forward(
    const Tensor& image, const IntensityWindow& window) {
  ForwardResult out;
  if (ptn_) {
    input_ = image;
    window_ = window;
    slopes_ = predictor_->predict(image);
    Tensor normalized = apply_tone_curve(image, slopes_, window);
    out.logits = classifier_.forward(normalized);
    out.slopes = slopes_;
  } else {
    out.logits = classifier_.forward(image);
  }
  return out;
}

Tensor DensityModel::backward(const Tensor& dlogits,
                              const Eigen::ArrayXd& dslopes_extra) {
  Tensor dnormalized = classifier_.backward(dlogits);
  if (!ptn_) return dnormalized;

  ToneCurveGrads<double> tone =
      tone_curve_backward(dnormalized, input_, slopes_, window_);
  Eigen::ArrayXd dslopes = tone.dslopes;
  if (dslopes_extra.size() > 0) {
    if (dslopes_extra.size() != dslopes.size())
      throw std::invalid_argument("model: slope gradient size mismatch");
    dslopes += dslopes_extra;
  }
  Tensor dslopes_t({static_cast<Index>(dslopes.size())});
  dslopes_t.data = dslopes;
  // The image feeds both the tone curve and the slope predictor.
  Tensor dimage = predictor_->backward(dslopes_t);
  dimage.data += tone.dimage.data;
  return dimage;
}

LabelDistribution DensityModel::predict(const Tensor& image,
                                        const IntensityWindow& window) {
  return softmax4(forward(image, window).logits);
}

SlopeSet DensityModel::predict_slopes(const Tensor& image) {
  if (!ptn_) throw std::logic_error("model has no photometric transformer");
  return predictor_->predict(image);
}

Tensor DensityModel::normalize(const Tensor& image,
                               const IntensityWindow& window) {
  if (!ptn_) return image;
  return apply_tone_curve(image, predictor_->predict(image), window);
}

void DensityModel::set_frozen_depth(int depth) {
  if (depth < 0 || depth > static_cast<int>(conv_units_.size()))
    throw std::invalid_argument("model: frozen depth out of range");
  for (size_t i = 0; i < conv_units_.size(); ++i)
    for (const std::string& name : conv_units_[i])
      store_.set_frozen(name, static_cast<int>(i) < depth);
}

LabelDistribution case_average(const std::vector<LabelDistribution>& views) {
  if (views.empty())
    throw std::invalid_argument("case_average: empty view list");
  std::array<double, kNumGrades> mean{};
  for (const LabelDistribution& v : views)
    for (size_t i = 0; i < kNumGrades; ++i) mean[i] += v[i];
  for (double& m : mean) m /= static_cast<double>(views.size());
  return LabelDistribution(mean);
}

IntensityWindow resolve_window(const PtnConfig& config, double u, double v) {
  if (u < v) return IntensityWindow(u, v, config.window.segments);
  return config.window;
}

}  // namespace ptnlab
