#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ptnlab/op.hpp"
#include "ptnlab/rng.hpp"

namespace ptnlab {

/// 2-D convolution over a {C,H,W} tensor, zero padding, square kernel.
/// Weights live in the store as "<prefix>/w" {out,in,k,k} and "<prefix>/b".
/// Fresh entries are drawn from a zero-mean uniform scaled by fan-in;
/// existing entries (a loaded checkpoint) are reused as-is.
class Conv2d : public DifferentiableOp {
 public:
  Conv2d(ParameterStore& store, std::string prefix, int in_ch, int out_ch,
         int kernel, int stride, int pad, Rng init);

  std::string name() const override { return prefix_; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<std::string> param_names() const override;
  ParameterStore* store() override { return &store_; }

  int out_channels() const { return out_ch_; }

 private:
  ParameterStore& store_;
  std::string prefix_;
  int in_ch_, out_ch_, kernel_, stride_, pad_;
  Tensor input_;                               // cached for backward
  Eigen::MatrixXd cols_;                       // im2col of the cached input
  Index out_h_ = 0, out_w_ = 0;
};

/// Per-channel instance normalization with a scalar gain/bias per channel:
/// (x - mean) / sqrt(var + 1e-5), population variance over H*W.
class InstanceNorm : public DifferentiableOp {
 public:
  static constexpr double kEps = 1e-5;

  InstanceNorm(ParameterStore& store, std::string prefix, int channels);

  std::string name() const override { return prefix_; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<std::string> param_names() const override;
  ParameterStore* store() override { return &store_; }

 private:
  ParameterStore& store_;
  std::string prefix_;
  int channels_;
  Tensor normalized_;               // x-hat, before the affine
  std::vector<double> inv_std_;     // per channel
};

class Relu : public DifferentiableOp {
 public:
  std::string name() const override { return "relu"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& upstream) override;

 private:
  Tensor input_;
};

class Softplus : public DifferentiableOp {
 public:
  std::string name() const override { return "softplus"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& upstream) override;

 private:
  Tensor input_;
};

/// Mean pooling by an integer factor; edge windows may be partial and
/// average over the pixels actually present, so no pixel is dropped.
class MeanPool : public DifferentiableOp {
 public:
  explicit MeanPool(int factor);

  std::string name() const override { return "mean_pool"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& upstream) override;

 private:
  int factor_;
  std::vector<Index> in_shape_;
};

/// {C,H,W} -> {C} spatial mean.
class GlobalAvgPool : public DifferentiableOp {
 public:
  std::string name() const override { return "global_avg_pool"; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& upstream) override;

 private:
  std::vector<Index> in_shape_;
};

class Linear : public DifferentiableOp {
 public:
  Linear(ParameterStore& store, std::string prefix, int in_features,
         int out_features, Rng init);

  std::string name() const override { return prefix_; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<std::string> param_names() const override;
  ParameterStore* store() override { return &store_; }

 private:
  ParameterStore& store_;
  std::string prefix_;
  int in_features_, out_features_;
  Tensor input_;
};

/// Runs children in order; backward in reverse order.
class Sequential : public DifferentiableOp {
 public:
  Sequential() = default;
  explicit Sequential(std::string name) : name_(std::move(name)) {}

  template <typename OpT, typename... Args>
  OpT& emplace(Args&&... args) {
    auto op = std::make_unique<OpT>(std::forward<Args>(args)...);
    OpT& ref = *op;
    ops_.push_back(std::move(op));
    return ref;
  }

  void push(std::unique_ptr<DifferentiableOp> op) {
    ops_.push_back(std::move(op));
  }

  std::string name() const override { return name_; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<std::string> param_names() const override;
  ParameterStore* store() override;

  size_t size() const { return ops_.size(); }
  DifferentiableOp& op(size_t i) { return *ops_[i]; }

 private:
  std::string name_ = "sequential";
  std::vector<std::unique_ptr<DifferentiableOp>> ops_;
};

/// conv-IN-relu-conv-IN plus a skip connection (1x1 conv + IN when the
/// shape changes), then a final relu.
class ResidualBlock : public DifferentiableOp {
 public:
  ResidualBlock(ParameterStore& store, std::string prefix, int in_ch,
                int out_ch, int stride, Rng init);

  std::string name() const override { return prefix_; }
  Tensor forward(const Tensor& input) override;
  Tensor backward(const Tensor& upstream) override;
  std::vector<std::string> param_names() const override;
  ParameterStore* store() override { return &store_; }

 private:
  ParameterStore& store_;
  std::string prefix_;
  Conv2d conv1_;
  InstanceNorm in1_;
  Relu relu1_;
  Conv2d conv2_;
  InstanceNorm in2_;
  std::unique_ptr<Conv2d> skip_conv_;
  std::unique_ptr<InstanceNorm> skip_in_;
  Tensor pre_relu_;
};

/// Uniform init scaled by fan-in: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor fan_in_uniform(std::vector<Index> shape, Index fan_in, Rng& rng);

}  // namespace ptnlab
