#include "ptnlab/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace ptnlab {

namespace {

using RowMajorMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;
using ConstRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;

void require_rank3(const Tensor& t, const std::string& who) {
  if (t.rank() != 3)
    throw std::invalid_argument(who + ": expected a {C,H,W} tensor, got " +
                                t.shape_str());
}

}  // namespace

Tensor fan_in_uniform(std::vector<Index> shape, Index fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Index i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-a, a);
  return t;
}

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(ParameterStore& store, std::string prefix, int in_ch,
               int out_ch, int kernel, int stride, int pad, Rng init)
    : store_(store),
      prefix_(std::move(prefix)),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kernel_(kernel),
      stride_(stride),
      pad_(pad) {
  const std::string wname = prefix_ + "/w";
  if (!store_.contains(wname)) {
    const Index fan_in = static_cast<Index>(in_ch) * kernel * kernel;
    store_.add(wname, fan_in_uniform({out_ch, in_ch, kernel, kernel}, fan_in,
                                     init));
    store_.add(prefix_ + "/b", Tensor::zeros({out_ch}));
  }
}

std::vector<std::string> Conv2d::param_names() const {
  return {prefix_ + "/w", prefix_ + "/b"};
}

Tensor Conv2d::forward(const Tensor& input) {
  require_rank3(input, prefix_);
  if (input.dim(0) != in_ch_)
    throw std::invalid_argument(prefix_ + ": channel mismatch, got " +
                                input.shape_str());
  const Index h = input.dim(1), w = input.dim(2);
  out_h_ = (h + 2 * pad_ - kernel_) / stride_ + 1;
  out_w_ = (w + 2 * pad_ - kernel_) / stride_ + 1;
  if (out_h_ <= 0 || out_w_ <= 0)
    throw std::invalid_argument(prefix_ + ": input " + input.shape_str() +
                                " smaller than kernel reach");
  input_ = input;

  const Index patch = static_cast<Index>(in_ch_) * kernel_ * kernel_;
  const Index cols_n = out_h_ * out_w_;
  cols_.setZero(patch, cols_n);
  for (Index oh = 0; oh < out_h_; ++oh) {
    for (Index ow = 0; ow < out_w_; ++ow) {
      const Index n = oh * out_w_ + ow;
      for (int c = 0; c < in_ch_; ++c) {
        for (int ki = 0; ki < kernel_; ++ki) {
          const Index ih = oh * stride_ - pad_ + ki;
          if (ih < 0 || ih >= h) continue;
          for (int kj = 0; kj < kernel_; ++kj) {
            const Index iw = ow * stride_ - pad_ + kj;
            if (iw < 0 || iw >= w) continue;
            cols_((static_cast<Index>(c) * kernel_ + ki) * kernel_ + kj, n) =
                input.at(c, ih, iw);
          }
        }
      }
    }
  }

  const Tensor& wt = store_.value(prefix_ + "/w");
  const Tensor& bt = store_.value(prefix_ + "/b");
  ConstRowMajorMap wmat(wt.data.data(), out_ch_, patch);

  Tensor out({out_ch_, out_h_, out_w_});
  RowMajorMap omat(out.data.data(), out_ch_, cols_n);
  omat.noalias() = wmat * cols_;
  omat.colwise() += Eigen::Map<const Eigen::VectorXd>(bt.data.data(), out_ch_);
  return out;
}

Tensor Conv2d::backward(const Tensor& upstream) {
  const Index patch = static_cast<Index>(in_ch_) * kernel_ * kernel_;
  const Index cols_n = out_h_ * out_w_;
  ConstRowMajorMap up(upstream.data.data(), out_ch_, cols_n);

  ParamEntry& we = store_.at(prefix_ + "/w");
  ParamEntry& be = store_.at(prefix_ + "/b");
  RowMajorMap dw(we.grad.data.data(), out_ch_, patch);
  dw.noalias() += up * cols_.transpose();
  Eigen::Map<Eigen::VectorXd>(be.grad.data.data(), out_ch_) +=
      up.rowwise().sum();

  ConstRowMajorMap wmat(we.value.data.data(), out_ch_, patch);
  Eigen::MatrixXd dcols = wmat.transpose() * up;

  const Index h = input_.dim(1), w = input_.dim(2);
  Tensor dx(input_.shape);
  for (Index oh = 0; oh < out_h_; ++oh) {
    for (Index ow = 0; ow < out_w_; ++ow) {
      const Index n = oh * out_w_ + ow;
      for (int c = 0; c < in_ch_; ++c) {
        for (int ki = 0; ki < kernel_; ++ki) {
          const Index ih = oh * stride_ - pad_ + ki;
          if (ih < 0 || ih >= h) continue;
          for (int kj = 0; kj < kernel_; ++kj) {
            const Index iw = ow * stride_ - pad_ + kj;
            if (iw < 0 || iw >= w) continue;
            dx.at(c, ih, iw) +=
                dcols((static_cast<Index>(c) * kernel_ + ki) * kernel_ + kj, n);
          }
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------
// InstanceNorm

InstanceNorm::InstanceNorm(ParameterStore& store, std::string prefix,
                           int channels)
    : store_(store), prefix_(std::move(prefix)), channels_(channels) {
  if (!store_.contains(prefix_ + "/gain")) {
    store_.add(prefix_ + "/gain", Tensor::full({channels}, 1.0));
    store_.add(prefix_ + "/bias", Tensor::zeros({channels}));
  }
}

std::vector<std::string> InstanceNorm::param_names() const {
  return {prefix_ + "/gain", prefix_ + "/bias"};
}

Tensor InstanceNorm::forward(const Tensor& input) {
  if (input.rank() < 2 || input.dim(0) != channels_)
    throw std::invalid_argument(prefix_ + ": bad input shape " +
                                input.shape_str());
  const Index n = input.numel() / channels_;
  if (n < 2)
    throw std::invalid_argument(prefix_ + ": channel needs >= 2 elements");

  const Tensor& gain = store_.value(prefix_ + "/gain");
  const Tensor& bias = store_.value(prefix_ + "/bias");

  normalized_ = Tensor(input.shape);
  inv_std_.assign(static_cast<size_t>(channels_), 0.0);
  Tensor out(input.shape);
  for (int c = 0; c < channels_; ++c) {
    auto xc = input.data.segment(c * n, n);
    const double mean = xc.mean();
    const double var = (xc - mean).square().mean();
    const double inv_std = 1.0 / std::sqrt(var + kEps);
    inv_std_[static_cast<size_t>(c)] = inv_std;
    normalized_.data.segment(c * n, n) = (xc - mean) * inv_std;
    out.data.segment(c * n, n) =
        normalized_.data.segment(c * n, n) * gain[c] + bias[c];
  }
  return out;
}

Tensor InstanceNorm::backward(const Tensor& upstream) {
  const Index n = upstream.numel() / channels_;
  ParamEntry& gain = store_.at(prefix_ + "/gain");
  ParamEntry& bias = store_.at(prefix_ + "/bias");

  Tensor dx(upstream.shape);
  for (int c = 0; c < channels_; ++c) {
    auto up = upstream.data.segment(c * n, n);
    auto xhat = normalized_.data.segment(c * n, n);
    gain.grad[c] += (up * xhat).sum();
    bias.grad[c] += up.sum();
    // d/dx of (x-mu)/sigma with population statistics
    const double g = gain.value[c];
    const double mean_up = up.mean();
    const double mean_up_xhat = (up * xhat).mean();
    dx.data.segment(c * n, n) =
        g * inv_std_[static_cast<size_t>(c)] *
        (up - mean_up - xhat * mean_up_xhat);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Relu / Softplus

Tensor Relu::forward(const Tensor& input) {
  input_ = input;
  Tensor out(input.shape);
  out.data = input.data.max(0.0);
  return out;
}

Tensor Relu::backward(const Tensor& upstream) {
  Tensor dx(upstream.shape);
  dx.data = (input_.data > 0.0).select(upstream.data, 0.0);
  return dx;
}

Tensor Softplus::forward(const Tensor& input) {
  input_ = input;
  Tensor out(input.shape);
  // log(1+e^x) = max(x,0) + log1p(e^-|x|)
  for (Index i = 0; i < input.numel(); ++i) {
    const double x = input[i];
    out[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  return out;
}

Tensor Softplus::backward(const Tensor& upstream) {
  Tensor dx(upstream.shape);
  for (Index i = 0; i < upstream.numel(); ++i) {
    const double x = input_[i];
    dx[i] = upstream[i] / (1.0 + std::exp(-x));
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Pooling

MeanPool::MeanPool(int factor) : factor_(factor) {
  if (factor < 1) throw std::invalid_argument("mean_pool: factor must be >= 1");
}

Tensor MeanPool::forward(const Tensor& input) {
  require_rank3(input, "mean_pool");
  in_shape_ = input.shape;
  const Index c_n = input.dim(0), h = input.dim(1), w = input.dim(2);
  const Index oh_n = (h + factor_ - 1) / factor_;
  const Index ow_n = (w + factor_ - 1) / factor_;
  Tensor out({c_n, oh_n, ow_n});
  for (Index c = 0; c < c_n; ++c) {
    for (Index oh = 0; oh < oh_n; ++oh) {
      const Index h0 = oh * factor_, h1 = std::min(h0 + factor_, h);
      for (Index ow = 0; ow < ow_n; ++ow) {
        const Index w0 = ow * factor_, w1 = std::min(w0 + factor_, w);
        double acc = 0.0;
        for (Index i = h0; i < h1; ++i)
          for (Index j = w0; j < w1; ++j) acc += input.at(c, i, j);
        out.at(c, oh, ow) = acc / static_cast<double>((h1 - h0) * (w1 - w0));
      }
    }
  }
  return out;
}

Tensor MeanPool::backward(const Tensor& upstream) {
  const Index c_n = in_shape_[0], h = in_shape_[1], w = in_shape_[2];
  const Index oh_n = upstream.dim(1), ow_n = upstream.dim(2);
  Tensor dx(in_shape_);
  for (Index c = 0; c < c_n; ++c) {
    for (Index oh = 0; oh < oh_n; ++oh) {
      const Index h0 = oh * factor_, h1 = std::min(h0 + factor_, h);
      for (Index ow = 0; ow < ow_n; ++ow) {
        const Index w0 = ow * factor_, w1 = std::min(w0 + factor_, w);
        const double share = upstream.at(c, oh, ow) /
                             static_cast<double>((h1 - h0) * (w1 - w0));
        for (Index i = h0; i < h1; ++i)
          for (Index j = w0; j < w1; ++j) dx.at(c, i, j) += share;
      }
    }
  }
  return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& input) {
  require_rank3(input, "global_avg_pool");
  in_shape_ = input.shape;
  const Index c_n = input.dim(0), n = input.dim(1) * input.dim(2);
  Tensor out({c_n});
  for (Index c = 0; c < c_n; ++c) out[c] = input.data.segment(c * n, n).mean();
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& upstream) {
  const Index c_n = in_shape_[0], n = in_shape_[1] * in_shape_[2];
  Tensor dx(in_shape_);
  for (Index c = 0; c < c_n; ++c)
    dx.data.segment(c * n, n).setConstant(upstream[c] /
                                          static_cast<double>(n));
  return dx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(ParameterStore& store, std::string prefix, int in_features,
               int out_features, Rng init)
    : store_(store),
      prefix_(std::move(prefix)),
      in_features_(in_features),
      out_features_(out_features) {
  if (!store_.contains(prefix_ + "/w")) {
    store_.add(prefix_ + "/w",
               fan_in_uniform({out_features, in_features}, in_features, init));
    store_.add(prefix_ + "/b", Tensor::zeros({out_features}));
  }
}

std::vector<std::string> Linear::param_names() const {
  return {prefix_ + "/w", prefix_ + "/b"};
}

Tensor Linear::forward(const Tensor& input) {
  if (input.numel() != in_features_)
    throw std::invalid_argument(prefix_ + ": expected " +
                                std::to_string(in_features_) + " features");
  input_ = input;
  const Tensor& wt = store_.value(prefix_ + "/w");
  const Tensor& bt = store_.value(prefix_ + "/b");
  ConstRowMajorMap wmat(wt.data.data(), out_features_, in_features_);
  Tensor out({out_features_});
  Eigen::Map<Eigen::VectorXd>(out.data.data(), out_features_).noalias() =
      wmat * Eigen::Map<const Eigen::VectorXd>(input.data.data(),
                                               in_features_) +
      Eigen::Map<const Eigen::VectorXd>(bt.data.data(), out_features_);
  return out;
}

Tensor Linear::backward(const Tensor& upstream) {
  ParamEntry& we = store_.at(prefix_ + "/w");
  ParamEntry& be = store_.at(prefix_ + "/b");
  RowMajorMap dw(we.grad.data.data(), out_features_, in_features_);
  Eigen::Map<const Eigen::VectorXd> up(upstream.data.data(), out_features_);
  Eigen::Map<const Eigen::VectorXd> x(input_.data.data(), in_features_);
  dw.noalias() += up * x.transpose();
  Eigen::Map<Eigen::VectorXd>(be.grad.data.data(), out_features_) += up;

  ConstRowMajorMap wmat(we.value.data.data(), out_features_, in_features_);
  Tensor dx(input_.shape);
  Eigen::Map<Eigen::VectorXd>(dx.data.data(), in_features_).noalias() =
      wmat.transpose() * up;
  return dx;
}

// ---------------------------------------------------------------------------
// Sequential

Tensor Sequential::forward(const Tensor& input) {
  Tensor x = input;
  for (auto& op : ops_) x = op->forward(x);
  return x;
}

Tensor Sequential::backward(const Tensor& upstream) {
  Tensor g = upstream;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<std::string> Sequential::param_names() const {
  std::vector<std::string> out;
  for (const auto& op : ops_)
    for (auto& n : op->param_names()) out.push_back(std::move(n));
  return out;
}

ParameterStore* Sequential::store() {
  for (auto& op : ops_)
    if (ParameterStore* s = op->store()) return s;
  return nullptr;
}

// ---------------------------------------------------------------------------
// ResidualBlock

ResidualBlock::ResidualBlock(ParameterStore& store, std::string prefix,
                             int in_ch, int out_ch, int stride, Rng init)
    : store_(store),
      prefix_(prefix),
      conv1_(store, prefix + "/conv1", in_ch, out_ch, 3, stride, 1,
             init.stream("conv1")),
      in1_(store, prefix + "/in1", out_ch),
      conv2_(store, prefix + "/conv2", out_ch, out_ch, 3, 1, 1,
             init.stream("conv2")),
      in2_(store, prefix + "/in2", out_ch) {
  if (stride != 1 || in_ch != out_ch) {
    skip_conv_ = std::make_unique<Conv2d>(store, prefix + "/skip", in_ch,
                                          out_ch, 1, stride, 0,
                                          init.stream("skip"));
    skip_in_ =
        std::make_unique<InstanceNorm>(store, prefix + "/skip_in", out_ch);
  }
}

Tensor ResidualBlock::forward(const Tensor& input) {
  Tensor main = in2_.forward(
      conv2_.forward(relu1_.forward(in1_.forward(conv1_.forward(input)))));
  Tensor shortcut =
      skip_conv_ ? skip_in_->forward(skip_conv_->forward(input)) : input;
  pre_relu_ = Tensor(main.shape);
  pre_relu_.data = main.data + shortcut.data;
  Tensor out(main.shape);
  out.data = pre_relu_.data.max(0.0);
  return out;
}

Tensor ResidualBlock::backward(const Tensor& upstream) {
  Tensor dpre(upstream.shape);
  dpre.data = (pre_relu_.data > 0.0).select(upstream.data, 0.0);

  Tensor dmain = conv1_.backward(in1_.backward(
      relu1_.backward(conv2_.backward(in2_.backward(dpre)))));
  if (skip_conv_) {
    Tensor dskip = skip_conv_->backward(skip_in_->backward(dpre));
    dmain.data += dskip.data;
  } else {
    dmain.data += dpre.data;
  }
  return dmain;
}

std::vector<std::string> ResidualBlock::param_names() const {
  std::vector<std::string> out;
  for (const DifferentiableOp* op :
       {static_cast<const DifferentiableOp*>(&conv1_),
        static_cast<const DifferentiableOp*>(&in1_),
        static_cast<const DifferentiableOp*>(&conv2_),
        static_cast<const DifferentiableOp*>(&in2_)})
    for (auto& n : op->param_names()) out.push_back(std::move(n));
  if (skip_conv_) {
    for (auto& n : skip_conv_->param_names()) out.push_back(std::move(n));
    for (auto& n : skip_in_->param_names()) out.push_back(std::move(n));
  }
  return out;
}

}  // namespace ptnlab
