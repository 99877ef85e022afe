#pragma once

#include "ptnlab/labels.hpp"
#include "ptnlab/tensor.hpp"

namespace ptnlab {

struct LossResult {
  double loss = 0.0;
  Tensor dlogits;  // gradient of the loss with respect to the logits
};

/// Cross entropy of softmax(logits) against a (possibly soft) target
/// distribution: loss = -sum_i target_i * log softmax(logits)_i.
/// The gradient is softmax(logits) - target.
LossResult softmax_cross_entropy(const Tensor& logits,
                                 const LabelDistribution& target);

/// Softmax of a 4-vector of logits as a LabelDistribution.
LabelDistribution softmax4(const Tensor& logits);

}  // namespace ptnlab
