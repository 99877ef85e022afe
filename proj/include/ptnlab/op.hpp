#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ptnlab/param_store.hpp"
#include "ptnlab/tensor.hpp"

namespace ptnlab {

/// Contract every trainable operation follows: a forward pass that may cache
/// intermediates, and a backward pass that consumes the upstream gradient,
/// accumulates parameter gradients into the store, and returns the gradient
/// with respect to the forward input.
///
/// backward() must be called after forward() on the same instance; a single
/// instance is not safe for concurrent forward passes.
class DifferentiableOp {
 public:
  virtual ~DifferentiableOp() = default;

  virtual std::string name() const = 0;
  virtual Tensor forward(const Tensor& input) = 0;
  virtual Tensor backward(const Tensor& upstream) = 0;

  /// Store entry names owned by this op, outermost first.
  virtual std::vector<std::string> param_names() const { return {}; }

  /// Store holding this op's parameters; null for parameter-free ops.
  virtual ParameterStore* store() { return nullptr; }
};

struct GradCheckEntry {
  std::string name;  // parameter entry name, or "input"
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;

  double worst() const {
    double w = 0.0;
    for (const auto& e : entries) w = std::max(w, e.max_rel_err);
    return w;
  }
};

/// Compares the analytic gradients of a random scalar projection of
/// op.forward against central finite differences, coordinate by coordinate,
/// over the probe input and every non-frozen parameter of the op.
/// Throws if the forward output is non-finite at any evaluation point.
GradCheckReport grad_check(DifferentiableOp& op, const Tensor& probe,
                           double step, uint64_t seed = 7);

}  // namespace ptnlab
