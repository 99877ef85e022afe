#include "ptnlab/param_store.hpp"

#include <stdexcept>

namespace ptnlab {

void sgd_step(ParameterStore& params, double learning_rate) {
  if (learning_rate < 0.0)
    throw std::invalid_argument("sgd_step: negative learning rate");

  // Validate before mutating anything so a bad gradient aborts the whole step.
  for (const auto& [name, e] : params)
    if (!e.frozen && !e.grad.all_finite())
      throw std::runtime_error("sgd_step: non-finite gradient in entry " +
                               name);

  for (auto& [name, e] : params) {
    if (!e.frozen) e.value.data -= learning_rate * e.grad.data;
    e.grad.data.setZero();
  }
}

}  // namespace ptnlab
