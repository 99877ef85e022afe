#include "ptnlab/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace ptnlab {

namespace {

// log softmax of a 4-vector, numerically stable
std::array<double, kNumGrades> log_softmax4(const Tensor& logits) {
  if (logits.numel() != kNumGrades)
    throw std::invalid_argument("softmax: expected 4 logits");
  const double zmax = logits.data.maxCoeff();
  double sum = 0.0;
  for (Index i = 0; i < kNumGrades; ++i) sum += std::exp(logits[i] - zmax);
  const double lse = zmax + std::log(sum);
  std::array<double, kNumGrades> out{};
  for (Index i = 0; i < kNumGrades; ++i)
    out[static_cast<size_t>(i)] = logits[i] - lse;
  return out;
}

}  // namespace

LabelDistribution softmax4(const Tensor& logits) {
  const auto logp = log_softmax4(logits);
  std::array<double, kNumGrades> p{};
  for (size_t i = 0; i < kNumGrades; ++i) p[i] = std::exp(logp[i]);
  return LabelDistribution(p);
}

LossResult softmax_cross_entropy(const Tensor& logits,
                                 const LabelDistribution& target) {
  target.validate();
  const auto logp = log_softmax4(logits);

  LossResult out;
  out.dlogits = Tensor({kNumGrades});
  for (size_t i = 0; i < kNumGrades; ++i) {
    out.loss -= target[i] * logp[i];
    out.dlogits[static_cast<Index>(i)] = std::exp(logp[i]) - target[i];
  }
  if (!std::isfinite(out.loss))
    throw std::runtime_error("cross_entropy: non-finite loss");
  return out;
}

}  // namespace ptnlab
