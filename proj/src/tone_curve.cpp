#include "ptnlab/tone_curve.hpp"

namespace ptnlab {

HingeResult hinge_penalty(const SlopeSet& slopes, double epsilon,
                          double lambda, HingeForm form) {
  if (epsilon <= 0.0)
    throw std::invalid_argument("hinge: epsilon must be positive");
  if (lambda < 0.0)
    throw std::invalid_argument("hinge: lambda must be non-negative");

  HingeResult out;
  out.dslopes = Eigen::ArrayXd::Zero(slopes.count());
  for (Index i = 0; i < slopes.count(); ++i) {
    const double s = slopes[i];
    if (form == HingeForm::kCorrected) {
      if (s < epsilon) {
        out.penalty += lambda * (epsilon - s);
        out.dslopes[i] = -lambda;
      }
    } else {
      // min(-s, -eps) + eps == eps - s when s >= eps, else 0
      if (s >= epsilon) {
        out.penalty += lambda * (epsilon - s);
        out.dslopes[i] = -lambda;
      }
    }
  }
  return out;
}

}  // namespace ptnlab
