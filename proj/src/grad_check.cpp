#include "ptnlab/op.hpp"

#include <algorithm>
#include <map>

#include "ptnlab/rng.hpp"

namespace ptnlab {

namespace {

double rel_err(double analytic, double numeric) {
  const double denom =
      std::max({1.0, std::abs(analytic), std::abs(numeric)});
  return std::abs(analytic - numeric) / denom;
}

}  // namespace

GradCheckReport grad_check(DifferentiableOp& op, const Tensor& probe,
                           double step, uint64_t seed) {
  if (step <= 0.0) throw std::invalid_argument("grad_check: step must be > 0");

  auto project = [&op](const Tensor& x, const Tensor& weights) {
    Tensor y = op.forward(x);
    if (!y.all_finite())
      throw std::runtime_error("grad_check: non-finite forward output from " +
                               op.name());
    return (weights.data * y.data).sum();
  };

  // Fixed random projection of the output so a single backward pass covers
  // every output coordinate at once.
  Tensor y0 = op.forward(probe);
  if (!y0.all_finite())
    throw std::runtime_error("grad_check: non-finite forward output from " +
                             op.name());
  Rng rng(seed, "grad_check");
  Tensor weights(y0.shape);
  for (Index i = 0; i < weights.numel(); ++i) weights[i] = rng.uniform(-1, 1);

  ParameterStore* store = op.store();
  if (store) store->zero_grads();
  const Tensor analytic_input = op.backward(weights);

  std::map<std::string, Tensor> analytic_params;
  for (const std::string& pname : op.param_names())
    analytic_params.emplace(pname, store->at(pname).grad);

  GradCheckReport report;

  for (const std::string& pname : op.param_names()) {
    Tensor& value = store->value(pname);
    const Tensor& analytic = analytic_params.at(pname);
    GradCheckEntry entry{pname, 0.0};
    for (Index i = 0; i < value.numel(); ++i) {
      const double saved = value[i];
      value[i] = saved + step;
      const double plus = project(probe, weights);
      value[i] = saved - step;
      const double minus = project(probe, weights);
      value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      entry.max_rel_err =
          std::max(entry.max_rel_err, rel_err(analytic[i], numeric));
    }
    report.entries.push_back(std::move(entry));
  }

  GradCheckEntry input_entry{"input", 0.0};
  Tensor perturbed = probe;
  for (Index i = 0; i < perturbed.numel(); ++i) {
    const double saved = perturbed[i];
    perturbed[i] = saved + step;
    const double plus = project(perturbed, weights);
    perturbed[i] = saved - step;
    const double minus = project(perturbed, weights);
    perturbed[i] = saved;
    const double numeric = (plus - minus) / (2.0 * step);
    input_entry.max_rel_err =
        std::max(input_entry.max_rel_err, rel_err(analytic_input[i], numeric));
  }
  report.entries.push_back(std::move(input_entry));

  if (store) store->zero_grads();
  return report;
}

}  // namespace ptnlab
