#pragma once

#include <vector>

#include "ptnlab/dataset.hpp"
#include "ptnlab/model.hpp"

namespace ptnlab {

/// Standard deviation across images of the per-image pixel mean over the
/// breast region, before and after the model's photometric normalization.
/// The directional counterpart of the paper's intensity-spread analysis.
struct SpreadResult {
  double before = 0.0;
  double after = 0.0;
};

SpreadResult normalization_spread(DensityModel& model,
                                  const LoadedDataset& data, Split split);

}  // namespace ptnlab
