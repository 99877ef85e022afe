#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptnlab/synthdata.hpp"
#include "ptnlab/train.hpp"

namespace ptnlab {

struct LoadedView {
  Tensor image;  // {1,H,W}
  int view_id = 0;
  double window_u = 0.0;
  double window_v = 1.0;
};

struct LoadedCase {
  std::string id;
  Split split = Split::DR;
  int site_id = 0;
  int reader_id = 0;
  std::vector<size_t> view_indices;
  LabelDistribution label;          // mutable across distillation rounds
  Grade assigned_grade = Grade::A;  // the original reader grade
  std::optional<Grade> gold_grade;
};

/// A manifest plus its decoded images, grouped into cases. Labels start as
/// one-hot encodings of the per-case reader grade.
class LoadedDataset {
 public:
  static LoadedDataset load(const std::filesystem::path& manifest_path);

  const std::vector<LoadedCase>& cases() const { return cases_; }
  std::vector<LoadedCase>& cases() { return cases_; }
  const LoadedView& view(size_t i) const { return views_[i]; }
  size_t view_count() const { return views_.size(); }

  std::vector<size_t> case_indices(Split split) const;

  /// Per-view training samples for the given cases; labels are copied from
  /// the current case labels at call time.
  std::vector<TrainSample> samples(const std::vector<size_t>& case_indices,
                                   int window_segments) const;

  IntensityWindow window_of(size_t view_index, int segments) const;

 private:
  std::vector<LoadedView> views_;
  std::vector<LoadedCase> cases_;
};

}  // namespace ptnlab
