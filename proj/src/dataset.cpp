#include "ptnlab/dataset.hpp"

#include <map>

#include "ptnlab/pgm.hpp"

namespace ptnlab {

LoadedDataset LoadedDataset::load(const std::filesystem::path& manifest_path) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const std::filesystem::path base = manifest_path.parent_path();

  LoadedDataset out;
  std::map<std::string, size_t> case_index;
  for (const ManifestRecord& rec : manifest.records) {
    Tensor img2d = read_pgm16(base / rec.image_path);
    LoadedView view;
    view.image = img2d.reshaped({1, img2d.dim(0), img2d.dim(1)});
    view.view_id = rec.view_id;
    view.window_u = rec.window_u;
    view.window_v = rec.window_v;
    out.views_.push_back(std::move(view));

    auto it = case_index.find(rec.case_id);
    if (it == case_index.end()) {
      LoadedCase c;
      c.id = rec.case_id;
      c.split = rec.split;
      c.site_id = rec.site_id;
      c.reader_id = rec.reader_id;
      c.label = LabelDistribution::one_hot(rec.grade);
      c.assigned_grade = rec.grade;
      c.gold_grade = rec.gold_grade;
      case_index.emplace(rec.case_id, out.cases_.size());
      out.cases_.push_back(std::move(c));
      it = case_index.find(rec.case_id);
    }
    out.cases_[it->second].view_indices.push_back(out.views_.size() - 1);
  }
  return out;
}

std::vector<size_t> LoadedDataset::case_indices(Split split) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < cases_.size(); ++i)
    if (cases_[i].split == split) out.push_back(i);
  return out;
}

IntensityWindow LoadedDataset::window_of(size_t view_index,
                                         int segments) const {
  const LoadedView& v = views_[view_index];
  return IntensityWindow(v.window_u, v.window_v, segments);
}

std::vector<TrainSample> LoadedDataset::samples(
    const std::vector<size_t>& case_indices, int window_segments) const {
  std::vector<TrainSample> out;
  for (size_t ci : case_indices) {
    const LoadedCase& c = cases_[ci];
    for (size_t vi : c.view_indices) {
      TrainSample s;
      s.image = &views_[vi].image;
      s.window = window_of(vi, window_segments);
      s.label = c.label;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace ptnlab
