#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptnlab/labels.hpp"
#include "ptnlab/rng.hpp"
#include "ptnlab/tensor.hpp"

namespace ptnlab {

/// Grade thresholds on the density fraction p: a below the first, then b, c,
/// d. Quartiles, the simplest discretization of a continuous density score.
constexpr std::array<double, 3> kGradeThresholds = {0.25, 0.50, 0.75};

/// Background outside the breast ellipse is exactly zero, so the breast
/// mask of a stored image is recoverable by thresholding.
constexpr double kMaskThreshold = 0.01;

struct Phantom {
  Tensor image;  // {H,W}, intensities in (0,1]
  double density = 0.0;  // parenchyma fraction p within the breast mask
  int site_id = 0;
  std::string case_id;
  int view_id = 0;
};

/// Per-reader grading behavior: threshold shifts plus decision noise added
/// to p before thresholding. The gold reader has zero offsets and noise.
struct ReaderModel {
  int id = 0;
  std::array<double, 3> threshold_offsets{0.0, 0.0, 0.0};
  double noise_std = 0.0;
  bool gold = false;

  void validate() const;
};

/// Per-site monotone intensity distortion: gain * x^gamma + offset inside
/// the breast mask. Strictly increasing, hence correctable by a monotone
/// tone curve.
struct SiteModel {
  int id = 0;
  double gamma = 1.0;
  double gain = 1.0;
  double offset = 0.0;

  void validate() const;
};

/// Renders an elliptical breast phantom: fat tissue at a base intensity and
/// clustered parenchyma blobs grown until the masked parenchyma fraction
/// hits p, plus mild additive noise. Background stays exactly zero.
Tensor generate_phantom_image(double p, int size, Rng rng);

/// Measured parenchyma fraction of a phantom image (intensity midpoint
/// threshold inside the breast mask).
double measured_density(const Tensor& image);

Tensor apply_site(const Tensor& image, const SiteModel& site);

Grade assign_grade(double p, const ReaderModel& reader, Rng rng);

enum class Split { DR, DS, Val, Test };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct ManifestRecord {
  std::string case_id;
  int view_id = 0;
  std::string image_path;  // relative to the manifest directory
  int site_id = 0;
  int reader_id = 0;
  Grade grade = Grade::A;
  std::optional<Grade> gold_grade;
  Split split = Split::DR;
  double window_u = 0.0;
  double window_v = 1.0;
};

struct DatasetManifest {
  std::vector<ManifestRecord> records;

  /// D_s and D_r case ids are disjoint; every D_s and val record carries a
  /// gold grade.
  void validate() const;
};

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct SplitCounts {
  int d_r = 400;
  int d_s = 50;
  int val = 50;
  int test = 100;
};

struct DataConfig {
  SplitCounts counts;
  int image_size = 64;
  int views_per_case = 4;
  std::vector<SiteModel> sites;      // empty: default_sites()
  std::vector<ReaderModel> readers;  // empty: default_readers()
  std::array<double, kNumGrades> grade_mix = {0.08, 0.22, 0.50, 0.20};
};

std::vector<SiteModel> default_sites();
std::vector<ReaderModel> default_readers();

/// Writes images under <out_dir>/images and the manifest CSV, and returns
/// the manifest. D_r labels come from randomly drawn non-gold readers
/// (falling back to the gold reader when no other exists); D_s, val and
/// test labels come from the gold reader. Deterministic given the seed.
DatasetManifest build_dataset(const DataConfig& config,
                              const std::filesystem::path& out_dir, Rng rng);

}  // namespace ptnlab
