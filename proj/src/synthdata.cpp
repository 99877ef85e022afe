#include "ptnlab/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include "ptnlab/pgm.hpp"

namespace ptnlab {

namespace {

constexpr double kFatIntensity = 0.30;
constexpr double kParenchymaIntensity = 0.75;
constexpr double kTissueNoiseStd = 0.015;

std::string pad_index(int i, int width = 5) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%0*d", width, i);
  return buf;
}

}  // namespace

void ReaderModel::validate() const {
  if (noise_std < 0.0)
    throw std::invalid_argument("reader: negative noise std");
  double prev = -1.0;
  for (size_t i = 0; i < 3; ++i) {
    const double t = kGradeThresholds[i] + threshold_offsets[i];
    if (t <= prev)
      throw std::invalid_argument(
          "reader: shifted thresholds must stay strictly increasing");
    prev = t;
  }
}

void SiteModel::validate() const {
  if (gamma <= 0.0 || gain <= 0.0)
    throw std::invalid_argument(
        "site: gamma and gain must be positive (distortion must stay "
        "strictly increasing)");
}

Tensor generate_phantom_image(double p, int size, Rng rng) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("phantom: p must be in [0,1]");
  if (size < 8) throw std::invalid_argument("phantom: image too small");

  Tensor image({size, size});

  const double cr = 0.5 * size;
  const double cc = 0.5 * size;
  const double ax_r = 0.44 * size * rng.uniform(0.92, 1.02);
  const double ax_c = 0.34 * size * rng.uniform(0.92, 1.02);

  std::vector<Index> mask;
  for (Index r = 0; r < size; ++r) {
    for (Index c = 0; c < size; ++c) {
      const double dr = (r + 0.5 - cr) / ax_r;
      const double dc = (c + 0.5 - cc) / ax_c;
      if (dr * dr + dc * dc <= 1.0) mask.push_back(r * size + c);
    }
  }

  // Grow clustered parenchyma blobs from a few seeds until the masked
  // fraction hits the target count.
  const auto target =
      static_cast<size_t>(std::lround(p * static_cast<double>(mask.size())));
  std::vector<char> in_mask(static_cast<size_t>(size * size), 0);
  for (Index i : mask) in_mask[static_cast<size_t>(i)] = 1;
  std::vector<char> parenchyma(static_cast<size_t>(size * size), 0);

  if (target > 0) {
    using QItem = std::pair<double, Index>;  // (priority, pixel)
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> frontier;
    std::vector<char> queued(static_cast<size_t>(size * size), 0);

    const int n_seeds = 1 + static_cast<int>(p * 5.0);
    for (int s = 0; s < n_seeds; ++s) {
      const Index pix = mask[static_cast<size_t>(rng.below(mask.size()))];
      if (!queued[static_cast<size_t>(pix)]) {
        queued[static_cast<size_t>(pix)] = 1;
        frontier.emplace(rng.uniform(), pix);
      }
    }

    size_t grown = 0;
    while (grown < target && !frontier.empty()) {
      const Index pix = frontier.top().second;
      frontier.pop();
      if (parenchyma[static_cast<size_t>(pix)]) continue;
      parenchyma[static_cast<size_t>(pix)] = 1;
      ++grown;

      const Index r = pix / size, c = pix % size;
      const Index neighbors[4] = {pix - size, pix + size, pix - 1, pix + 1};
      const bool ok[4] = {r > 0, r < size - 1, c > 0, c < size - 1};
      for (int k = 0; k < 4; ++k) {
        if (!ok[k]) continue;
        const Index nb = neighbors[k];
        if (in_mask[static_cast<size_t>(nb)] &&
            !queued[static_cast<size_t>(nb)]) {
          queued[static_cast<size_t>(nb)] = 1;
          frontier.emplace(rng.uniform(), nb);
        }
      }
    }
  }

  for (Index pix : mask) {
    const double base =
        parenchyma[static_cast<size_t>(pix)] ? kParenchymaIntensity
                                             : kFatIntensity;
    // clamp the tissue noise so fat and parenchyma never overlap
    const double noise =
        std::clamp(rng.normal(0.0, kTissueNoiseStd), -0.06, 0.06);
    image[pix] = std::clamp(base + noise, 0.05, 0.98);
  }
  return image;
}

double measured_density(const Tensor& image) {
  const double cut = 0.5 * (kFatIntensity + kParenchymaIntensity);
  Index mask_n = 0, par_n = 0;
  for (Index i = 0; i < image.numel(); ++i) {
    if (image[i] > kMaskThreshold) {
      ++mask_n;
      if (image[i] > cut) ++par_n;
    }
  }
  if (mask_n == 0) throw std::runtime_error("phantom: empty breast mask");
  return static_cast<double>(par_n) / static_cast<double>(mask_n);
}

Tensor apply_site(const Tensor& image, const SiteModel& site) {
  site.validate();
  Tensor out(image.shape);
  for (Index i = 0; i < image.numel(); ++i) {
    const double x = image[i];
    out[i] = x > 0.0 ? site.gain * std::pow(x, site.gamma) + site.offset : 0.0;
  }
  return out;
}

Grade assign_grade(double p, const ReaderModel& reader, Rng rng) {
  if (p < 0.0 || p > 1.0)
    throw std::invalid_argument("assign_grade: p must be in [0,1]");
  reader.validate();
  const double perceived =
      reader.noise_std > 0.0 ? p + rng.normal(0.0, reader.noise_std) : p;
  int grade = 0;
  for (size_t i = 0; i < 3; ++i)
    if (perceived >= kGradeThresholds[i] + reader.threshold_offsets[i])
      grade = static_cast<int>(i) + 1;
  return static_cast<Grade>(grade);
}

std::string split_name(Split s) {
  switch (s) {
    case Split::DR: return "D_r";
    case Split::DS: return "D_s";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw std::logic_error("bad split");
}

Split split_from_name(const std::string& name) {
  if (name == "D_r") return Split::DR;
  if (name == "D_s") return Split::DS;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw std::invalid_argument("unknown split name: " + name);
}

void DatasetManifest::validate() const {
  std::set<std::string> ds_ids, dr_ids;
  for (const ManifestRecord& r : records) {
    if (r.split == Split::DS) ds_ids.insert(r.case_id);
    if (r.split == Split::DR) dr_ids.insert(r.case_id);
    if ((r.split == Split::DS || r.split == Split::Val) && !r.gold_grade)
      throw std::runtime_error("manifest: " + r.case_id +
                               " needs a gold grade");
  }
  for (const std::string& id : ds_ids)
    if (dr_ids.count(id))
      throw std::runtime_error("manifest: case " + id +
                               " appears in both D_s and D_r");
}

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write " + path.string());
  out << "case_id,view_id,image_path,site_id,reader_id,grade,gold_grade,"
         "split,window_u,window_v\n";
  char buf[64];
  for (const ManifestRecord& r : manifest.records) {
    out << r.case_id << ',' << r.view_id << ',' << r.image_path << ','
        << r.site_id << ',' << r.reader_id << ',' << grade_char(r.grade)
        << ',';
    if (r.gold_grade) out << grade_char(*r.gold_grade);
    out << ',' << split_name(r.split) << ',';
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g", r.window_u, r.window_v);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("manifest: write failed " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("manifest: empty file " + path.string());

  DatasetManifest manifest;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw std::runtime_error("manifest: malformed row: " + line);

    ManifestRecord r;
    r.case_id = fields[0];
    r.view_id = std::stoi(fields[1]);
    r.image_path = fields[2];
    r.site_id = std::stoi(fields[3]);
    r.reader_id = std::stoi(fields[4]);
    r.grade = grade_from_char(fields[5].at(0));
    if (!fields[6].empty()) r.gold_grade = grade_from_char(fields[6].at(0));
    r.split = split_from_name(fields[7]);
    r.window_u = std::stod(fields[8]);
    r.window_v = std::stod(fields[9]);
    manifest.records.push_back(std::move(r));
  }
  manifest.validate();
  return manifest;
}

std::vector<SiteModel> default_sites() {
  return {
      {0, 1.0, 1.0, 0.0},    // reference tone curve
      {1, 0.55, 1.25, 0.06}, // bright, compressed highlights
      {2, 1.8, 0.8, 0.0},    // dark, expanded highlights
  };
}

std::vector<ReaderModel> default_readers() {
  return {
      {0, {0.0, 0.0, 0.0}, 0.0, true},       // gold
      {1, {-0.06, -0.06, -0.06}, 0.04, false},  // grades denser
      {2, {0.05, 0.05, 0.05}, 0.04, false},     // grades fattier
      {3, {-0.02, 0.03, -0.04}, 0.05, false},   // inconsistent
  };
}

DatasetManifest build_dataset(const DataConfig& config,
                              const std::filesystem::path& out_dir, Rng rng) {
  if (config.counts.d_r < 1 || config.counts.d_s < 1 ||
      config.counts.val < 1 || config.counts.test < 1)
    throw std::invalid_argument(
        "dataset: every split needs at least one case");
  if (config.views_per_case < 1)
    throw std::invalid_argument("dataset: views_per_case must be >= 1");

  const std::vector<SiteModel> sites =
      config.sites.empty() ? default_sites() : config.sites;
  const std::vector<ReaderModel> readers =
      config.readers.empty() ? default_readers() : config.readers;
  for (const SiteModel& s : sites) s.validate();
  for (const ReaderModel& r : readers) r.validate();

  const ReaderModel* gold = nullptr;
  std::vector<const ReaderModel*> non_gold;
  for (const ReaderModel& r : readers) {
    if (r.gold)
      gold = &r;
    else
      non_gold.push_back(&r);
  }
  if (!gold) throw std::invalid_argument("dataset: needs a gold reader");

  double mix_sum = 0.0;
  for (double m : config.grade_mix) mix_sum += m;
  if (mix_sum <= 0.0) throw std::invalid_argument("dataset: bad grade mix");

  std::filesystem::create_directories(out_dir / "images");

  // grade bands on p, inset so no case sits exactly on a threshold
  const double band_lo[4] = {0.005, 0.255, 0.505, 0.755};
  const double band_hi[4] = {0.245, 0.495, 0.745, 0.95};

  DatasetManifest manifest;
  const struct {
    Split split;
    int count;
    const char* prefix;
  } splits[] = {{Split::DR, config.counts.d_r, "r"},
                {Split::DS, config.counts.d_s, "s"},
                {Split::Val, config.counts.val, "v"},
                {Split::Test, config.counts.test, "t"}};

  for (const auto& sp : splits) {
    for (int i = 0; i < sp.count; ++i) {
      Rng rng_case = rng.stream(split_name(sp.split) + "/case",
                                static_cast<uint64_t>(i));
      const std::string case_id = sp.prefix + pad_index(i);

      // grade mix draw, then p uniform within the grade band
      int band = 0;
      double pick = rng_case.uniform() * mix_sum;
      for (int g = 0; g < kNumGrades; ++g) {
        pick -= config.grade_mix[static_cast<size_t>(g)];
        if (pick < 0.0) {
          band = g;
          break;
        }
      }
      const double p = rng_case.uniform(band_lo[band], band_hi[band]);

      const SiteModel& site =
          sites[static_cast<size_t>(rng_case.below(sites.size()))];
      const ReaderModel* reader = gold;
      if (sp.split == Split::DR && !non_gold.empty())
        reader = non_gold[static_cast<size_t>(rng_case.below(non_gold.size()))];

      const Grade grade = assign_grade(p, *reader, rng_case.stream("grade"));
      const Grade gold_grade = assign_grade(p, *gold, rng_case.stream("gold"));

      for (int view = 1; view <= config.views_per_case; ++view) {
        Tensor phantom = generate_phantom_image(
            p, config.image_size,
            rng_case.stream("view", static_cast<uint64_t>(view)));
        Tensor distorted = apply_site(phantom, site);

        const std::string rel =
            "images/" + case_id + "_v" + std::to_string(view) + ".pgm";
        write_pgm16(distorted, out_dir / rel);
        const Tensor decoded = read_pgm16(out_dir / rel);

        double lo = 1e300, hi = -1e300;
        for (Index px = 0; px < decoded.numel(); ++px) {
          if (decoded[px] <= kMaskThreshold) continue;
          lo = std::min(lo, decoded[px]);
          hi = std::max(hi, decoded[px]);
        }
        if (!(lo < hi)) hi = lo + 1e-6;

        ManifestRecord rec;
        rec.case_id = case_id;
        rec.view_id = view;
        rec.image_path = rel;
        rec.site_id = site.id;
        rec.reader_id = reader->id;
        rec.grade = grade;
        rec.gold_grade = gold_grade;
        rec.split = sp.split;
        rec.window_u = lo;
        rec.window_v = hi + 1e-6;  // keep the max pixel inside the window
        manifest.records.push_back(std::move(rec));
      }
    }
  }

  manifest.validate();
  save_manifest(manifest, out_dir / "manifest.csv");
  return manifest;
}

}  // namespace ptnlab
