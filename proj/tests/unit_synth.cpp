#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "ptnlab/pgm.hpp"
#include "ptnlab/synthdata.hpp"

using namespace ptnlab;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("ptnlab_synth_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("pgm round trip within quantization error") {
  Rng rng(3);
  Tensor img({16, 16});
  for (Index i = 0; i < img.numel(); ++i) img[i] = rng.uniform(0.0, 2.0);
  const fs::path p = fs::temp_directory_path() / "ptnlab_test.pgm";
  write_pgm16(img, p);
  Tensor back = read_pgm16(p);
  REQUIRE(back.shape == img.shape);
  for (Index i = 0; i < img.numel(); ++i)
    CHECK(std::abs(back[i] - img[i]) <= 0.5 / kPgmScale + 1e-12);

  // a second write of the decoded image is byte-stable
  const fs::path p2 = fs::temp_directory_path() / "ptnlab_test2.pgm";
  write_pgm16(back, p2);
  CHECK(slurp(p) == slurp(p2));
  fs::remove(p);
  fs::remove(p2);
}

TEST_CASE("phantom density hits the target fraction") {
  // p=0: nothing above fat intensity inside the mask
  Tensor empty = generate_phantom_image(0.0, 64, Rng(1));
  CHECK(measured_density(empty) == 0.0);

  // p=1: the entire mask is parenchyma
  Tensor full = generate_phantom_image(1.0, 64, Rng(2));
  CHECK(measured_density(full) == 1.0);

  // pixel-count oracle at p=0.5 and assorted targets
  for (uint64_t seed = 0; seed < 8; ++seed) {
    Tensor half = generate_phantom_image(0.5, 64, Rng(seed));
    CHECK(measured_density(half) >= 0.48);
    CHECK(measured_density(half) <= 0.52);
  }
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const double p = rng.uniform(0.05, 0.95);
    Tensor img = generate_phantom_image(p, 64, rng.stream("t", trial));
    CHECK(std::abs(measured_density(img) - p) <= 0.02);
  }

  // background stays exactly zero
  CHECK(empty[0] == 0.0);
  CHECK_THROWS(generate_phantom_image(1.5, 64, Rng(0)));
}

TEST_CASE("site distortion: identity, power law, strict monotonicity") {
  Tensor img({2, 2}, {0.2, 0.5, 0.7, 0.0});

  SiteModel identity{0, 1.0, 1.0, 0.0};
  Tensor same = apply_site(img, identity);
  for (Index i = 0; i < img.numel(); ++i)
    CHECK(same[i] == doctest::Approx(img[i]).epsilon(1e-15));

  SiteModel square{1, 2.0, 1.0, 0.0};
  CHECK(apply_site(img, square)[1] == doctest::Approx(0.25).epsilon(1e-15));

  // zero background is preserved
  CHECK(apply_site(img, square)[3] == 0.0);

  // strictly increasing for any valid site
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    SiteModel site{0, rng.uniform(0.3, 3.0), rng.uniform(0.3, 2.0),
                   rng.uniform(0.0, 0.2)};
    double x1 = rng.uniform(0.01, 1.0), x2 = rng.uniform(0.01, 1.0);
    if (x1 == x2) continue;
    if (x1 > x2) std::swap(x1, x2);
    Tensor pair({2}, {x1, x2});
    Tensor out = apply_site(pair, site);
    CHECK(out[0] < out[1]);
  }

  CHECK_THROWS(apply_site(img, SiteModel{0, -1.0, 1.0, 0.0}));
  CHECK_THROWS(apply_site(img, SiteModel{0, 1.0, 0.0, 0.0}));
}

TEST_CASE("reader grading thresholds and disagreement") {
  const ReaderModel gold{0, {0.0, 0.0, 0.0}, 0.0, true};
  CHECK(assign_grade(0.60, gold, Rng(0)) == Grade::C);
  CHECK(assign_grade(0.24, gold, Rng(0)) == Grade::A);
  CHECK(assign_grade(0.26, gold, Rng(0)) == Grade::B);

  // gold grade is a deterministic function of p alone
  CHECK(assign_grade(0.42, gold, Rng(1)) == assign_grade(0.42, gold, Rng(99)));

  // a reader with all thresholds shifted down grades denser: direct
  // threshold evaluation puts p=0.46 at c where gold says b
  const ReaderModel biased{1, {-0.05, -0.05, -0.05}, 0.0, false};
  CHECK(assign_grade(0.46, gold, Rng(0)) == Grade::B);
  CHECK(assign_grade(0.46, biased, Rng(0)) == Grade::C);
  CHECK(assign_grade(0.22, gold, Rng(0)) == Grade::A);
  CHECK(assign_grade(0.22, biased, Rng(0)) == Grade::B);

  // shifted thresholds must stay strictly increasing
  const ReaderModel broken{2, {0.3, 0.0, 0.0}, 0.0, false};
  CHECK_THROWS(assign_grade(0.5, broken, Rng(0)));
}

TEST_CASE("build_dataset bookkeeping and splits") {
  const fs::path dir = temp_dir("build");
  DataConfig config;
  config.counts = {24, 6, 6, 8};
  config.image_size = 32;
  const DatasetManifest manifest = build_dataset(config, dir, Rng(11));

  CHECK(manifest.records.size() == (24 + 6 + 6 + 8) * 4);
  std::set<std::string> dr_cases, ds_cases;
  for (const ManifestRecord& r : manifest.records) {
    CHECK(fs::exists(dir / r.image_path));  // every referenced file exists
    CHECK(r.window_u < r.window_v);
    CHECK(r.gold_grade.has_value());
    if (r.split == Split::DR) dr_cases.insert(r.case_id);
    if (r.split == Split::DS) ds_cases.insert(r.case_id);
  }
  CHECK(dr_cases.size() == 24);
  CHECK(ds_cases.size() == 6);

  // reload equals what was written
  const DatasetManifest loaded = load_manifest(dir / "manifest.csv");
  CHECK(loaded.records.size() == manifest.records.size());
  CHECK(loaded.records[0].case_id == manifest.records[0].case_id);
  CHECK(loaded.records[0].window_u ==
        doctest::Approx(manifest.records[0].window_u).epsilon(1e-9));

  fs::remove_all(dir);
}

TEST_CASE("same seed regenerates byte-identical images and manifest") {
  const fs::path d1 = temp_dir("det1"), d2 = temp_dir("det2");
  DataConfig config;
  config.counts = {6, 2, 2, 2};
  config.image_size = 32;
  build_dataset(config, d1, Rng(5));
  build_dataset(config, d2, Rng(5));
  CHECK(slurp(d1 / "manifest.csv") == slurp(d2 / "manifest.csv"));
  CHECK(slurp(d1 / "images/r00000_v1.pgm") == slurp(d2 / "images/r00000_v1.pgm"));
  CHECK(slurp(d1 / "images/t00001_v4.pgm") == slurp(d2 / "images/t00001_v4.pgm"));

  const fs::path d3 = temp_dir("det3");
  build_dataset(config, d3, Rng(6));
  CHECK(slurp(d1 / "manifest.csv") != slurp(d3 / "manifest.csv"));
  fs::remove_all(d1);
  fs::remove_all(d2);
  fs::remove_all(d3);
}

TEST_CASE("zero-noise single-reader control: D_r equals gold relabeling") {
  const fs::path dir = temp_dir("control");
  DataConfig config;
  config.counts = {20, 2, 2, 2};
  config.image_size = 32;
  config.sites = {{0, 1.0, 1.0, 0.0}};
  config.readers = {{0, {0.0, 0.0, 0.0}, 0.0, true}};
  const DatasetManifest manifest = build_dataset(config, dir, Rng(13));
  for (const ManifestRecord& r : manifest.records)
    CHECK(r.grade == *r.gold_grade);
  fs::remove_all(dir);
}

TEST_CASE("default readers give 10-40% D_r label disagreement") {
  const fs::path dir = temp_dir("disagree");
  DataConfig config;
  config.counts = {300, 4, 4, 4};
  config.image_size = 16;  // grades don't depend on the rendering
  const DatasetManifest manifest = build_dataset(config, dir, Rng(17));

  std::set<std::string> seen;
  int disagree = 0, total = 0;
  for (const ManifestRecord& r : manifest.records) {
    if (r.split != Split::DR || !seen.insert(r.case_id).second) continue;
    ++total;
    if (r.grade != *r.gold_grade) ++disagree;
  }
  const double rate = static_cast<double>(disagree) / total;
  MESSAGE("D_r-vs-gold disagreement rate: ", rate);
  CHECK(rate >= 0.10);
  CHECK(rate <= 0.40);
  fs::remove_all(dir);
}

TEST_CASE("manifest invariants are enforced") {
  DatasetManifest bad;
  ManifestRecord a;
  a.case_id = "x0";
  a.split = Split::DS;
  a.gold_grade = Grade::B;
  bad.records.push_back(a);
  a.split = Split::DR;
  bad.records.push_back(a);  // same case id in D_s and D_r
  CHECK_THROWS(bad.validate());

  DatasetManifest missing;
  ManifestRecord v;
  v.case_id = "v0";
  v.split = Split::Val;  // no gold grade
  missing.records.push_back(v);
  CHECK_THROWS(missing.validate());

  // impossible split sizes are a configuration error
  DataConfig zero;
  zero.counts = {10, 2, 2, 0};
  CHECK_THROWS(build_dataset(zero, temp_dir("zero"), Rng(1)));
}
