#include <doctest.h>

#include <cmath>

#include "ptnlab/op.hpp"
#include "ptnlab/rng.hpp"
#include "ptnlab/tone_curve.hpp"

using namespace ptnlab;

namespace {

// Direct per-case transcription of the segment formula, kept independent of
// the library's cancellation-free arrangement; the oracle for value checks.
double direct_map(double x, const Eigen::ArrayXd& s, double u, double v,
                  int K) {
  const double t = (v - u) / K;
  if (x < u) return u + s[0] * (x - u);
  if (x >= v) {
    double acc = 0.0;
    for (int l = 1; l <= K; ++l) acc += s[l] * t;
    return u + acc + s[K + 1] * (x - v);
  }
  const int k = std::min(K, 1 + static_cast<int>((x - u) / t));
  double acc = 0.0;
  for (int l = 1; l <= k - 1; ++l) acc += s[l] * t;
  return u + acc + s[k] * (x - (u + t * (k - 1)));
}

double map_one(double x, const SlopeSet& s, const IntensityWindow& w) {
  Tensor img({1}, {x});
  return apply_tone_curve(img, s, w)[0];
}

// adapters so the finite-difference checker can probe the tone curve
class ToneSlopesOp : public DifferentiableOp {
 public:
  ToneSlopesOp(Tensor image, IntensityWindow window)
      : image_(std::move(image)), window_(window) {}
  std::string name() const override { return "tone_curve[slopes]"; }
  Tensor forward(const Tensor& slopes) override {
    slopes_ = SlopeSet(slopes.data);
    return apply_tone_curve(image_, slopes_, window_);
  }
  Tensor backward(const Tensor& up) override {
    auto grads = tone_curve_backward(up, image_, slopes_, window_);
    Tensor out({grads.dslopes.size()});
    out.data = grads.dslopes;
    return out;
  }

 private:
  Tensor image_;
  IntensityWindow window_;
  SlopeSet slopes_;
};

class ToneImageOp : public DifferentiableOp {
 public:
  ToneImageOp(SlopeSet slopes, IntensityWindow window)
      : slopes_(std::move(slopes)), window_(window) {}
  std::string name() const override { return "tone_curve[image]"; }
  Tensor forward(const Tensor& image) override {
    image_ = image;
    return apply_tone_curve(image, slopes_, window_);
  }
  Tensor backward(const Tensor& up) override {
    return tone_curve_backward(up, image_, slopes_, window_).dimage;
  }

 private:
  SlopeSet slopes_;
  IntensityWindow window_;
  Tensor image_;
};

}  // namespace

TEST_CASE("unit slopes give the bit-exact identity") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const double u = rng.uniform(-2.0, 2.0);
    const double v = u + rng.uniform(0.2, 4.0);
    const int K = 1 + static_cast<int>(rng.below(12));
    IntensityWindow w(u, v, K);
    SlopeSet ones = SlopeSet::ones(K);
    Tensor img({64});
    for (Index i = 0; i < img.numel(); ++i) img[i] = rng.uniform(u - 2.0, v + 2.0);
    Tensor out = apply_tone_curve(img, ones, w);
    for (Index i = 0; i < img.numel(); ++i) CHECK(out[i] == img[i]);
  }
}

TEST_CASE("K=2 worked example") {
  IntensityWindow w(0.0, 1.0, 2);
  SlopeSet s(Eigen::ArrayXd(4));
  s[0] = 2.0;
  s[1] = 1.0;
  s[2] = 2.0;
  s[3] = 1.0;

  CHECK(map_one(0.25, s, w) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(map_one(0.75, s, w) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(map_one(1.25, s, w) == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(map_one(-0.25, s, w) == doctest::Approx(-0.5).epsilon(1e-12));

  // the segment boundary evaluates identically through both branch formulas
  const double left_limit = 0.0 + s[1] * (0.5 - 0.0);        // T_1 formula at 0.5
  const double right_value = 0.0 + s[1] * 0.5 + s[2] * 0.0;  // T_2 formula at 0.5
  CHECK(left_limit == doctest::Approx(right_value).epsilon(1e-15));
  CHECK(map_one(0.5, s, w) == doctest::Approx(0.5).epsilon(1e-12));

  // slope-count mismatch is a configuration error
  CHECK_THROWS(map_one(0.5, SlopeSet::ones(3), w));
}

TEST_CASE("matches the direct formula on random slope sets") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const double u = rng.uniform(-1.0, 1.0);
    const double v = u + rng.uniform(0.5, 3.0);
    const int K = 1 + static_cast<int>(rng.below(10));
    IntensityWindow w(u, v, K);
    Eigen::ArrayXd s(K + 2);
    for (int i = 0; i < K + 2; ++i) s[i] = rng.uniform(0.01, 3.0);
    const double x = rng.uniform(u - 1.0, v + 1.0);
    const double got = map_one(x, SlopeSet(s), w);
    const double want = direct_map(x, s, u, v, K);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("continuity at every segment boundary") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const double u = rng.uniform(-1.0, 1.0);
    const double v = u + rng.uniform(0.5, 3.0);
    const int K = 1 + static_cast<int>(rng.below(10));
    IntensityWindow w(u, v, K);
    Eigen::ArrayXd s(K + 2);
    for (int i = 0; i < K + 2; ++i) s[i] = rng.uniform(0.01, 3.0);
    const double t = w.width();
    for (int k = 0; k <= K; ++k) {
      const double b = u + t * k;
      // limit from the left branch vs the right branch value at b
      double from_left, from_right;
      if (k == 0) {
        from_left = u + s[0] * (b - u);
        from_right = direct_map(b, s, u, v, K);
      } else if (k == K) {
        double acc = 0.0;
        for (int l = 1; l <= K - 1; ++l) acc += s[l] * t;
        from_left = u + acc + s[K] * (b - (u + t * (K - 1)));
        double acc2 = 0.0;
        for (int l = 1; l <= K; ++l) acc2 += s[l] * t;
        from_right = u + acc2 + s[K + 1] * (b - v);
      } else {
        double acc = 0.0;
        for (int l = 1; l <= k - 1; ++l) acc += s[l] * t;
        from_left = u + acc + s[k] * (b - (u + t * (k - 1)));
        from_right = direct_map(b, s, u, v, K);
      }
      CHECK(std::abs(from_left - from_right) <= 1e-9);
      // the implementation agrees with the boundary value too
      CHECK(std::abs(map_one(b, SlopeSet(s), w) - from_right) <= 1e-9);
    }
  }
}

TEST_CASE("strict monotonicity when all slopes >= epsilon") {
  Rng rng(31);
  const double eps = 1e-2;
  for (int trial = 0; trial < 1000; ++trial) {
    const double u = rng.uniform(-1.0, 1.0);
    const double v = u + rng.uniform(0.5, 3.0);
    const int K = 1 + static_cast<int>(rng.below(10));
    IntensityWindow w(u, v, K);
    Eigen::ArrayXd s(K + 2);
    for (int i = 0; i < K + 2; ++i) s[i] = eps + rng.uniform(0.0, 3.0);
    double x1 = rng.uniform(u - 1.0, v + 1.0);
    double x2 = rng.uniform(u - 1.0, v + 1.0);
    if (x1 == x2) continue;
    if (x1 > x2) std::swap(x1, x2);
    CHECK(map_one(x1, SlopeSet(s), w) < map_one(x2, SlopeSet(s), w));
  }
}

TEST_CASE("backward: worked K=2 gradients") {
  IntensityWindow w(0.0, 1.0, 2);
  SlopeSet s(Eigen::ArrayXd(4));
  s[0] = 2.0;
  s[1] = 1.0;
  s[2] = 2.0;
  s[3] = 1.0;
  Tensor x({1}, {0.75});
  Tensor up({1}, {1.0});
  auto grads = tone_curve_backward(up, x, s, w);
  CHECK(grads.dslopes[0] == doctest::Approx(0.0));
  CHECK(grads.dslopes[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(grads.dslopes[2] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(grads.dslopes[3] == doctest::Approx(0.0));
  CHECK(grads.dimage[0] == doctest::Approx(2.0).epsilon(1e-12));

  // all-unit slopes: d/dx = 1 everywhere
  SlopeSet ones = SlopeSet::ones(2);
  Tensor xs({5}, {-0.3, 0.1, 0.5, 0.9, 1.4});
  Tensor ups({5}, {1.0, 1.0, 1.0, 1.0, 1.0});
  auto g2 = tone_curve_backward(ups, xs, ones, w);
  for (Index i = 0; i < 5; ++i) CHECK(g2.dimage[i] == doctest::Approx(1.0));
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    const int K = 2 + static_cast<int>(rng.below(9));
    IntensityWindow w(rng.uniform(-0.5, 0.0), rng.uniform(0.5, 2.0), K);
    Eigen::ArrayXd s(K + 2);
    for (int i = 0; i < K + 2; ++i) s[i] = rng.uniform(0.05, 2.5);
    Tensor img({3, 5});
    for (Index i = 0; i < img.numel(); ++i)
      img[i] = rng.uniform(w.u - 0.5, w.v + 0.5);

    ToneSlopesOp slopes_op(img, w);
    Tensor slope_probe({K + 2});
    slope_probe.data = s;
    CHECK(grad_check(slopes_op, slope_probe, 1e-5).worst() <= 1e-4);

    ToneImageOp image_op(SlopeSet(s), w);
    CHECK(grad_check(image_op, img, 1e-5).worst() <= 1e-4);
  }
}

TEST_CASE("hinge penalty values and shape") {
  // no violation
  SlopeSet ok(Eigen::ArrayXd(4));
  ok[0] = 0.5;
  ok[1] = 1.0;
  ok[2] = 0.01;
  ok[3] = 2.0;
  CHECK(hinge_penalty(ok, 0.01, 1.0).penalty == 0.0);

  // one violating slope: max(0.01 - (-0.5), 0) = 0.51
  SlopeSet bad(Eigen::ArrayXd(4));
  bad[0] = 1.0;
  bad[1] = 1.0;
  bad[2] = -0.5;
  bad[3] = 1.0;
  auto r = hinge_penalty(bad, 0.01, 1.0);
  CHECK(r.penalty == doctest::Approx(0.51).epsilon(1e-12));
  CHECK(r.dslopes[2] == -1.0);
  CHECK(r.dslopes[0] == 0.0);

  // penalty == 0 iff every slope >= epsilon
  Rng rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::ArrayXd s(5);
    for (int i = 0; i < 5; ++i) s[i] = rng.uniform(-1.0, 2.0);
    const double eps = 0.01;
    const bool all_ok = (s >= eps).all();
    CHECK((hinge_penalty(SlopeSet(s), eps, 1.0).penalty == 0.0) == all_ok);
  }

  // non-increasing and convex as a function of a single slope
  auto at = [](double si) {
    SlopeSet s(Eigen::ArrayXd::Ones(4));
    s[1] = si;
    return hinge_penalty(s, 0.01, 2.0).penalty;
  };
  double prev = at(-1.0);
  for (double si = -0.9; si < 1.0; si += 0.1) {
    const double cur = at(si);
    CHECK(cur <= prev + 1e-15);
    prev = cur;
  }
  // convexity via midpoints
  for (double a = -1.0; a < 0.8; a += 0.3) {
    const double b = a + 0.4;
    CHECK(at(0.5 * (a + b)) <= 0.5 * (at(a) + at(b)) + 1e-15);
  }

  // gradient vs finite differences away from the kink
  Rng rng2(52);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::ArrayXd s(6);
    for (int i = 0; i < 6; ++i) s[i] = rng2.uniform(-1.0, 2.0);
    const double eps = 0.01, lambda = 1.7, h = 1e-6;
    auto res = hinge_penalty(SlopeSet(s), eps, lambda);
    for (int i = 0; i < 6; ++i) {
      if (std::abs(s[i] - eps) < 1e-4) continue;  // kink neighborhood
      Eigen::ArrayXd sp = s, sm = s;
      sp[i] += h;
      sm[i] -= h;
      const double fd = (hinge_penalty(SlopeSet(sp), eps, lambda).penalty -
                         hinge_penalty(SlopeSet(sm), eps, lambda).penalty) /
                        (2.0 * h);
      CHECK(res.dslopes[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("printed hinge form rewards large slopes (kept for demonstration)") {
  // as printed the term is <= 0 and keeps decreasing as slopes grow, so it
  // cannot enforce a slope floor
  SlopeSet small(Eigen::ArrayXd::Ones(4));
  SlopeSet large(Eigen::ArrayXd::Ones(4));
  large.slopes *= 10.0;
  const double p_small =
      hinge_penalty(small, 0.01, 1.0, HingeForm::kPrinted).penalty;
  const double p_large =
      hinge_penalty(large, 0.01, 1.0, HingeForm::kPrinted).penalty;
  CHECK(p_small <= 0.0);
  CHECK(p_large < p_small);

  // while the corrected form is flat at zero there
  CHECK(hinge_penalty(small, 0.01, 1.0).penalty == 0.0);
  CHECK(hinge_penalty(large, 0.01, 1.0).penalty == 0.0);
}
