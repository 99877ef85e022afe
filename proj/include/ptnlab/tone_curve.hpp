#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ptnlab/tensor.hpp"

namespace ptnlab {

/// Intensity range of interest [u, v) split into K equal sub-intervals.
/// Mirrors the window metadata attached to each stored image.
struct IntensityWindow {
  double u = 0.0;
  double v = 1.0;
  int segments = 10;  // K

  IntensityWindow() = default;
  IntensityWindow(double u_, double v_, int k) : u(u_), v(v_), segments(k) {
    validate();
  }

  double width() const { return (v - u) / segments; }  // t

  void validate() const {
    if (!(u < v)) throw std::invalid_argument("window: requires u < v");
    if (segments < 1) throw std::invalid_argument("window: requires K >= 1");
  }
};

/// The K+2 slopes of the tone curve: one below-window slope, K segment
/// slopes, one above-window slope. All slopes == 1 gives the identity map.
struct SlopeSet {
  Eigen::ArrayXd slopes;

  SlopeSet() = default;
  explicit SlopeSet(Eigen::ArrayXd s) : slopes(std::move(s)) {}

  static SlopeSet ones(int segments) {
    return SlopeSet(Eigen::ArrayXd::Ones(segments + 2));
  }

  Index count() const { return slopes.size(); }
  double operator[](Index i) const { return slopes[i]; }
  double& operator[](Index i) { return slopes[i]; }

  void check_matches(const IntensityWindow& window) const {
    if (count() != window.segments + 2)
      throw std::invalid_argument("slope set: expected K+2 slopes, got " +
                                  std::to_string(count()));
  }
};

namespace detail {

/// Cumulative corrections: prefix[k] = sum_{l=1..k} (s_l - 1) * t, so the
/// map can be evaluated as x plus corrections. The rearrangement is exact
/// algebra on the segment formula and makes unit slopes the bit-exact
/// identity (every correction term is exactly zero).
inline Eigen::ArrayXd correction_prefix(const SlopeSet& s,
                                        const IntensityWindow& w) {
  const double t = w.width();
  Eigen::ArrayXd prefix(w.segments + 1);
  prefix[0] = 0.0;
  for (int k = 1; k <= w.segments; ++k)
    prefix[k] = prefix[k - 1] + (s[k] - 1.0) * t;
  return prefix;
}

/// Segment case of a pixel: 0 below the window, the 1-based segment index
/// inside [u,v), segments+1 at or above v.
inline int segment_of(double x, const IntensityWindow& w) {
  if (x < w.u) return 0;
  if (x >= w.v) return w.segments + 1;
  const int k = 1 + static_cast<int>((x - w.u) / w.width());
  return std::min(k, w.segments);
}

}  // namespace detail

/// Piecewise-linear monotone intensity map evaluated per pixel:
///   below window:  u + s_0 (x - u)
///   in segment k:  u + sum_{l<k} s_l t + s_k (x - min(T_k))
///   above window:  u + sum_{l<=K} s_l t + s_{K+1} (x - v)
/// Output shape equals input shape; out-of-window values extrapolate, they
/// are never clipped.
template <typename Scalar>
TensorT<Scalar> apply_tone_curve(const TensorT<Scalar>& image,
                                 const SlopeSet& slopes,
                                 const IntensityWindow& window) {
  window.validate();
  slopes.check_matches(window);
  const Eigen::ArrayXd prefix = detail::correction_prefix(slopes, window);
  const double t = window.width();
  const int K = window.segments;

  TensorT<Scalar> out(image.shape);
  for (Index i = 0; i < image.numel(); ++i) {
    const double x = static_cast<double>(image[i]);
    const int k = detail::segment_of(x, window);
    double y;
    if (k == 0) {
      y = x + (slopes[0] - 1.0) * (x - window.u);
    } else if (k == K + 1) {
      y = x + prefix[K] + (slopes[K + 1] - 1.0) * (x - window.v);
    } else {
      const double seg_min = window.u + t * (k - 1);
      y = x + prefix[k - 1] + (slopes[k] - 1.0) * (x - seg_min);
    }
    out[i] = static_cast<Scalar>(y);
  }
  return out;
}

template <typename Scalar>
struct ToneCurveGrads {
  Eigen::ArrayXd dslopes;      // gradient wrt the K+2 slopes
  TensorT<Scalar> dimage;      // gradient wrt the input pixels
};

/// Reverse-mode gradients of apply_tone_curve, accumulated over all pixels.
/// For a pixel in segment k:  d/ds_l = t for l in [1,k-1],
/// d/ds_k = x - min(T_k), d/dx = s_k; the outer cases follow the same
/// closed forms with s_0 / s_{K+1}.
template <typename Scalar>
ToneCurveGrads<Scalar> tone_curve_backward(const TensorT<Scalar>& upstream,
                                           const TensorT<Scalar>& image,
                                           const SlopeSet& slopes,
                                           const IntensityWindow& window) {
  window.validate();
  slopes.check_matches(window);
  if (!upstream.same_shape(image))
    throw std::invalid_argument("tone_curve_backward: shape mismatch");
  const int K = window.segments;
  const double t = window.width();

  ToneCurveGrads<Scalar> out;
  out.dslopes = Eigen::ArrayXd::Zero(K + 2);
  out.dimage = TensorT<Scalar>(image.shape);

  // Pixels in segment j (or above the window) contribute t to every ds_k
  // with k < j, so bucket the upstream mass per segment and sweep a suffix
  // sum instead of touching all K slopes per pixel.
  Eigen::ArrayXd mass = Eigen::ArrayXd::Zero(K + 2);
  for (Index i = 0; i < image.numel(); ++i) {
    const double x = static_cast<double>(image[i]);
    const double up = static_cast<double>(upstream[i]);
    const int k = detail::segment_of(x, window);
    if (k == 0) {
      out.dslopes[0] += up * (x - window.u);
      out.dimage[i] = static_cast<Scalar>(up * slopes[0]);
    } else if (k == K + 1) {
      out.dslopes[K + 1] += up * (x - window.v);
      out.dimage[i] = static_cast<Scalar>(up * slopes[K + 1]);
      mass[K + 1] += up;
    } else {
      const double seg_min = window.u + t * (k - 1);
      out.dslopes[k] += up * (x - seg_min);
      out.dimage[i] = static_cast<Scalar>(up * slopes[k]);
      mass[k] += up;
    }
  }
  double suffix = mass[K + 1];
  for (int k = K; k >= 1; --k) {
    out.dslopes[k] += t * suffix;
    suffix += mass[k];
  }
  return out;
}

enum class HingeForm {
  kCorrected,  // sum_i max(eps - s_i, 0): penalizes slopes below eps
  kPrinted,    // sum_i min(-s_i, -eps) + eps: rewards large slopes, kept
               // only to demonstrate why the corrected form is used
};

struct HingeResult {
  double penalty = 0.0;
  Eigen::ArrayXd dslopes;
};

/// Monotonicity regularizer on the slope set, scaled by lambda. Zero exactly
/// when every slope is >= epsilon (corrected form). Subgradient 0 at the kink.
HingeResult hinge_penalty(const SlopeSet& slopes, double epsilon,
                          double lambda,
                          HingeForm form = HingeForm::kCorrected);

}  // namespace ptnlab
