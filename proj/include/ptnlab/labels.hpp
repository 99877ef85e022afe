#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace ptnlab {

/// Density grades, ordered fatty to dense.
enum class Grade : uint8_t { A = 0, B = 1, C = 2, D = 3 };

constexpr int kNumGrades = 4;

inline char grade_char(Grade g) {
  return static_cast<char>('a' + static_cast<int>(g));
}

inline Grade grade_from_char(char c) {
  if (c < 'a' || c > 'd') throw std::invalid_argument("bad grade char");
  return static_cast<Grade>(c - 'a');
}

/// A probability vector over the four grades. Holds both one-hot labels and
/// soft pseudo-labels.
struct LabelDistribution {
  std::array<double, kNumGrades> probs{0.0, 0.0, 0.0, 0.0};

  LabelDistribution() = default;

  explicit LabelDistribution(const std::array<double, kNumGrades>& p)
      : probs(p) {
    validate();
  }

  static LabelDistribution one_hot(Grade g) {
    LabelDistribution d;
    d.probs[static_cast<size_t>(g)] = 1.0;
    return d;
  }

  static LabelDistribution uniform() {
    LabelDistribution d;
    d.probs.fill(1.0 / kNumGrades);
    return d;
  }

  double operator[](size_t i) const { return probs[i]; }
  double& operator[](size_t i) { return probs[i]; }

  double sum() const {
    return probs[0] + probs[1] + probs[2] + probs[3];
  }

  /// Highest-probability grade; ties break to the lowest grade index.
  Grade argmax() const {
    size_t best = 0;
    for (size_t i = 1; i < kNumGrades; ++i)
      if (probs[i] > probs[best]) best = i;
    return static_cast<Grade>(best);
  }

  bool valid(double tol = 1e-9) const {
    for (double p : probs)
      if (!(p >= 0.0 && p <= 1.0 + tol) || !std::isfinite(p)) return false;
    return std::abs(sum() - 1.0) <= tol;
  }

  void validate() const {
    if (!valid()) throw std::invalid_argument("label distribution invalid");
  }

  bool operator==(const LabelDistribution& o) const { return probs == o.probs; }
};

}  // namespace ptnlab
