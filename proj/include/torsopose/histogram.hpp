#pragma once

#include <array>
#include <cmath>

namespace torsopose {

// Hue-saturation appearance histogram on a fixed 16x16 grid. Either
// normalized (bins sum to 1) or all-zero for an empty ROI.
struct Histogram2D {
  static constexpr int kGridSize = 16;
  static constexpr int kBinCount = kGridSize * kGridSize;

  std::array<double, kBinCount> bins{};

  double sum() const {
    double s = 0.0;
    for (double b : bins) s += b;
    return s;
  }

  bool empty() const { return sum() < 1e-12; }

  // Rescales to sum 1; an all-zero histogram stays all-zero.
  void normalize() {
    const double s = sum();
    if (s <= 0.0) return;
    for (double& b : bins) b /= s;
  }

  void validate() const;  // throws on negative bins or sum outside {0, 1}
};

// Hellinger-form Bhattacharyya distance, sqrt(1 - sum_i sqrt(a_i * b_i)),
// bounded in [0,1]. An all-zero histogram is maximally dissimilar to
// everything, including another all-zero one.
double bhattacharyya_distance(const Histogram2D& a, const Histogram2D& b);

}  // namespace torsopose
