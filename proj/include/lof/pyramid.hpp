#pragma once

#include <vector>

#include "lof/image.hpp"

namespace lof {

/// Coarse-to-fine image stack. Level 0 is the input image; level k is level
/// k-1 smoothed with the separable binomial kernel [1 4 6 4 1]/16 and
/// resampled at stride `scale` via bilinear interpolation, so a point p at
/// level 0 sits at p / scale^k at level k.
class Pyramid {
 public:
  Pyramid(std::vector<Image> levels, double scale);

  const Image& level(int k) const { return levels_[static_cast<size_t>(k)]; }
  int height() const { return static_cast<int>(levels_.size()); }
  double scale() const { return scale_; }

 private:
  std::vector<Image> levels_;
  double scale_;
};

/// Builds `height` levels. Level dimensions follow floor(prev / scale); every
/// level must stay at least 8x8 or DimensionTooSmall is thrown before any
/// work is done.
Pyramid build_pyramid(const Image& img, double scale, int height);

}  // namespace lof
