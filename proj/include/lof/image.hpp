#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lof/errors.hpp"
#include "lof/types.hpp"

namespace lof {

/// 8-bit grayscale image, row-major. Intensities are promoted to double on
/// access; all subpixel operations run in double precision.
class Image {
 public:
  Image(int width, int height, uint8_t fill = 0);
  Image(int width, int height, std::vector<uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }

  double operator()(int u, int v) const {
    return static_cast<double>(data_[static_cast<size_t>(v) * width_ + u]);
  }
  uint8_t pixel(int u, int v) const {
    return data_[static_cast<size_t>(v) * width_ + u];
  }
  void set_pixel(int u, int v, uint8_t value) {
    data_[static_cast<size_t>(v) * width_ + u] = value;
  }
  const std::vector<uint8_t>& data() const { return data_; }

  /// True when p stays at least `margin` pixels away from the domain border
  /// [0, w-1] x [0, h-1].
  bool contains(const Vec2& p, double margin = 0.0) const {
    return p.x() >= margin && p.y() >= margin &&
           p.x() <= width_ - 1.0 - margin && p.y() <= height_ - 1.0 - margin;
  }

 private:
  int width_;
  int height_;
  std::vector<uint8_t> data_;
};

/// Binary (P5) 8-bit PGM reader. Accepts '#' comments in the header, requires
/// maxval 255.
Image load_pgm(const std::string& path);

/// Writes a canonical P5 header ("P5\n<w> <h>\n255\n") followed by raw rows.
void save_pgm(const Image& img, const std::string& path);

struct GradientInfo {
  double g_u = 0.0;
  double g_v = 0.0;
  double magnitude = 0.0;
  /// Orientation of the iso-intensity direction (the direction a line through
  /// this point would have if the gradient is its normal), in [0, pi).
  double angle = 0.0;
};

struct StructureTensor {
  double sum_gu2 = 0.0;
  double sum_gugv = 0.0;
  double sum_gv2 = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// Bilinear interpolation at p. Throws OutOfBounds unless p lies inside
/// [0, w-1] x [0, h-1]; no clamping is ever applied.
double sample_bilinear(const Image& img, const Vec2& p);

/// Central differences with unit step over bilinear samples. Requires p to be
/// at least 1 px interior. angle is 0 when the gradient vanishes.
GradientInfo gradient_at(const Image& img, const Vec2& p);

/// Sum of outer products of gradients over the (2*half_window+1)^2 integer
/// offsets around p, with closed-form eigenvalues.
StructureTensor structure_tensor(const Image& img, const Vec2& p,
                                 int half_window);

}  // namespace lof
