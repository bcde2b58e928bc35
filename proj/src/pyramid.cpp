#include "lof/pyramid.hpp"

#include <cmath>

namespace lof {

Pyramid::Pyramid(std::vector<Image> levels, double scale)
    : levels_(std::move(levels)), scale_(scale) {
  if (levels_.empty()) throw Error("pyramid needs at least one level");
}

namespace {

// Separable [1 4 6 4 1]/16 smoothing into a double buffer. Borders are
// mirrored without repeating the edge sample (-1 -> 1, w -> w-2).
std::vector<double> binomial_smooth(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  static const double k[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16,
                              1.0 / 16};
  auto reflect = [](int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * (n - 1) - i;
    return i;
  };

  std::vector<double> tmp(static_cast<size_t>(w) * h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int t = -2; t <= 2; ++t)
        acc += k[t + 2] * img(reflect(u + t, w), v);
      tmp[static_cast<size_t>(v) * w + u] = acc;
    }

  std::vector<double> out(static_cast<size_t>(w) * h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      double acc = 0.0;
      for (int t = -2; t <= 2; ++t)
        acc += k[t + 2] * tmp[static_cast<size_t>(reflect(v + t, h)) * w + u];
      out[static_cast<size_t>(v) * w + u] = acc;
    }
  return out;
}

Image decimate(const Image& img, double scale, int new_w, int new_h) {
  const std::vector<double> smooth = binomial_smooth(img);
  const int w = img.width();
  std::vector<uint8_t> data(static_cast<size_t>(new_w) * new_h);
  for (int v = 0; v < new_h; ++v) {
    for (int u = 0; u < new_w; ++u) {
      const double x = u * scale;
      const double y = v * scale;
      const int x0 = static_cast<int>(std::floor(x));
      const int y0 = static_cast<int>(std::floor(y));
      const double fx = x - x0;
      const double fy = y - y0;
      const size_t i = static_cast<size_t>(y0) * w + x0;
      const double val = (1.0 - fy) * ((1.0 - fx) * smooth[i] +
                                       fx * smooth[i + 1]) +
                         fy * ((1.0 - fx) * smooth[i + w] +
                               fx * smooth[i + w + 1]);
      const double rounded = std::floor(val + 0.5);
      data[static_cast<size_t>(v) * new_w + u] = static_cast<uint8_t>(
          rounded < 0.0 ? 0.0 : (rounded > 255.0 ? 255.0 : rounded));
    }
  }
  return Image(new_w, new_h, std::move(data));
}

}  // namespace

Pyramid build_pyramid(const Image& img, double scale, int height) {
  if (scale <= 1.0) throw Error("pyramid scale must be greater than 1");
  if (height < 1) throw Error("pyramid height must be at least 1");

  // Validate the full ladder before building anything.
  int w = img.width();
  int h = img.height();
  for (int k = 0; k < height; ++k) {
    if (k > 0) {
      w = static_cast<int>(std::floor(w / scale));
      h = static_cast<int>(std::floor(h / scale));
    }
    if (w < 8 || h < 8)
      throw DimensionTooSmall("pyramid level " + std::to_string(k) +
                              " would be " + std::to_string(w) + "x" +
                              std::to_string(h) + ", minimum is 8x8");
  }

  std::vector<Image> levels;
  levels.reserve(static_cast<size_t>(height));
  levels.push_back(img);
  for (int k = 1; k < height; ++k) {
    const Image& prev = levels.back();
    const int nw = static_cast<int>(std::floor(prev.width() / scale));
    const int nh = static_cast<int>(std::floor(prev.height() / scale));
    levels.push_back(decimate(prev, scale, nw, nh));
  }
  return Pyramid(std::move(levels), scale);
}

}  // namespace lof
