#include "lof/image.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lof {

Image::Image(int width, int height, uint8_t fill)
    : width_(width), height_(height) {
  if (width < 2 || height < 2)
    throw DimensionTooSmall("image dimensions must be at least 2x2, got " +
                            std::to_string(width) + "x" +
                            std::to_string(height));
  data_.assign(static_cast<size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width < 2 || height < 2)
    throw DimensionTooSmall("image dimensions must be at least 2x2, got " +
                            std::to_string(width) + "x" +
                            std::to_string(height));
  if (data_.size() != static_cast<size_t>(width) * height)
    throw Error("image data size does not match dimensions");
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

int parse_pgm_int(const std::string& tok, const char* what) {
  if (tok.empty()) throw ParseError(std::string("pgm: missing ") + what);
  for (char ch : tok)
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw ParseError(std::string("pgm: bad ") + what + " '" + tok + "'");
  return std::stoi(tok);
}

}  // namespace

Image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");

  if (next_pgm_token(in) != "P5")
    throw ParseError("pgm: '" + path + "' is not a binary (P5) pgm");
  const int w = parse_pgm_int(next_pgm_token(in), "width");
  const int h = parse_pgm_int(next_pgm_token(in), "height");
  const int maxval = parse_pgm_int(next_pgm_token(in), "maxval");
  if (maxval != 255)
    throw ParseError("pgm: only maxval 255 is supported, got " +
                     std::to_string(maxval));

  std::vector<uint8_t> data(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size()))
    throw ParseError("pgm: '" + path + "' is truncated");
  return Image(w, h, std::move(data));
}

void save_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()),
            static_cast<std::streamsize>(img.data().size()));
  if (!out) throw IoError("write to '" + path + "' failed");
}

double sample_bilinear(const Image& img, const Vec2& p) {
  if (!img.contains(p))
    throw OutOfBounds("bilinear sample at (" + std::to_string(p.x()) + ", " +
                      std::to_string(p.y()) + ") outside " +
                      std::to_string(img.width()) + "x" +
                      std::to_string(img.height()));
  int x0 = static_cast<int>(std::floor(p.x()));
  int y0 = static_cast<int>(std::floor(p.y()));
  if (x0 > img.width() - 2) x0 = img.width() - 2;    // p.x() == w-1
  if (y0 > img.height() - 2) y0 = img.height() - 2;  // p.y() == h-1
  const double fx = p.x() - x0;
  const double fy = p.y() - y0;
  const double i00 = img(x0, y0);
  const double i10 = img(x0 + 1, y0);
  const double i01 = img(x0, y0 + 1);
  const double i11 = img(x0 + 1, y0 + 1);
  return (1.0 - fy) * ((1.0 - fx) * i00 + fx * i10) +
         fy * ((1.0 - fx) * i01 + fx * i11);
}

GradientInfo gradient_at(const Image& img, const Vec2& p) {
  if (!img.contains(p, 1.0))
    throw OutOfBounds("gradient at (" + std::to_string(p.x()) + ", " +
                      std::to_string(p.y()) + ") needs 1 px margin");
  GradientInfo g;
  g.g_u = 0.5 * (sample_bilinear(img, p + Vec2(1.0, 0.0)) -
                 sample_bilinear(img, p - Vec2(1.0, 0.0)));
  g.g_v = 0.5 * (sample_bilinear(img, p + Vec2(0.0, 1.0)) -
                 sample_bilinear(img, p - Vec2(0.0, 1.0)));
  g.magnitude = std::hypot(g.g_u, g.g_v);
  g.angle = g.magnitude > 0.0 ? wrap_angle_half(std::atan2(-g.g_u, g.g_v))
                              : 0.0;
  return g;
}

StructureTensor structure_tensor(const Image& img, const Vec2& p,
                                 int half_window) {
  StructureTensor t;
  for (int j = -half_window; j <= half_window; ++j) {
    for (int i = -half_window; i <= half_window; ++i) {
      const GradientInfo g = gradient_at(img, p + Vec2(i, j));
      t.sum_gu2 += g.g_u * g.g_u;
      t.sum_gugv += g.g_u * g.g_v;
      t.sum_gv2 += g.g_v * g.g_v;
    }
  }
  const double mean = 0.5 * (t.sum_gu2 + t.sum_gv2);
  const double disc = std::hypot(0.5 * (t.sum_gu2 - t.sum_gv2), t.sum_gugv);
  t.lambda_min = std::max(0.0, mean - disc);
  t.lambda_max = mean + disc;
  return t;
}

}  // namespace lof
