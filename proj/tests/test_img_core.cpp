#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lof/image.hpp"
#include "lof/pyramid.hpp"
#include "lof/types.hpp"

using namespace lof;

namespace {

// I(u,v) = a*u + b*v + c, clamped to [0,255]. Callers pick coefficients so
// the clamp never engages inside the tested region.
Image ramp_image(int w, int h, double a, double b, double c) {
  std::vector<uint8_t> data(static_cast<size_t>(w) * h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const double val = a * u + b * v + c;
      data[static_cast<size_t>(v) * w + u] =
          static_cast<uint8_t>(std::llround(std::clamp(val, 0.0, 255.0)));
    }
  return Image(w, h, std::move(data));
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("image construction rejects degenerate dimensions") {
  CHECK_THROWS_AS(Image(1, 10), DimensionTooSmall);
  CHECK_THROWS_AS(Image(10, 1), DimensionTooSmall);
  CHECK_NOTHROW(Image(2, 2));
}

TEST_CASE("pgm save/load round-trip is byte-exact") {
  Image img(37, 23);
  for (int v = 0; v < img.height(); ++v)
    for (int u = 0; u < img.width(); ++u)
      img.set_pixel(u, v, static_cast<uint8_t>((u * 31 + v * 7 + 3) % 256));

  const std::string p1 = temp_path("lof_roundtrip_1.pgm");
  const std::string p2 = temp_path("lof_roundtrip_2.pgm");
  save_pgm(img, p1);
  Image back = load_pgm(p1);
  REQUIRE(back.width() == img.width());
  REQUIRE(back.height() == img.height());
  CHECK(back.data() == img.data());

  save_pgm(back, p2);
  CHECK(read_file_bytes(p1) == read_file_bytes(p2));
}

TEST_CASE("pgm header accepts comments and mixed whitespace") {
  const std::string path = temp_path("lof_comments.pgm");
  std::string bytes = "P5 # magic\n# a full comment line\n4\t2 # dims\n255\n";
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>(10 * i));
  write_file_bytes(path, bytes);

  Image img = load_pgm(path);
  REQUIRE(img.width() == 4);
  REQUIRE(img.height() == 2);
  CHECK(img.pixel(0, 0) == 0);
  CHECK(img.pixel(3, 0) == 30);
  CHECK(img.pixel(0, 1) == 40);
  CHECK(img.pixel(3, 1) == 70);
}

TEST_CASE("pgm loader rejects malformed input") {
  const std::string path = temp_path("lof_bad.pgm");

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_pgm(temp_path("lof_does_not_exist.pgm")), IoError);
  }
  SUBCASE("ascii magic") {
    write_file_bytes(path, "P2\n2 2\n255\n0 0 0 0\n");
    CHECK_THROWS_AS(load_pgm(path), ParseError);
  }
  SUBCASE("unsupported maxval") {
    write_file_bytes(path, std::string("P5\n2 2\n65535\n") +
                               std::string(8, '\0'));
    CHECK_THROWS_AS(load_pgm(path), ParseError);
  }
  SUBCASE("truncated pixel data") {
    write_file_bytes(path, "P5\n4 4\n255\nabc");
    CHECK_THROWS_AS(load_pgm(path), ParseError);
  }
  SUBCASE("garbage dimension token") {
    write_file_bytes(path, "P5\nfour 4\n255\n");
    CHECK_THROWS_AS(load_pgm(path), ParseError);
  }
}

TEST_CASE("bilinear sampling at grid points and midpoints") {
  Image img(8, 8);
  img.set_pixel(0, 0, 0);
  img.set_pixel(1, 0, 0);
  img.set_pixel(0, 1, 100);
  img.set_pixel(1, 1, 100);
  img.set_pixel(5, 3, 217);

  CHECK(sample_bilinear(img, Vec2(5.0, 3.0)) == doctest::Approx(217.0));
  CHECK(sample_bilinear(img, Vec2(0.5, 0.5)) == doctest::Approx(50.0));
}

TEST_CASE("bilinear sampling is exact on linear ramps") {
  // I = 4u: the stated spot check at (3.25, 5).
  Image img = ramp_image(32, 32, 4.0, 0.0, 0.0);
  CHECK(sample_bilinear(img, Vec2(3.25, 5.0)) == doctest::Approx(13.0));

  // General affine field, swept over a subpixel grid.
  Image aff = ramp_image(64, 64, 1.0, 2.0, 5.0);
  for (double v = 0.0; v <= 63.0; v += 7.3)
    for (double u = 0.0; u <= 63.0; u += 5.7) {
      const double expect = 1.0 * u + 2.0 * v + 5.0;
      CHECK(sample_bilinear(aff, Vec2(u, v)) ==
            doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("bilinear sampling refuses out-of-domain points") {
  Image img(10, 10, 50);
  CHECK_THROWS_AS(sample_bilinear(img, Vec2(-0.01, 5.0)), OutOfBounds);
  CHECK_THROWS_AS(sample_bilinear(img, Vec2(5.0, 9.01)), OutOfBounds);
  // The far corner itself is still valid.
  CHECK(sample_bilinear(img, Vec2(9.0, 9.0)) == doctest::Approx(50.0));
}

TEST_CASE("gradients on analytic ramps") {
  SUBCASE("I = 2u") {
    Image img = ramp_image(100, 40, 2.0, 0.0, 0.0);
    GradientInfo g = gradient_at(img, Vec2(41.5, 20.25));
    CHECK(g.g_u == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(g.g_v == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(g.magnitude == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(g.angle == doctest::Approx(kPi / 2).epsilon(1e-9));
  }
  SUBCASE("I = 3v") {
    Image img = ramp_image(40, 80, 0.0, 3.0, 0.0);
    GradientInfo g = gradient_at(img, Vec2(17.0, 33.75));
    CHECK(g.g_u == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(g.g_v == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(g.magnitude == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(g.angle == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("I = u + v") {
    Image img = ramp_image(90, 90, 1.0, 1.0, 0.0);
    GradientInfo g = gradient_at(img, Vec2(30.5, 44.5));
    CHECK(g.magnitude == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(g.angle == doctest::Approx(3.0 * kPi / 4).epsilon(1e-9));
  }
  SUBCASE("needs one pixel of margin") {
    Image img = ramp_image(10, 10, 2.0, 0.0, 0.0);
    CHECK_THROWS_AS(gradient_at(img, Vec2(0.5, 5.0)), OutOfBounds);
    CHECK_NOTHROW(gradient_at(img, Vec2(1.0, 5.0)));
  }
}

TEST_CASE("gradient angle is invariant under sign flips") {
  Image up = ramp_image(60, 60, 0.0, 4.0, 0.0);
  Image down = ramp_image(60, 60, 0.0, -4.0, 250.0);
  GradientInfo a = gradient_at(up, Vec2(30.0, 30.0));
  GradientInfo b = gradient_at(down, Vec2(30.0, 30.0));
  CHECK(a.angle == doctest::Approx(b.angle).epsilon(1e-9));
  CHECK(a.magnitude == doctest::Approx(b.magnitude).epsilon(1e-9));
}

TEST_CASE("structure tensor on 1-D texture and constant patch") {
  SUBCASE("ramp I = 2u is rank one") {
    Image img = ramp_image(60, 60, 2.0, 0.0, 0.0);
    StructureTensor t = structure_tensor(img, Vec2(30.0, 30.0), 3);
    CHECK(t.sum_gugv == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(t.lambda_min == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(t.lambda_max == doctest::Approx(4.0 * 49.0).epsilon(1e-9));
  }
  SUBCASE("constant image is the zero tensor") {
    Image img(40, 40, 77);
    StructureTensor t = structure_tensor(img, Vec2(20.0, 20.0), 3);
    CHECK(t.sum_gu2 == 0.0);
    CHECK(t.sum_gugv == 0.0);
    CHECK(t.sum_gv2 == 0.0);
    CHECK(t.lambda_min == 0.0);
    CHECK(t.lambda_max == 0.0);
  }
}

TEST_CASE("structure tensor eigenvalues match the characteristic polynomial") {
  // Four-quadrant corner pattern centered mid-image.
  Image img(41, 41);
  for (int v = 0; v < 41; ++v)
    for (int u = 0; u < 41; ++u) {
      const bool left = u < 20;
      const bool top = v < 20;
      img.set_pixel(u, v, (left != top) ? 200 : 40);
    }

  StructureTensor t = structure_tensor(img, Vec2(20.0, 20.0), 3);
  CHECK(t.lambda_min > 0.0);

  // Independent eigenvalue solve from the accumulated sums.
  const double tr = t.sum_gu2 + t.sum_gv2;
  const double det = t.sum_gu2 * t.sum_gv2 - t.sum_gugv * t.sum_gugv;
  const double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
  const double lo = 0.5 * (tr - disc);
  const double hi = 0.5 * (tr + disc);
  CHECK(t.lambda_min == doctest::Approx(lo).epsilon(1e-9));
  CHECK(t.lambda_max == doctest::Approx(hi).epsilon(1e-9));
  CHECK(t.lambda_min + t.lambda_max == doctest::Approx(tr).epsilon(1e-9));
  CHECK(t.lambda_min * t.lambda_max == doctest::Approx(det).epsilon(1e-9));
}

TEST_CASE("pyramid level dimensions follow the floor rule") {
  Image img(640, 480, 128);
  Pyramid pyr = build_pyramid(img, 1.5, 4);
  REQUIRE(pyr.height() == 4);
  CHECK(pyr.level(0).width() == 640);
  CHECK(pyr.level(0).height() == 480);
  CHECK(pyr.level(1).width() == 426);
  CHECK(pyr.level(1).height() == 320);
  CHECK(pyr.level(2).width() == 284);
  CHECK(pyr.level(2).height() == 213);
  CHECK(pyr.level(3).width() == 189);
  CHECK(pyr.level(3).height() == 142);
}

TEST_CASE("height-1 pyramid is the original image") {
  Image img = ramp_image(33, 29, 3.0, 1.0, 7.0);
  Pyramid pyr = build_pyramid(img, 1.5, 1);
  REQUIRE(pyr.height() == 1);
  CHECK(pyr.level(0).data() == img.data());
}

TEST_CASE("constant image stays constant at every level") {
  Image img(64, 64, 131);
  Pyramid pyr = build_pyramid(img, 1.5, 3);
  for (int k = 0; k < pyr.height(); ++k) {
    const Image& lvl = pyr.level(k);
    for (int v = 0; v < lvl.height(); ++v)
      for (int u = 0; u < lvl.width(); ++u) CHECK(lvl.pixel(u, v) == 131);
  }
}

TEST_CASE("pyramid rejects levels that would fall below 8x8") {
  Image img(16, 16, 0);
  // 16 -> 10 -> 6: the third level violates the minimum.
  CHECK_THROWS_AS(build_pyramid(img, 1.5, 3), DimensionTooSmall);
  CHECK_NOTHROW(build_pyramid(img, 1.5, 2));
}

TEST_CASE("pyramid preserves ramp slope per physical distance") {
  // I = u. At level k one pixel spans scale^k source pixels, so the per-pixel
  // slope should grow by the same factor. Averaged over a strip to wash out
  // uint8 rounding.
  Image img = ramp_image(200, 140, 1.0, 0.0, 0.0);
  Pyramid pyr = build_pyramid(img, 1.5, 4);
  for (int k = 1; k < 4; ++k) {
    const Image& lvl = pyr.level(k);
    const double expect = std::pow(1.5, k);
    double acc = 0.0;
    int n = 0;
    const int v0 = lvl.height() / 2;
    for (int u = 8; u <= lvl.width() - 9; ++u) {
      acc += gradient_at(lvl, Vec2(u, v0)).g_u;
      ++n;
    }
    const double mean = acc / n;
    CHECK(mean == doctest::Approx(expect).epsilon(0.02));
  }
}
