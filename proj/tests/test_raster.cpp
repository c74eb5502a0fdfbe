#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hetcd/error.hpp"
#include "hetcd/png_io.hpp"
#include "hetcd/raster.hpp"
#include "hetcd/rng.hpp"

using namespace hetcd;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const char* name) {
  return (fs::temp_directory_path() / (std::string("hetcd_raster_") + name)).string();
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

Raster random_raster(int h, int w, int c, uint64_t seed) {
  Raster r(h, w, c);
  Rng rng(seed);
  for (float& v : r.data) v = static_cast<float>(rng.uniform(-5.0, 5.0));
  return r;
}

}  // namespace

TEST_CASE("native format round trip is byte identical") {
  Raster r(2, 2, 1);
  r.data = {0.0f, 1.0f, 2.0f, 3.0f};
  const std::string path = temp_path("roundtrip.hcdr");
  save_raster(r, path);

  Raster loaded = load_raster(path);
  CHECK(loaded.height == 2);
  CHECK(loaded.width == 2);
  CHECK(loaded.channels == 1);
  CHECK(loaded.data == r.data);

  const std::string path2 = temp_path("roundtrip2.hcdr");
  save_raster(loaded, path2);
  CHECK(file_bytes(path) == file_bytes(path2));

  Raster big = random_raster(13, 7, 3, 99);
  save_raster(big, path);
  save_raster(load_raster(path), path2);
  CHECK(file_bytes(path) == file_bytes(path2));
}

TEST_CASE("loader reports byte offsets for malformed input") {
  const std::string path = temp_path("bad.hcdr");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_WITH_AS(load_raster(path), doctest::Contains("byte offset"), IoError);

  // Valid header, payload one float short of 2x2x1.
  Raster r(2, 2, 1);
  save_raster(r, path);
  std::string bytes = file_bytes(path);
  bytes.resize(bytes.size() - 4);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
  }
  CHECK_THROWS_AS(load_raster(path), IoError);

  // Non-finite payload value: offset 20 + 4 * index.
  r.data = {1.0f, std::nanf(""), 2.0f, 3.0f};
  {
    std::string raw;
    save_raster(Raster(2, 2, 1), path);  // placeholder with the right header
    raw = file_bytes(path);
    const uint32_t nan_bits = 0x7fc00000;
    raw[24] = static_cast<char>(nan_bits & 0xff);
    raw[25] = static_cast<char>((nan_bits >> 8) & 0xff);
    raw[26] = static_cast<char>((nan_bits >> 16) & 0xff);
    raw[27] = static_cast<char>((nan_bits >> 24) & 0xff);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << raw;
  }
  CHECK_THROWS_WITH_AS(load_raster(path), doctest::Contains("offset 24"), IoError);
}

TEST_CASE("png import maps 8-bit values to [0,1]") {
  Raster r(3, 2, 1);
  r.data = {0.0f, 1.0f, 0.5f, 0.25f, 0.75f, 1.0f};
  const std::string path = temp_path("gray.png");
  save_png_gray(r, 0, path);

  Raster back = load_raster(path);
  CHECK(back.channels == 1);
  CHECK(back.at(0, 1, 0) == doctest::Approx(1.0));   // 255 -> 1.0
  CHECK(back.at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(back.at(1, 0, 0) == doctest::Approx(0.5).epsilon(0.01));

  Raster rgb(2, 2, 3);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 4; ++i) rgb.data[c * 4 + i] = (c + 1) * 0.25f;
  const std::string rgb_path = temp_path("rgb.png");
  save_png_rgb(rgb, {0, 1, 2}, rgb_path);
  Raster rgb_back = load_raster(rgb_path);
  CHECK(rgb_back.channels == 3);
  CHECK(rgb_back.at(1, 1, 2) == doctest::Approx(0.75).epsilon(0.01));
}

TEST_CASE("normalize maps channel endpoints to -1 and 1") {
  Raster r(1, 3, 1);
  r.data = {0.0f, 5.0f, 10.0f};
  NormalizedRaster n = normalize(r);
  CHECK(n.raster.data[0] == doctest::Approx(-1.0));
  CHECK(n.raster.data[1] == doctest::Approx(0.0));
  CHECK(n.raster.data[2] == doctest::Approx(1.0));
  CHECK_FALSE(n.has_constant_channel());
}

TEST_CASE("constant channel normalizes to zeros with a flag") {
  Raster r(1, 3, 1);
  r.data = {4.2f, 4.2f, 4.2f};
  NormalizedRaster n = normalize(r);
  CHECK(n.raster.data == std::vector<float>{0.0f, 0.0f, 0.0f});
  CHECK(n.has_constant_channel());
  Raster back = denormalize(n);
  CHECK(back.data[0] == doctest::Approx(4.2f));
}

TEST_CASE("denormalize inverts normalize within 1e-6 relative") {
  Raster r = random_raster(9, 11, 2, 7);
  Raster back = denormalize(normalize(r));
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    CHECK(back.data[i] == doctest::Approx(r.data[i]).epsilon(1e-6));
  }
}

TEST_CASE("normalize is monotone on non-constant channels") {
  Raster r = random_raster(6, 6, 1, 3);
  NormalizedRaster n = normalize(r);
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    for (std::size_t j = 0; j < r.data.size(); ++j) {
      if (r.data[i] < r.data[j]) CHECK(n.raster.data[i] < n.raster.data[j]);
    }
  }
}

TEST_CASE("downsample2 averages 2x2 blocks") {
  Raster r(2, 2, 1);
  r.data = {1.0f, 3.0f, 5.0f, 7.0f};
  Raster d = downsample2(r);
  CHECK(d.height == 1);
  CHECK(d.width == 1);
  CHECK(d.data[0] == doctest::Approx(4.0));
}

TEST_CASE("downsample2 keeps constants and preserves the even-dim mean") {
  Raster c4(4, 4, 2, 3.5f);
  Raster d = downsample2(c4);
  CHECK(d.height == 2);
  for (float v : d.data) CHECK(v == doctest::Approx(3.5));

  Raster r = random_raster(8, 6, 1, 11);
  Raster dr = downsample2(r);
  double mean_in = 0.0, mean_out = 0.0;
  for (float v : r.data) mean_in += v;
  for (float v : dr.data) mean_out += v;
  CHECK(mean_in / r.data.size() == doctest::Approx(mean_out / dr.data.size()).epsilon(1e-6));
}

TEST_CASE("downsample2 clamps odd trailing blocks") {
  // 3x3 ramp: blocks are 2x2, 2x1, 1x2, 1x1 after clamping.
  Raster r(3, 3, 1);
  r.data = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  Raster d = downsample2(r);
  CHECK(d.height == 2);
  CHECK(d.width == 2);
  CHECK(d.at(0, 0, 0) == doctest::Approx((0 + 1 + 3 + 4) / 4.0));
  CHECK(d.at(0, 1, 0) == doctest::Approx((2 + 5) / 2.0));
  CHECK(d.at(1, 0, 0) == doctest::Approx((6 + 7) / 2.0));
  CHECK(d.at(1, 1, 0) == doctest::Approx(8.0));
}

TEST_CASE("upsample_bilinear keeps constants and interpolates corners") {
  Raster c(3, 3, 1, 2.25f);
  Raster up = upsample_bilinear(c, 7, 5);
  for (float v : up.data) CHECK(v == doctest::Approx(2.25));

  Raster line(2, 1, 1);
  line.data = {0.0f, 1.0f};
  Raster up4 = upsample_bilinear(line, 4, 1);
  CHECK(up4.data[0] == doctest::Approx(0.0));
  CHECK(up4.data[1] == doctest::Approx(1.0 / 3.0));
  CHECK(up4.data[2] == doctest::Approx(2.0 / 3.0));
  CHECK(up4.data[3] == doctest::Approx(1.0));
}

TEST_CASE("downsample then upsample is exact on affine ramps") {
  // Block averaging samples an affine image at the block centres, and
  // bilinear interpolation of an affine image is again exact, so the
  // composition equals the analytic affine map through those centres.
  Raster ramp(8, 8, 1);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) ramp.at(y, x, 0) = 0.25f * y + 0.5f * x;
  Raster up = upsample_bilinear(downsample2(ramp), 8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double sy = 0.5 + 2.0 * (y * 3.0 / 7.0);  // block-centre coordinate
      const double sx = 0.5 + 2.0 * (x * 3.0 / 7.0);
      const double expected = 0.25 * sy + 0.5 * sx;
      CHECK(up.at(y, x, 0) == doctest::Approx(expected).epsilon(1e-6));
    }
  }
}

TEST_CASE("upsample output stays within the source range") {
  Raster r = random_raster(5, 5, 1, 21);
  float lo = r.data[0], hi = r.data[0];
  for (float v : r.data) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Raster up = upsample_bilinear(r, 17, 13);
  for (float v : up.data) {
    CHECK(v >= lo - 1e-6f);
    CHECK(v <= hi + 1e-6f);
  }
}
