#include "hetcd/raster.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include "hetcd/error.hpp"
#include "hetcd/png_io.hpp"

namespace hetcd {

namespace {

constexpr char kMagic[4] = {'H', 'C', 'D', 'R'};
constexpr uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 20;

uint32_t get_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

void put_u32le(uint32_t v, std::string& out) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::string offset_msg(const std::string& path, std::size_t offset, const std::string& what) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), " at byte offset %zu", offset);
  return path + ": " + what + buf;
}

}  // namespace

Raster load_raster(const std::string& path) {
  if (is_png_file(path)) return load_png(path);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (bytes.size() < kHeaderBytes) throw IoError(offset_msg(path, bytes.size(), "truncated header"));
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, kMagic, 4) != 0) throw IoError(offset_msg(path, 0, "bad magic, expected \"HCDR\""));
  uint32_t version = get_u32le(p + 4);
  if (version != kVersion) throw IoError(offset_msg(path, 4, "unsupported version " + std::to_string(version)));
  uint32_t h = get_u32le(p + 8);
  uint32_t w = get_u32le(p + 12);
  uint32_t c = get_u32le(p + 16);
  if (h == 0 || w == 0 || c == 0) throw IoError(offset_msg(path, 8, "zero dimension"));

  std::size_t count = static_cast<std::size_t>(h) * w * c;
  std::size_t expected = kHeaderBytes + count * 4;
  if (bytes.size() != expected) {
    throw IoError(offset_msg(path, bytes.size(),
                             "payload length mismatch, expected " + std::to_string(expected) + " bytes total"));
  }

  Raster r(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  for (std::size_t i = 0; i < count; ++i) {
    uint32_t u = get_u32le(p + kHeaderBytes + i * 4);
    float v = std::bit_cast<float>(u);
    if (!std::isfinite(v)) throw IoError(offset_msg(path, kHeaderBytes + i * 4, "non-finite value"));
    r.data[i] = v;
  }
  return r;
}

void save_raster(const Raster& r, const std::string& path) {
  if (r.data.size() != r.size()) throw ShapeError("raster data length does not match dimensions");
  std::string bytes;
  bytes.reserve(kHeaderBytes + r.size() * 4);
  bytes.append(kMagic, 4);
  put_u32le(kVersion, bytes);
  put_u32le(static_cast<uint32_t>(r.height), bytes);
  put_u32le(static_cast<uint32_t>(r.width), bytes);
  put_u32le(static_cast<uint32_t>(r.channels), bytes);
  for (float v : r.data) put_u32le(std::bit_cast<uint32_t>(v), bytes);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path + ": write failed");
}

NormalizedRaster normalize(const Raster& r) {
  NormalizedRaster n;
  n.raster = Raster(r.height, r.width, r.channels);
  n.channel_min.resize(r.channels);
  n.channel_max.resize(r.channels);
  n.constant_channel.assign(r.channels, 0);

  for (int c = 0; c < r.channels; ++c) {
    const float* band = r.data.data() + static_cast<std::size_t>(c) * r.band_size();
    float lo = band[0], hi = band[0];
    for (std::size_t i = 1; i < r.band_size(); ++i) {
      lo = std::min(lo, band[i]);
      hi = std::max(hi, band[i]);
    }
    n.channel_min[c] = lo;
    n.channel_max[c] = hi;
    float* out = n.raster.data.data() + static_cast<std::size_t>(c) * r.band_size();
    if (hi > lo) {
      float scale = 2.0f / (hi - lo);
      for (std::size_t i = 0; i < r.band_size(); ++i) {
        out[i] = std::clamp((band[i] - lo) * scale - 1.0f, -1.0f, 1.0f);
      }
    } else {
      n.constant_channel[c] = 1;
      std::fill(out, out + r.band_size(), 0.0f);
    }
  }
  return n;
}

Raster denormalize(const NormalizedRaster& n) {
  const Raster& src = n.raster;
  Raster r(src.height, src.width, src.channels);
  for (int c = 0; c < src.channels; ++c) {
    const float* band = src.data.data() + static_cast<std::size_t>(c) * src.band_size();
    float* out = r.data.data() + static_cast<std::size_t>(c) * src.band_size();
    if (n.constant_channel[c]) {
      std::fill(out, out + src.band_size(), n.channel_min[c]);
    } else {
      double lo = n.channel_min[c], hi = n.channel_max[c];
      for (std::size_t i = 0; i < src.band_size(); ++i) {
        out[i] = static_cast<float>((static_cast<double>(band[i]) + 1.0) * 0.5 * (hi - lo) + lo);
      }
    }
  }
  return r;
}

Raster downsample2(const Raster& r) {
  if (r.height < 2 || r.width < 2) throw ShapeError("downsample2 requires height, width >= 2");
  int oh = (r.height + 1) / 2;
  int ow = (r.width + 1) / 2;
  Raster out(oh, ow, r.channels);
  for (int c = 0; c < r.channels; ++c) {
    for (int oy = 0; oy < oh; ++oy) {
      int y0 = 2 * oy;
      int y1 = std::min(y0 + 1, r.height - 1);
      for (int ox = 0; ox < ow; ++ox) {
        int x0 = 2 * ox;
        int x1 = std::min(x0 + 1, r.width - 1);
        double acc = 0.0;
        int count = 0;
        for (int y = y0; y <= y1; ++y) {
          for (int x = x0; x <= x1; ++x) {
            acc += r.at(y, x, c);
            ++count;
          }
        }
        out.at(oy, ox, c) = static_cast<float>(acc / count);
      }
    }
  }
  return out;
}

Raster upsample_bilinear(const Raster& r, int target_h, int target_w) {
  if (target_h < r.height || target_w < r.width) {
    throw ShapeError("upsample_bilinear target dims must be >= source dims");
  }
  Raster out(target_h, target_w, r.channels);
  // Corner alignment: first/last output samples coincide with the source corners.
  double sy = target_h > 1 ? static_cast<double>(r.height - 1) / (target_h - 1) : 0.0;
  double sx = target_w > 1 ? static_cast<double>(r.width - 1) / (target_w - 1) : 0.0;
  for (int c = 0; c < r.channels; ++c) {
    for (int oy = 0; oy < target_h; ++oy) {
      double fy = oy * sy;
      int y0 = static_cast<int>(fy);
      int y1 = std::min(y0 + 1, r.height - 1);
      double wy = fy - y0;
      for (int ox = 0; ox < target_w; ++ox) {
        double fx = ox * sx;
        int x0 = static_cast<int>(fx);
        int x1 = std::min(x0 + 1, r.width - 1);
        double wx = fx - x0;
        double v00 = r.at(y0, x0, c), v01 = r.at(y0, x1, c);
        double v10 = r.at(y1, x0, c), v11 = r.at(y1, x1, c);
        double top = v00 + (v01 - v00) * wx;
        double bot = v10 + (v11 - v10) * wx;
        out.at(oy, ox, c) = static_cast<float>(top + (bot - top) * wy);
      }
    }
  }
  return out;
}

}  // namespace hetcd
