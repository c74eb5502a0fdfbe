#include "hetcd/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "hetcd/error.hpp"

namespace hetcd {

namespace {

const unsigned char kSignature[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

uint32_t get_u32be(const unsigned char* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

void put_u32be(uint32_t v, std::string& out) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open file");
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_chunk(const char* type, const std::string& data, std::string& out) {
  put_u32be(static_cast<uint32_t>(data.size()), out);
  std::string body(type, 4);
  body += data;
  out += body;
  uint32_t crc = static_cast<uint32_t>(
      ::crc32(0, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
  put_u32be(crc, out);
}

void write_png(const Raster& r, const std::vector<int>& channels, const std::string& path) {
  const int h = r.height, w = r.width;
  const int nc = static_cast<int>(channels.size());
  for (int c : channels) {
    if (c < 0 || c >= r.channels) throw ConfigError("png export: channel index out of range");
  }

  // Filter type 0 on every row; quicklooks do not need optimal compression.
  std::string raw;
  raw.reserve(static_cast<std::size_t>(h) * (1 + static_cast<std::size_t>(w) * nc));
  for (int y = 0; y < h; ++y) {
    raw.push_back('\0');
    for (int x = 0; x < w; ++x) {
      for (int c : channels) {
        float v = std::clamp(r.at(y, x, c), 0.0f, 1.0f);
        raw.push_back(static_cast<char>(std::lround(v * 255.0f)));
      }
    }
  }

  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  if (::compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                  reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                  6) != Z_OK) {
    throw IoError(path + ": deflate failed");
  }
  compressed.resize(bound);

  std::string ihdr;
  put_u32be(static_cast<uint32_t>(w), ihdr);
  put_u32be(static_cast<uint32_t>(h), ihdr);
  ihdr.push_back(8);                             // bit depth
  ihdr.push_back(nc == 1 ? 0 : 2);               // colour type: gray or RGB
  ihdr.push_back(0);                             // compression
  ihdr.push_back(0);                             // filter method
  ihdr.push_back(0);                             // no interlace

  std::string out(reinterpret_cast<const char*>(kSignature), 8);
  write_chunk("IHDR", ihdr, out);
  write_chunk("IDAT", compressed, out);
  write_chunk("IEND", std::string(), out);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path + ": cannot open for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError(path + ": write failed");
}

}  // namespace

bool is_png_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  unsigned char sig[8];
  in.read(reinterpret_cast<char*>(sig), 8);
  return in.gcount() == 8 && std::memcmp(sig, kSignature, 8) == 0;
}

Raster load_png(const std::string& path) {
  std::string bytes = read_file(path);
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) {
    throw IoError(path + ": not a PNG file");
  }
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t pos = 8;

  uint32_t w = 0, h = 0;
  int channels = 0;
  bool seen_ihdr = false;
  std::string idat;

  while (pos + 8 <= bytes.size()) {
    uint32_t len = get_u32be(p + pos);
    std::string type(bytes, pos + 4, 4);
    if (pos + 12 + len > bytes.size()) throw IoError(path + ": truncated chunk " + type);
    const unsigned char* data = p + pos + 8;
    if (type == "IHDR") {
      if (len != 13) throw IoError(path + ": bad IHDR length");
      w = get_u32be(data);
      h = get_u32be(data + 4);
      int bit_depth = data[8];
      int colour_type = data[9];
      int interlace = data[12];
      if (bit_depth != 8) throw IoError(path + ": only 8-bit PNG supported");
      if (colour_type == 0) channels = 1;
      else if (colour_type == 2) channels = 3;
      else throw IoError(path + ": only grayscale/RGB PNG supported (colour type " + std::to_string(colour_type) + ")");
      if (interlace != 0) throw IoError(path + ": interlaced PNG not supported");
      seen_ihdr = true;
    } else if (type == "IDAT") {
      idat.append(reinterpret_cast<const char*>(data), len);
    } else if (type == "IEND") {
      break;
    }
    pos += 12 + len;
  }
  if (!seen_ihdr || w == 0 || h == 0) throw IoError(path + ": missing or empty IHDR");
  if (idat.empty()) throw IoError(path + ": no IDAT data");

  std::size_t stride = static_cast<std::size_t>(w) * channels;
  std::size_t raw_size = (stride + 1) * h;
  std::vector<unsigned char> raw(raw_size);
  uLongf out_len = static_cast<uLongf>(raw_size);
  int zres = ::uncompress(raw.data(), &out_len, reinterpret_cast<const Bytef*>(idat.data()),
                          static_cast<uLong>(idat.size()));
  if (zres != Z_OK || out_len != raw_size) throw IoError(path + ": inflate failed");

  // Undo per-row filters in place.
  std::vector<unsigned char> prev(stride, 0);
  std::vector<unsigned char> cur(stride, 0);
  Raster r(static_cast<int>(h), static_cast<int>(w), channels);
  int bpp = channels;
  for (uint32_t y = 0; y < h; ++y) {
    const unsigned char* row = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
    int filter = row[0];
    const unsigned char* src = row + 1;
    for (std::size_t i = 0; i < stride; ++i) {
      int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
      int b = prev[i];
      int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
      int x = src[i];
      switch (filter) {
        case 0: break;
        case 1: x += a; break;
        case 2: x += b; break;
        case 3: x += (a + b) / 2; break;
        case 4: x += paeth(a, b, c); break;
        default: throw IoError(path + ": unknown PNG filter " + std::to_string(filter));
      }
      cur[i] = static_cast<unsigned char>(x & 0xff);
    }
    for (uint32_t x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        r.at(static_cast<int>(y), static_cast<int>(x), c) = cur[x * channels + c] / 255.0f;
      }
    }
    std::swap(prev, cur);
  }
  return r;
}

void save_png_gray(const Raster& r, int channel, const std::string& path) {
  write_png(r, {channel}, path);
}

void save_png_rgb(const Raster& r, std::array<int, 3> channel_triple, const std::string& path) {
  write_png(r, {channel_triple[0], channel_triple[1], channel_triple[2]}, path);
}

}  // namespace hetcd
