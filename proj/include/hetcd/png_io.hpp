#pragma once

#include <array>
#include <string>

#include "hetcd/raster.hpp"

namespace hetcd {

// Minimal PNG support on top of zlib: 8-bit grayscale and RGB, no
// interlacing, no palette. Enough for ground-truth masks and quicklook
// exports; everything quantitative goes through the native format.

bool is_png_file(const std::string& path);

// Decodes to 1 (gray) or 3 (RGB) channels with values mapped to [0, 1].
Raster load_png(const std::string& path);

// Writes one channel as 8-bit grayscale. Values are clamped to [0, 1] and
// scaled to 0..255.
void save_png_gray(const Raster& r, int channel, const std::string& path);

// False-colour composite from an explicit channel triple (r, g, b).
void save_png_rgb(const Raster& r, std::array<int, 3> channel_triple, const std::string& path);

}  // namespace hetcd
