#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sdmia {

// Interleaved 8- or 16-bit pixel raster (max_value 255 or 65535).
struct PixelBuffer {
  int width = 0;
  int height = 0;
  int channels = 1;
  int max_value = 255;
  std::vector<std::uint16_t> data;

  PixelBuffer() = default;
  PixelBuffer(int w, int h, int c, int maxv, std::uint16_t fill = 0)
      : width(w), height(h), channels(c), max_value(maxv),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint16_t& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint16_t at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const PixelBuffer&) const = default;
};

// Binary netpbm: P5 (grey) and P6 (RGB), 8- or 16-bit.
std::string EncodePnm(const PixelBuffer& image);
// Throws Error(kMalformedRecord) on anything that is not binary PNM.
PixelBuffer DecodePnm(std::string_view bytes);
bool LooksLikePnm(std::string_view bytes);

}  // namespace sdmia
