#include "sdmia/common/image.hpp"

#include <cctype>

#include "sdmia/common/error.hpp"

namespace sdmia {

std::string EncodePnm(const PixelBuffer& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw Error(ErrorCode::kValidation, "PNM supports 1 or 3 channels");
  }
  std::string out = (image.channels == 1 ? "P5\n" : "P6\n") +
                    std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n" + std::to_string(image.max_value) + "\n";
  const bool wide = image.max_value > 255;
  out.reserve(out.size() + image.data.size() * (wide ? 2 : 1));
  for (std::uint16_t v : image.data) {
    if (wide) out.push_back(static_cast<char>(v >> 8));
    out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

bool LooksLikePnm(std::string_view bytes) {
  return bytes.size() > 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6');
}

PixelBuffer DecodePnm(std::string_view bytes) {
  if (!LooksLikePnm(bytes)) throw Error(ErrorCode::kMalformedRecord, "not a binary PNM image");
  const int channels = bytes[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  auto next_int = [&]() {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw Error(ErrorCode::kMalformedRecord, "truncated PNM header");
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 1 << 24) throw Error(ErrorCode::kMalformedRecord, "PNM header value too large");
      ++pos;
    }
    return static_cast<int>(v);
  };
  const int w = next_int();
  const int h = next_int();
  const int maxv = next_int();
  ++pos;  // single whitespace before raster
  if (w <= 0 || h <= 0 || maxv <= 0 || maxv > 65535) {
    throw Error(ErrorCode::kMalformedRecord, "invalid PNM dimensions");
  }
  PixelBuffer img(w, h, channels, maxv);
  const bool wide = maxv > 255;
  const std::size_t need = img.data.size() * (wide ? 2 : 1);
  if (bytes.size() < pos + need) throw Error(ErrorCode::kMalformedRecord, "truncated PNM raster");
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    if (wide) {
      img.data[i] = static_cast<std::uint16_t>(
          (static_cast<unsigned char>(bytes[pos + 2 * i]) << 8) |
          static_cast<unsigned char>(bytes[pos + 2 * i + 1]));
    } else {
      img.data[i] = static_cast<unsigned char>(bytes[pos + i]);
    }
  }
  return img;
}

}  // namespace sdmia
