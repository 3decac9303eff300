#include "sdmia/eval/distort.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sdmia/common/error.hpp"
#include "sdmia/common/rng.hpp"

namespace sdmia::eval {

const char* DistortionName(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::kGaussianNoise: return "gaussian_noise";
    case DistortionKind::kBlur: return "blur";
    case DistortionKind::kBrightness: return "brightness";
    case DistortionKind::kShear: return "shear";
  }
  return "unknown";
}

DistortionKind ParseDistortion(std::string_view name) {
  if (name == "gaussian_noise") return DistortionKind::kGaussianNoise;
  if (name == "blur") return DistortionKind::kBlur;
  if (name == "brightness") return DistortionKind::kBrightness;
  if (name == "shear") return DistortionKind::kShear;
  throw Error(ErrorCode::kValidation, "unknown distortion kind \"" + std::string(name) + "\"");
}

namespace {

std::uint16_t ClampPixel(double v, int max_value) {
  const double r = std::round(v);
  return static_cast<std::uint16_t>(std::clamp(r, 0.0, static_cast<double>(max_value)));
}

PixelBuffer GaussianNoise(const PixelBuffer& in, double intensity, std::uint64_t seed) {
  PixelBuffer out = in;
  const double sigma = intensity * 0.1 * in.max_value;
  Rng rng(seed);
  for (std::uint16_t& v : out.data) v = ClampPixel(v + sigma * rng.Normal(), in.max_value);
  return out;
}

std::vector<double> GaussianKernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : k) w /= sum;
  return k;
}

PixelBuffer Blur(const PixelBuffer& in, double intensity) {
  const double sigma = intensity * 4.0;
  const std::vector<double> k = GaussianKernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int w = in.width, h = in.height, ch = in.channels;
  std::vector<double> tmp(in.data.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = std::clamp(x + i, 0, w - 1);
          acc += k[static_cast<std::size_t>(i + radius)] * in.at(xx, y, c);
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * ch + c] = acc;
      }
    }
  }
  PixelBuffer out = in;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          acc += k[static_cast<std::size_t>(i + radius)] *
                 tmp[(static_cast<std::size_t>(yy) * w + x) * ch + c];
        }
        out.at(x, y, c) = ClampPixel(acc, in.max_value);
      }
    }
  }
  return out;
}

PixelBuffer Brightness(const PixelBuffer& in, double intensity) {
  PixelBuffer out = in;
  const double factor = 1.0 + intensity * 0.5;
  for (std::uint16_t& v : out.data) v = ClampPixel(v * factor, in.max_value);
  return out;
}

// Row y samples source column x - factor * y (nearest), clamped to the edge.
PixelBuffer Shear(const PixelBuffer& in, double intensity) {
  PixelBuffer out = in;
  const double factor = intensity * 0.3;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      const long src = std::lround(static_cast<double>(x) - factor * y);
      const int sx = static_cast<int>(std::clamp<long>(src, 0, in.width - 1));
      for (int c = 0; c < in.channels; ++c) out.at(x, y, c) = in.at(sx, y, c);
    }
  }
  return out;
}

}  // namespace

PixelBuffer Distort(const PixelBuffer& image, DistortionKind kind, double intensity,
                    std::uint64_t seed) {
  if (!(intensity >= 0.0 && intensity <= 1.0)) {
    throw Error(ErrorCode::kValidation, "distortion intensity must lie in [0, 1]");
  }
  if (image.width <= 0 || image.height <= 0 ||
      image.data.size() != static_cast<std::size_t>(image.width) * image.height * image.channels) {
    throw Error(ErrorCode::kValidation, "invalid pixel buffer");
  }
  if (intensity == 0.0) return image;
  switch (kind) {
    case DistortionKind::kGaussianNoise: return GaussianNoise(image, intensity, seed);
    case DistortionKind::kBlur: return Blur(image, intensity);
    case DistortionKind::kBrightness: return Brightness(image, intensity);
    case DistortionKind::kShear: return Shear(image, intensity);
  }
  throw Error(ErrorCode::kValidation, "unknown distortion kind");
}

}  // namespace sdmia::eval
