#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "sdmia/common/image.hpp"

namespace sdmia::eval {

enum class DistortionKind { kGaussianNoise, kBlur, kBrightness, kShear };

const char* DistortionName(DistortionKind kind);
// Throws Error(kValidation) for unknown names.
DistortionKind ParseDistortion(std::string_view name);

// Intensity in [0, 1] maps to:
//   gaussian_noise: additive noise, sigma = intensity * 0.1 * max_value
//   blur:           Gaussian kernel, sigma_px = intensity * 4
//   brightness:     scale by (1 + intensity * 0.5), clamped
//   shear:          horizontal shear, factor intensity * 0.3, edge padded
// Intensity 0 returns the input unchanged. Deterministic in
// (image, kind, intensity, seed).
PixelBuffer Distort(const PixelBuffer& image, DistortionKind kind, double intensity,
                    std::uint64_t seed = 0);

}  // namespace sdmia::eval
