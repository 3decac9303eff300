#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>

namespace sdmia {

// Lowercase hex SHA-256 of the input bytes.
std::string Sha256Hex(std::string_view bytes);

std::uint64_t Fnv1a64(std::string_view bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);

std::uint64_t SplitMix64(std::uint64_t x);

// Derives an independent stream seed from a base seed and a tag path.
// Order of tags matters; the mapping is stable across platforms.
std::uint64_t DeriveSeed(std::uint64_t base, std::string_view tag);
std::uint64_t DeriveSeed(std::uint64_t base,
                         std::initializer_list<std::uint64_t> path);

std::string Base64Encode(std::span<const std::uint8_t> bytes);
std::string Base64Encode(std::string_view bytes);
// Throws Error(kMalformedRecord) on invalid input.
std::string Base64Decode(std::string_view text);

}  // namespace sdmia
