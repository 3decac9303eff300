#include "sdmia/synthworld/backends.hpp"

namespace sdmia::synthworld {

backends::ImageResult SynthGenerator::Generate(const std::string& prompt, std::uint64_t seed,
                                               const backends::GenerationParams& /*params*/) {
  return {false, world_->Render(world_->Generate(prompt, seed)), {}};
}

}  // namespace sdmia::synthworld
