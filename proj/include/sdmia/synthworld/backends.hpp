#pragma once

#include <memory>

#include "sdmia/backends/backend.hpp"
#include "sdmia/synthworld/world.hpp"

// Adapters exposing a SynthWorld through the generic backend contracts.
// Images travel as rendered grayscale strips.
namespace sdmia::synthworld {

class SynthGenerator : public backends::Generator {
 public:
  explicit SynthGenerator(std::shared_ptr<const SynthWorld> world) : world_(std::move(world)) {}
  backends::ImageResult Generate(const std::string& prompt, std::uint64_t seed,
                                 const backends::GenerationParams& params) override;

 private:
  std::shared_ptr<const SynthWorld> world_;
};

class SynthTextEmbedder : public backends::TextEmbedder {
 public:
  explicit SynthTextEmbedder(std::shared_ptr<const SynthWorld> world) : world_(std::move(world)) {}
  std::size_t dim() const override { return world_->dim(); }
  Vec EmbedText(const std::string& text) override { return world_->EncodeText(text); }

 private:
  std::shared_ptr<const SynthWorld> world_;
};

class SynthImageEmbedder : public backends::ImageEmbedder {
 public:
  explicit SynthImageEmbedder(std::shared_ptr<const SynthWorld> world) : world_(std::move(world)) {}
  std::size_t dim() const override { return world_->dim(); }
  Vec EmbedImage(std::string_view image_bytes) override { return world_->Decode(image_bytes); }

 private:
  std::shared_ptr<const SynthWorld> world_;
};

class SynthCaptioner : public backends::Captioner {
 public:
  explicit SynthCaptioner(std::shared_ptr<const SynthWorld> world) : world_(std::move(world)) {}
  std::string Caption(std::string_view image_bytes) override {
    return world_->Caption(world_->Decode(image_bytes));
  }

 private:
  std::shared_ptr<const SynthWorld> world_;
};

}  // namespace sdmia::synthworld
