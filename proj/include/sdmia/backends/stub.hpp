#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <unordered_map>

#include "sdmia/backends/backend.hpp"

namespace sdmia::backends {

// Bag-of-tokens text encoder: every lowercase alphanumeric token maps to a
// seeded unit Gaussian vector, and a text maps to the normalized sum of its
// token vectors. Texts without tokens hash as a whole. Thread-safe.
class HashTextEncoder {
 public:
  HashTextEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }
  Vec Encode(std::string_view text) const;

 private:
  Vec TokenVector(const std::string& token) const;

  std::size_t dim_;
  std::uint64_t seed_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, Vec> memo_;
};

// Pronounceable pseudo-word drawn from a syllable inventory.
std::string PseudoWord(std::uint64_t h);

class StubTextEmbedder : public TextEmbedder {
 public:
  explicit StubTextEmbedder(std::uint64_t seed = 0, std::size_t dim = 64) : enc_(dim, seed) {}
  std::size_t dim() const override { return enc_.dim(); }
  Vec EmbedText(const std::string& text) override { return enc_.Encode(text); }

 private:
  HashTextEncoder enc_;
};

// Seeded Gaussian vector keyed by the SHA-256 of the image bytes.
class StubImageEmbedder : public ImageEmbedder {
 public:
  explicit StubImageEmbedder(std::uint64_t seed = 0, std::size_t dim = 64)
      : seed_(seed), dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  Vec EmbedImage(std::string_view image_bytes) override;

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

// Small 8-bit PGM derived from hash(prompt, seed). Prompts containing
// refuse_marker (when non-empty) are refused.
class StubGenerator : public Generator {
 public:
  explicit StubGenerator(std::string refuse_marker = "") : refuse_marker_(std::move(refuse_marker)) {}
  ImageResult Generate(const std::string& prompt, std::uint64_t seed,
                       const GenerationParams& params) override;

 private:
  std::string refuse_marker_;
};

// English-looking caption picked from word lists by the image hash.
class StubCaptioner : public Captioner {
 public:
  std::string Caption(std::string_view image_bytes) override;
};

// Deterministic local rewriter that follows the three view instructions by
// editing words: the token view replaces one word (or swaps two neighbours
// in captions under ten words), the style view adds one or two style
// modifiers and rephrases one word, and the semantic view replaces a few
// content words. Instructions it does not recognise are treated as a token
// rewrite of the whole text.
class EditRewriter : public Rewriter {
 public:
  std::string Rewrite(const std::string& instruction, std::uint64_t seed) override;
};

// Returns its caption unchanged; useful to exercise gate rejection.
class EchoRewriter : public Rewriter {
 public:
  std::string Rewrite(const std::string& instruction, std::uint64_t seed) override;
};

}  // namespace sdmia::backends
