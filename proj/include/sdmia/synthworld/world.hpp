#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sdmia/backends/stub.hpp"
#include "sdmia/common/vec.hpp"

namespace sdmia::synthworld {

// Everything needed to rebuild a world bit-for-bit.
struct WorldSpec {
  std::uint64_t seed = 1;
  std::size_t n_members = 100;
  std::size_t embed_dim = 64;
  double collapse_radius = 0.6;       // rho
  double member_noise = 0.12;         // sigma_m
  double background_noise = 0.15;     // sigma_b
  double encoder_contraction = 0.05;  // xi

  // Structure of the background model and the photographs.
  std::size_t caption_words = 20;
  std::size_t vocabulary = 4000;
  double background_gain = 2.0;
  double scale_spread = 0.35;  // log-scale spread of the background magnitude
  double photo_offset = 0.05;  // real photo vs. what the background renders
  // Captioner: describes an image by the closest description it knows (the
  // members and the first caption_bank non-members) when the cosine to that
  // description's rendering reaches recognition_cosine, and otherwise emits
  // one word per slot by random projection.
  double recognition_cosine = 0.9;
  std::size_t caption_bank = 256;
  std::size_t caption_slots = 8;
  std::size_t slot_choices = 16;
  // Grayscale strip rendering: one column per coordinate.
  std::size_t render_rows = 16;
  double render_range = 4.0;  // values in [-range, range] map to [0, 65535]

  // Throws kValidation if the parameters break the world's invariants.
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static WorldSpec FromJson(const nlohmann::json& j);
};

struct WorldSample {
  std::string caption;
  Vec caption_embedding;
  Vec image;  // the target (photograph) embedding
};

// A synthetic text-to-image model with representation-region collapse.
// Member captions own disjoint balls of radius rho in caption-embedding space
// inside which generation returns the memorised image up to sigma_m noise;
// everywhere else a smooth background map plus sigma_b noise applies.
// Immutable after construction and safe to share across threads.
class SynthWorld {
 public:
  // Throws kInfeasible when the members cannot be separated by 2 rho.
  explicit SynthWorld(WorldSpec spec);

  const WorldSpec& spec() const { return spec_; }
  const std::vector<WorldSample>& members() const { return members_; }
  std::size_t dim() const { return spec_.embed_dim; }

  Vec EncodeText(std::string_view text) const { return encoder_.Encode(text); }
  const backends::HashTextEncoder& encoder() const { return encoder_; }

  Vec Background(std::span<const double> c) const;
  Vec Noise(std::uint64_t seed) const;
  // Member whose collapse region contains c, if any.
  std::optional<std::size_t> RegionOf(std::span<const double> c) const;
  Vec Generate(std::string_view prompt, std::uint64_t seed) const;
  Vec GenerateFromEmbedding(std::span<const double> c, std::uint64_t seed) const;

  // Non-member photographs drawn from the same caption distribution and the
  // same photo model as members, kept clear of every collapse region.
  WorldSample NonMember(std::size_t index) const;

  // Member whose stored image has cosine >= recognition_cosine with the
  // image (the closest one), if any.
  std::optional<std::size_t> RecognizedMember(std::span<const double> image) const;
  std::string Caption(std::span<const double> image) const;
  // Mean of the image cosine and the cosine of the two captions' embeddings.
  double Relevance(std::span<const double> target, std::span<const double> generated) const;

  // Contractive linear visual encoder xi * U with U orthogonal.
  Vec EncodeImage(std::span<const double> x) const;
  const Vec& RelevanceGradient(bool member) const {
    return member ? grad_member_ : grad_nonmember_;
  }

  std::string Render(std::span<const double> image) const;
  // Inverse of Render up to quantisation: the column means of the strip.
  Vec Decode(std::string_view bytes) const;

 private:
  WorldSample MakeSample(std::uint64_t stream, std::size_t index) const;
  std::string RandomCaption(std::uint64_t seed) const;

  WorldSpec spec_;
  backends::HashTextEncoder encoder_;
  std::vector<std::string> vocabulary_;
  std::vector<double> map_;        // d x d, row-major
  Vec bias_;
  Vec scale_direction_;
  std::vector<double> orthogonal_;  // d x d, row-major
  std::vector<double> slot_projections_;  // slots x choices x d
  std::vector<std::string> slot_words_;   // slots x choices
  Vec grad_member_;
  Vec grad_nonmember_;
  std::vector<WorldSample> members_;
  std::vector<Vec> member_unit_images_;
  std::vector<std::string> bank_captions_;  // members first, then non-members
  std::vector<Vec> bank_unit_images_;
};

// Free-function spelling of SynthWorld::Generate.
inline Vec SynthGenerate(const SynthWorld& w, std::string_view prompt, std::uint64_t seed) {
  return w.Generate(prompt, seed);
}

}  // namespace sdmia::synthworld
