#include "sdmia/synthworld/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdmia/common/error.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/image.hpp"
#include "sdmia/common/rng.hpp"
#include "sdmia/common/text.hpp"

namespace sdmia::synthworld {

namespace {

// Stream tags for DeriveSeed.
enum : std::uint64_t {
  kTagText = 1,
  kTagVocab,
  kTagMap,
  kTagScale,
  kTagOrthogonal,
  kTagSlots,
  kTagGradient,
  kTagMember,
  kTagNonMember,
  kTagNoise,
};

constexpr int kMaxPlacementTries = 2000;

double Distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Rows of a Gaussian matrix orthonormalised by modified Gram-Schmidt.
std::vector<double> RandomOrthogonal(std::size_t d, Rng& rng) {
  std::vector<double> q(d * d);
  for (std::size_t r = 0; r < d; ++r) {
    Vec v = rng.NormalVector(d);
    for (std::size_t p = 0; p < r; ++p) {
      const double* row = &q[p * d];
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += row[i] * v[i];
      for (std::size_t i = 0; i < d; ++i) v[i] -= dot * row[i];
    }
    const Vec u = Normalized(v);
    std::copy(u.begin(), u.end(), q.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  return q;
}

}  // namespace

void WorldSpec::Validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kValidation, "world: " + m); };
  if (n_members == 0) fail("n_members must be positive");
  if (embed_dim < 2) fail("embed_dim must be at least 2");
  if (!(collapse_radius > 0.0)) fail("collapse radius must be positive");
  if (!(member_noise >= 0.0)) fail("member noise must be non-negative");
  if (!(background_noise >= member_noise)) fail("background noise must be >= member noise");
  if (!(encoder_contraction > 0.0 && encoder_contraction < 1.0)) {
    fail("encoder contraction must lie in (0, 1)");
  }
  if (caption_words == 0 || vocabulary < 2) fail("caption words and vocabulary must be positive");
  if (caption_slots == 0 || slot_choices < 2) fail("captioner needs slots and choices");
  if (render_rows == 0 || !(render_range > 0.0)) fail("render rows and range must be positive");
  if (!(recognition_cosine > 0.0 && recognition_cosine <= 1.0)) {
    fail("recognition cosine must lie in (0, 1]");
  }
}

nlohmann::ordered_json WorldSpec::ToJson() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["n_members"] = n_members;
  j["embed_dim"] = embed_dim;
  j["collapse_radius"] = collapse_radius;
  j["member_noise"] = member_noise;
  j["background_noise"] = background_noise;
  j["encoder_contraction"] = encoder_contraction;
  j["caption_words"] = caption_words;
  j["vocabulary"] = vocabulary;
  j["background_gain"] = background_gain;
  j["scale_spread"] = scale_spread;
  j["photo_offset"] = photo_offset;
  j["recognition_cosine"] = recognition_cosine;
  j["caption_bank"] = caption_bank;
  j["caption_slots"] = caption_slots;
  j["slot_choices"] = slot_choices;
  j["render_rows"] = render_rows;
  j["render_range"] = render_range;
  return j;
}

WorldSpec WorldSpec::FromJson(const nlohmann::json& j) {
  WorldSpec s;
  static const char* kKnown[] = {"seed", "n_members", "embed_dim", "collapse_radius",
                                 "member_noise", "background_noise", "encoder_contraction",
                                 "caption_words", "vocabulary", "background_gain", "scale_spread",
                                 "photo_offset", "recognition_cosine", "caption_bank", "caption_slots",
                                 "slot_choices", "render_rows", "render_range"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(std::begin(kKnown), std::end(kKnown), it.key()) == std::end(kKnown)) {
      throw Error(ErrorCode::kValidation, "world: unknown field \"" + it.key() + "\"");
    }
  }
  try {
    s.seed = j.value("seed", s.seed);
    s.n_members = j.value("n_members", s.n_members);
    s.embed_dim = j.value("embed_dim", s.embed_dim);
    s.collapse_radius = j.value("collapse_radius", s.collapse_radius);
    s.member_noise = j.value("member_noise", s.member_noise);
    s.background_noise = j.value("background_noise", s.background_noise);
    s.encoder_contraction = j.value("encoder_contraction", s.encoder_contraction);
    s.caption_words = j.value("caption_words", s.caption_words);
    s.vocabulary = j.value("vocabulary", s.vocabulary);
    s.background_gain = j.value("background_gain", s.background_gain);
    s.scale_spread = j.value("scale_spread", s.scale_spread);
    s.photo_offset = j.value("photo_offset", s.photo_offset);
    s.recognition_cosine = j.value("recognition_cosine", s.recognition_cosine);
    s.caption_bank = j.value("caption_bank", s.caption_bank);
    s.caption_slots = j.value("caption_slots", s.caption_slots);
    s.slot_choices = j.value("slot_choices", s.slot_choices);
    s.render_rows = j.value("render_rows", s.render_rows);
    s.render_range = j.value("render_range", s.render_range);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("world: ") + e.what());
  }
  s.Validate();
  return s;
}

SynthWorld::SynthWorld(WorldSpec spec)
    : spec_(std::move(spec)), encoder_(spec_.embed_dim, DeriveSeed(spec_.seed, {kTagText})) {
  spec_.Validate();
  const std::size_t d = spec_.embed_dim;
  // Two points of the unit sphere are at most 2 apart.
  if (spec_.n_members > 1 && 2.0 * spec_.collapse_radius >= 2.0) {
    throw Error(ErrorCode::kInfeasible,
                "collapse regions of radius " + FormatDouble(spec_.collapse_radius) +
                    " cannot be disjoint on the unit sphere");
  }

  for (std::size_t k = 0; k < spec_.vocabulary; ++k) {
    vocabulary_.push_back(backends::PseudoWord(DeriveSeed(spec_.seed, {kTagVocab, k})));
  }

  Rng map_rng(DeriveSeed(spec_.seed, {kTagMap}));
  map_ = map_rng.NormalVector(d * d);
  bias_ = map_rng.NormalVector(d, 0.5);
  Rng scale_rng(DeriveSeed(spec_.seed, {kTagScale}));
  scale_direction_ = scale_rng.RandomDirection(d);
  Rng orth_rng(DeriveSeed(spec_.seed, {kTagOrthogonal}));
  orthogonal_ = RandomOrthogonal(d, orth_rng);

  Rng slot_rng(DeriveSeed(spec_.seed, {kTagSlots}));
  slot_projections_ = slot_rng.NormalVector(spec_.caption_slots * spec_.slot_choices * d);
  for (std::size_t i = 0; i < spec_.caption_slots * spec_.slot_choices; ++i) {
    slot_words_.push_back(backends::PseudoWord(DeriveSeed(spec_.seed, {kTagSlots, i})));
  }

  Rng grad_rng(DeriveSeed(spec_.seed, {kTagGradient}));
  grad_member_ = grad_rng.RandomDirection(d, 2.0);
  grad_nonmember_ = grad_rng.RandomDirection(d, 1.0);

  const double min_gap = 2.0 * spec_.collapse_radius;
  for (std::size_t m = 0; m < spec_.n_members; ++m) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementTries && !placed; ++attempt) {
      WorldSample s = MakeSample(kTagMember, m * kMaxPlacementTries + attempt);
      placed = std::all_of(members_.begin(), members_.end(), [&](const WorldSample& o) {
        return Distance(o.caption_embedding, s.caption_embedding) > min_gap;
      });
      if (placed) members_.push_back(std::move(s));
    }
    if (!placed) {
      throw Error(ErrorCode::kInfeasible,
                  "cannot place " + std::to_string(spec_.n_members) +
                      " members with pairwise gap > " + FormatDouble(min_gap) + " in dimension " +
                      std::to_string(d));
    }
  }
  for (const auto& m : members_) {
    member_unit_images_.push_back(Normalized(m.image));
    bank_captions_.push_back(m.caption);
    bank_unit_images_.push_back(member_unit_images_.back());
  }
  for (std::size_t i = 0; i < spec_.caption_bank; ++i) {
    const WorldSample s = NonMember(i);
    bank_captions_.push_back(s.caption);
    bank_unit_images_.push_back(Normalized(Background(s.caption_embedding)));
  }
}

std::string SynthWorld::RandomCaption(std::uint64_t seed) const {
  Rng rng(seed);
  std::vector<std::string> words;
  for (std::size_t i = 0; i < spec_.caption_words; ++i) {
    words.push_back(vocabulary_[rng.UniformInt(vocabulary_.size())]);
  }
  return Join(words, " ");
}

WorldSample SynthWorld::MakeSample(std::uint64_t stream, std::size_t index) const {
  WorldSample s;
  s.caption = RandomCaption(DeriveSeed(spec_.seed, {stream, index, 0}));
  s.caption_embedding = EncodeText(s.caption);
  s.image = Background(s.caption_embedding);
  const double a = Norm(s.image) / std::sqrt(static_cast<double>(dim()));
  Rng photo(DeriveSeed(spec_.seed, {stream, index, 1}));
  for (double& v : s.image) v += spec_.photo_offset * a * photo.Normal();
  return s;
}

WorldSample SynthWorld::NonMember(std::size_t index) const {
  const double min_gap = 2.0 * spec_.collapse_radius;
  for (std::size_t attempt = 0;; ++attempt) {
    WorldSample s = MakeSample(kTagNonMember, index * kMaxPlacementTries + attempt);
    const bool clear = std::all_of(members_.begin(), members_.end(), [&](const WorldSample& o) {
      return Distance(o.caption_embedding, s.caption_embedding) > min_gap;
    });
    if (clear || attempt + 1 == kMaxPlacementTries) return s;
  }
}

Vec SynthWorld::Background(std::span<const double> c) const {
  const std::size_t d = dim();
  if (c.size() != d) throw Error(ErrorCode::kDimensionMismatch, "caption embedding dimension");
  const double scale = std::exp(spec_.scale_spread * std::sqrt(static_cast<double>(d)) *
                                Dot(scale_direction_, c));
  Vec out(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double* row = &map_[i * d];
    double pre = bias_[i];
    for (std::size_t j = 0; j < d; ++j) pre += spec_.background_gain * row[j] * c[j];
    out[i] = scale * std::tanh(pre);
  }
  return out;
}

Vec SynthWorld::Noise(std::uint64_t seed) const {
  Rng rng(DeriveSeed(spec_.seed, {kTagNoise, seed}));
  return rng.NormalVector(dim());
}

std::optional<std::size_t> SynthWorld::RegionOf(std::span<const double> c) const {
  for (std::size_t m = 0; m < members_.size(); ++m) {
    if (Distance(members_[m].caption_embedding, c) <= spec_.collapse_radius) return m;
  }
  return std::nullopt;
}

Vec SynthWorld::Generate(std::string_view prompt, std::uint64_t seed) const {
  return GenerateFromEmbedding(EncodeText(prompt), seed);
}

Vec SynthWorld::GenerateFromEmbedding(std::span<const double> c, std::uint64_t seed) const {
  const Vec noise = Noise(seed);
  Vec out;
  double sigma;
  if (auto m = RegionOf(c)) {
    out = members_[*m].image;
    sigma = spec_.member_noise;
  } else {
    out = Background(c);
    sigma = spec_.background_noise;
  }
  if (sigma > 0.0) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sigma * noise[i];
  }
  return out;
}

std::optional<std::size_t> SynthWorld::RecognizedMember(std::span<const double> image) const {
  const double n = Norm(image);
  if (!(n > 0.0)) return std::nullopt;
  std::optional<std::size_t> best;
  double best_cos = spec_.recognition_cosine;
  for (std::size_t m = 0; m < members_.size(); ++m) {
    const double c = Dot(member_unit_images_[m], image) / n;
    if (c >= best_cos) {
      best_cos = c;
      best = m;
    }
  }
  return best;
}

std::string SynthWorld::Caption(std::span<const double> image) const {
  const double n = Norm(image);
  if (n > 0.0) {
    std::optional<std::size_t> best;
    double best_cos = spec_.recognition_cosine;
    for (std::size_t b = 0; b < bank_unit_images_.size(); ++b) {
      const double c = Dot(bank_unit_images_[b], image) / n;
      if (c >= best_cos) {
        best_cos = c;
        best = b;
      }
    }
    if (best) return bank_captions_[*best];
  }
  const std::size_t d = dim();
  std::vector<std::string> words;
  for (std::size_t s = 0; s < spec_.caption_slots; ++s) {
    std::size_t best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < spec_.slot_choices; ++k) {
      const double* p = &slot_projections_[(s * spec_.slot_choices + k) * d];
      double v = 0.0;
      for (std::size_t i = 0; i < d; ++i) v += p[i] * image[i];
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    words.push_back(slot_words_[s * spec_.slot_choices + best]);
  }
  return Join(words, " ");
}

double SynthWorld::Relevance(std::span<const double> target,
                             std::span<const double> generated) const {
  const double img = Cosine(target, generated);
  const double txt = Dot(EncodeText(Caption(target)), EncodeText(Caption(generated)));
  return 0.5 * (img + txt);
}

Vec SynthWorld::EncodeImage(std::span<const double> x) const {
  const std::size_t d = dim();
  Vec out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double* row = &orthogonal_[i * d];
    double v = 0.0;
    for (std::size_t j = 0; j < d; ++j) v += row[j] * x[j];
    out[i] = spec_.encoder_contraction * v;
  }
  return out;
}

std::string SynthWorld::Render(std::span<const double> image) const {
  const int w = static_cast<int>(dim());
  const int h = static_cast<int>(spec_.render_rows);
  PixelBuffer px(w, h, 1, 65535);
  const double range = spec_.render_range;
  for (int x = 0; x < w; ++x) {
    const double t = (std::clamp(image[x], -range, range) + range) / (2.0 * range);
    const auto level = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    for (int y = 0; y < h; ++y) px.at(x, y) = level;
  }
  return EncodePnm(px);
}

Vec SynthWorld::Decode(std::string_view bytes) const {
  const PixelBuffer px = DecodePnm(bytes);
  Vec out(static_cast<std::size_t>(px.width), 0.0);
  const double range = spec_.render_range;
  const double denom = static_cast<double>(px.height) * px.channels * px.max_value;
  for (int x = 0; x < px.width; ++x) {
    double sum = 0.0;
    for (int y = 0; y < px.height; ++y) {
      for (int c = 0; c < px.channels; ++c) sum += px.at(x, y, c);
    }
    out[x] = sum / denom * 2.0 * range - range;
  }
  return out;
}

}  // namespace sdmia::synthworld
