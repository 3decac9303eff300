#include "sdmia/backends/stub.hpp"

#include <array>

#include "sdmia/common/hash.hpp"
#include "sdmia/common/image.hpp"
#include "sdmia/common/rng.hpp"
#include "sdmia/common/text.hpp"
#include "sdmia/perturb/perturb.hpp"

namespace sdmia::backends {

namespace {

constexpr std::array<const char*, 16> kStyleModifiers = {
    "photorealistic", "cinematic",      "highly detailed", "4k",
    "oil painting",   "watercolor painting", "acrylic painting", "pencil sketch",
    "ink drawing",    "charcoal drawing", "cartoon style",  "anime style",
    "manga",          "digital art",    "3D render",       "vector art"};

constexpr std::array<const char*, 20> kOnsets = {"b", "d", "f", "g", "k", "l", "m",
                                                 "n", "p", "r", "s", "t", "v", "z",
                                                 "br", "st", "tr", "gl", "sk", "pl"};
constexpr std::array<const char*, 6> kVowels = {"a", "e", "i", "o", "u", "ai"};

constexpr std::array<const char*, 12> kAdjectives = {
    "small", "red", "quiet", "bright", "old", "wooden",
    "blue", "tall", "soft", "busy", "green", "dark"};
constexpr std::array<const char*, 12> kNouns = {
    "cat", "house", "river", "street", "dog", "chair",
    "garden", "boat", "window", "forest", "table", "bridge"};
constexpr std::array<const char*, 6> kPrepositions = {"on", "near", "under",
                                                      "beside", "behind", "in"};

std::uint64_t BytesSeed(std::string_view bytes) {
  const std::string hex = Sha256Hex(bytes);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace

std::string PseudoWord(std::uint64_t h) {
  std::uint64_t x = SplitMix64(h);
  const int syllables = 2 + static_cast<int>(x % 2);
  x /= 2;
  std::string w;
  for (int i = 0; i < syllables; ++i) {
    w += kOnsets[x % kOnsets.size()];
    x /= kOnsets.size();
    w += kVowels[x % kVowels.size()];
    x /= kVowels.size();
  }
  w += kOnsets[x % 14];  // a plain consonant coda
  return w;
}

Vec HashTextEncoder::TokenVector(const std::string& token) const {
  {
    std::lock_guard lock(mu_);
    auto it = memo_.find(token);
    if (it != memo_.end()) return it->second;
  }
  Rng rng(DeriveSeed(seed_, token));
  Vec v = Normalized(rng.NormalVector(dim_));
  std::lock_guard lock(mu_);
  if (memo_.size() > (1u << 20)) memo_.clear();
  memo_.emplace(token, v);
  return v;
}

Vec HashTextEncoder::Encode(std::string_view text) const {
  std::vector<std::string> tokens = Tokenize(text);
  if (tokens.empty()) tokens.push_back(std::string("\x01") + std::string(text));
  Vec sum(dim_, 0.0);
  for (const auto& t : tokens) {
    const Vec tv = TokenVector(t);
    for (std::size_t i = 0; i < dim_; ++i) sum[i] += tv[i];
  }
  return Normalized(sum);
}

Vec StubImageEmbedder::EmbedImage(std::string_view image_bytes) {
  Rng rng(DeriveSeed(seed_, {BytesSeed(image_bytes)}));
  return Normalized(rng.NormalVector(dim_));
}

ImageResult StubGenerator::Generate(const std::string& prompt, std::uint64_t seed,
                                    const GenerationParams& /*params*/) {
  if (!refuse_marker_.empty() && prompt.find(refuse_marker_) != std::string::npos) {
    return {true, {}, "prompt matched the stub refusal marker"};
  }
  PixelBuffer img;
  img.width = 32;
  img.height = 8;
  img.channels = 1;
  img.max_value = 255;
  img.data.resize(img.width * img.height);
  std::uint64_t state = DeriveSeed(Fnv1a64(prompt), {seed});
  for (auto& px : img.data) {
    state = SplitMix64(state);
    px = static_cast<std::uint16_t>(state & 0xff);
  }
  return {false, EncodePnm(img), {}};
}

std::string StubCaptioner::Caption(std::string_view image_bytes) {
  std::uint64_t x = BytesSeed(image_bytes);
  auto pick = [&x](const auto& list) {
    const char* w = list[x % list.size()];
    x /= list.size();
    return std::string(w);
  };
  std::string adj = pick(kAdjectives);
  std::string noun = pick(kNouns);
  std::string prep = pick(kPrepositions);
  std::string other = pick(kNouns);
  return "a " + adj + " " + noun + " " + prep + " the " + other;
}

std::string EditRewriter::Rewrite(const std::string& instruction, std::uint64_t seed) {
  auto parsed = perturb::ParseRewriteInstruction(instruction);
  const perturb::ViewKind view = parsed ? parsed->view : perturb::ViewKind::kToken;
  const std::string caption = parsed ? parsed->caption : instruction;
  std::vector<std::string> words = SplitWhitespace(caption);
  if (words.empty()) return caption;
  Rng rng(DeriveSeed(seed, caption));
  auto replace_one = [&] {
    const std::size_t i = rng.UniformInt(words.size());
    words[i] = PseudoWord(rng.NextU64());
  };
  switch (view) {
    case perturb::ViewKind::kToken:
      if (words.size() >= 10 || words.size() < 2) {
        replace_one();
      } else {
        const std::size_t i = rng.UniformInt(words.size() - 1);
        std::swap(words[i], words[i + 1]);
        if (words == SplitWhitespace(caption)) replace_one();
      }
      break;
    case perturb::ViewKind::kStyle: {
      if (words.size() >= 10) replace_one();
      const std::size_t n_mod = 1 + rng.UniformInt(2);
      for (std::size_t m = 0; m < n_mod; ++m) {
        const std::string mod = kStyleModifiers[rng.UniformInt(kStyleModifiers.size())];
        if (rng.UniformInt(2) == 0) {
          words.insert(words.begin(), mod + ",");
        } else {
          words.back() += ",";
          words.push_back(mod);
        }
      }
      break;
    }
    case perturb::ViewKind::kSemantic: {
      const std::size_t base = std::max<std::size_t>(1, words.size() / 10);
      const std::size_t k = std::min(words.size(), base + rng.UniformInt(2));
      for (std::size_t i : rng.SampleWithoutReplacement(words.size(), k)) {
        words[i] = PseudoWord(rng.NextU64());
      }
      break;
    }
  }
  return Join(words, " ");
}

std::string EchoRewriter::Rewrite(const std::string& instruction, std::uint64_t /*seed*/) {
  auto parsed = perturb::ParseRewriteInstruction(instruction);
  return parsed ? parsed->caption : instruction;
}

}  // namespace sdmia::backends
