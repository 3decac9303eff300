#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/vec.hpp"

namespace sdmia::backends {

enum class BackendKind { kGeneration, kTextEmbed, kImageEmbed, kCaption, kRewrite };

const char* BackendKindName(BackendKind kind);
BackendKind ParseBackendKind(std::string_view name);

struct BackendId {
  std::string name;
  BackendKind kind = BackendKind::kGeneration;
  std::string endpoint;  // empty when the backend is local
  std::string version_tag;
};

// Not stated by the method; defaults follow common text-to-image settings.
struct GenerationParams {
  int width = 512;
  int height = 512;
  double guidance = 7.5;
  int steps = 50;

  nlohmann::ordered_json ToJson() const;
  static GenerationParams FromJson(const nlohmann::json& j);
};

struct ImageResult {
  bool refused = false;
  std::string bytes;
  std::string refusal_reason;
};

// A failure worth retrying (transport error, 5xx, rate limiting).
class TransientError : public Error {
 public:
  explicit TransientError(const std::string& what, int status = 0,
                          std::optional<double> retry_after_s = std::nullopt)
      : Error(ErrorCode::kBackend, what), status_(status), retry_after_s_(retry_after_s) {}
  int status() const { return status_; }
  const std::optional<double>& retry_after_s() const { return retry_after_s_; }

 private:
  int status_;
  std::optional<double> retry_after_s_;
};

// The raw backend contracts. Implementations may throw TransientError for
// retryable failures and Error for permanent ones. They need not be
// thread-safe beyond what their documentation states; the clients in
// client.hpp call them concurrently, so every implementation shipped here is.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual ImageResult Generate(const std::string& prompt, std::uint64_t seed,
                               const GenerationParams& params) = 0;
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::size_t dim() const = 0;
  virtual Vec EmbedText(const std::string& text) = 0;
};

class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  virtual std::size_t dim() const = 0;
  virtual Vec EmbedImage(std::string_view image_bytes) = 0;
};

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string Caption(std::string_view image_bytes) = 0;
};

class Rewriter {
 public:
  virtual ~Rewriter() = default;
  virtual std::string Rewrite(const std::string& instruction, std::uint64_t seed) = 0;
};

}  // namespace sdmia::backends
