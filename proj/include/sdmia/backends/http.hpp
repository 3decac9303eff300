#pragma once

#include <memory>
#include <string>

#include "sdmia/backends/backend.hpp"
#include "sdmia/backends/client.hpp"

namespace sdmia::backends {

struct HttpConfig {
  std::string name;      // for diagnostics and trace lines
  std::string endpoint;  // full URL, e.g. http://host:8080/v1/images
  std::string auth_env;  // environment variable holding a bearer token
  std::string model;     // forwarded as "model" when non-empty
  double timeout_s = 60.0;
  std::shared_ptr<Tracer> tracer;
};

struct ParsedUrl {
  std::string scheme_host_port;  // "http://host:port"
  std::string path;              // "/v1/x", at least "/"
};
// Throws kValidation for anything other than http(s)://host[:port][/path].
ParsedUrl ParseUrl(const std::string& url);

// GET of a URL body; transient failures raise TransientError.
std::string FetchUrl(const std::string& url, double timeout_s = 60.0);

// HTTP status handling shared by the adapters: 429 and 5xx and transport
// errors are transient (Retry-After is honored), other non-2xx statuses are
// permanent errors.

// POST {prompt, seed, size: "WxH", n: 1, guidance, steps}; reads the image
// from data[0].b64_json or downloads data[0].url. A 400/403/451 response
// whose body mentions a content policy or refusal is reported as a refusal.
class HttpGenerator : public Generator {
 public:
  explicit HttpGenerator(HttpConfig config) : config_(std::move(config)) {}
  ImageResult Generate(const std::string& prompt, std::uint64_t seed,
                       const GenerationParams& params) override;

 private:
  HttpConfig config_;
};

// POST {input: [text]} -> {vectors: [[...]]} (an OpenAI-style
// data[0].embedding response is also accepted).
class HttpTextEmbedder : public TextEmbedder {
 public:
  HttpTextEmbedder(HttpConfig config, std::size_t dim) : config_(std::move(config)), dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  Vec EmbedText(const std::string& text) override;

 private:
  HttpConfig config_;
  std::size_t dim_;
};

// POST {input: [base64 image]} -> {vectors: [[...]]}.
class HttpImageEmbedder : public ImageEmbedder {
 public:
  HttpImageEmbedder(HttpConfig config, std::size_t dim) : config_(std::move(config)), dim_(dim) {}
  std::size_t dim() const override { return dim_; }
  Vec EmbedImage(std::string_view image_bytes) override;

 private:
  HttpConfig config_;
  std::size_t dim_;
};

// POST {image: base64} -> {caption}.
class HttpCaptioner : public Captioner {
 public:
  explicit HttpCaptioner(HttpConfig config) : config_(std::move(config)) {}
  std::string Caption(std::string_view image_bytes) override;

 private:
  HttpConfig config_;
};

// Chat-completion shape: POST {model, seed, messages: [{role: user,
// content: instruction}]} -> choices[0].message.content.
class HttpRewriter : public Rewriter {
 public:
  explicit HttpRewriter(HttpConfig config) : config_(std::move(config)) {}
  std::string Rewrite(const std::string& instruction, std::uint64_t seed) override;

 private:
  HttpConfig config_;
};

}  // namespace sdmia::backends
