#include "sdmia/backends/client.hpp"

#include <chrono>
#include <cmath>
#include <regex>
#include <thread>

#include "sdmia/common/hash.hpp"
#include "sdmia/common/text.hpp"

namespace sdmia::backends {

namespace {

using Clock = std::chrono::steady_clock;

std::string EncodeVector(const Vec& v) { return nlohmann::json(v).dump(); }

Vec DecodeVector(const std::string& s) { return nlohmann::json::parse(s).get<Vec>(); }

Vec CheckAndNormalize(const BackendId& id, Vec v, std::size_t dim) {
  if (v.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                id.name + ": returned " + std::to_string(v.size()) +
                    "-dim vector, declared " + std::to_string(dim));
  }
  if (!AllFinite(v)) throw Error(ErrorCode::kBackend, id.name + ": non-finite embedding");
  return Normalized(v);
}

}  // namespace

const char* BackendKindName(BackendKind kind) {
  switch (kind) {
    case BackendKind::kGeneration: return "generation";
    case BackendKind::kTextEmbed: return "text_embed";
    case BackendKind::kImageEmbed: return "image_embed";
    case BackendKind::kCaption: return "caption";
    case BackendKind::kRewrite: return "rewrite";
  }
  return "?";
}

BackendKind ParseBackendKind(std::string_view name) {
  for (auto k : {BackendKind::kGeneration, BackendKind::kTextEmbed, BackendKind::kImageEmbed,
                 BackendKind::kCaption, BackendKind::kRewrite}) {
    if (name == BackendKindName(k)) return k;
  }
  throw Error(ErrorCode::kValidation, "unknown backend kind \"" + std::string(name) + "\"");
}

nlohmann::ordered_json GenerationParams::ToJson() const {
  nlohmann::ordered_json j;
  j["width"] = width;
  j["height"] = height;
  j["guidance"] = guidance;
  j["steps"] = steps;
  return j;
}

GenerationParams GenerationParams::FromJson(const nlohmann::json& j) {
  GenerationParams p;
  p.width = j.value("width", p.width);
  p.height = j.value("height", p.height);
  p.guidance = j.value("guidance", p.guidance);
  p.steps = j.value("steps", p.steps);
  if (p.width <= 0 || p.height <= 0 || p.steps <= 0) {
    throw Error(ErrorCode::kValidation, "generation size and steps must be positive");
  }
  return p;
}

// ---------------------------------------------------------------- Ledger

void Ledger::Add(const std::string& backend, const LedgerCounters& d) {
  std::lock_guard lock(mu_);
  LedgerCounters& c = counters_[backend];
  c.requests += d.requests;
  c.calls += d.calls;
  c.cache_hits += d.cache_hits;
  c.refusals += d.refusals;
  c.failures += d.failures;
  c.attempts += d.attempts;
  c.wall_ms += d.wall_ms;
}

std::map<std::string, LedgerCounters> Ledger::Snapshot() const {
  std::lock_guard lock(mu_);
  return counters_;
}

LedgerCounters Ledger::Get(const std::string& backend) const {
  std::lock_guard lock(mu_);
  auto it = counters_.find(backend);
  return it == counters_.end() ? LedgerCounters{} : it->second;
}

nlohmann::ordered_json Ledger::ToJson() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, c] : Snapshot()) {
    nlohmann::ordered_json e;
    e["requests"] = c.requests;
    e["calls"] = c.calls;
    e["cache_hits"] = c.cache_hits;
    e["refusals"] = c.refusals;
    e["failures"] = c.failures;
    e["attempts"] = c.attempts;
    e["wall_ms"] = c.wall_ms;
    j[name] = e;
  }
  return j;
}

std::map<std::string, LedgerCounters> Ledger::FromJson(const nlohmann::json& j) {
  std::map<std::string, LedgerCounters> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& e = it.value();
    LedgerCounters c;
    c.requests = e.at("requests").get<std::uint64_t>();
    c.calls = e.at("calls").get<std::uint64_t>();
    c.cache_hits = e.at("cache_hits").get<std::uint64_t>();
    c.refusals = e.at("refusals").get<std::uint64_t>();
    c.failures = e.at("failures").get<std::uint64_t>();
    c.attempts = e.at("attempts").get<std::uint64_t>();
    c.wall_ms = e.at("wall_ms").get<double>();
    out[it.key()] = c;
  }
  return out;
}

// ---------------------------------------------------------------- Tracer

std::string Tracer::Redact(const std::string& text) {
  static const std::regex kAuth(R"((Authorization|authorization|api[-_]?key|API[-_]?KEY)(\"?\s*[:=]\s*\"?)(Bearer\s+)?[^\s\",}]+)");
  return std::regex_replace(text, kAuth, "$1$2$3***");
}

void Tracer::Log(const std::string& backend, const std::string& direction,
                 const std::string& text) {
  std::lock_guard lock(mu_);
  out_ << "[" << backend << "] " << direction << " " << Redact(text) << '\n';
  out_.flush();
}

// ---------------------------------------------------------------- Semaphore

void Semaphore::Acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return permits_ > 0; });
  --permits_;
}

void Semaphore::Release() {
  {
    std::lock_guard lock(mu_);
    ++permits_;
  }
  cv_.notify_one();
}

// ---------------------------------------------------------------- ClientBase

ClientBase::ClientBase(BackendId id, std::shared_ptr<BlobCache> cache,
                       std::shared_ptr<Ledger> ledger, ClientOptions options)
    : id_(std::move(id)),
      cache_(cache ? std::move(cache) : std::make_shared<BlobCache>()),
      ledger_(ledger ? std::move(ledger) : std::make_shared<Ledger>()),
      options_(std::move(options)),
      in_flight_(options_.max_in_flight) {
  if (!options_.sleep) {
    options_.sleep = [](double ms) {
      std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
    };
  }
  if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
}

std::string ClientBase::Namespace() const {
  std::string ns;
  for (char c : id_.name) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    ns += ok ? c : '_';
  }
  return ns.empty() ? "backend" : ns;
}

ClientBase::Outcome ClientBase::Fetch(const std::string& canonical_request,
                                      const std::function<CacheEntry()>& call) {
  const std::string ns = Namespace();
  const std::string key = BlobCache::Key(id_.version_tag, canonical_request);
  LedgerCounters delta;
  delta.requests = 1;
  Outcome out;
  if (auto hit = cache_->Get(ns, key)) {
    out.entry = std::move(*hit);
    out.cache_hit = true;
    (out.entry.refused ? delta.refusals : delta.cache_hits) = 1;
    ledger_->Add(id_.name, delta);
    return out;
  }
  if (options_.cache_only) {
    delta.failures = 1;
    ledger_->Add(id_.name, delta);
    throw Error(ErrorCode::kCacheMiss, id_.name + ": cache miss in replay mode");
  }
  const RetryPolicy& rp = options_.retry;
  std::string last_error;
  for (int attempt = 1; attempt <= rp.max_attempts; ++attempt) {
    std::optional<double> wait_ms;
    in_flight_.Acquire();
    const auto t0 = Clock::now();
    try {
      CacheEntry entry = call();
      const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      in_flight_.Release();
      delta.attempts += 1;
      delta.wall_ms += ms;
      out.latency_ms += ms;
      out.attempts = attempt;
      out.entry = std::move(entry);
      (out.entry.refused ? delta.refusals : delta.calls) = 1;
      cache_->Put(ns, key, out.entry);
      ledger_->Add(id_.name, delta);
      return out;
    } catch (const TransientError& e) {
      const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
      in_flight_.Release();
      delta.attempts += 1;
      delta.wall_ms += ms;
      out.latency_ms += ms;
      last_error = e.what();
      if (e.retry_after_s()) wait_ms = *e.retry_after_s() * 1000.0;
    } catch (const std::exception& e) {
      in_flight_.Release();
      delta.attempts += 1;
      delta.failures = 1;
      ledger_->Add(id_.name, delta);
      const auto* err = dynamic_cast<const Error*>(&e);
      if (err && err->code() != ErrorCode::kBackend) throw;
      throw BackendError(id_.name, e.what(), attempt);
    }
    if (attempt == rp.max_attempts) break;
    if (!wait_ms) {
      wait_ms = std::min(rp.max_delay_ms, rp.base_delay_ms * std::pow(2.0, attempt - 1));
    }
    options_.sleep(*wait_ms);
  }
  delta.failures = 1;
  ledger_->Add(id_.name, delta);
  throw BackendError(id_.name, last_error, rp.max_attempts);
}

std::string ContentRef(std::string_view bytes) { return "sha256:" + Sha256Hex(bytes); }

// ---------------------------------------------------------------- clients

GenerationClient::GenerationClient(BackendId id, std::shared_ptr<Generator> impl,
                                   std::shared_ptr<BlobCache> cache,
                                   std::shared_ptr<Ledger> ledger, ClientOptions options)
    : ClientBase(std::move(id), std::move(cache), std::move(ledger), std::move(options)),
      impl_(std::move(impl)) {}

GenerationRecord GenerationClient::Generate(const std::string& prompt, std::uint64_t seed,
                                            const GenerationParams& params) {
  if (Trim(prompt).empty()) throw Error(ErrorCode::kValidation, "prompt is empty");
  nlohmann::ordered_json req;
  req["op"] = "generate";
  req["prompt"] = prompt;
  req["seed"] = seed;
  req["params"] = params.ToJson();
  Outcome o = Fetch(req.dump(), [&] {
    ImageResult r = impl_->Generate(prompt, seed, params);
    CacheEntry e;
    e.refused = r.refused;
    if (!r.refused) {
      if (r.bytes.empty()) throw Error(ErrorCode::kBackend, "empty image payload");
      e.bytes = std::move(r.bytes);
    }
    return e;
  });
  GenerationRecord rec;
  rec.prompt = prompt;
  rec.seed = seed;
  rec.backend = id_;
  rec.latency_ms = o.latency_ms;
  rec.cache_hit = o.cache_hit;
  rec.refused = o.entry.refused;
  rec.attempts = o.attempts;
  if (!rec.refused) {
    rec.image = ContentRef(o.entry.bytes);
    rec.bytes = std::make_shared<const std::string>(std::move(o.entry.bytes));
  }
  return rec;
}

TextEmbedClient::TextEmbedClient(BackendId id, std::shared_ptr<TextEmbedder> impl,
                                 std::shared_ptr<BlobCache> cache, std::shared_ptr<Ledger> ledger,
                                 ClientOptions options)
    : ClientBase(std::move(id), std::move(cache), std::move(ledger), std::move(options)),
      impl_(std::move(impl)),
      dim_(impl_->dim()) {}

Vec TextEmbedClient::Embed(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::kValidation, "cannot embed empty text");
  nlohmann::ordered_json req;
  req["op"] = "embed_text";
  req["text"] = text;
  Outcome o = Fetch(req.dump(), [&] {
    return CacheEntry{false, EncodeVector(CheckAndNormalize(id_, impl_->EmbedText(text), dim_))};
  });
  return CheckAndNormalize(id_, DecodeVector(o.entry.bytes), dim_);
}

ImageEmbedClient::ImageEmbedClient(BackendId id, std::shared_ptr<ImageEmbedder> impl,
                                   std::shared_ptr<BlobCache> cache,
                                   std::shared_ptr<Ledger> ledger, ClientOptions options)
    : ClientBase(std::move(id), std::move(cache), std::move(ledger), std::move(options)),
      impl_(std::move(impl)),
      dim_(impl_->dim()) {}

Vec ImageEmbedClient::Embed(std::string_view image_bytes) {
  if (image_bytes.empty()) throw Error(ErrorCode::kValidation, "cannot embed an empty image");
  nlohmann::ordered_json req;
  req["op"] = "embed_image";
  req["image"] = ContentRef(image_bytes);
  Outcome o = Fetch(req.dump(), [&] {
    return CacheEntry{false,
                      EncodeVector(CheckAndNormalize(id_, impl_->EmbedImage(image_bytes), dim_))};
  });
  return CheckAndNormalize(id_, DecodeVector(o.entry.bytes), dim_);
}

CaptionClient::CaptionClient(BackendId id, std::shared_ptr<Captioner> impl,
                             std::shared_ptr<BlobCache> cache, std::shared_ptr<Ledger> ledger,
                             ClientOptions options)
    : ClientBase(std::move(id), std::move(cache), std::move(ledger), std::move(options)),
      impl_(std::move(impl)) {}

std::string CaptionClient::Caption(std::string_view image_bytes) {
  nlohmann::ordered_json req;
  req["op"] = "caption";
  req["image"] = ContentRef(image_bytes);
  Outcome o = Fetch(req.dump(), [&] {
    std::string c = Trim(impl_->Caption(image_bytes));
    if (c.empty()) throw Error(ErrorCode::kBackend, "captioner returned an empty caption");
    return CacheEntry{false, std::move(c)};
  });
  return o.entry.bytes;
}

RewriteClient::RewriteClient(BackendId id, std::shared_ptr<Rewriter> impl,
                             std::shared_ptr<BlobCache> cache, std::shared_ptr<Ledger> ledger,
                             ClientOptions options)
    : ClientBase(std::move(id), std::move(cache), std::move(ledger), std::move(options)),
      impl_(std::move(impl)) {}

std::string RewriteClient::Rewrite(const std::string& instruction, std::uint64_t seed) {
  nlohmann::ordered_json req;
  req["op"] = "rewrite";
  req["instruction"] = instruction;
  req["seed"] = seed;
  Outcome o = Fetch(req.dump(), [&] { return CacheEntry{false, impl_->Rewrite(instruction, seed)}; });
  return o.entry.bytes;
}

}  // namespace sdmia::backends
