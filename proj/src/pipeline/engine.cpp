#include "sdmia/pipeline/engine.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "sdmia/backends/http.hpp"
#include "sdmia/backends/stub.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/text.hpp"
#include "sdmia/synthworld/backends.hpp"

namespace sdmia::pipeline {

namespace {

enum : std::uint64_t { kTagGeneration = 0x6e6e };

backends::HttpConfig HttpFor(const BackendConfig& b, const ServiceOptions& o) {
  backends::HttpConfig h;
  h.name = b.id.name;
  h.endpoint = b.id.endpoint;
  h.auth_env = b.auth_env;
  h.model = b.model;
  h.timeout_s = b.timeout_s;
  h.tracer = o.tracer;
  return h;
}

backends::ClientOptions ClientOptionsFor(const RunConfig& c, const BackendConfig& b,
                                         const ServiceOptions& o) {
  backends::ClientOptions opts;
  opts.retry = c.retry;
  opts.max_in_flight = b.max_in_flight;
  opts.cache_only = o.cache_only;
  opts.sleep = o.sleep;
  return opts;
}

// Worlds differ in content even under one version tag, so the world parameters
// are folded into the cache identity of every synthworld backend.
backends::BackendId EffectiveId(const BackendConfig& b, const RunConfig& c) {
  backends::BackendId id = b.id;
  if (b.provider == Provider::kSynthWorld && c.world) {
    id.version_tag += "+world:" + Sha256Hex(c.world->ToJson().dump()).substr(0, 16);
  }
  return id;
}

bool IsBackendFailure(ErrorCode code) {
  return code == ErrorCode::kBackend || code == ErrorCode::kCacheMiss;
}

}  // namespace

std::unique_ptr<Services> BuildServices(const RunConfig& c, const ServiceOptions& o) {
  auto s = std::make_unique<Services>();
  s->world = o.world;
  if (!s->world && c.world) s->world = std::make_shared<synthworld::SynthWorld>(*c.world);
  for (const BackendConfig* b : {&c.generation, &c.text_embed, &c.image_embed, &c.caption}) {
    if (b->provider == Provider::kSynthWorld && !s->world) {
      throw Error(ErrorCode::kValidation,
                  "backend \"" + b->id.name + "\" uses the synthworld provider but no world is configured");
    }
  }
  s->cache = std::make_shared<backends::BlobCache>(
      c.cache_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(c.cache_dir));
  s->ledger = std::make_shared<backends::Ledger>();

  std::shared_ptr<backends::Generator> gen;
  switch (c.generation.provider) {
    case Provider::kStub:
      gen = std::make_shared<backends::StubGenerator>(c.generation.refuse_marker);
      break;
    case Provider::kHttp:
      gen = std::make_shared<backends::HttpGenerator>(HttpFor(c.generation, o));
      break;
    case Provider::kSynthWorld:
      gen = std::make_shared<synthworld::SynthGenerator>(s->world);
      break;
  }
  std::shared_ptr<backends::TextEmbedder> text;
  switch (c.text_embed.provider) {
    case Provider::kStub:
      text = std::make_shared<backends::StubTextEmbedder>(c.seed, c.text_embed.dim);
      break;
    case Provider::kHttp:
      text = std::make_shared<backends::HttpTextEmbedder>(HttpFor(c.text_embed, o), c.text_embed.dim);
      break;
    case Provider::kSynthWorld:
      text = std::make_shared<synthworld::SynthTextEmbedder>(s->world);
      break;
  }
  std::shared_ptr<backends::ImageEmbedder> image;
  switch (c.image_embed.provider) {
    case Provider::kStub:
      image = std::make_shared<backends::StubImageEmbedder>(c.seed, c.image_embed.dim);
      break;
    case Provider::kHttp:
      image = std::make_shared<backends::HttpImageEmbedder>(HttpFor(c.image_embed, o),
                                                            c.image_embed.dim);
      break;
    case Provider::kSynthWorld:
      image = std::make_shared<synthworld::SynthImageEmbedder>(s->world);
      break;
  }
  std::shared_ptr<backends::Captioner> cap;
  switch (c.caption.provider) {
    case Provider::kStub:
      cap = std::make_shared<backends::StubCaptioner>();
      break;
    case Provider::kHttp:
      cap = std::make_shared<backends::HttpCaptioner>(HttpFor(c.caption, o));
      break;
    case Provider::kSynthWorld:
      cap = std::make_shared<synthworld::SynthCaptioner>(s->world);
      break;
  }
  std::shared_ptr<backends::Rewriter> rw;
  if (c.rewrite.provider == Provider::kHttp) {
    rw = std::make_shared<backends::HttpRewriter>(HttpFor(c.rewrite, o));
  } else {
    rw = std::make_shared<backends::EditRewriter>();
  }

  s->generation = std::make_unique<backends::GenerationClient>(
      EffectiveId(c.generation, c), gen, s->cache, s->ledger,
      ClientOptionsFor(c, c.generation, o));
  s->text_embed = std::make_unique<backends::TextEmbedClient>(
      EffectiveId(c.text_embed, c), text, s->cache, s->ledger,
      ClientOptionsFor(c, c.text_embed, o));
  s->image_embed = std::make_unique<backends::ImageEmbedClient>(
      EffectiveId(c.image_embed, c), image, s->cache, s->ledger,
      ClientOptionsFor(c, c.image_embed, o));
  s->caption = std::make_unique<backends::CaptionClient>(
      EffectiveId(c.caption, c), cap, s->cache, s->ledger, ClientOptionsFor(c, c.caption, o));
  s->rewrite = std::make_unique<backends::RewriteClient>(
      EffectiveId(c.rewrite, c), rw, s->cache, s->ledger, ClientOptionsFor(c, c.rewrite, o));
  return s;
}

std::uint64_t GenerationSeed(const RunConfig& config, std::size_t g) {
  return DeriveSeed(config.seed, {kTagGeneration, g});
}

scoring::JointEmbedding EmbedJoint(Services& services, std::string_view image_bytes,
                                   std::string* caption_out) {
  const Vec img = services.image_embed->Embed(image_bytes);
  std::string caption = services.caption->Caption(image_bytes);
  const Vec txt = services.text_embed->Embed(caption);
  if (caption_out) *caption_out = std::move(caption);
  return scoring::JointEmbedding(img, txt);
}

std::string ReadImage(const dataset::SampleSet& set, const dataset::Sample& sample) {
  const std::string ref = set.ResolveImage(sample);
  if (dataset::IsUrl(ref)) return backends::FetchUrl(ref);
  return ReadFile(ref);
}

SampleArtifacts GatherSample(const RunConfig& config, Services& services,
                             const dataset::SampleSet& set, std::size_t index) {
  SampleArtifacts a;
  a.sample = set.samples[index];
  std::string stage = "read_image";
  try {
    a.image_bytes = ReadImage(set, a.sample);
    stage = "embed_target";
    a.target = EmbedJoint(services, a.image_bytes, &a.target_caption);

    // The original caption when paired and available, else a surrogate.
    a.prompt = (config.paired_description && a.sample.caption) ? *a.sample.caption
                                                              : a.target_caption;

    stage = "perturb";
    const std::uint64_t sample_seed = DeriveSeed(config.seed, a.sample.id);
    const perturb::TextEmbedFn embed = [&](const std::string& t) {
      return services.text_embed->Embed(t);
    };
    const perturb::RewriteFn rewrite = [&](const std::string& instr, std::uint64_t seed) {
      return services.rewrite->Rewrite(instr, seed);
    };
    const double taus[3] = {config.tau_token, config.tau_style, config.tau_semantic};
    for (std::size_t v = 0; v < 3; ++v) {
      const perturb::PerturbationView view{perturb::kAllViews[v], taus[v]};
      auto batch = perturb::GeneratePerturbations(a.sample.id, a.prompt, view,
                                                  config.perturbations_per_view, rewrite, embed,
                                                  config.attempt_budget, sample_seed);
      a.rewriter_calls += batch.rewriter_calls;
      a.perturbations[v] = std::move(batch.accepted);
    }

    stage = "generate";
    a.reached_generation = true;
    auto generate_slots = [&](const std::string& prompt) {
      scoring::GenerationSlots slots;
      for (std::size_t g = 0; g < config.generations; ++g) {
        const auto rec = services.generation->Generate(prompt, GenerationSeed(config, g),
                                                       config.generation_params);
        if (rec.refused) {
          slots.emplace_back(std::nullopt);
        } else {
          slots.emplace_back(EmbedJoint(services, *rec.bytes));
        }
      }
      return slots;
    };
    a.generations.unperturbed = generate_slots(a.prompt);
    for (std::size_t v = 0; v < 3; ++v) {
      for (const auto& p : a.perturbations[v]) {
        a.generations.perturbed[v].push_back(generate_slots(p.text));
      }
    }
  } catch (const Error& e) {
    a.error = SampleError{e.code(), e.what(), stage};
  } catch (const std::exception& e) {
    a.error = SampleError{ErrorCode::kBackend, e.what(), stage};
  }
  return a;
}

void ParallelFor(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<SampleArtifacts> GatherAll(const RunConfig& config, Services& services,
                                       const dataset::SampleSet& set) {
  std::vector<SampleArtifacts> out(set.size());
  std::atomic<bool> any_success{false};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::optional<SampleError> fatal;
  ParallelFor(set.size(), config.workers, [&](std::size_t i) {
    if (abort) {
      out[i].sample = set.samples[i];
      out[i].error = SampleError{ErrorCode::kBackend, "skipped after an earlier backend failure",
                                 "skipped"};
      return;
    }
    out[i] = GatherSample(config, services, set, i);
    if (!out[i].error) {
      any_success = true;
    } else if (IsBackendFailure(out[i].error->code) && !any_success) {
      std::lock_guard lock(mu);
      if (!fatal) fatal = out[i].error;
      abort = true;
    }
  });
  if (fatal) {
    if (fatal->code == ErrorCode::kCacheMiss) throw Error(ErrorCode::kCacheMiss, fatal->message);
    throw Error(ErrorCode::kBackend, "stopping early, " + fatal->stage + " failed: " + fatal->message);
  }
  return out;
}

}  // namespace sdmia::pipeline
