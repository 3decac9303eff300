#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdmia/backends/client.hpp"
#include "sdmia/dataset/sample.hpp"
#include "sdmia/perturb/perturb.hpp"
#include "sdmia/pipeline/config.hpp"
#include "sdmia/scoring/score.hpp"
#include "sdmia/synthworld/world.hpp"

namespace sdmia::pipeline {

// The five query clients of a run, sharing one cache and one ledger.
struct Services {
  std::shared_ptr<const synthworld::SynthWorld> world;
  std::shared_ptr<backends::BlobCache> cache;
  std::shared_ptr<backends::Ledger> ledger;
  std::unique_ptr<backends::GenerationClient> generation;
  std::unique_ptr<backends::TextEmbedClient> text_embed;
  std::unique_ptr<backends::ImageEmbedClient> image_embed;
  std::unique_ptr<backends::CaptionClient> caption;
  std::unique_ptr<backends::RewriteClient> rewrite;
};

struct ServiceOptions {
  bool cache_only = false;
  std::shared_ptr<backends::Tracer> tracer;
  // Reuse an existing world instead of building one from the config.
  std::shared_ptr<const synthworld::SynthWorld> world;
  std::function<void(double)> sleep;  // retry back-off, replaceable in tests
};

std::unique_ptr<Services> BuildServices(const RunConfig& config, const ServiceOptions& options = {});

struct SampleError {
  ErrorCode code = ErrorCode::kBackend;
  std::string message;
  std::string stage;
};

// Everything gathered for one sample before scoring.
struct SampleArtifacts {
  dataset::Sample sample;
  std::string image_bytes;
  std::string prompt;          // caption that is perturbed and regenerated
  std::string target_caption;  // caption-model description of the target
  std::optional<scoring::JointEmbedding> target;
  std::array<std::vector<perturb::PerturbedCaption>, 3> perturbations;
  scoring::SampleGenerations generations;
  std::size_t rewriter_calls = 0;
  bool reached_generation = false;
  std::optional<SampleError> error;
};

// Seed of the g-th generation for every caption of a run. Shared across
// captions so that generations differ only through their prompts.
std::uint64_t GenerationSeed(const RunConfig& config, std::size_t g);

// Joint embedding of an image: image embedding plus the embedding of the
// caption model's description of it.
scoring::JointEmbedding EmbedJoint(Services& services, std::string_view image_bytes,
                                   std::string* caption_out = nullptr);

// Reads the image, perturbs, generates and embeds. Failures are captured in
// SampleArtifacts::error rather than thrown.
SampleArtifacts GatherSample(const RunConfig& config, Services& services,
                             const dataset::SampleSet& set, std::size_t index);

// Runs GatherSample over all samples with config.workers threads. If a
// backend or cache failure occurs before any sample succeeded, the run stops
// early and the failure is rethrown.
std::vector<SampleArtifacts> GatherAll(const RunConfig& config, Services& services,
                                       const dataset::SampleSet& set);

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void ParallelFor(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// Image bytes for a manifest entry: local file or HTTP(S) download.
std::string ReadImage(const dataset::SampleSet& set, const dataset::Sample& sample);

}  // namespace sdmia::pipeline
