#include "sdmia/pipeline/simulate.hpp"

#include <cstdio>

#include "sdmia/common/hash.hpp"
#include "sdmia/common/text.hpp"
#include "sdmia/dataset/manifest.hpp"
#include "sdmia/eval/metrics.hpp"

namespace sdmia::pipeline {

namespace fs = std::filesystem;

namespace {

std::string Numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%04zu", prefix, i);
  return buf;
}

BackendConfig WorldBackend(const std::string& slot) {
  BackendConfig b;
  b.provider = Provider::kSynthWorld;
  b.id.name = "synthworld-" + slot;
  b.id.kind = slot == "generation"   ? backends::BackendKind::kGeneration
              : slot == "caption"    ? backends::BackendKind::kCaption
              : slot == "image_embed" ? backends::BackendKind::kImageEmbed
                                      : backends::BackendKind::kTextEmbed;
  b.id.version_tag = "synthworld-1";
  return b;
}

}  // namespace

SimulatedBenchmark PrepareSimulation(const SimulateOptions& o) {
  if (o.out_dir.empty()) throw Error(ErrorCode::kValidation, "simulate needs an output directory");
  o.world.Validate();
  SimulatedBenchmark sim;
  auto world = std::make_shared<synthworld::SynthWorld>(o.world);
  sim.world = world;

  const fs::path root = fs::absolute(o.out_dir).lexically_normal();
  fs::create_directories(root / "images");
  dataset::SampleSet set;
  set.mode = dataset::ManifestMode::kBenchmark;
  set.base_dir = root;
  auto add = [&](const std::string& id, const synthworld::WorldSample& s, dataset::Label label) {
    const std::string rel = "images/" + id + ".pgm";
    const std::string bytes = world->Render(s.image);
    // Images are content-stable, so an identical file is left untouched.
    const fs::path path = root / rel;
    if (!fs::exists(path) || ReadFile(path) != bytes) WriteFileAtomic(path, bytes);
    dataset::Sample sample;
    sample.id = id;
    sample.image = rel;
    sample.caption = s.caption;
    sample.label = label;
    sample.source = "synthworld";
    set.samples.push_back(std::move(sample));
  };
  for (std::size_t i = 0; i < world->members().size(); ++i) {
    add(Numbered("m", i), world->members()[i], dataset::Label::kMember);
  }
  const std::size_t n_non = o.n_nonmembers ? o.n_nonmembers : world->members().size();
  for (std::size_t i = 0; i < n_non; ++i) {
    add(Numbered("n", i), world->NonMember(i), dataset::Label::kNonMember);
  }
  sim.manifest = root / "manifest.jsonl";
  dataset::SaveManifest(set, sim.manifest);

  RunConfig& c = sim.config;
  c.manifest = sim.manifest;
  c.mode = dataset::ManifestMode::kBenchmark;
  c.world = o.world;
  c.generation = WorldBackend("generation");
  c.text_embed = WorldBackend("text_embed");
  c.image_embed = WorldBackend("image_embed");
  c.caption = WorldBackend("caption");
  c.text_embed.dim = c.image_embed.dim = o.world.embed_dim;
  c.rewrite.provider = Provider::kStub;
  c.rewrite.id.name = "stub-rewrite";
  c.rewrite.id.kind = backends::BackendKind::kRewrite;
  c.rewrite.id.version_tag = "edit-1";
  c.perturbations_per_view = o.perturbations_per_view;
  c.generations = o.generations;
  c.baseline_repeats = o.generations;
  c.robustness.kinds = {"gaussian_noise"};
  c.robustness.intensities = {0.0, 0.25, 0.5, 0.75, 1.0};
  c.cache_dir = o.memory_cache ? fs::path() : root / "cache";
  c.output_root = root / "runs";
  c.workers = o.workers;
  c.seed = o.seed;
  c.Validate();
  WriteFileAtomic(root / "config.json", c.ToJson().dump(2) + "\n");
  return sim;
}

double ImageSideAuc(const synthworld::SynthWorld& world, std::size_t n_nonmembers,
                    const synthworld::ImageSideOptions& options, std::uint64_t seed) {
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < world.members().size(); ++i) {
    pos.push_back(synthworld::ImageSideScore(world, world.members()[i].image, options,
                                             DeriveSeed(seed, {1, i})));
  }
  for (std::size_t i = 0; i < n_nonmembers; ++i) {
    neg.push_back(synthworld::ImageSideScore(world, world.NonMember(i).image, options,
                                             DeriveSeed(seed, {2, i})));
  }
  return eval::Auc(pos, neg);
}

}  // namespace sdmia::pipeline
