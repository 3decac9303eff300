#pragma once

#include <filesystem>
#include <memory>

#include "sdmia/pipeline/config.hpp"
#include "sdmia/synthworld/probes.hpp"
#include "sdmia/synthworld/world.hpp"

namespace sdmia::pipeline {

struct SimulateOptions {
  synthworld::WorldSpec world;
  std::filesystem::path out_dir;
  std::size_t n_nonmembers = 0;  // 0 means as many as members
  std::size_t perturbations_per_view = 5;
  std::size_t generations = 10;
  int workers = 1;
  // Keep backend answers in memory instead of <out_dir>/cache.
  bool memory_cache = false;
  std::uint64_t seed = 0;
};

struct SimulatedBenchmark {
  std::shared_ptr<const synthworld::SynthWorld> world;
  RunConfig config;  // also written to <out_dir>/config.json
  std::filesystem::path manifest;
};

// Builds the world and writes a labeled benchmark from it: rendered member
// and non-member images under <out_dir>/images, manifest.jsonl and a run
// config whose generation, embedding and caption backends are the world
// itself (the rewriter is the stub editor).
SimulatedBenchmark PrepareSimulation(const SimulateOptions& options);

// AUC (in [0, 1]) of the image-side perturbation score on the world's
// members against `n_nonmembers` non-members.
double ImageSideAuc(const synthworld::SynthWorld& world, std::size_t n_nonmembers,
                    const synthworld::ImageSideOptions& options, std::uint64_t seed);

}  // namespace sdmia::pipeline
