#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sdmia/backends/backend.hpp"
#include "sdmia/backends/client.hpp"
#include "sdmia/dataset/sample.hpp"
#include "sdmia/scoring/score.hpp"
#include "sdmia/synthworld/world.hpp"

namespace sdmia::pipeline {

inline constexpr int kSchemaVersion = 1;

// Where a backend's answers come from.
enum class Provider { kStub, kHttp, kSynthWorld };

struct BackendConfig {
  Provider provider = Provider::kStub;
  backends::BackendId id;
  std::string auth_env;
  std::string model;
  double timeout_s = 60.0;
  std::size_t dim = 64;       // declared dimension of embedders
  std::string refuse_marker;  // stub generator only
  int max_in_flight = 4;
};

struct RobustnessSpec {
  std::vector<std::string> kinds;
  std::vector<double> intensities;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  std::filesystem::path manifest;
  dataset::ManifestMode mode = dataset::ManifestMode::kBenchmark;
  std::optional<synthworld::WorldSpec> world;

  BackendConfig generation, text_embed, image_embed, caption, rewrite;
  backends::GenerationParams generation_params;
  backends::RetryPolicy retry;

  std::size_t perturbations_per_view = 0;  // required: no default exists
  double tau_token = 0.9, tau_style = 0.8, tau_semantic = 0.6;
  std::size_t attempt_budget = 0;  // 0 means 5 x perturbations_per_view
  std::size_t generations = 10;
  double k_percent = 30.0;
  scoring::ViewWeights weights{1.0, 1.0, 1.0};
  bool paired_description = true;
  std::size_t baseline_repeats = 10;

  std::vector<std::string> ratios{"1:1", "1:10"};
  std::size_t n_seeds = 5;
  std::vector<std::size_t> set_sizes{1, 5, 10, 30};
  std::size_t set_trials = 1000;
  RobustnessSpec robustness;

  std::filesystem::path cache_dir = "cache";  // empty keeps the cache in memory
  std::filesystem::path output_root = "runs";
  int workers = 1;
  std::uint64_t seed = 0;

  // Throws Error(kValidation) describing the first problem found.
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  // Relative paths in the document are resolved against base_dir.
  static RunConfig FromJson(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig Load(const std::filesystem::path& path);

  // Hex digest naming the run directory. Settings that cannot change the
  // outputs (worker count, output and cache locations) are left out.
  std::string RunId() const;
};

const char* ProviderName(Provider p);

}  // namespace sdmia::pipeline
