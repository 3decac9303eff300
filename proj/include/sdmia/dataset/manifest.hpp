#pragma once

#include <filesystem>
#include <string>

#include "sdmia/dataset/sample.hpp"

namespace sdmia::dataset {

struct LoadOptions {
  // Verify that local image paths exist. URLs are only checked for syntax.
  bool check_images = true;
};

// Reads a line-delimited manifest: one JSON object per line with fields
// id, image, caption?, label?, source?. Blank lines are skipped.
//
// In benchmark mode every record must carry a label. In audit mode labels
// are dropped (counted in SampleSet::stripped_labels).
SampleSet LoadManifest(const std::filesystem::path& path, ManifestMode mode,
                       const LoadOptions& options = {});

SampleSet ParseManifest(const std::string& text, ManifestMode mode,
                        const std::filesystem::path& base_dir,
                        const LoadOptions& options = {});

// Serializes with a fixed field order so that save(load(x)) == x for any
// manifest produced by this function.
std::string SerializeManifest(const SampleSet& set);
void SaveManifest(const SampleSet& set, const std::filesystem::path& path);

}  // namespace sdmia::dataset
