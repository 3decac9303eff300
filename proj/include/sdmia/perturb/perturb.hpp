#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sdmia/common/vec.hpp"

namespace sdmia::perturb {

enum class ViewKind { kToken, kStyle, kSemantic };

inline constexpr ViewKind kAllViews[] = {ViewKind::kToken, ViewKind::kStyle,
                                         ViewKind::kSemantic};

const char* ViewName(ViewKind kind);  // "token", "style", "semantic"
ViewKind ParseView(std::string_view name);

struct PerturbationView {
  ViewKind kind = ViewKind::kToken;
  double threshold = 0.9;

  static PerturbationView Default(ViewKind kind);
};

// Throws kValidation unless every threshold lies in (0, 1] and they are
// non-increasing token >= style >= semantic.
void ValidateThresholds(double token, double style, double semantic);

struct PerturbedCaption {
  std::string parent_id;
  ViewKind view = ViewKind::kToken;
  std::string text;
  double gate_similarity = 0.0;
  std::size_t attempt_index = 0;
};

// The rewrite instruction for a view: the fixed template followed by the
// caption on its own line, introduced by kCaptionMarker.
std::string RenderRewriteInstruction(ViewKind view, std::string_view caption);
std::string_view RewriteTemplate(ViewKind view);
inline constexpr std::string_view kCaptionMarker = "Caption: ";

// Recovers the view and caption from a rendered instruction, if it is one.
struct ParsedInstruction {
  ViewKind view;
  std::string caption;
};
std::optional<ParsedInstruction> ParseRewriteInstruction(std::string_view instruction);

using TextEmbedFn = std::function<Vec(const std::string&)>;
using RewriteFn = std::function<std::string(const std::string& instruction, std::uint64_t seed)>;

struct GateDecision {
  bool accepted = false;
  double similarity = 0.0;
};

GateDecision Gate(const std::string& original, const std::string& rewrite,
                  const PerturbationView& view, const TextEmbedFn& embed_text);

struct PerturbationBatch {
  std::vector<PerturbedCaption> accepted;
  std::size_t rewriter_calls = 0;
};

// Calls the rewriter sequentially until n_target distinct gated rewrites are
// collected. attempt_budget 0 means 5 * n_target. The seed of attempt i is
// DeriveSeed(seed, {view, i}). Throws BudgetExhaustedError.
PerturbationBatch GeneratePerturbations(const std::string& parent_id, const std::string& caption,
                                        const PerturbationView& view, std::size_t n_target,
                                        const RewriteFn& rewrite, const TextEmbedFn& embed_text,
                                        std::size_t attempt_budget, std::uint64_t seed);

nlohmann::ordered_json ToJson(const PerturbedCaption& p);
PerturbedCaption PerturbedCaptionFromJson(const nlohmann::json& j);

// One record per line, ordered by (parent_id, view, attempt_index).
void SavePerturbations(const std::filesystem::path& path, std::vector<PerturbedCaption> records);
std::vector<PerturbedCaption> LoadPerturbations(const std::filesystem::path& path);

}  // namespace sdmia::perturb
