#include "sdmia/perturb/perturb.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "sdmia/common/error.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/text.hpp"

namespace sdmia::perturb {

namespace {

constexpr std::string_view kTokenTemplate =
    R"(Rewrite the given image caption by rephrasing the text while preserving both the original content/subject and the artistic style exactly.
Do not change the main subject or any style modifiers (e.g., 'photorealistic', 'oil painting', 'cartoon style'). Only modify wording, word order, or small descriptive phrasing.
Examples:
- 'photorealistic, a cat on a chair' → 'photorealistic, a cat sitting on a chair'
- 'oil painting of mountains at sunset' → 'oil painting of mountain peaks at sunset'
- 'cartoon style, child playing' → 'cartoon style, a child at play'
- 'digital art, futuristic cityscape' → 'digital art, a futuristic city skyline'
Rules: 1) Preserve the exact subject/content and any style modifiers. Do not introduce new subjects or styles. 2) Only rephrase or slightly rearrange words; avoid adding new objects or changing factual content. 3) Output only the new caption, no quotes or extra text. 4) Ensure the output remains truthful and consistent with the original caption.)";

constexpr std::string_view kStyleTemplate =
    R"(Rewrite the given image caption so that the content/subject remains exactly the same, but change the artistic style of the image.
Add only 1-2 style modifiers like 'photorealistic', 'cinematic', 'oil painting', 'cartoon style', etc. before, after, or within the caption.
Examples:
- 'a cat on a chair' → 'photorealistic, a cat on a chair'
- 'UK Active logo' → 'UK Active logo, in the style of oil painting'
- 'person smiling' → 'a watercolor painting of person smiling'
- 'sunset over mountains' → 'cinematic, sunset over mountains'
- 'Salad with chestnuts' → 'Salad with chestnuts, digital art'
Common style modifiers (choose 1-2 only):
- photorealistic, cinematic, highly detailed, 4k
- oil painting, watercolor painting, acrylic painting
- pencil sketch, ink drawing, charcoal drawing
- cartoon style, anime style, manga
- digital art, 3D render, vector art
- in the style of [artist/movement]
Rules: 1) Keep the exact same content/subject. 2) Add only 1-2 style modifiers (not more). 3) Output only the new caption, no quotes or extra text. 4) Ensure that the output caption conforms to objective facts.)";

constexpr std::string_view kSemanticTemplate =
    R"(Rewrite the given image caption so that the content/subject is changed, but keep the same artistic STYLE.
Keep the same style modifiers (if any) but change the main subject/content.
Examples:
- 'photorealistic, a cat on a chair' → 'photorealistic, a dog on a sofa'
- 'UK Active logo' → 'Nike logo' (both simple descriptions without style modifiers)
- 'oil painting of mountains' → 'oil painting of an ocean'
- 'sunset over mountains, digital art' → 'sunrise over cityscape, digital art'
- 'person smiling' → 'person running' (both simple, no style modifiers)
Rules: 1) Change the subject/content to something different. 2) Keep the same style modifiers if present in the original. 3) If no style modifiers in original, keep the same simple format. 4) Output only the new caption, no quotes or extra text. 5) Ensure that the output caption conforms to objective facts.)";

}  // namespace

const char* ViewName(ViewKind kind) {
  switch (kind) {
    case ViewKind::kToken: return "token";
    case ViewKind::kStyle: return "style";
    case ViewKind::kSemantic: return "semantic";
  }
  return "?";
}

ViewKind ParseView(std::string_view name) {
  for (ViewKind k : kAllViews) {
    if (name == ViewName(k)) return k;
  }
  throw Error(ErrorCode::kValidation, "unknown perturbation view \"" + std::string(name) + "\"");
}

PerturbationView PerturbationView::Default(ViewKind kind) {
  switch (kind) {
    case ViewKind::kToken: return {kind, 0.9};
    case ViewKind::kStyle: return {kind, 0.8};
    case ViewKind::kSemantic: return {kind, 0.6};
  }
  return {kind, 0.9};
}

void ValidateThresholds(double token, double style, double semantic) {
  for (double t : {token, style, semantic}) {
    if (!(t > 0.0 && t <= 1.0)) {
      throw Error(ErrorCode::kValidation, "view thresholds must lie in (0, 1]");
    }
  }
  if (!(token >= style && style >= semantic)) {
    throw Error(ErrorCode::kValidation,
                "view thresholds must be non-increasing token >= style >= semantic");
  }
}

std::string_view RewriteTemplate(ViewKind view) {
  switch (view) {
    case ViewKind::kToken: return kTokenTemplate;
    case ViewKind::kStyle: return kStyleTemplate;
    case ViewKind::kSemantic: return kSemanticTemplate;
  }
  return kTokenTemplate;
}

std::string RenderRewriteInstruction(ViewKind view, std::string_view caption) {
  if (Trim(caption).empty()) throw Error(ErrorCode::kValidation, "caption is empty");
  std::string out(RewriteTemplate(view));
  out += "\n\n";
  out += kCaptionMarker;
  out += caption;
  return out;
}

std::optional<ParsedInstruction> ParseRewriteInstruction(std::string_view instruction) {
  for (ViewKind k : kAllViews) {
    const std::string_view tpl = RewriteTemplate(k);
    if (instruction.substr(0, tpl.size()) != tpl) continue;
    std::string_view rest = instruction.substr(tpl.size());
    const std::string marker = "\n\n" + std::string(kCaptionMarker);
    if (rest.substr(0, marker.size()) != marker) return std::nullopt;
    return ParsedInstruction{k, std::string(rest.substr(marker.size()))};
  }
  return std::nullopt;
}

GateDecision Gate(const std::string& original, const std::string& rewrite,
                  const PerturbationView& view, const TextEmbedFn& embed_text) {
  if (Trim(original).empty() || Trim(rewrite).empty()) {
    throw Error(ErrorCode::kValidation, "gate inputs must be non-empty");
  }
  const double sim = Cosine(embed_text(original), embed_text(rewrite));
  const bool differs = NormalizeForCompare(original) != NormalizeForCompare(rewrite);
  return {differs && sim >= view.threshold, sim};
}

PerturbationBatch GeneratePerturbations(const std::string& parent_id, const std::string& caption,
                                        const PerturbationView& view, std::size_t n_target,
                                        const RewriteFn& rewrite, const TextEmbedFn& embed_text,
                                        std::size_t attempt_budget, std::uint64_t seed) {
  if (n_target == 0) throw Error(ErrorCode::kValidation, "n_target must be >= 1");
  if (attempt_budget == 0) attempt_budget = 5 * n_target;
  if (attempt_budget < n_target) {
    throw Error(ErrorCode::kValidation, "attempt budget smaller than n_target");
  }
  const std::string instruction = RenderRewriteInstruction(view.kind, caption);
  PerturbationBatch batch;
  std::unordered_set<std::string> seen;
  for (std::size_t attempt = 0; attempt < attempt_budget; ++attempt) {
    const std::uint64_t s = DeriveSeed(seed, {static_cast<std::uint64_t>(view.kind), attempt});
    std::string text = Trim(rewrite(instruction, s));
    ++batch.rewriter_calls;
    if (text.empty()) continue;
    const std::string key = NormalizeForCompare(text);
    if (seen.count(key)) continue;
    const GateDecision d = Gate(caption, text, view, embed_text);
    if (!d.accepted) continue;
    seen.insert(key);
    batch.accepted.push_back({parent_id, view.kind, std::move(text), d.similarity, attempt});
    if (batch.accepted.size() == n_target) return batch;
  }
  throw BudgetExhaustedError(batch.accepted.size(), attempt_budget);
}

nlohmann::ordered_json ToJson(const PerturbedCaption& p) {
  nlohmann::ordered_json j;
  j["parent_id"] = p.parent_id;
  j["view"] = ViewName(p.view);
  j["attempt_index"] = p.attempt_index;
  j["text"] = p.text;
  j["gate_similarity"] = p.gate_similarity;
  return j;
}

PerturbedCaption PerturbedCaptionFromJson(const nlohmann::json& j) {
  PerturbedCaption p;
  p.parent_id = j.at("parent_id").get<std::string>();
  p.view = ParseView(j.at("view").get<std::string>());
  p.attempt_index = j.at("attempt_index").get<std::size_t>();
  p.text = j.at("text").get<std::string>();
  p.gate_similarity = j.at("gate_similarity").get<double>();
  return p;
}

void SavePerturbations(const std::filesystem::path& path, std::vector<PerturbedCaption> records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.parent_id, a.view, a.attempt_index) <
           std::tie(b.parent_id, b.view, b.attempt_index);
  });
  std::string out;
  for (const auto& r : records) {
    out += ToJson(r).dump();
    out += '\n';
  }
  WriteFileAtomic(path, out);
}

std::vector<PerturbedCaption> LoadPerturbations(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  std::vector<PerturbedCaption> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    try {
      out.push_back(PerturbedCaptionFromJson(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecordError(line_no, e.what());
    } catch (const Error& e) {
      throw MalformedRecordError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace sdmia::perturb
