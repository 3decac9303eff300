#include "sdmia/pipeline/config.hpp"

#include <algorithm>
#include <set>

#include "sdmia/backends/http.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/text.hpp"
#include "sdmia/eval/distort.hpp"
#include "sdmia/eval/protocol.hpp"
#include "sdmia/perturb/perturb.hpp"

namespace sdmia::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void Invalid(const std::string& what) {
  throw Error(ErrorCode::kValidation, "config: " + what);
}

void RejectUnknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) Invalid(where + " must be an object");
  std::set<std::string> k(known.begin(), known.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!k.count(it.key())) Invalid("unknown field \"" + it.key() + "\" in " + where);
  }
}

Provider ParseProvider(const std::string& s) {
  if (s == "stub") return Provider::kStub;
  if (s == "http") return Provider::kHttp;
  if (s == "synthworld") return Provider::kSynthWorld;
  Invalid("unknown provider \"" + s + "\"");
}

BackendConfig ParseBackend(const json& j, backends::BackendKind kind, const std::string& slot) {
  RejectUnknown(j, {"provider", "name", "endpoint", "version_tag", "auth_env", "model",
                    "timeout_s", "dim", "refuse_marker", "max_in_flight"},
                "backends." + slot);
  BackendConfig b;
  b.provider = ParseProvider(j.value("provider", std::string("stub")));
  b.id.kind = kind;
  b.id.name = j.value("name", std::string(ProviderName(b.provider)) + "-" + slot);
  b.id.endpoint = j.value("endpoint", std::string());
  b.id.version_tag = j.value("version_tag", std::string("v1"));
  b.auth_env = j.value("auth_env", std::string());
  b.model = j.value("model", std::string());
  b.timeout_s = j.value("timeout_s", b.timeout_s);
  b.dim = j.value("dim", b.dim);
  b.refuse_marker = j.value("refuse_marker", std::string());
  b.max_in_flight = j.value("max_in_flight", b.max_in_flight);
  return b;
}

ordered_json BackendToJson(const BackendConfig& b) {
  ordered_json j;
  j["provider"] = ProviderName(b.provider);
  j["name"] = b.id.name;
  j["endpoint"] = b.id.endpoint;
  j["version_tag"] = b.id.version_tag;
  j["auth_env"] = b.auth_env;
  j["model"] = b.model;
  j["timeout_s"] = b.timeout_s;
  j["dim"] = b.dim;
  j["refuse_marker"] = b.refuse_marker;
  j["max_in_flight"] = b.max_in_flight;
  return j;
}

void ValidateBackend(const BackendConfig& b, const std::string& slot, bool has_world) {
  if (b.id.name.empty()) Invalid("backends." + slot + ".name is empty");
  if (b.id.version_tag.empty()) Invalid("backends." + slot + ".version_tag is empty");
  if (b.max_in_flight < 1) Invalid("backends." + slot + ".max_in_flight must be >= 1");
  if (b.provider == Provider::kHttp) {
    if (b.id.endpoint.empty()) Invalid("backends." + slot + " needs an endpoint");
    backends::ParseUrl(b.id.endpoint);
    if (!(b.timeout_s > 0.0)) Invalid("backends." + slot + ".timeout_s must be positive");
  }
  if (b.provider == Provider::kSynthWorld) {
    if (!has_world) Invalid("backends." + slot + " uses synthworld but no world is configured");
    if (b.id.kind == backends::BackendKind::kRewrite) {
      Invalid("synthworld has no rewriter; use the stub rewriter");
    }
  }
  const bool embedder = b.id.kind == backends::BackendKind::kTextEmbed ||
                        b.id.kind == backends::BackendKind::kImageEmbed;
  if (embedder && b.dim == 0) Invalid("backends." + slot + ".dim must be positive");
}

}  // namespace

const char* ProviderName(Provider p) {
  switch (p) {
    case Provider::kStub: return "stub";
    case Provider::kHttp: return "http";
    case Provider::kSynthWorld: return "synthworld";
  }
  return "?";
}

void RunConfig::Validate() const {
  if (schema_version != kSchemaVersion) {
    Invalid("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
            std::to_string(kSchemaVersion) + ")");
  }
  if (manifest.empty()) Invalid("manifest is required");
  ValidateBackend(generation, "generation", world.has_value());
  ValidateBackend(text_embed, "text_embed", world.has_value());
  ValidateBackend(image_embed, "image_embed", world.has_value());
  ValidateBackend(caption, "caption", world.has_value());
  ValidateBackend(rewrite, "rewrite", world.has_value());
  std::set<std::string> names;
  for (const auto* b : {&generation, &text_embed, &image_embed, &caption, &rewrite}) {
    if (!names.insert(b->id.name).second) Invalid("backend name \"" + b->id.name + "\" is reused");
  }
  if (perturbations_per_view == 0) Invalid("perturbations.per_view is required and must be >= 1");
  try {
    perturb::ValidateThresholds(tau_token, tau_style, tau_semantic);
  } catch (const Error& e) {
    Invalid(e.what());
  }
  if (attempt_budget != 0 && attempt_budget < perturbations_per_view) {
    Invalid("perturbations.attempt_budget is smaller than per_view");
  }
  if (generations == 0) Invalid("generations must be >= 1");
  if (!(k_percent > 0.0 && k_percent <= 100.0)) Invalid("k_percent must lie in (0, 100]");
  scoring::ValidateWeights(weights);
  if (baseline_repeats == 0) Invalid("baseline_repeats must be >= 1");
  for (const auto& r : ratios) eval::Ratio::Parse(r);
  if (n_seeds == 0) Invalid("evaluation.n_seeds must be >= 1");
  for (std::size_t L : set_sizes) {
    if (L == 0) Invalid("evaluation.set_sizes entries must be >= 1");
  }
  if (set_trials < 100) Invalid("evaluation.set_trials must be >= 100");
  for (const auto& k : robustness.kinds) eval::ParseDistortion(k);
  for (double i : robustness.intensities) {
    if (!(i >= 0.0 && i <= 1.0)) Invalid("robustness intensities must lie in [0, 1]");
  }
  if (workers < 1) Invalid("workers must be >= 1");
  if (retry.max_attempts < 1) Invalid("retry.max_attempts must be >= 1");
  if (world) world->Validate();
}

ordered_json RunConfig::ToJson() const {
  ordered_json j;
  j["schema_version"] = schema_version;
  j["manifest"] = manifest.string();
  j["mode"] = mode == dataset::ManifestMode::kAudit ? "audit" : "benchmark";
  if (world) j["world"] = world->ToJson();
  ordered_json b;
  b["generation"] = BackendToJson(generation);
  b["text_embed"] = BackendToJson(text_embed);
  b["image_embed"] = BackendToJson(image_embed);
  b["caption"] = BackendToJson(caption);
  b["rewrite"] = BackendToJson(rewrite);
  j["backends"] = b;
  j["generation_params"] = generation_params.ToJson();
  j["retry"] = {{"max_attempts", retry.max_attempts},
                {"base_delay_ms", retry.base_delay_ms},
                {"max_delay_ms", retry.max_delay_ms}};
  ordered_json p;
  p["per_view"] = perturbations_per_view;
  p["thresholds"] = {{"token", tau_token}, {"style", tau_style}, {"semantic", tau_semantic}};
  p["attempt_budget"] = attempt_budget;
  j["perturbations"] = p;
  j["generations"] = generations;
  j["k_percent"] = k_percent;
  j["view_weights"] = {{"token", weights[0]}, {"style", weights[1]}, {"semantic", weights[2]}};
  j["paired_description"] = paired_description;
  j["baseline_repeats"] = baseline_repeats;
  j["evaluation"] = {{"ratios", ratios},
                     {"n_seeds", n_seeds},
                     {"set_sizes", set_sizes},
                     {"set_trials", set_trials}};
  j["robustness"] = {{"kinds", robustness.kinds}, {"intensities", robustness.intensities}};
  j["cache_dir"] = cache_dir.string();
  j["output_root"] = output_root.string();
  j["workers"] = workers;
  j["seed"] = seed;
  return j;
}

RunConfig RunConfig::FromJson(const json& j, const fs::path& base_dir) {
  RejectUnknown(j, {"schema_version", "manifest", "mode", "world", "backends",
                    "generation_params", "retry", "perturbations", "generations", "k_percent",
                    "view_weights", "paired_description", "baseline_repeats", "evaluation",
                    "robustness", "cache_dir", "output_root", "workers", "seed"},
                "config");
  RunConfig c;
  try {
    if (!j.contains("schema_version")) Invalid("schema_version is required");
    c.schema_version = j.at("schema_version").get<int>();
    if (c.schema_version != kSchemaVersion) c.Validate();
    auto resolve = [&](const std::string& p) {
      fs::path path(p);
      return (path.is_relative() && !base_dir.empty()) ? base_dir / path : path;
    };
    if (j.contains("manifest")) c.manifest = resolve(j.at("manifest").get<std::string>());
    const std::string mode = j.value("mode", std::string("benchmark"));
    if (mode == "audit") {
      c.mode = dataset::ManifestMode::kAudit;
    } else if (mode == "benchmark") {
      c.mode = dataset::ManifestMode::kBenchmark;
    } else {
      Invalid("mode must be \"audit\" or \"benchmark\"");
    }
    if (j.contains("world")) c.world = synthworld::WorldSpec::FromJson(j.at("world"));

    const json backends_block = j.value("backends", json::object());
    RejectUnknown(backends_block, {"generation", "text_embed", "image_embed", "caption", "rewrite"},
                  "backends");
    auto slot = [&](const char* name) { return backends_block.value(name, json::object()); };
    c.generation = ParseBackend(slot("generation"), backends::BackendKind::kGeneration, "generation");
    c.text_embed = ParseBackend(slot("text_embed"), backends::BackendKind::kTextEmbed, "text_embed");
    c.image_embed =
        ParseBackend(slot("image_embed"), backends::BackendKind::kImageEmbed, "image_embed");
    c.caption = ParseBackend(slot("caption"), backends::BackendKind::kCaption, "caption");
    c.rewrite = ParseBackend(slot("rewrite"), backends::BackendKind::kRewrite, "rewrite");

    if (j.contains("generation_params")) {
      RejectUnknown(j["generation_params"], {"width", "height", "guidance", "steps"},
                    "generation_params");
      c.generation_params = backends::GenerationParams::FromJson(j["generation_params"]);
    }
    if (j.contains("retry")) {
      const json& r = j["retry"];
      RejectUnknown(r, {"max_attempts", "base_delay_ms", "max_delay_ms"}, "retry");
      c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
      c.retry.base_delay_ms = r.value("base_delay_ms", c.retry.base_delay_ms);
      c.retry.max_delay_ms = r.value("max_delay_ms", c.retry.max_delay_ms);
    }
    if (!j.contains("perturbations") || !j["perturbations"].contains("per_view")) {
      Invalid("perturbations.per_view is required");
    }
    const json& p = j["perturbations"];
    RejectUnknown(p, {"per_view", "thresholds", "attempt_budget"}, "perturbations");
    c.perturbations_per_view = p.at("per_view").get<std::size_t>();
    c.attempt_budget = p.value("attempt_budget", c.attempt_budget);
    if (p.contains("thresholds")) {
      const json& t = p["thresholds"];
      RejectUnknown(t, {"token", "style", "semantic"}, "perturbations.thresholds");
      c.tau_token = t.value("token", c.tau_token);
      c.tau_style = t.value("style", c.tau_style);
      c.tau_semantic = t.value("semantic", c.tau_semantic);
    }
    c.generations = j.value("generations", c.generations);
    c.k_percent = j.value("k_percent", c.k_percent);
    if (j.contains("view_weights")) {
      const json& w = j["view_weights"];
      RejectUnknown(w, {"token", "style", "semantic"}, "view_weights");
      c.weights = {w.value("token", 1.0), w.value("style", 1.0), w.value("semantic", 1.0)};
    }
    c.paired_description = j.value("paired_description", c.paired_description);
    c.baseline_repeats = j.value("baseline_repeats", c.baseline_repeats);
    if (j.contains("evaluation")) {
      const json& e = j["evaluation"];
      RejectUnknown(e, {"ratios", "n_seeds", "set_sizes", "set_trials"}, "evaluation");
      c.ratios = e.value("ratios", c.ratios);
      c.n_seeds = e.value("n_seeds", c.n_seeds);
      c.set_sizes = e.value("set_sizes", c.set_sizes);
      c.set_trials = e.value("set_trials", c.set_trials);
    }
    if (j.contains("robustness")) {
      const json& r = j["robustness"];
      RejectUnknown(r, {"kinds", "intensities"}, "robustness");
      c.robustness.kinds = r.value("kinds", std::vector<std::string>{});
      c.robustness.intensities = r.value("intensities", std::vector<double>{});
    }
    if (j.contains("cache_dir")) {
      const std::string cd = j["cache_dir"].get<std::string>();
      c.cache_dir = cd.empty() ? fs::path() : resolve(cd);
    } else {
      c.cache_dir = resolve("cache");
    }
    c.output_root = resolve(j.value("output_root", std::string("runs")));
    c.workers = j.value("workers", c.workers);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    Invalid(e.what());
  }
  c.Validate();
  return c;
}

RunConfig RunConfig::Load(const fs::path& path) {
  json j;
  try {
    j = json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    Invalid(path.string() + ": " + e.what());
  }
  return FromJson(j, path.parent_path());
}

std::string RunConfig::RunId() const {
  ordered_json j = ToJson();
  j.erase("workers");
  j.erase("output_root");
  j.erase("cache_dir");
  // The manifest is identified by content rather than location.
  j["manifest"] = Sha256Hex(ReadFile(manifest));
  return Sha256Hex(j.dump()).substr(0, 16);
}

}  // namespace sdmia::pipeline
