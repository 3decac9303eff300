#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sdmia/eval/protocol.hpp"
#include "sdmia/eval/set_level.hpp"
#include "sdmia/pipeline/config.hpp"
#include "sdmia/pipeline/engine.hpp"

namespace sdmia::pipeline {

struct RunOptions {
  // Replay: every backend answer must already be in the cache.
  bool cache_only = false;
  std::shared_ptr<backends::Tracer> tracer;
  std::shared_ptr<const synthworld::SynthWorld> world;
  // Overrides output_root/<run id>.
  std::optional<std::filesystem::path> run_dir;
  std::function<void(double)> sleep;
  std::ostream* log = nullptr;  // progress lines, none when null
};

// Scores of one sample, or why it could not be scored.
struct ScoredSample {
  dataset::Sample sample;
  std::optional<scoring::MembershipReport> report;
  std::optional<SampleError> error;
};

struct BudgetReport {
  std::size_t samples_reaching_generation = 0;  // S
  std::size_t perturbations_per_view = 0;       // P
  std::size_t generations = 0;                  // G
  std::uint64_t expected_requests = 0;          // S * (3P + 1) * G
  std::uint64_t generation_requests = 0;
  std::uint64_t generation_calls = 0;
  std::uint64_t generation_cache_hits = 0;
  std::uint64_t generation_refusals = 0;
  std::uint64_t generation_failures = 0;
  // calls == expected - refusals - cache_hits, with no failures.
  bool identity_holds = false;
};

struct AuditResult {
  std::filesystem::path run_dir;
  std::string run_id;
  std::vector<ScoredSample> samples;
  std::size_t unscorable = 0;
  // Keyed by ratio string; empty when labels are unavailable.
  std::map<std::string, eval::EvalReport> eval;
  std::map<std::string, eval::EvalReport> baseline_eval;
  std::vector<eval::SetInferenceResult> set_level;
  std::map<std::string, backends::LedgerCounters> ledger;
  BudgetReport budget;
};

// Perturb, generate, embed, score and evaluate every manifest sample, and
// write the run directory:
//   config.json, manifest.jsonl, perturbations.jsonl, reports.jsonl,
//   scores.csv, errors.jsonl, eval.json, set_level.json, roc.csv,
//   ledger.json
// Throws Error(kUnscorable) when more than half of the samples could not be
// scored (outputs are still written), and Error(kBackend)/(kCacheMiss) when
// the backends fail before any sample succeeds.
AuditResult RunAudit(const RunConfig& config, const RunOptions& options = {});

// Scores gathered artifacts with the given pooling and view weights.
std::vector<ScoredSample> ScoreArtifacts(const RunConfig& config,
                                         const std::vector<SampleArtifacts>& artifacts,
                                         double k_percent, const scoring::ViewWeights& weights);

// Labeled s_final scores (or baseline scores) of the scored samples.
std::vector<eval::LabeledScore> LabeledFinalScores(const std::vector<ScoredSample>& scored);
std::vector<eval::LabeledScore> LabeledBaselineScores(const std::vector<ScoredSample>& scored);

enum class AblationMode { kPerView, kNoPairedDescription, kKSweep, kBaselineOnly };
const char* AblationModeName(AblationMode mode);
AblationMode ParseAblationMode(const std::string& name);

struct AblationSpec {
  std::vector<AblationMode> modes;
  std::vector<double> k_values{10.0, 30.0, 100.0};
};

struct AblationRow {
  std::string mode;
  std::string variant;
  eval::EvalReport report;
};

struct AblationResult {
  std::filesystem::path run_dir;
  std::vector<AblationRow> rows;
};

// Rows are evaluated at the first configured ratio. All variants except
// no_paired_description rescore the base run's generations; that one runs a
// second gather pass with captioner output as the prompt. Writes
// ablation.json and ablation.csv into <run dir>/ablation.
AblationResult RunAblation(const RunConfig& config, const AblationSpec& spec,
                           const RunOptions& options = {});

struct RobustnessCell {
  std::string kind;
  double intensity = 0.0;
  eval::EvalReport sdmia;
  eval::EvalReport baseline;
};

struct RobustnessResult {
  std::filesystem::path run_dir;
  std::vector<RobustnessCell> cells;
};

// Distorts each target image (PNM only), re-embeds the target and rescores
// against the unchanged generations. Kinds and intensities come from
// config.robustness. Writes robustness.json and robustness.csv into
// <run dir>/robustness.
RobustnessResult RunRobustness(const RunConfig& config, const RunOptions& options = {});

struct LedgerReport {
  std::map<std::string, backends::LedgerCounters> backends;
  BudgetReport budget;
  std::uint64_t total_calls = 0;
  std::uint64_t total_cache_hits = 0;
  double total_wall_ms = 0.0;
};
// Reads <run dir>/ledger.json. Throws Error(kIo) when it is missing.
LedgerReport QueryLedger(const std::filesystem::path& run_dir);
std::string FormatLedgerReport(const LedgerReport& report);

struct ReplayResult {
  std::filesystem::path replay_dir;
  bool scores_identical = false;
  std::uint64_t backend_calls = 0;  // remote calls made during the replay
  AuditResult audit;
};

// Re-runs a completed run from its config.json with the cache as the only
// source of backend answers, into <run dir>/replay, and compares scores.csv.
ReplayResult Replay(const std::filesystem::path& run_dir, const RunOptions& options = {});

nlohmann::ordered_json ToJson(const BudgetReport& b);
BudgetReport BudgetReportFromJson(const nlohmann::json& j);

}  // namespace sdmia::pipeline
