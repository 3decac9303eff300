#include "sdmia/pipeline/run.hpp"

#include <bit>
#include <sstream>

#include "sdmia/common/hash.hpp"
#include "sdmia/common/image.hpp"
#include "sdmia/common/text.hpp"
#include "sdmia/dataset/manifest.hpp"
#include "sdmia/eval/distort.hpp"
#include "sdmia/eval/metrics.hpp"

namespace sdmia::pipeline {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void Log(const RunOptions& o, const std::string& line) {
  if (o.log) *o.log << line << '\n' << std::flush;
}

std::string JsonLines(const std::vector<ordered_json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

// Everything a run needs after the gather phase.
struct Prepared {
  RunConfig config;
  fs::path run_dir;
  std::string run_id;
  dataset::SampleSet set;
  std::unique_ptr<Services> services;
  std::vector<SampleArtifacts> artifacts;
};

RunConfig Absolutized(RunConfig c) {
  if (!c.manifest.empty()) c.manifest = fs::absolute(c.manifest).lexically_normal();
  if (!c.cache_dir.empty()) c.cache_dir = fs::absolute(c.cache_dir).lexically_normal();
  c.output_root = fs::absolute(c.output_root).lexically_normal();
  return c;
}

Prepared Prepare(const RunConfig& raw, const RunOptions& o) {
  Prepared p;
  p.config = Absolutized(raw);
  p.config.Validate();
  for (const auto& kind : p.config.robustness.kinds) eval::ParseDistortion(kind);
  for (const auto& r : p.config.ratios) eval::Ratio::Parse(r);

  p.set = dataset::LoadManifest(p.config.manifest, p.config.mode);
  if (p.set.size() == 0) throw Error(ErrorCode::kEmptyInput, "manifest has no samples");
  p.run_id = p.config.RunId();
  p.run_dir = o.run_dir ? *o.run_dir : p.config.output_root / p.run_id;
  fs::create_directories(p.run_dir);

  ServiceOptions so;
  so.cache_only = o.cache_only;
  so.tracer = o.tracer;
  so.world = o.world;
  so.sleep = o.sleep;
  p.services = BuildServices(p.config, so);

  Log(o, "run " + p.run_id + ": " + std::to_string(p.set.size()) + " samples -> " +
             p.run_dir.string());
  p.artifacts = GatherAll(p.config, *p.services, p.set);
  return p;
}

std::optional<eval::EvalReport> TryEvaluate(const std::vector<eval::LabeledScore>& scores,
                                            const std::string& ratio, const RunConfig& c,
                                            const RunOptions& o) {
  try {
    return eval::Evaluate(scores, eval::Ratio::Parse(ratio), c.n_seeds, c.seed);
  } catch (const Error& e) {
    Log(o, "evaluation at " + ratio + " skipped: " + e.what());
    return std::nullopt;
  }
}

bool HasBothLabels(const std::vector<eval::LabeledScore>& s) {
  bool m = false, n = false;
  for (const auto& x : s) (x.label == dataset::Label::kMember ? m : n) = true;
  return m && n;
}

void SplitByLabel(const std::vector<eval::LabeledScore>& s, std::vector<double>& pos,
                  std::vector<double>& neg) {
  for (const auto& x : s) (x.label == dataset::Label::kMember ? pos : neg).push_back(x.score);
}

std::string ScoresCsv(const std::vector<ScoredSample>& scored) {
  std::ostringstream out;
  out << "sample_id,label,s_final,s_perturbed,s_unperturbed,s_token,s_style,s_semantic,"
         "baseline,query_count\n";
  for (const auto& s : scored) {
    if (!s.report) continue;
    const auto& r = *s.report;
    out << s.sample.id << ',' << (s.sample.label ? dataset::LabelName(*s.sample.label) : "")
        << ',' << FormatDouble(r.s_final) << ',' << FormatDouble(r.s_perturbed) << ','
        << FormatDouble(r.s_unperturbed);
    for (const auto& v : r.per_view) out << ',' << (v.dropped ? "" : FormatDouble(v.pooled));
    out << ',' << (r.baseline_reconstruction ? FormatDouble(*r.baseline_reconstruction) : "")
        << ',' << r.query_count << '\n';
  }
  return out.str();
}

BudgetReport ComputeBudget(const RunConfig& c, const std::vector<SampleArtifacts>& artifacts,
                           const backends::Ledger& ledger) {
  BudgetReport b;
  for (const auto& a : artifacts) b.samples_reaching_generation += a.reached_generation ? 1 : 0;
  b.perturbations_per_view = c.perturbations_per_view;
  b.generations = c.generations;
  b.expected_requests = static_cast<std::uint64_t>(b.samples_reaching_generation) *
                        (3 * b.perturbations_per_view + 1) * b.generations;
  const auto g = ledger.Get(c.generation.id.name);
  b.generation_requests = g.requests;
  b.generation_calls = g.calls;
  b.generation_cache_hits = g.cache_hits;
  b.generation_refusals = g.refusals;
  b.generation_failures = g.failures;
  b.identity_holds = g.failures == 0 && g.calls + g.refusals + g.cache_hits == b.expected_requests;
  return b;
}

ordered_json EvalMapJson(const std::map<std::string, eval::EvalReport>& m) {
  ordered_json j = ordered_json::object();
  for (const auto& [ratio, report] : m) j[ratio] = ordered_json::parse(eval::EvalReportJson(report));
  return j;
}

AuditResult Finish(Prepared& p, const RunOptions& o) {
  const RunConfig& c = p.config;
  AuditResult res;
  res.run_dir = p.run_dir;
  res.run_id = p.run_id;
  res.samples = ScoreArtifacts(c, p.artifacts, c.k_percent, c.weights);

  std::vector<ordered_json> reports, errors;
  std::vector<perturb::PerturbedCaption> perturbations;
  for (std::size_t i = 0; i < res.samples.size(); ++i) {
    const auto& s = res.samples[i];
    if (s.report) {
      reports.push_back(scoring::ToJson(*s.report));
    } else {
      ++res.unscorable;
      ordered_json e;
      e["id"] = s.sample.id;
      e["stage"] = s.error->stage;
      e["code"] = ErrorCodeName(s.error->code);
      e["message"] = s.error->message;
      errors.push_back(std::move(e));
    }
    for (const auto& view : p.artifacts[i].perturbations) {
      perturbations.insert(perturbations.end(), view.begin(), view.end());
    }
  }

  dataset::SampleSet snapshot = p.set;
  for (auto& s : snapshot.samples) {
    if (!dataset::IsUrl(s.image)) s.image = fs::absolute(p.set.ResolveImage(s)).string();
  }
  WriteFileAtomic(p.run_dir / "config.json", c.ToJson().dump(2) + "\n");
  WriteFileAtomic(p.run_dir / "manifest.jsonl", dataset::SerializeManifest(snapshot));
  SavePerturbations(p.run_dir / "perturbations.jsonl", std::move(perturbations));
  WriteFileAtomic(p.run_dir / "reports.jsonl", JsonLines(reports));
  WriteFileAtomic(p.run_dir / "errors.jsonl", JsonLines(errors));
  WriteFileAtomic(p.run_dir / "scores.csv", ScoresCsv(res.samples));

  const auto finals = LabeledFinalScores(res.samples);
  if (HasBothLabels(finals)) {
    for (const auto& ratio : c.ratios) {
      if (auto r = TryEvaluate(finals, ratio, c, o)) res.eval[ratio] = *r;
    }
    const auto base = LabeledBaselineScores(res.samples);
    if (HasBothLabels(base)) {
      for (const auto& ratio : c.ratios) {
        if (auto r = TryEvaluate(base, ratio, c, o)) res.baseline_eval[ratio] = *r;
      }
    }
    std::vector<double> pos, neg;
    SplitByLabel(finals, pos, neg);
    for (std::size_t l : c.set_sizes) {
      if (l > pos.size() || l > neg.size()) {
        Log(o, "set size " + std::to_string(l) + " skipped: pools too small");
        continue;
      }
      res.set_level.push_back(eval::SetLevel(pos, neg, l, c.set_trials, c.seed));
    }
    std::ostringstream roc;
    roc << "fpr,tpr\n";
    for (const auto& pt : eval::RocCurve(pos, neg)) {
      roc << FormatDouble(pt.fpr) << ',' << FormatDouble(pt.tpr) << '\n';
    }
    WriteFileAtomic(p.run_dir / "roc.csv", roc.str());
  } else {
    Log(o, "labels unavailable for both classes: evaluation skipped");
  }
  ordered_json ej;
  ej["sdmia"] = EvalMapJson(res.eval);
  ej["reconstruction_baseline"] = EvalMapJson(res.baseline_eval);
  ej["scored"] = res.samples.size() - res.unscorable;
  ej["unscorable"] = res.unscorable;
  WriteFileAtomic(p.run_dir / "eval.json", ej.dump(2) + "\n");
  WriteFileAtomic(p.run_dir / "set_level.json", eval::SetInferenceJson(res.set_level) + "\n");

  res.ledger = p.services->ledger->Snapshot();
  res.budget = ComputeBudget(c, p.artifacts, *p.services->ledger);
  ordered_json lj;
  lj["backends"] = p.services->ledger->ToJson();
  lj["budget"] = ToJson(res.budget);
  WriteFileAtomic(p.run_dir / "ledger.json", lj.dump(2) + "\n");

  Log(o, "scored " + std::to_string(res.samples.size() - res.unscorable) + "/" +
             std::to_string(res.samples.size()) + " samples");
  if (2 * res.unscorable > res.samples.size()) {
    throw Error(ErrorCode::kUnscorable, std::to_string(res.unscorable) + " of " +
                                            std::to_string(res.samples.size()) +
                                            " samples are unscorable, see errors.jsonl");
  }
  return res;
}

std::optional<ScoredSample> Rescore(const RunConfig& c, const SampleArtifacts& a,
                                    const scoring::JointEmbedding& target, double k,
                                    const scoring::ViewWeights& w) {
  ScoredSample s;
  s.sample = a.sample;
  try {
    s.report = scoring::ScoreSample(a.sample.id, target, a.generations, k, w);
    scoring::GenerationSlots repeats(
        a.generations.unperturbed.begin(),
        a.generations.unperturbed.begin() +
            static_cast<std::ptrdiff_t>(std::min(c.baseline_repeats, a.generations.unperturbed.size())));
    bool any = false;
    for (const auto& r : repeats) any = any || r.has_value();
    if (any) s.report->baseline_reconstruction = scoring::ReconstructionBaseline(target, repeats);
  } catch (const Error& e) {
    s.report.reset();
    s.error = SampleError{e.code(), e.what(), "score"};
  }
  return s;
}

std::string FirstRatio(const RunConfig& c) { return c.ratios.empty() ? "1:1" : c.ratios.front(); }

eval::EvalReport EvaluateOrThrow(const std::vector<eval::LabeledScore>& s, const RunConfig& c) {
  if (!HasBothLabels(s)) {
    throw Error(ErrorCode::kValidation, "this command needs a labeled (benchmark) manifest");
  }
  return eval::Evaluate(s, eval::Ratio::Parse(FirstRatio(c)), c.n_seeds, c.seed);
}

std::string Percent(const eval::MeanStd& m) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << m.mean << ',' << m.std;
  return o.str();
}

ordered_json EvalJson(const eval::EvalReport& r) { return ordered_json::parse(eval::EvalReportJson(r)); }

}  // namespace

std::vector<ScoredSample> ScoreArtifacts(const RunConfig& c,
                                         const std::vector<SampleArtifacts>& artifacts,
                                         double k_percent, const scoring::ViewWeights& weights) {
  std::vector<ScoredSample> out;
  out.reserve(artifacts.size());
  for (const auto& a : artifacts) {
    if (a.error || !a.target) {
      ScoredSample s;
      s.sample = a.sample;
      s.error = a.error ? *a.error : SampleError{ErrorCode::kUnscorable, "no target", "score"};
      out.push_back(std::move(s));
      continue;
    }
    out.push_back(*Rescore(c, a, *a.target, k_percent, weights));
  }
  return out;
}

std::vector<eval::LabeledScore> LabeledFinalScores(const std::vector<ScoredSample>& scored) {
  std::vector<eval::LabeledScore> out;
  for (const auto& s : scored) {
    if (s.report && s.sample.label) out.push_back({s.report->s_final, *s.sample.label});
  }
  return out;
}

std::vector<eval::LabeledScore> LabeledBaselineScores(const std::vector<ScoredSample>& scored) {
  std::vector<eval::LabeledScore> out;
  for (const auto& s : scored) {
    if (s.report && s.report->baseline_reconstruction && s.sample.label) {
      out.push_back({*s.report->baseline_reconstruction, *s.sample.label});
    }
  }
  return out;
}

AuditResult RunAudit(const RunConfig& config, const RunOptions& options) {
  Prepared p = Prepare(config, options);
  return Finish(p, options);
}

const char* AblationModeName(AblationMode m) {
  switch (m) {
    case AblationMode::kPerView: return "per_view";
    case AblationMode::kNoPairedDescription: return "no_paired_description";
    case AblationMode::kKSweep: return "k_sweep";
    case AblationMode::kBaselineOnly: return "baseline_only";
  }
  return "?";
}

AblationMode ParseAblationMode(const std::string& name) {
  for (auto m : {AblationMode::kPerView, AblationMode::kNoPairedDescription, AblationMode::kKSweep,
                 AblationMode::kBaselineOnly}) {
    if (name == AblationModeName(m)) return m;
  }
  throw Error(ErrorCode::kValidation, "unknown ablation mode \"" + name +
                                          "\" (per_view, no_paired_description, k_sweep, baseline_only)");
}

AblationResult RunAblation(const RunConfig& config, const AblationSpec& spec,
                           const RunOptions& options) {
  if (spec.modes.empty()) throw Error(ErrorCode::kValidation, "no ablation mode selected");
  for (double k : spec.k_values) {
    if (!(k > 0.0 && k <= 100.0)) throw Error(ErrorCode::kValidation, "K must lie in (0, 100]");
  }
  Prepared p = Prepare(config, options);
  Finish(p, options);
  const RunConfig& c = p.config;

  AblationResult res;
  res.run_dir = p.run_dir;
  auto add = [&](AblationMode m, const std::string& variant,
                 const std::vector<eval::LabeledScore>& scores) {
    res.rows.push_back({AblationModeName(m), variant, EvaluateOrThrow(scores, c)});
  };
  auto rescored = [&](double k, const scoring::ViewWeights& w) {
    return LabeledFinalScores(ScoreArtifacts(c, p.artifacts, k, w));
  };

  for (AblationMode m : spec.modes) {
    switch (m) {
      case AblationMode::kPerView:
        add(m, "combined", rescored(c.k_percent, c.weights));
        for (std::size_t v = 0; v < 3; ++v) {
          scoring::ViewWeights w{0.0, 0.0, 0.0};
          w[v] = 1.0;
          add(m, perturb::ViewName(perturb::kAllViews[v]), rescored(c.k_percent, w));
        }
        break;
      case AblationMode::kKSweep:
        for (double k : spec.k_values) add(m, "K=" + FormatDouble(k), rescored(k, c.weights));
        break;
      case AblationMode::kBaselineOnly: {
        const auto scored = ScoreArtifacts(c, p.artifacts, c.k_percent, c.weights);
        add(m, "sdmia", LabeledFinalScores(scored));
        add(m, "reconstruction", LabeledBaselineScores(scored));
        break;
      }
      case AblationMode::kNoPairedDescription: {
        add(m, "paired", rescored(c.k_percent, c.weights));
        RunConfig surrogate = c;
        surrogate.paired_description = false;
        Log(options, "gathering with captioner descriptions as prompts");
        const auto arts = GatherAll(surrogate, *p.services, p.set);
        add(m, "surrogate",
            LabeledFinalScores(ScoreArtifacts(surrogate, arts, c.k_percent, c.weights)));
        break;
      }
    }
  }

  const fs::path dir = p.run_dir / "ablation";
  fs::create_directories(dir);
  ordered_json rows = ordered_json::array();
  std::ostringstream csv;
  csv << "mode,variant,auc_mean,auc_std,tpr1_mean,tpr1_std\n";
  for (const auto& r : res.rows) {
    ordered_json j;
    j["mode"] = r.mode;
    j["variant"] = r.variant;
    j["report"] = EvalJson(r.report);
    rows.push_back(std::move(j));
    csv << r.mode << ',' << r.variant << ',' << Percent(r.report.auc) << ','
        << Percent(r.report.tpr_at_fpr.at(0.01)) << '\n';
  }
  ordered_json doc;
  doc["ratio"] = FirstRatio(c);
  doc["rows"] = std::move(rows);
  WriteFileAtomic(dir / "ablation.json", doc.dump(2) + "\n");
  WriteFileAtomic(dir / "ablation.csv", csv.str());
  return res;
}

RobustnessResult RunRobustness(const RunConfig& config, const RunOptions& options) {
  if (config.robustness.kinds.empty() || config.robustness.intensities.empty()) {
    throw Error(ErrorCode::kValidation, "robustness needs at least one kind and one intensity");
  }
  Prepared p = Prepare(config, options);
  Finish(p, options);
  const RunConfig& c = p.config;

  RobustnessResult res;
  res.run_dir = p.run_dir;
  for (const auto& kind_name : c.robustness.kinds) {
    const eval::DistortionKind kind = eval::ParseDistortion(kind_name);
    for (double intensity : c.robustness.intensities) {
      std::vector<ScoredSample> scored(p.artifacts.size());
      ParallelFor(p.artifacts.size(), c.workers, [&](std::size_t i) {
        const SampleArtifacts& a = p.artifacts[i];
        scored[i].sample = a.sample;
        if (a.error || !a.target) return;
        if (intensity == 0.0) {
          scored[i] = *Rescore(c, a, *a.target, c.k_percent, c.weights);
          return;
        }
        if (!LooksLikePnm(a.image_bytes)) {
          throw Error(ErrorCode::kValidation,
                      "robustness sweeps need PNM images; sample \"" + a.sample.id + "\" is not");
        }
        const std::uint64_t seed =
            DeriveSeed(DeriveSeed(c.seed, a.sample.id),
                       {static_cast<std::uint64_t>(kind), std::bit_cast<std::uint64_t>(intensity)});
        const std::string distorted =
            EncodePnm(eval::Distort(DecodePnm(a.image_bytes), kind, intensity, seed));
        try {
          const auto target = EmbedJoint(*p.services, distorted);
          scored[i] = *Rescore(c, a, target, c.k_percent, c.weights);
        } catch (const Error& e) {
          scored[i].error = SampleError{e.code(), e.what(), "embed_distorted"};
        }
      });
      RobustnessCell cell;
      cell.kind = kind_name;
      cell.intensity = intensity;
      cell.sdmia = EvaluateOrThrow(LabeledFinalScores(scored), c);
      cell.baseline = EvaluateOrThrow(LabeledBaselineScores(scored), c);
      Log(options, kind_name + " " + FormatDouble(intensity) + ": AUC " + Percent(cell.sdmia.auc) +
                       " baseline " + Percent(cell.baseline.auc));
      res.cells.push_back(std::move(cell));
    }
  }

  const fs::path dir = p.run_dir / "robustness";
  fs::create_directories(dir);
  ordered_json cells = ordered_json::array();
  std::ostringstream csv;
  csv << "kind,intensity,auc_mean,auc_std,baseline_auc_mean,baseline_auc_std\n";
  for (const auto& cell : res.cells) {
    ordered_json j;
    j["kind"] = cell.kind;
    j["intensity"] = cell.intensity;
    j["sdmia"] = EvalJson(cell.sdmia);
    j["reconstruction_baseline"] = EvalJson(cell.baseline);
    cells.push_back(std::move(j));
    csv << cell.kind << ',' << FormatDouble(cell.intensity) << ',' << Percent(cell.sdmia.auc) << ','
        << Percent(cell.baseline.auc) << '\n';
  }
  ordered_json doc;
  doc["ratio"] = FirstRatio(c);
  doc["cells"] = std::move(cells);
  WriteFileAtomic(dir / "robustness.json", doc.dump(2) + "\n");
  WriteFileAtomic(dir / "robustness.csv", csv.str());
  return res;
}

ordered_json ToJson(const BudgetReport& b) {
  ordered_json j;
  j["S"] = b.samples_reaching_generation;
  j["P"] = b.perturbations_per_view;
  j["G"] = b.generations;
  j["expected_requests"] = b.expected_requests;
  j["generation_requests"] = b.generation_requests;
  j["generation_calls"] = b.generation_calls;
  j["generation_cache_hits"] = b.generation_cache_hits;
  j["generation_refusals"] = b.generation_refusals;
  j["generation_failures"] = b.generation_failures;
  j["identity_holds"] = b.identity_holds;
  return j;
}

BudgetReport BudgetReportFromJson(const nlohmann::json& j) {
  BudgetReport b;
  b.samples_reaching_generation = j.at("S").get<std::size_t>();
  b.perturbations_per_view = j.at("P").get<std::size_t>();
  b.generations = j.at("G").get<std::size_t>();
  b.expected_requests = j.at("expected_requests").get<std::uint64_t>();
  b.generation_requests = j.at("generation_requests").get<std::uint64_t>();
  b.generation_calls = j.at("generation_calls").get<std::uint64_t>();
  b.generation_cache_hits = j.at("generation_cache_hits").get<std::uint64_t>();
  b.generation_refusals = j.at("generation_refusals").get<std::uint64_t>();
  b.generation_failures = j.at("generation_failures").get<std::uint64_t>();
  b.identity_holds = j.at("identity_holds").get<bool>();
  return b;
}

LedgerReport QueryLedger(const fs::path& run_dir) {
  const fs::path path = run_dir / "ledger.json";
  if (!fs::exists(path)) throw Error(ErrorCode::kIo, "no ledger at " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, path.string() + ": " + e.what());
  }
  LedgerReport r;
  r.backends = backends::Ledger::FromJson(j.at("backends"));
  r.budget = BudgetReportFromJson(j.at("budget"));
  for (const auto& [name, c] : r.backends) {
    r.total_calls += c.calls;
    r.total_cache_hits += c.cache_hits;
    r.total_wall_ms += c.wall_ms;
  }
  return r;
}

std::string FormatLedgerReport(const LedgerReport& r) {
  std::ostringstream o;
  o << "backend,requests,calls,cache_hits,refusals,failures,attempts,wall_s\n";
  for (const auto& [name, c] : r.backends) {
    o << name << ',' << c.requests << ',' << c.calls << ',' << c.cache_hits << ',' << c.refusals
      << ',' << c.failures << ',' << c.attempts << ',' << FormatDouble(c.wall_ms / 1000.0) << '\n';
  }
  const auto& b = r.budget;
  o << "\ngeneration budget: S=" << b.samples_reaching_generation << " P=" << b.perturbations_per_view
    << " G=" << b.generations << " S*(3P+1)*G=" << b.expected_requests
    << " calls=" << b.generation_calls << " cache_hits=" << b.generation_cache_hits
    << " refusals=" << b.generation_refusals << " failures=" << b.generation_failures
    << " identity=" << (b.identity_holds ? "holds" : "broken") << '\n';
  o << "total: calls=" << r.total_calls << " cache_hits=" << r.total_cache_hits
    << " wall_s=" << FormatDouble(r.total_wall_ms / 1000.0) << '\n';
  return o.str();
}

ReplayResult Replay(const fs::path& run_dir, const RunOptions& options) {
  const fs::path cfg_path = run_dir / "config.json";
  if (!fs::exists(cfg_path)) throw Error(ErrorCode::kIo, "no config.json in " + run_dir.string());
  RunConfig c = RunConfig::Load(cfg_path);
  c.manifest = run_dir / "manifest.jsonl";

  ReplayResult r;
  r.replay_dir = run_dir / "replay";
  RunOptions o = options;
  o.cache_only = true;
  o.run_dir = r.replay_dir;
  r.audit = RunAudit(c, o);
  for (const auto& [name, counters] : r.audit.ledger) r.backend_calls += counters.calls;
  r.scores_identical = ReadFile(run_dir / "scores.csv") == ReadFile(r.replay_dir / "scores.csv");
  return r;
}

}  // namespace sdmia::pipeline
