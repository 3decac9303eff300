// Command-line front end for the membership-inference audit toolkit.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/text.hpp"
#include "sdmia/dataset/bias_probe.hpp"
#include "sdmia/dataset/manifest.hpp"
#include "sdmia/eval/set_level.hpp"
#include "sdmia/pipeline/run.hpp"
#include "sdmia/pipeline/simulate.hpp"

namespace fs = std::filesystem;
using namespace sdmia;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitBackend = 3;
constexpr int kExitUnscorable = 4;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBackend:
    case ErrorCode::kCacheMiss:
    case ErrorCode::kRefused:
    case ErrorCode::kDimensionMismatch:
      return kExitBackend;
    case ErrorCode::kUnscorable:
      return kExitUnscorable;
    default:
      return kExitValidation;
  }
}

struct Globals {
  bool trace = false;
  std::string trace_file;
  bool quiet = false;
  int workers = 0;
};

// Owns the trace stream for the lifetime of a command.
struct TraceSink {
  std::unique_ptr<std::ofstream> file;
  std::shared_ptr<backends::Tracer> tracer;
};

TraceSink MakeTrace(const Globals& g) {
  TraceSink s;
  if (!g.trace) return s;
  if (g.trace_file.empty()) {
    s.tracer = std::make_shared<backends::Tracer>(std::cerr);
  } else {
    s.file = std::make_unique<std::ofstream>(g.trace_file, std::ios::app);
    if (!*s.file) throw Error(ErrorCode::kIo, "cannot open trace file " + g.trace_file);
    s.tracer = std::make_shared<backends::Tracer>(*s.file);
  }
  return s;
}

pipeline::RunOptions Options(const Globals& g, const TraceSink& t) {
  pipeline::RunOptions o;
  o.tracer = t.tracer;
  o.log = g.quiet ? nullptr : &std::cerr;
  return o;
}

pipeline::RunConfig LoadConfig(const std::string& path, const Globals& g) {
  auto c = pipeline::RunConfig::Load(path);
  if (g.workers > 0) c.workers = g.workers;
  return c;
}

std::string Pct(double v) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << v;
  return o.str();
}

void PrintEval(const pipeline::AuditResult& r) {
  std::cout << "run_dir " << r.run_dir.string() << "\n";
  std::cout << "scored " << r.samples.size() - r.unscorable << "/" << r.samples.size() << "\n";
  for (const auto& [ratio, e] : r.eval) {
    std::cout << "sdmia " << ratio << " auc " << Pct(e.auc.mean) << " +- " << Pct(e.auc.std)
              << " tpr@1%fpr " << Pct(e.tpr_at_fpr.at(0.01).mean) << "\n";
  }
  for (const auto& [ratio, e] : r.baseline_eval) {
    std::cout << "baseline " << ratio << " auc " << Pct(e.auc.mean) << " +- " << Pct(e.auc.std)
              << "\n";
  }
  for (const auto& s : r.set_level) {
    std::cout << "set L=" << s.set_size << " auc " << Pct(s.set_auc) << " p " << s.p_value << "\n";
  }
}

std::vector<double> SplitNumbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = Trim(part);
    if (part.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::kValidation, "not a number: \"" + part + "\"");
    }
  }
  return out;
}

// Member and non-member s_final scores from a scores.csv.
void ReadScores(const fs::path& path, std::vector<double>& members, std::vector<double>& nonmembers) {
  std::istringstream in(ReadFile(path));
  std::string line;
  std::getline(in, line);
  if (line.rfind("sample_id,label,s_final", 0) != 0) {
    throw Error(ErrorCode::kValidation, path.string() + " is not a scores.csv");
  }
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string id, label, score;
    std::getline(row, id, ',');
    std::getline(row, label, ',');
    std::getline(row, score, ',');
    const auto l = dataset::ParseLabel(label);
    if (!l) continue;
    (*l == dataset::Label::kMember ? members : nonmembers).push_back(std::stod(score));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sdmia: black-box membership-inference audits of text-to-image models"};
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--trace", g.trace, "Log backend requests and responses, credentials redacted");
  app.add_option("--trace-file", g.trace_file, "Write the trace here instead of stderr");
  app.add_flag("-q,--quiet", g.quiet, "Suppress progress lines");
  app.add_option("-j,--workers", g.workers, "Override the number of sample workers");

  std::string config_path;
  auto* audit = app.add_subcommand("audit", "Score every manifest sample and evaluate");
  audit->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();

  auto* ablate = app.add_subcommand("ablate", "Compare view weights, pooling and caption sources");
  std::vector<std::string> ablate_modes;
  std::string k_values = "10,30,100";
  ablate->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
  ablate->add_option("-m,--mode", ablate_modes,
                     "per_view, no_paired_description, k_sweep or baseline_only (repeatable)")
      ->required();
  ablate->add_option("--k", k_values, "Comma-separated K percentages for k_sweep");

  auto* robust = app.add_subcommand("robustness", "Rescore under target-image distortions");
  std::vector<std::string> kinds;
  std::string intensities;
  robust->add_option("-c,--config", config_path, "Run configuration (JSON)")->required();
  robust->add_option("--kind", kinds, "Override the distortion kinds (repeatable)");
  robust->add_option("--intensity", intensities, "Override intensities, comma-separated");

  auto* setinf = app.add_subcommand("set-infer", "Set-level inference from per-sample scores");
  std::string scores_path;
  std::string set_sizes = "1,5,10,30";
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  setinf->add_option("--scores", scores_path, "scores.csv, or a run directory containing one")
      ->required();
  setinf->add_option("-L,--set-sizes", set_sizes, "Comma-separated set sizes");
  setinf->add_option("--trials", trials, "Trials per set size");
  setinf->add_option("--seed", seed, "Sampling seed");

  auto* bias = app.add_subcommand("bias-probe", "Check that member and non-member pools are not separable");
  std::string space = "image";
  std::string embeddings_path;
  bias->add_option("-c,--config", config_path, "Run configuration whose manifest and embedders are used");
  bias->add_option("--embeddings", embeddings_path,
                   "JSONL of {\"label\": ..., \"vector\": [...]} instead of a config");
  bias->add_option("--space", space, "image, text or joint")
      ->check(CLI::IsMember({"image", "text", "joint"}));
  bias->add_option("--seed", seed, "Split seed");

  auto* sim = app.add_subcommand("simulate", "Build a synthetic world and audit it end to end");
  pipeline::SimulateOptions sim_opts;
  std::string world_path;
  bool sim_memory = false;
  sim->add_option("-o,--out", sim_opts.out_dir, "Output directory")->required();
  sim->add_option("--world", world_path, "World parameters (JSON); defaults otherwise");
  sim->add_option("--members", sim_opts.world.n_members, "Number of member samples");
  sim->add_option("--nonmembers", sim_opts.n_nonmembers, "Number of non-member samples");
  sim->add_option("--world-seed", sim_opts.world.seed, "World seed");
  sim->add_option("-P,--perturbations", sim_opts.perturbations_per_view, "Perturbations per view");
  sim->add_option("-G,--generations", sim_opts.generations, "Generations per caption");
  sim->add_flag("--memory-cache", sim_memory, "Keep the backend cache in memory");

  auto* ledger = app.add_subcommand("ledger", "Query counts and budget identity of a run");
  std::string run_dir;
  ledger->add_option("run_dir", run_dir, "Run directory")->required();

  auto* replay = app.add_subcommand("replay", "Re-run a completed run from its cache only");
  replay->add_option("run_dir", run_dir, "Run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    const TraceSink trace = MakeTrace(g);
    const pipeline::RunOptions opts = Options(g, trace);

    if (*audit) {
      PrintEval(pipeline::RunAudit(LoadConfig(config_path, g), opts));
    } else if (*ablate) {
      pipeline::AblationSpec spec;
      for (const auto& m : ablate_modes) spec.modes.push_back(pipeline::ParseAblationMode(m));
      spec.k_values = SplitNumbers(k_values);
      const auto res = pipeline::RunAblation(LoadConfig(config_path, g), spec, opts);
      std::cout << "mode,variant,auc,auc_std,tpr@1%fpr\n";
      for (const auto& r : res.rows) {
        std::cout << r.mode << ',' << r.variant << ',' << Pct(r.report.auc.mean) << ','
                  << Pct(r.report.auc.std) << ',' << Pct(r.report.tpr_at_fpr.at(0.01).mean) << '\n';
      }
      std::cout << "written to " << (res.run_dir / "ablation").string() << "\n";
    } else if (*robust) {
      auto c = LoadConfig(config_path, g);
      if (!kinds.empty()) c.robustness.kinds = kinds;
      if (!intensities.empty()) c.robustness.intensities = SplitNumbers(intensities);
      const auto res = pipeline::RunRobustness(c, opts);
      std::cout << "kind,intensity,auc,baseline_auc\n";
      for (const auto& cell : res.cells) {
        std::cout << cell.kind << ',' << FormatDouble(cell.intensity) << ',' << Pct(cell.sdmia.auc.mean)
                  << ',' << Pct(cell.baseline.auc.mean) << '\n';
      }
      std::cout << "written to " << (res.run_dir / "robustness").string() << "\n";
    } else if (*setinf) {
      fs::path path = scores_path;
      if (fs::is_directory(path)) path /= "scores.csv";
      std::vector<double> pos, neg;
      ReadScores(path, pos, neg);
      std::vector<eval::SetInferenceResult> results;
      for (double l : SplitNumbers(set_sizes)) {
        if (l < 1 || l != static_cast<double>(static_cast<std::size_t>(l))) {
          throw Error(ErrorCode::kValidation, "set sizes must be positive integers");
        }
        results.push_back(eval::SetLevel(pos, neg, static_cast<std::size_t>(l), trials, seed));
      }
      std::cout << eval::SetInferenceJson(results) << "\n";
    } else if (*bias) {
      std::vector<dataset::EmbeddingVector> members, nonmembers;
      if (!embeddings_path.empty()) {
        std::istringstream in(ReadFile(embeddings_path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (Trim(line).empty()) continue;
          try {
            const auto j = nlohmann::json::parse(line);
            const auto label = dataset::ParseLabel(j.at("label").get<std::string>());
            if (!label) throw MalformedRecordError(line_no, "unknown label");
            dataset::EmbeddingVector v(j.at("vector").get<Vec>(), dataset::EmbeddingSpace::kJoint);
            (*label == dataset::Label::kMember ? members : nonmembers).push_back(std::move(v));
          } catch (const nlohmann::json::exception& e) {
            throw MalformedRecordError(line_no, e.what());
          }
        }
      } else {
        if (config_path.empty()) throw Error(ErrorCode::kValidation, "bias-probe needs --config or --embeddings");
        auto c = LoadConfig(config_path, g);
        c.mode = dataset::ManifestMode::kBenchmark;
        const auto set = dataset::LoadManifest(c.manifest, c.mode);
        pipeline::ServiceOptions so;
        so.tracer = trace.tracer;
        auto services = pipeline::BuildServices(c, so);
        std::vector<dataset::EmbeddingVector> all(set.size());
        pipeline::ParallelFor(set.size(), c.workers, [&](std::size_t i) {
          const auto& s = set.samples[i];
          Vec v;
          if (space == "text") {
            if (!s.caption) throw Error(ErrorCode::kValidation, "sample \"" + s.id + "\" has no caption");
            v = services->text_embed->Embed(*s.caption);
          } else if (space == "image") {
            v = services->image_embed->Embed(pipeline::ReadImage(set, s));
          } else {
            v = pipeline::EmbedJoint(*services, pipeline::ReadImage(set, s)).vector();
          }
          all[i] = dataset::EmbeddingVector(std::move(v), dataset::EmbeddingSpace::kJoint);
        });
        for (std::size_t i = 0; i < set.size(); ++i) {
          (*set.samples[i].label == dataset::Label::kMember ? members : nonmembers).push_back(all[i]);
        }
      }
      std::cout << dataset::BiasProbeReportJson(dataset::BiasProbe(members, nonmembers, seed)) << "\n";
    } else if (*sim) {
      if (!world_path.empty()) {
        const auto j = nlohmann::json::parse(ReadFile(world_path));
        const auto n = sim_opts.world.n_members;
        sim_opts.world = synthworld::WorldSpec::FromJson(j);
        if (sim->count("--members")) sim_opts.world.n_members = n;
      }
      sim_opts.memory_cache = sim_memory;
      if (g.workers > 0) sim_opts.workers = g.workers;
      const auto bench = pipeline::PrepareSimulation(sim_opts);
      pipeline::RunOptions o = opts;
      o.world = bench.world;
      const auto res = pipeline::RunAudit(bench.config, o);
      PrintEval(res);
      const std::size_t n_non = res.samples.size() - bench.world->members().size();
      std::cout << "image_side_auc "
                << Pct(100.0 * pipeline::ImageSideAuc(*bench.world, n_non, {}, bench.config.seed))
                << "\n";
      std::cout << "config " << (fs::absolute(sim_opts.out_dir) / "config.json").string() << "\n";
    } else if (*ledger) {
      std::cout << pipeline::FormatLedgerReport(pipeline::QueryLedger(run_dir));
    } else if (*replay) {
      const auto r = pipeline::Replay(run_dir, opts);
      std::cout << "replay_dir " << r.replay_dir.string() << "\n"
                << "backend_calls " << r.backend_calls << "\n"
                << "scores_identical " << (r.scores_identical ? "yes" : "no") << "\n";
      if (!r.scores_identical) return kExitValidation;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [validation]: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return kExitValidation;
  }
}
