#include "doctest.h"

#include <filesystem>

#include "sdmia/backends/stub.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/text.hpp"
#include "sdmia/dataset/manifest.hpp"
#include "sdmia/pipeline/config.hpp"
#include "sdmia/pipeline/run.hpp"
#include "sdmia/pipeline/simulate.hpp"
#include "pipeline_fixtures.hpp"

using namespace sdmia;
using namespace sdmia::pipeline;
namespace fs = std::filesystem;

using namespace fixtures;

TEST_SUITE("config") {
  TEST_CASE("validation catches bad settings") {
    const fs::path dir = TempDir("cfg");
    RunConfig c = StubBenchmark(dir, 1, 1);
    CHECK_NOTHROW(c.Validate());
    auto expect_invalid = [](RunConfig bad) {
      try {
        bad.Validate();
        FAIL("expected a validation error");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kValidation);
      }
    };
    RunConfig bad = c;
    bad.perturbations_per_view = 0;
    expect_invalid(bad);
    bad = c;
    bad.tau_semantic = 0.95;
    expect_invalid(bad);
    bad = c;
    bad.k_percent = 0.0;
    expect_invalid(bad);
    bad = c;
    bad.caption.id.name = "gen";
    expect_invalid(bad);
    bad = c;
    bad.generation.provider = Provider::kSynthWorld;
    expect_invalid(bad);
    bad = c;
    bad.robustness.intensities = {1.5};
    expect_invalid(bad);
    fs::remove_all(dir);
  }

  TEST_CASE("JSON round trip keeps the run id") {
    const fs::path dir = TempDir("cfgjson");
    const RunConfig c = StubBenchmark(dir, 1, 1);
    const RunConfig back = RunConfig::FromJson(nlohmann::json::parse(c.ToJson().dump()));
    CHECK(back.RunId() == c.RunId());
    RunConfig moved = c;
    moved.workers = 3;
    moved.output_root = "/elsewhere";
    CHECK(moved.RunId() == c.RunId());
    moved.generations = 4;
    CHECK(moved.RunId() != c.RunId());
    fs::remove_all(dir);
  }
}

TEST_SUITE("audit runs") {
  TEST_CASE("stub run writes every output and satisfies the budget identity") {
    const fs::path dir = TempDir("stub");
    const RunConfig c = StubBenchmark(dir, 4, 4);
    const AuditResult r = RunAudit(c);
    for (const char* f : {"config.json", "manifest.jsonl", "perturbations.jsonl", "reports.jsonl",
                          "scores.csv", "errors.jsonl", "eval.json", "set_level.json", "roc.csv",
                          "ledger.json"}) {
      CHECK_MESSAGE(fs::exists(r.run_dir / f), f);
    }
    CHECK(r.unscorable == 0);
    CHECK(r.budget.samples_reaching_generation == 8);
    CHECK(r.budget.expected_requests == 8u * (3 * 2 + 1) * 3);
    CHECK(r.budget.identity_holds);
    CHECK(r.eval.count("1:1") == 1);
    CHECK(ReadFile(r.run_dir / "scores.csv").rfind("sample_id,label,s_final,", 0) == 0);

    // A second run hits the cache for every request.
    const AuditResult again = RunAudit(c);
    CHECK(again.budget.generation_calls == 0);
    CHECK(again.budget.generation_cache_hits == r.budget.expected_requests);
    CHECK(again.budget.identity_holds);
    CHECK(ReadFile(again.run_dir / "scores.csv") == ReadFile(r.run_dir / "scores.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("replay answers from the cache alone and reproduces the scores") {
    const fs::path dir = TempDir("replay");
    const AuditResult r = RunAudit(StubBenchmark(dir, 3, 3));
    const ReplayResult rep = Replay(r.run_dir);
    CHECK(rep.backend_calls == 0);
    CHECK(rep.scores_identical);
    CHECK(rep.replay_dir == r.run_dir / "replay");

    const LedgerReport ledger = QueryLedger(r.run_dir);
    CHECK(ledger.budget.identity_holds);
    CHECK(FormatLedgerReport(ledger).find("gen") != std::string::npos);
    CHECK_THROWS_AS(QueryLedger(dir / "nowhere"), Error);
    fs::remove_all(dir);
  }

  TEST_CASE("replay with an emptied cache fails with a cache miss") {
    const fs::path dir = TempDir("replaymiss");
    const AuditResult r = RunAudit(StubBenchmark(dir, 2, 2));
    fs::remove_all(dir / "cache");
    try {
      Replay(r.run_dir);
      FAIL("expected a cache miss");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kCacheMiss);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("G = 5 costs half as many generation calls as G = 10") {
    const fs::path dir = TempDir("budget");
    RunConfig c = StubBenchmark(dir, 2, 2);
    c.cache_dir.clear();
    c.generations = 5;
    const auto five = RunAudit(c).budget;
    c.generations = 10;
    const auto ten = RunAudit(c).budget;
    CHECK(2 * five.generation_calls == ten.generation_calls);
    CHECK(ten.generation_calls == 4u * 7 * 10);
    fs::remove_all(dir);
  }

  TEST_CASE("an unreachable generation endpoint stops the run early") {
    const fs::path dir = TempDir("dead");
    RunConfig c = StubBenchmark(dir, 3, 3);
    c.generation.provider = Provider::kHttp;
    c.generation.id.endpoint = "http://127.0.0.1:1/generate";
    c.generation.timeout_s = 2;
    c.retry.max_attempts = 1;
    try {
      RunAudit(c);
      FAIL("expected a backend failure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kBackend);
    }
    fs::remove_all(dir);
  }

  TEST_CASE("a majority of unscorable samples fails the run after writing outputs") {
    const fs::path dir = TempDir("unscorable");
    const RunConfig c = StubBenchmark(dir, 3, 3, 4);
    try {
      RunAudit(c);
      FAIL("expected unscorable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnscorable);
    }
    const fs::path run = c.output_root / c.RunId();
    CHECK(fs::exists(run / "errors.jsonl"));
    CHECK(Trim(ReadFile(run / "errors.jsonl")).size() > 0);
    fs::remove_all(dir);
  }

  TEST_CASE("a minority of refusals leaves the run usable") {
    const fs::path dir = TempDir("minority");
    const AuditResult r = RunAudit(StubBenchmark(dir, 3, 3, 1));
    CHECK(r.unscorable == 1);
    fs::remove_all(dir);
  }

  TEST_CASE("an unknown distortion is rejected before any backend call") {
    const fs::path dir = TempDir("badkind");
    RunConfig c = StubBenchmark(dir, 2, 2);
    c.robustness.kinds = {"sepia"};
    c.robustness.intensities = {0.5};
    try {
      RunRobustness(c);
      FAIL("expected a validation error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kValidation);
    }
    CHECK_FALSE(fs::exists(dir / "cache"));
    CHECK_FALSE(fs::exists(dir / "runs"));
    fs::remove_all(dir);
  }

  TEST_CASE("robustness at intensity zero reproduces the base evaluation") {
    const fs::path dir = TempDir("robust");
    RunConfig c = StubBenchmark(dir, 4, 4);
    c.robustness.kinds = {"gaussian_noise", "blur"};
    c.robustness.intensities = {0.0, 0.5};
    const AuditResult base = RunAudit(c);
    const RobustnessResult r = RunRobustness(c);
    REQUIRE(r.cells.size() == 4);
    for (const auto& cell : r.cells) {
      if (cell.intensity != 0.0) continue;
      CHECK(cell.sdmia.auc.mean == base.eval.at("1:1").auc.mean);
      CHECK(cell.baseline.auc.mean == base.baseline_eval.at("1:1").auc.mean);
    }
    CHECK(fs::exists(r.run_dir / "robustness" / "robustness.csv"));
    fs::remove_all(dir);
  }

  TEST_CASE("ablation produces one row per variant") {
    const fs::path dir = TempDir("ablate");
    const RunConfig c = StubBenchmark(dir, 3, 3);
    AblationSpec spec;
    spec.modes = {AblationMode::kPerView, AblationMode::kKSweep, AblationMode::kBaselineOnly,
                  AblationMode::kNoPairedDescription};
    const AblationResult r = RunAblation(c, spec);
    CHECK(r.rows.size() == 4 + 3 + 2 + 2);
    CHECK(fs::exists(r.run_dir / "ablation" / "ablation.csv"));
    CHECK(ParseAblationMode("k_sweep") == AblationMode::kKSweep);
    CHECK_THROWS_AS(ParseAblationMode("nope"), Error);
    fs::remove_all(dir);
  }
}

TEST_SUITE("simulation") {
  TEST_CASE("a small synthetic world separates members from non-members") {
    const fs::path dir = TempDir("sim");
    SimulateOptions o;
    o.world.n_members = 20;
    o.world.caption_bank = 20;
    o.out_dir = dir;
    o.perturbations_per_view = 3;
    o.generations = 5;
    o.memory_cache = true;
    const SimulatedBenchmark b = PrepareSimulation(o);
    CHECK(fs::exists(dir / "manifest.jsonl"));
    CHECK(fs::exists(dir / "config.json"));
    RunOptions ro;
    ro.world = b.world;
    RunConfig c = b.config;
    c.set_sizes = {1, 5};
    const AuditResult r = RunAudit(c, ro);
    CHECK(r.unscorable == 0);
    CHECK(r.budget.identity_holds);
    CHECK(r.eval.at("1:1").auc.mean > 90.0);
    fs::remove_all(dir);
  }
}
