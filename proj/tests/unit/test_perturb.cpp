#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <set>

#include "sdmia/backends/stub.hpp"
#include "sdmia/common/error.hpp"
#include "sdmia/common/rng.hpp"
#include "sdmia/common/vec.hpp"
#include "sdmia/perturb/perturb.hpp"
#include "test_oracles.hpp"

using namespace sdmia;
using namespace sdmia::perturb;

namespace {

// Embeds the original as e1 and anything else at the requested cosine.
TextEmbedFn FixedCosine(const std::string& original, double cosine) {
  return [original, cosine](const std::string& t) {
    if (t == original) return Vec{1.0, 0.0};
    return Vec{cosine, std::sqrt(1.0 - cosine * cosine)};
  };
}

const TextEmbedFn kConstantEmbed = [](const std::string&) { return Vec{1.0, 0.0}; };

std::string CaptionOf(const std::string& instruction) {
  return ParseRewriteInstruction(instruction)->caption;
}

const std::string kLongCaption =
    "a small red fox sitting in tall green grass beside an old wooden fence at sunset "
    "with soft golden light and distant hills";

}  // namespace

TEST_SUITE("rewrite instructions") {
  TEST_CASE("templates carry the fixed wording") {
    CHECK(RewriteTemplate(ViewKind::kToken).find("Rewrite the given image caption by rephrasing") == 0);
    CHECK(RewriteTemplate(ViewKind::kStyle).find("change the artistic style") != std::string_view::npos);
    CHECK(RewriteTemplate(ViewKind::kSemantic).find("content/subject is changed") !=
          std::string_view::npos);
  }

  TEST_CASE("render and parse round trip") {
    for (ViewKind v : kAllViews) {
      const auto parsed = ParseRewriteInstruction(RenderRewriteInstruction(v, "a cat on a mat"));
      REQUIRE(parsed);
      CHECK(parsed->view == v);
      CHECK(parsed->caption == "a cat on a mat");
      CHECK(ParseView(ViewName(v)) == v);
    }
    CHECK_FALSE(ParseRewriteInstruction("tell me a joke"));
    CHECK_THROWS_AS(RenderRewriteInstruction(ViewKind::kToken, "   "), Error);
  }

  TEST_CASE("threshold validation") {
    CHECK_NOTHROW(ValidateThresholds(0.9, 0.8, 0.6));
    CHECK_NOTHROW(ValidateThresholds(0.7, 0.7, 0.7));
    CHECK_THROWS_AS(ValidateThresholds(0.6, 0.8, 0.9), Error);
    CHECK_THROWS_AS(ValidateThresholds(1.2, 0.8, 0.6), Error);
    CHECK_THROWS_AS(ValidateThresholds(0.9, 0.8, 0.0), Error);
  }
}

TEST_SUITE("gate") {
  TEST_CASE("accepts at or above the threshold, rejects below") {
    const std::string orig = "a dog on a beach";
    CHECK(Gate(orig, "a dog at the beach", {ViewKind::kToken, 0.9}, FixedCosine(orig, 0.92)).accepted);
    CHECK(Gate(orig, "a dog at the beach", {ViewKind::kToken, 0.9}, FixedCosine(orig, 0.9)).accepted);
    const auto rej = Gate(orig, "a cat on a roof", {ViewKind::kSemantic, 0.6}, FixedCosine(orig, 0.59));
    CHECK_FALSE(rej.accepted);
    CHECK(rej.similarity == doctest::Approx(0.59));
  }

  TEST_CASE("identical text is rejected even at similarity 1") {
    const auto d = Gate("A  dog", " a dog ", PerturbationView::Default(ViewKind::kToken), kConstantEmbed);
    CHECK(d.similarity == doctest::Approx(1.0));
    CHECK_FALSE(d.accepted);
  }

  TEST_CASE("empty inputs are invalid") {
    CHECK_THROWS_AS(Gate("", "x", {ViewKind::kToken, 0.9}, kConstantEmbed), Error);
  }
}

TEST_SUITE("perturbation generation") {
  TEST_CASE("an echoing rewriter exhausts the budget with nothing accepted") {
    backends::EchoRewriter echo;
    const RewriteFn fn = [&](const std::string& i, std::uint64_t s) { return echo.Rewrite(i, s); };
    try {
      GeneratePerturbations("p", "a dog on a beach", {ViewKind::kToken, 0.9}, 4, fn, kConstantEmbed, 0, 1);
      FAIL("expected budget exhaustion");
    } catch (const BudgetExhaustedError& e) {
      CHECK(e.code() == ErrorCode::kBudgetExhausted);
      CHECK(e.accepted() == 0);
    }
  }

  TEST_CASE("distinct accepted variants: exactly n_target, all distinct") {
    std::size_t calls = 0;
    const RewriteFn fn = [&](const std::string& i, std::uint64_t s) {
      ++calls;
      return CaptionOf(i) + " variant " + std::to_string(s % 1000003);
    };
    const auto batch =
        GeneratePerturbations("p", "a dog", {ViewKind::kStyle, 0.8}, 7, fn, kConstantEmbed, 0, 3);
    CHECK(batch.accepted.size() == 7);
    CHECK(batch.rewriter_calls == 7);
    CHECK(calls == 7);
    std::set<std::string> texts;
    for (const auto& p : batch.accepted) {
      texts.insert(p.text);
      CHECK(p.view == ViewKind::kStyle);
      CHECK(p.parent_id == "p");
    }
    CHECK(texts.size() == 7);
  }

  TEST_CASE("duplicate rewrites count against the budget but are accepted once") {
    const RewriteFn fn = [](const std::string&, std::uint64_t) { return std::string("the same rewrite"); };
    try {
      GeneratePerturbations("p", "a dog", {ViewKind::kToken, 0.9}, 2, fn, kConstantEmbed, 6, 1);
      FAIL("expected budget exhaustion");
    } catch (const BudgetExhaustedError& e) {
      CHECK(e.accepted() == 1);
    }
  }

  TEST_CASE("coin-flip acceptance fills the default budget with high probability") {
    // Acceptance p = 0.5 per attempt, n_target 10, budget 5 * 10.
    CHECK(oracle::BinomialUpperTail(50, 0.5, 10) > 0.999);
    CHECK(oracle::BinomialUpperTail(100, 0.5, 10) > 0.999);
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const RewriteFn fn = [](const std::string& i, std::uint64_t s) {
        Rng r(s);
        return r.Uniform() < 0.5 ? CaptionOf(i) + " v" + std::to_string(s) : CaptionOf(i);
      };
      try {
        GeneratePerturbations("p", "a dog", {ViewKind::kToken, 0.9}, 10, fn, kConstantEmbed, 0, seed);
        ++successes;
      } catch (const BudgetExhaustedError&) {
      }
    }
    CHECK(successes >= 199);
  }

  TEST_CASE("deterministic for a fixed seed") {
    backends::EditRewriter rw;
    backends::StubTextEmbedder emb(2, 64);
    const RewriteFn fn = [&](const std::string& i, std::uint64_t s) { return rw.Rewrite(i, s); };
    const TextEmbedFn ef = [&](const std::string& t) { return emb.EmbedText(t); };
    for (ViewKind v : kAllViews) {
      const auto view = PerturbationView::Default(v);
      const auto a = GeneratePerturbations("p", kLongCaption, view, 5, fn, ef, 0, 42);
      const auto b = GeneratePerturbations("p", kLongCaption, view, 5, fn, ef, 0, 42);
      REQUIRE(a.accepted.size() == b.accepted.size());
      for (std::size_t i = 0; i < a.accepted.size(); ++i) {
        CHECK(a.accepted[i].text == b.accepted[i].text);
        CHECK(a.accepted[i].attempt_index == b.accepted[i].attempt_index);
        CHECK(a.accepted[i].gate_similarity >= view.threshold);
      }
    }
  }

  TEST_CASE("mean gate similarity is ordered token > style > semantic") {
    backends::EditRewriter rw;
    backends::StubTextEmbedder emb(9, 64);
    const RewriteFn fn = [&](const std::string& i, std::uint64_t s) { return rw.Rewrite(i, s); };
    const TextEmbedFn ef = [&](const std::string& t) { return emb.EmbedText(t); };
    std::array<double, 3> mean{};
    int samples = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ++samples;
      for (ViewKind v : kAllViews) {
        const auto b = GeneratePerturbations("p", kLongCaption, PerturbationView::Default(v), 5, fn, ef,
                                             0, seed);
        double s = 0;
        for (const auto& p : b.accepted) s += p.gate_similarity;
        mean[static_cast<int>(v)] += s / static_cast<double>(b.accepted.size());
      }
    }
    for (double& m : mean) m /= samples;
    CHECK(mean[0] > mean[1]);
    CHECK(mean[1] > mean[2]);
  }

  TEST_CASE("invalid requests") {
    const RewriteFn fn = [](const std::string&, std::uint64_t) { return std::string("x"); };
    CHECK_THROWS_AS(GeneratePerturbations("p", "a dog", {ViewKind::kToken, 0.9}, 0, fn, kConstantEmbed, 0, 1),
                    Error);
    CHECK_THROWS_AS(GeneratePerturbations("p", "a dog", {ViewKind::kToken, 0.9}, 5, fn, kConstantEmbed, 3, 1),
                    Error);
  }
}

TEST_SUITE("perturbation records") {
  TEST_CASE("JSONL round trip with canonical ordering") {
    const auto dir = std::filesystem::temp_directory_path() / "sdmia_test_perturb";
    std::filesystem::create_directories(dir);
    std::vector<PerturbedCaption> recs{
        {"b", ViewKind::kStyle, "b style", 0.85, 2},
        {"a", ViewKind::kSemantic, "a sem \"quoted\"", 0.61, 0},
        {"a", ViewKind::kToken, "a tok", 0.95, 3},
        {"a", ViewKind::kToken, "a tok 2", 0.93, 1},
    };
    SavePerturbations(dir / "p.jsonl", recs);
    const auto back = LoadPerturbations(dir / "p.jsonl");
    REQUIRE(back.size() == 4);
    CHECK(back[0].parent_id == "a");
    CHECK(back[0].attempt_index == 1);
    CHECK(back[1].attempt_index == 3);
    CHECK(back[2].view == ViewKind::kSemantic);
    CHECK(back[2].text == "a sem \"quoted\"");
    CHECK(back[3].gate_similarity == 0.85);
    std::filesystem::remove_all(dir);
  }
}
