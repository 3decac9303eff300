#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <memory>

#include "sdmia/common/error.hpp"
#include "sdmia/common/rng.hpp"
#include "sdmia/common/vec.hpp"
#include "sdmia/synthworld/backends.hpp"
#include "sdmia/synthworld/probes.hpp"
#include "sdmia/synthworld/world.hpp"

using namespace sdmia;
using namespace sdmia::synthworld;

namespace {

WorldSpec Small(std::uint64_t seed = 3) {
  WorldSpec s;
  s.seed = seed;
  s.n_members = 30;
  s.caption_bank = 30;
  return s;
}

double Distance(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Ordinary least squares slope of y on x.
double Slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_SUITE("world construction") {
  TEST_CASE("same parameters build the same world") {
    const SynthWorld a(Small()), b(Small());
    REQUIRE(a.members().size() == 30);
    for (std::size_t i = 0; i < 30; ++i) {
      CHECK(a.members()[i].caption == b.members()[i].caption);
      CHECK(a.members()[i].image == b.members()[i].image);
    }
    CHECK(a.Generate("some prompt words", 7) == b.Generate("some prompt words", 7));
    CHECK(a.NonMember(4).image == b.NonMember(4).image);
  }

  TEST_CASE("regions are disjoint and feasible radii build") {
    WorldSpec s = Small();
    s.collapse_radius = 0.3;
    const SynthWorld w(s);
    for (std::size_t i = 0; i < w.members().size(); ++i) {
      for (std::size_t j = i + 1; j < w.members().size(); ++j) {
        CHECK(Distance(w.members()[i].caption_embedding, w.members()[j].caption_embedding) > 0.6);
      }
      CHECK(w.RegionOf(w.members()[i].caption_embedding) == i);
    }
  }

  TEST_CASE("an impossible radius is infeasible") {
    WorldSpec s = Small();
    s.collapse_radius = 5.0;
    try {
      SynthWorld w(s);
      FAIL("expected infeasible");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInfeasible);
    }
  }

  TEST_CASE("parameter validation and JSON round trip") {
    WorldSpec s = Small();
    s.background_noise = 0.01;
    CHECK_THROWS_AS(s.Validate(), Error);
    s = Small();
    s.encoder_contraction = 1.0;
    CHECK_THROWS_AS(s.Validate(), Error);
    s = Small();
    s.member_noise = 0.0;
    s.background_noise = 0.0;
    CHECK_NOTHROW(s.Validate());
    const WorldSpec back = WorldSpec::FromJson(nlohmann::json::parse(Small(9).ToJson().dump()));
    CHECK(back.ToJson() == Small(9).ToJson());
    CHECK_THROWS_AS(WorldSpec::FromJson(nlohmann::json::parse(R"({"no_such_field": 1})")), Error);
  }

  TEST_CASE("non-members stay clear of every region") {
    const SynthWorld w(Small());
    for (std::size_t i = 0; i < 100; ++i) CHECK_FALSE(w.RegionOf(w.NonMember(i).caption_embedding));
  }
}

TEST_SUITE("world generation") {
  TEST_CASE("zero member noise returns the target exactly") {
    WorldSpec s = Small();
    s.member_noise = 0.0;
    const SynthWorld w(s);
    for (const auto& m : w.members()) CHECK(w.Generate(m.caption, 11) == m.image);
  }

  TEST_CASE("two rho away from a member the background branch applies") {
    const SynthWorld w(Small());
    const auto& m = w.members()[0];
    Rng rng(1);
    bool checked = false;
    for (int t = 0; t < 50 && !checked; ++t) {
      Vec c = m.caption_embedding;
      const Vec dir = rng.RandomDirection(w.dim(), 2.0 * w.spec().collapse_radius);
      for (std::size_t i = 0; i < c.size(); ++i) c[i] += dir[i];
      if (w.RegionOf(c)) continue;
      Vec want = w.Background(c);
      const Vec noise = w.Noise(5);
      for (std::size_t i = 0; i < want.size(); ++i) want[i] += w.spec().background_noise * noise[i];
      CHECK(w.GenerateFromEmbedding(c, 5) == want);
      checked = true;
    }
    CHECK(checked);
  }

  TEST_CASE("member generations stay within three sigma_m sqrt(d) of the target") {
    const SynthWorld w(Small());
    const double bound = 3.0 * w.spec().member_noise * std::sqrt(static_cast<double>(w.dim()));
    for (const auto& m : w.members()) {
      const Vec a = w.Generate(m.caption, 1), b = w.Generate(m.caption, 2);
      CHECK(a != b);
      CHECK(Distance(a, m.image) <= bound);
      CHECK(Distance(b, m.image) <= bound);
    }
  }

  TEST_CASE("render and decode round trip up to quantisation") {
    const SynthWorld w(Small());
    const double step = 2.0 * w.spec().render_range / 65535.0;
    for (std::size_t i = 0; i < 5; ++i) {
      const Vec x = w.members()[i].image;
      const Vec y = w.Decode(w.Render(x));
      for (std::size_t k = 0; k < x.size(); ++k) {
        if (std::abs(x[k]) < w.spec().render_range) CHECK(std::abs(x[k] - y[k]) <= step);
      }
    }
  }

  TEST_CASE("captioner returns the stored description of a member photograph verbatim") {
    const SynthWorld w(Small());
    for (const auto& m : w.members()) CHECK(w.Caption(w.Decode(w.Render(m.image))) == m.caption);
  }

  TEST_CASE("adapter backends agree with the world") {
    auto w = std::make_shared<const SynthWorld>(Small());
    SynthGenerator gen(w);
    SynthImageEmbedder img(w);
    SynthTextEmbedder txt(w);
    const auto& m = w->members()[2];
    const auto r = gen.Generate(m.caption, 4, {});
    REQUIRE_FALSE(r.refused);
    const Vec x = img.EmbedImage(r.bytes);
    CHECK(Distance(x, w->Generate(m.caption, 4)) < 1e-3);
    CHECK(txt.EmbedText(m.caption) == m.caption_embedding);
  }
}

TEST_SUITE("attenuation") {
  TEST_CASE("no perturbation, no gap") {
    const SynthWorld w(Small());
    const auto p = ProbeVisualAttenuation(w, w.members()[0].image, w.NonMember(0).image, 0.0, 20, 1);
    CHECK(p.max_gap == 0.0);
    CHECK(p.within_bound);
  }

  TEST_CASE("the gap respects xi |dx| |grad| on every trial") {
    const SynthWorld w(Small());
    for (double dx : {0.01, 0.3, 2.0}) {
      const auto p = ProbeVisualAttenuation(w, w.members()[1].image, w.NonMember(1).image, dx, 200, 2);
      CHECK(p.within_bound);
      CHECK(p.max_gap <= p.bound * (1 + 1e-9) + 1e-12);
      CHECK(p.mean_gap > 0.0);
    }
  }

  TEST_CASE("the gap scales linearly with the contraction") {
    std::vector<double> logs_xi, logs_gap;
    double gap_hi = 0, gap_lo = 0;
    for (double xi : {0.01, 0.1, 0.5, 0.99}) {
      WorldSpec s = Small();
      s.encoder_contraction = xi;
      const SynthWorld w(s);
      const auto p = ProbeVisualAttenuation(w, w.members()[0].image, w.NonMember(0).image, 0.5, 200, 3);
      if (xi == 0.99) gap_hi = p.mean_gap;
      if (xi == 0.01) gap_lo = p.mean_gap;
      if (xi != 0.99) {
        logs_xi.push_back(std::log(xi));
        logs_gap.push_back(std::log(p.mean_gap));
      }
    }
    CHECK(gap_hi / gap_lo == doctest::Approx(99.0).epsilon(0.30));
    CHECK(Slope(logs_xi, logs_gap) == doctest::Approx(1.0).epsilon(0.15));
  }
}

TEST_SUITE("region collapse") {
  TEST_CASE("unperturbed member RSR is one without member noise") {
    WorldSpec s = Small();
    s.member_noise = 0.0;
    const SynthWorld w(s);
    const auto c = ProbeRsr(w, {0.0, 0.1}, 60, 4);
    CHECK(c.member_rsr[0] == 1.0);
  }

  TEST_CASE("member RSR is flat inside the region and indistinguishable far outside") {
    const SynthWorld w(Small());
    const double rho = w.spec().collapse_radius;
    const auto c = ProbeRsr(w, {0.0, 0.25 * rho, 0.5 * rho, 0.9 * rho, 3.0 * rho, 4.0 * rho}, 300, 5);
    for (std::size_t i = 1; i <= 3; ++i) CHECK(std::abs(c.member_rsr[i] - c.member_rsr[0]) <= 0.05);
    for (std::size_t i = 4; i <= 5; ++i) CHECK(std::abs(c.member_rsr[i] - c.nonmember_rsr[i]) < 0.1);
    CHECK(RsrCsv(c).rfind("norm,member_rsr,nonmember_rsr\n", 0) == 0);
  }

  TEST_CASE("members lose less relevance than non-members inside the region") {
    const SynthWorld w(Small());
    const auto drops = MeasureRelevanceDrops(w, 0.5 * w.spec().collapse_radius, 600, 6);
    std::vector<double> diff;
    for (std::size_t i = 0; i < drops.member.size(); ++i) diff.push_back(drops.nonmember[i] - drops.member[i]);
    // Percentile bootstrap of the mean difference.
    Rng rng(7);
    std::vector<double> means;
    for (int b = 0; b < 2000; ++b) {
      double s = 0;
      for (std::size_t i = 0; i < diff.size(); ++i) s += diff[rng.UniformInt(diff.size())];
      means.push_back(s / static_cast<double>(diff.size()));
    }
    std::sort(means.begin(), means.end());
    CHECK(means[static_cast<std::size_t>(0.005 * means.size())] > 0.0);
  }

  TEST_CASE("image-side analog is deterministic") {
    const SynthWorld w(Small());
    const auto& x = w.members()[0].image;
    CHECK(ImageSideScore(w, x, {}, 9) == ImageSideScore(w, x, {}, 9));
  }
}
