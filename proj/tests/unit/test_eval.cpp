#include "doctest.h"

#include <cmath>
#include <limits>

#include "sdmia/common/error.hpp"
#include "sdmia/common/rng.hpp"
#include "sdmia/eval/distort.hpp"
#include "sdmia/eval/metrics.hpp"
#include "sdmia/eval/protocol.hpp"
#include "sdmia/eval/set_level.hpp"
#include "test_oracles.hpp"

using namespace sdmia;
using namespace sdmia::eval;
using dataset::Label;

TEST_SUITE("auc") {
  TEST_CASE("hand cases") {
    CHECK(Auc(std::vector<double>{0.9, 0.8}, std::vector<double>{0.2, 0.1}) == 1.0);
    CHECK(Auc(std::vector<double>{0.5}, std::vector<double>{0.5}) == 0.5);
    // Six pairs: (0.3,0.2) (0.7,0.2) (0.7,0.2) win, both (0.7,0.7) tie.
    CHECK(Auc(std::vector<double>{0.3, 0.7, 0.7}, std::vector<double>{0.2, 0.7}) ==
          doctest::Approx(4.0 / 6.0).epsilon(1e-15));
  }

  TEST_CASE("enumeration and rank paths agree with the pair oracle") {
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
      auto pos = oracle::TiedScores(rng, 1 + rng.UniformInt(40));
      auto neg = oracle::TiedScores(rng, 1 + rng.UniformInt(40));
      const double want = oracle::PairAuc(pos, neg);
      CHECK(std::abs(AucByEnumeration(pos, neg) - want) <= 1e-12);
      CHECK(std::abs(AucByRanks(pos, neg) - want) <= 1e-12);
    }
  }

  TEST_CASE("large inputs take the rank path") {
    Rng rng(2);
    std::vector<double> pos(1200), neg(1000);
    for (double& x : pos) x = rng.Normal() + 0.3;
    for (double& x : neg) x = rng.Normal();
    CHECK(std::abs(Auc(pos, neg) - AucByEnumeration(pos, neg)) <= 1e-12);
  }

  TEST_CASE("complementary and invariant to monotone transforms") {
    Rng rng(3);
    for (int t = 0; t < 100; ++t) {
      auto pos = oracle::TiedScores(rng, 1 + rng.UniformInt(20));
      auto neg = oracle::TiedScores(rng, 1 + rng.UniformInt(20));
      CHECK(Auc(pos, neg) + Auc(neg, pos) == 1.0);
      std::vector<double> tp, tn;
      for (double x : pos) tp.push_back(std::exp(3.0 * x) - 7.0);
      for (double x : neg) tn.push_back(std::exp(3.0 * x) - 7.0);
      CHECK(Auc(tp, tn) == Auc(pos, neg));
    }
  }

  TEST_CASE("empty class") {
    CHECK_THROWS_AS(Auc(std::vector<double>{}, std::vector<double>{1.0}), Error);
  }
}

TEST_SUITE("tpr_at_fpr") {
  TEST_CASE("hand cases") {
    std::vector<double> pos{0.9, 0.8}, neg{0.2, 0.1};
    for (double cap : {0.01, 0.05, 0.5}) CHECK(TprAtFpr(pos, neg, cap) == 1.0);
    CHECK(TprAtFpr(std::vector<double>{0.9}, std::vector<double>{0.9}, 0.05) == 0.0);
  }

  TEST_CASE("matches the exhaustive threshold sweep") {
    Rng rng(4);
    for (int t = 0; t < 300; ++t) {
      auto pos = oracle::TiedScores(rng, 20);
      auto neg = oracle::TiedScores(rng, 20);
      for (double cap : {0.01, 0.05, 0.1, 0.25}) {
        CHECK(TprAtFpr(pos, neg, cap) == oracle::SweepTpr(pos, neg, cap));
      }
    }
  }

  TEST_CASE("non-decreasing in the cap") {
    Rng rng(5);
    auto pos = oracle::TiedScores(rng, 30);
    auto neg = oracle::TiedScores(rng, 30);
    double prev = 0.0;
    for (double cap = 0.01; cap < 1.0; cap += 0.01) {
      const double v = TprAtFpr(pos, neg, cap);
      CHECK(v >= prev);
      prev = v;
    }
  }

  TEST_CASE("roc curve runs corner to corner") {
    auto roc = RocCurve(std::vector<double>{0.9, 0.4}, std::vector<double>{0.5, 0.1});
    CHECK(roc.front().fpr == 0.0);
    CHECK(roc.back().fpr == 1.0);
    CHECK(roc.back().tpr == 1.0);
  }
}

TEST_SUITE("evaluate") {
  std::vector<LabeledScore> Make(std::size_t nm, std::size_t nn, double m, double n) {
    std::vector<LabeledScore> out;
    for (std::size_t i = 0; i < nm; ++i) out.push_back({m, Label::kMember});
    for (std::size_t i = 0; i < nn; ++i) out.push_back({n, Label::kNonMember});
    return out;
  }

  TEST_CASE("degenerate scores give 100 +- 0") {
    for (Ratio r : {Ratio{1, 1}, Ratio{1, 10}}) {
      EvalReport rep = Evaluate(Make(60, 600, 1.0, 0.0), r, 5, 1);
      CHECK(rep.auc.mean == 100.0);
      CHECK(rep.auc.std == 0.0);
      CHECK(rep.tpr_at_fpr.at(0.05).mean == 100.0);
    }
  }

  TEST_CASE("ratio arithmetic") {
    EvalReport rep = Evaluate(Make(50, 520, 1.0, 0.0), Ratio{1, 10}, 5, 1);
    for (const SeedResult& s : rep.per_seed) {
      CHECK(s.n_members == 50);
      CHECK(s.n_nonmembers == 500);
    }
    CHECK_THROWS_AS(Evaluate(Make(5, 9, 1, 0), Ratio{1, 10}, 1, 0), Error);
    CHECK(Ratio::Parse("1:10") == Ratio{1, 10});
    CHECK_THROWS_AS(Ratio::Parse("1-10"), Error);
  }

  TEST_CASE("shuffled labels sit near chance") {
    Rng rng(6);
    std::vector<LabeledScore> s;
    for (int i = 0; i < 400; ++i) {
      s.push_back({rng.Normal(), i < 200 ? Label::kMember : Label::kNonMember});
    }
    EvalReport rep = Evaluate(s, Ratio{1, 1}, 5, 2);
    CHECK(std::abs(rep.auc.mean - 50.0) <= 5.0);
  }

  TEST_CASE("single seed on full data equals direct metrics") {
    Rng rng(7);
    std::vector<LabeledScore> s;
    std::vector<double> pos, neg;
    for (int i = 0; i < 80; ++i) {
      double v = rng.Normal() + (i < 40 ? 0.8 : 0.0);
      s.push_back({v, i < 40 ? Label::kMember : Label::kNonMember});
      (i < 40 ? pos : neg).push_back(v);
    }
    EvalReport rep = Evaluate(s, Ratio{1, 1}, 1, 9);
    CHECK(rep.auc.mean == 100.0 * Auc(pos, neg));
    CHECK(rep.tpr_at_fpr.at(0.05).mean == 100.0 * TprAtFpr(pos, neg, 0.05));
  }

  TEST_CASE("summary stats recompute from per-seed values") {
    Rng rng(8);
    std::vector<LabeledScore> s;
    for (int i = 0; i < 300; ++i) {
      s.push_back({rng.Normal() + (i < 30 ? 1.0 : 0.0), i < 30 ? Label::kMember : Label::kNonMember});
    }
    EvalReport rep = Evaluate(s, Ratio{1, 5}, 5, 3);
    std::vector<double> aucs;
    for (const auto& r : rep.per_seed) aucs.push_back(r.auc);
    CHECK(Summarize(aucs).mean == rep.auc.mean);
    CHECK(Summarize(aucs).std == rep.auc.std);
    CHECK(rep.auc.mean >= 0.0);
    CHECK(rep.auc.mean <= 100.0);
  }
}

TEST_SUITE("set_level") {
  TEST_CASE("L = 1 reproduces the instance AUC") {
    Rng rng(9);
    std::vector<double> m(200), n(200);
    for (double& x : m) x = rng.Normal() + 0.7;
    for (double& x : n) x = rng.Normal();
    SetInferenceResult r = SetLevel(m, n, 1, 1000, 4);
    CHECK(std::abs(r.set_auc - 100.0 * Auc(m, n)) <= 2.0);
  }

  TEST_CASE("set AUC grows with L") {
    Rng rng(10);
    std::vector<double> m(100), n(100);
    for (double& x : m) x = rng.Normal() + 0.5;
    for (double& x : n) x = rng.Normal();
    double prev = 0.0;
    for (std::size_t L : {1u, 5u, 10u, 30u}) {
      const double a = SetLevel(m, n, L, 500, 11).set_auc;
      CHECK(a >= prev - 1.0);
      prev = a;
    }
    CHECK(prev > 95.0);
  }

  TEST_CASE("null p-values are calibrated") {
    std::vector<double> ps;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
      Rng rng(1000 + rep);
      std::vector<double> m(100), n(100);
      for (double& x : m) x = rng.Normal();
      for (double& x : n) x = rng.Normal();
      ps.push_back(SetLevel(m, n, 10, 100, rep).p_value);
    }
    std::size_t below = 0;
    for (double p : ps) {
      CHECK(p > 0.0);
      CHECK(p <= 1.0);
      if (p < 0.05) ++below;
    }
    CHECK(std::abs(static_cast<double>(below) / 200.0 - 0.05) <= 0.03);
    CHECK(KsDistanceToUniform(ps) < 0.1);
  }

  TEST_CASE("Mann-Whitney p-value against a normal-approximation oracle") {
    std::vector<double> a{3, 4, 5, 6, 6}, b{1, 2, 3, 4};
    // U counted pair by pair.
    const double u = oracle::PairAuc(a, b) * 20.0;
    const double p = oracle::MannWhitneyNormalP(a, b, u);
    CHECK(MannWhitneyGreaterPValue(a, b) == doctest::Approx(p).epsilon(1e-12));
    CHECK(MannWhitneyGreaterPValue(std::vector<double>{1, 1}, std::vector<double>{1, 1}) == 1.0);
  }

  TEST_CASE("pool smaller than L") {
    std::vector<double> m(5, 1.0), n(50, 0.0);
    CHECK_THROWS_AS(SetLevel(m, n, 10, 100, 0), Error);
  }
}

TEST_SUITE("distort") {
  PixelBuffer Ramp(int w, int h, int maxv) {
    PixelBuffer img(w, h, 1, maxv);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<std::uint16_t>((x * 37 + y * 11) % (maxv + 1));
    return img;
  }

  TEST_CASE("intensity zero is identity for every kind") {
    PixelBuffer img = Ramp(17, 9, 255);
    for (auto k : {DistortionKind::kGaussianNoise, DistortionKind::kBlur,
                   DistortionKind::kBrightness, DistortionKind::kShear}) {
      CHECK(EncodePnm(Distort(img, k, 0.0, 5)) == EncodePnm(img));
    }
  }

  TEST_CASE("brightness on constant 128") {
    PixelBuffer img(8, 8, 1, 255, 128);
    PixelBuffer out = Distort(img, DistortionKind::kBrightness, 1.0);
    for (auto v : out.data) CHECK(v == 192);
    PixelBuffer bright(4, 4, 1, 255, 200);
    for (auto v : Distort(bright, DistortionKind::kBrightness, 1.0).data) CHECK(v == 255);
  }

  TEST_CASE("shear displaces an impulse by row * factor") {
    const double intensity = 0.5;  // factor 0.15
    for (int y0 : {0, 3, 7, 13, 19}) {
      PixelBuffer img(40, 20, 1, 255, 0);
      const int x0 = 10;
      img.at(x0, y0) = 255;
      PixelBuffer out = Distort(img, DistortionKind::kShear, intensity);
      const int expect = static_cast<int>(std::lround(x0 + 0.15 * y0));
      for (int x = 0; x < 40; ++x) CHECK(out.at(x, y0) == (x == expect ? 255 : 0));
    }
  }

  TEST_CASE("gaussian noise has the configured spread and is seeded") {
    PixelBuffer img(100, 100, 1, 65535, 32768);
    PixelBuffer a = Distort(img, DistortionKind::kGaussianNoise, 0.5, 1);
    PixelBuffer b = Distort(img, DistortionKind::kGaussianNoise, 0.5, 1);
    CHECK(a == b);
    std::vector<double> d;
    for (auto v : a.data) d.push_back(static_cast<double>(v) - 32768.0);
    CHECK(StdDev(d) == doctest::Approx(0.05 * 65535).epsilon(0.05));
  }

  TEST_CASE("blur keeps a constant image constant and spreads an impulse") {
    PixelBuffer flat(12, 12, 1, 255, 77);
    CHECK(Distort(flat, DistortionKind::kBlur, 0.7) == flat);
    PixelBuffer imp(21, 21, 1, 65535, 0);
    imp.at(10, 10) = 65535;
    PixelBuffer out = Distort(imp, DistortionKind::kBlur, 0.5);
    CHECK(out.at(10, 10) < 65535);
    CHECK(out.at(11, 10) > 0);
    CHECK(out.at(11, 10) == out.at(9, 10));
  }

  TEST_CASE("unknown kind") {
    CHECK_THROWS_AS(ParseDistortion("jpeg"), Error);
    CHECK(ParseDistortion("shear") == DistortionKind::kShear);
  }

  TEST_CASE("pnm round trip") {
    PixelBuffer g = Ramp(5, 3, 65535);
    CHECK(DecodePnm(EncodePnm(g)) == g);
    PixelBuffer rgb(3, 2, 3, 255, 9);
    CHECK(DecodePnm(EncodePnm(rgb)) == rgb);
    CHECK_THROWS_AS(DecodePnm("P5\n3 3\n255\nab"), Error);
  }
}
