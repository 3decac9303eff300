#include "sdmia/synthworld/probes.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "sdmia/common/error.hpp"
#include "sdmia/common/hash.hpp"
#include "sdmia/common/rng.hpp"
#include "sdmia/common/text.hpp"
#include "sdmia/scoring/relevance.hpp"

namespace sdmia::synthworld {

namespace {

enum : std::uint64_t { kTagDx = 0xa77e, kTagRsr, kTagDrop, kTagImageSide };

Vec Add(std::span<const double> a, std::span<const double> b) {
  Vec out(a.begin(), a.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

// Central differences of a scalar function of z, one coordinate at a time.
template <typename F>
Vec FiniteDifferenceGradient(F f, std::size_t d) {
  constexpr double h = 1e-3;
  Vec g(d);
  Vec z(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    z[i] = h;
    const double up = f(z);
    z[i] = -h;
    const double down = f(z);
    z[i] = 0.0;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace

AttenuationProbe ProbeVisualAttenuation(const SynthWorld& world, std::span<const double> x_member,
                                        std::span<const double> x_nonmember, double dx_norm,
                                        std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorCode::kValidation, "trials must be positive");
  if (dx_norm < 0.0) throw Error(ErrorCode::kValidation, "dx norm must be non-negative");
  const std::size_t d = world.dim();
  if (x_member.size() != d || x_nonmember.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "probe images must match the world dimension");
  }
  const Vec& gm = world.RelevanceGradient(true);
  const Vec& gn = world.RelevanceGradient(false);
  auto p = [&](const Vec& g, std::span<const double> x) { return Dot(g, world.EncodeImage(x)); };

  AttenuationProbe out;
  const Vec grad = FiniteDifferenceGradient(
      [&](const Vec& z) { return Dot(gm, z) - Dot(gn, z); }, d);
  out.gradient_norm = Norm(grad);
  out.bound = world.spec().encoder_contraction * dx_norm * out.gradient_norm;

  const double pm0 = p(gm, x_member);
  const double pn0 = p(gn, x_nonmember);
  Rng rng(DeriveSeed(seed, {kTagDx}));
  for (std::size_t t = 0; t < trials; ++t) {
    const Vec dx = rng.RandomDirection(d, 1.0);
    Vec scaled(d);
    for (std::size_t i = 0; i < d; ++i) scaled[i] = dx_norm * dx[i];
    const double dpm = p(gm, Add(x_member, scaled)) - pm0;
    const double dpn = p(gn, Add(x_nonmember, scaled)) - pn0;
    const double gap = dx_norm == 0.0 ? 0.0 : std::abs(dpm - dpn);
    out.gaps.push_back(gap);
    out.max_gap = std::max(out.max_gap, gap);
    // Rounding in the encoder and the finite differences is far below 1e-9.
    if (gap > out.bound * (1.0 + 1e-9) + 1e-12) out.within_bound = false;
  }
  out.mean_gap = Mean(out.gaps);
  return out;
}

RsrCurve ProbeRsr(const SynthWorld& world, const std::vector<double>& norms, std::size_t trials,
                  std::uint64_t seed) {
  if (norms.size() < 2) throw Error(ErrorCode::kValidation, "RSR needs at least two norms");
  if (!std::is_sorted(norms.begin(), norms.end()) || norms.front() < 0.0) {
    throw Error(ErrorCode::kValidation, "RSR norms must be ascending and non-negative");
  }
  if (trials == 0) throw Error(ErrorCode::kValidation, "trials must be positive");
  const std::size_t d = world.dim();
  const std::size_t n = world.members().size();
  std::vector<WorldSample> nonmembers;
  for (std::size_t i = 0; i < std::min(n, trials); ++i) nonmembers.push_back(world.NonMember(i));

  auto relevance_at = [&](const WorldSample& s, double norm, std::uint64_t stream,
                          std::size_t t) {
    Rng rng(DeriveSeed(seed, {kTagRsr, stream, t, std::bit_cast<std::uint64_t>(norm)}));
    const Vec delta = rng.RandomDirection(d, norm);
    const Vec c = Add(s.caption_embedding, delta);
    return world.Relevance(s.image, world.GenerateFromEmbedding(c, DeriveSeed(seed, {t})));
  };

  // Threshold from unperturbed relevance.
  double member0 = 0.0, nonmember0 = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    member0 += relevance_at(world.members()[t % n], 0.0, 0, t);
    nonmember0 += relevance_at(nonmembers[t % nonmembers.size()], 0.0, 1, t);
  }
  RsrCurve curve;
  curve.threshold = 0.5 * (member0 + nonmember0) / static_cast<double>(trials);
  curve.perturbation_norms = norms;
  for (double norm : norms) {
    std::size_t ms = 0, ns = 0;
    for (std::size_t t = 0; t < trials; ++t) {
      ms += relevance_at(world.members()[t % n], norm, 0, t) >= curve.threshold;
      ns += relevance_at(nonmembers[t % nonmembers.size()], norm, 1, t) >= curve.threshold;
    }
    curve.member_rsr.push_back(static_cast<double>(ms) / static_cast<double>(trials));
    curve.nonmember_rsr.push_back(static_cast<double>(ns) / static_cast<double>(trials));
  }
  return curve;
}

std::string RsrCsv(const RsrCurve& curve) {
  std::string out = "norm,member_rsr,nonmember_rsr\n";
  for (std::size_t i = 0; i < curve.perturbation_norms.size(); ++i) {
    out += FormatDouble(curve.perturbation_norms[i]) + "," + FormatDouble(curve.member_rsr[i]) +
           "," + FormatDouble(curve.nonmember_rsr[i]) + "\n";
  }
  return out;
}

RelevanceDrops MeasureRelevanceDrops(const SynthWorld& world, double norm, std::size_t trials,
                                     std::uint64_t seed) {
  const std::size_t d = world.dim();
  const std::size_t n = world.members().size();
  RelevanceDrops out;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t gen_seed = DeriveSeed(seed, {t});
    Rng rng(DeriveSeed(seed, {kTagDrop, t}));
    const Vec delta = rng.RandomDirection(d, norm);
    auto drop = [&](const WorldSample& s) {
      const double r0 =
          world.Relevance(s.image, world.GenerateFromEmbedding(s.caption_embedding, gen_seed));
      const double r1 = world.Relevance(
          s.image, world.GenerateFromEmbedding(Add(s.caption_embedding, delta), gen_seed));
      return r0 - r1;
    };
    out.member.push_back(drop(world.members()[t % n]));
    out.nonmember.push_back(drop(world.NonMember(t % n)));
  }
  return out;
}

double ImageSideScore(const SynthWorld& world, std::span<const double> x,
                      const ImageSideOptions& opts, std::uint64_t seed) {
  const std::size_t d = world.dim();
  const double sigma = world.RecognizedMember(x) ? world.spec().member_noise
                                                  : world.spec().background_noise;
  const double dx_norm = opts.dx_fraction * Norm(x);
  const Vec base(x.begin(), x.end());
  const Vec shift0 = world.EncodeImage(Vec(d, 0.0));
  auto reconstruct = [&](const Vec& encoded_shift, std::size_t g) {
    const Vec noise = world.Noise(DeriveSeed(seed, {kTagImageSide, g}));
    Vec out = base;
    for (std::size_t i = 0; i < d; ++i) out[i] += encoded_shift[i] + sigma * noise[i];
    return out;
  };
  std::vector<double> unperturbed;
  for (std::size_t g = 0; g < opts.generations; ++g) {
    unperturbed.push_back(world.Relevance(x, reconstruct(shift0, g)));
  }
  std::vector<double> perturbed;
  Rng rng(DeriveSeed(seed, {kTagDx}));
  for (std::size_t p = 0; p < opts.perturbations; ++p) {
    const Vec shift = world.EncodeImage(rng.RandomDirection(d, dx_norm));
    for (std::size_t g = 0; g < opts.generations; ++g) {
      perturbed.push_back(world.Relevance(x, reconstruct(shift, g)));
    }
  }
  return scoring::PoolTopK(perturbed, opts.k_percent).value -
         scoring::PoolTopK(unperturbed, opts.k_percent).value;
}

}  // namespace sdmia::synthworld
