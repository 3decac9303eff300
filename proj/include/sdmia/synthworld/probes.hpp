#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdmia/synthworld/world.hpp"

namespace sdmia::synthworld {

// Image-side attenuation through the contractive encoder. The reconstruction
// relevance of a sample is modelled as a linear functional of the encoded
// image, p(z) = <g, z>, with separate gradients g for a member and a
// non-member. Each trial draws a random dx of the given norm and measures
// gap = |dp_member - dp_nonmember|; the bound is xi * |dx| * |grad(p_m - p_n)|
// with the gradient norm measured by central finite differences.
struct AttenuationProbe {
  std::vector<double> gaps;
  double mean_gap = 0.0;
  double max_gap = 0.0;
  double bound = 0.0;
  double gradient_norm = 0.0;
  bool within_bound = true;
};

AttenuationProbe ProbeVisualAttenuation(const SynthWorld& world, std::span<const double> x_member,
                                        std::span<const double> x_nonmember, double dx_norm,
                                        std::size_t trials, std::uint64_t seed);

struct RsrCurve {
  std::vector<double> perturbation_norms;
  std::vector<double> member_rsr;
  std::vector<double> nonmember_rsr;
  double threshold = 0.0;
};

// Perturbs caption embeddings directly by random vectors of each norm and
// counts generations whose relevance to the target reaches the threshold,
// the midpoint of the mean unperturbed member and non-member relevance.
// Trial t uses member t mod n and non-member t mod n.
RsrCurve ProbeRsr(const SynthWorld& world, const std::vector<double>& norms, std::size_t trials,
                  std::uint64_t seed);
std::string RsrCsv(const RsrCurve& curve);

// Mean relevance drop (unperturbed minus perturbed) for members and for
// non-members at one caption-embedding perturbation norm, one value per trial.
struct RelevanceDrops {
  std::vector<double> member;
  std::vector<double> nonmember;
};
RelevanceDrops MeasureRelevanceDrops(const SynthWorld& world, double norm, std::size_t trials,
                                     std::uint64_t seed);

// Image-side analog of the audit: the image itself is perturbed by random dx
// (norm = dx_fraction * |x|), reconstructed through the contractive encoder
// as x + xi * U dx plus generation noise (sigma_m when x is a recognised
// member photo, sigma_b otherwise), and scored exactly like the text-side
// audit: pooled perturbed relevance minus pooled unperturbed relevance.
struct ImageSideOptions {
  std::size_t perturbations = 15;
  std::size_t generations = 10;
  double k_percent = 30.0;
  double dx_fraction = 0.5;
};
double ImageSideScore(const SynthWorld& world, std::span<const double> x,
                      const ImageSideOptions& opts, std::uint64_t seed);

}  // namespace sdmia::synthworld
