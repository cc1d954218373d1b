#pragma once

#include "greenprec/green_precoder.hpp"
#include "greenprec/rng.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace greenprec {

enum class PrecoderKind {
    Green,
    Rzf1,
    Squid,
    Rzf1Aligned,
    SquidAligned,
    Rzf1Acr,
    SquidAcr,
};

std::string_view to_string(PrecoderKind kind);
std::optional<PrecoderKind> parse_precoder(std::string_view name);

/// True for variants that reuse the green precoder's active set.
bool is_aligned(PrecoderKind kind);
/// True for variants that draw a random active set of the green precoder's size.
bool is_acr(PrecoderKind kind);
/// True for variants whose output does not depend on lambda.
bool is_lambda_independent(PrecoderKind kind);

/// K sigma^2 / P.
double default_rzf_regularizer(int num_ues, double sigma2, double power_w);

/// One-bit RZF on the column-masked channel:
/// w = H_a^H (H_a H_a^H + reg I)^{-1} s, then component signs on active antennas.
PrecodeSolution rzf_precode(const ComplexVector& s, const ChannelMatrix& channel, const Mask& active_mask,
                            const PowerModel& power, double regularizer);

/// SQUID-style baseline: the same splitting engine with lambda = 0 on the
/// column-masked channel, every active antenna quantized (no zero level).
PrecodeSolution squid_precode(const ComplexVector& s, const ChannelMatrix& channel, const Mask& active_mask,
                              const SolverConfig& cfg, const PowerModel& power);

/// Same, with a prebuilt (masked) solver.
PrecodeSolution squid_precode(const ComplexVector& s, const ChannelMatrix& channel, const Mask& active_mask,
                              const SolverConfig& cfg, const PowerModel& power, const DavisYinSolver& solver);

/// Uniformly random subset of exactly target_active antennas.
Mask acr_mask(int target_active, int num_antennas, RandomStream& rng);

}  // namespace greenprec
