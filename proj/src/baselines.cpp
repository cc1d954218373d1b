#include "greenprec/baselines.hpp"

#include "greenprec/errors.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace greenprec {

namespace {

constexpr std::array<std::pair<PrecoderKind, std::string_view>, 7> kNames{{
    {PrecoderKind::Green, "GREEN"},
    {PrecoderKind::Rzf1, "RZF1"},
    {PrecoderKind::Squid, "SQUID"},
    {PrecoderKind::Rzf1Aligned, "RZF1_ALIGNED"},
    {PrecoderKind::SquidAligned, "SQUID_ALIGNED"},
    {PrecoderKind::Rzf1Acr, "RZF1_ACR"},
    {PrecoderKind::SquidAcr, "SQUID_ACR"},
}};

void check_mask(const Mask& mask, int m) {
    if (static_cast<int>(mask.size()) != m) throw std::invalid_argument("active mask length must equal M");
    if (count_active(mask) == 0) throw PrecodeError("active mask has no active antenna");
}

}  // namespace

std::string_view to_string(PrecoderKind kind) {
    for (const auto& [k, name] : kNames)
        if (k == kind) return name;
    return "UNKNOWN";
}

std::optional<PrecoderKind> parse_precoder(std::string_view name) {
    for (const auto& [k, n] : kNames)
        if (n == name) return k;
    return std::nullopt;
}

bool is_aligned(PrecoderKind kind) {
    return kind == PrecoderKind::Rzf1Aligned || kind == PrecoderKind::SquidAligned;
}

bool is_acr(PrecoderKind kind) { return kind == PrecoderKind::Rzf1Acr || kind == PrecoderKind::SquidAcr; }

bool is_lambda_independent(PrecoderKind kind) {
    return kind == PrecoderKind::Rzf1 || kind == PrecoderKind::Squid;
}

double default_rzf_regularizer(int num_ues, double sigma2, double power_w) {
    return num_ues * sigma2 / power_w;
}

PrecodeSolution rzf_precode(const ComplexVector& s, const ChannelMatrix& channel, const Mask& active_mask,
                            const PowerModel& power, double regularizer) {
    const int m = channel.num_antennas();
    const int k = channel.num_ues();
    check_mask(active_mask, m);

    ComplexMatrix h_a = channel.h;
    for (int i = 0; i < m; ++i)
        if (!active_mask[static_cast<std::size_t>(i)]) h_a.col(i).setZero();

    ComplexMatrix gram = h_a * h_a.adjoint();
    gram.diagonal().array() += regularizer;
    Eigen::LLT<ComplexMatrix> llt(gram);
    if (llt.info() != Eigen::Success) throw PrecodeError("rzf: regularized Gram matrix is singular");
    const ComplexVector w = h_a.adjoint() * llt.solve(s);
    if (w.size() != m || k != s.size()) throw std::logic_error("rzf: dimension mismatch");

    PrecodeSolution sol;
    sol.active_mask = active_mask;
    sol.x = sign_quantize(w, active_mask, power);
    finalize_solution(sol, s, channel);
    return sol;
}

PrecodeSolution squid_precode(const ComplexVector& s, const ChannelMatrix& channel, const Mask& active_mask,
                              const SolverConfig& cfg, const PowerModel& power, const DavisYinSolver& solver) {
    check_mask(active_mask, channel.num_antennas());
    SolverConfig plain = cfg;
    plain.lambda = 0.0;
    const SolverState st = solver.solve(lift(s), plain);

    const Eigen::Index m = channel.num_antennas();
    ComplexVector relaxed(m);
    for (Eigen::Index i = 0; i < m; ++i) relaxed[i] = Complex(st.a_r[i], st.a_r[m + i]);

    PrecodeSolution sol;
    sol.b_r = st.a_r;
    sol.solver_iters = st.iter;
    sol.active_mask = active_mask;
    sol.x = sign_quantize(relaxed, active_mask, power);
    finalize_solution(sol, s, channel);
    return sol;
}

PrecodeSolution squid_precode(const ComplexVector& s, const ChannelMatrix& channel, const Mask& active_mask,
                              const SolverConfig& cfg, const PowerModel& power) {
    return squid_precode(s, channel, active_mask, cfg, power, DavisYinSolver(channel.h_r, active_mask));
}

Mask acr_mask(int target_active, int num_antennas, RandomStream& rng) {
    if (target_active < 1 || target_active > num_antennas)
        throw std::invalid_argument("acr_mask: target_active must lie in [1, M]");
    std::vector<int> idx(static_cast<std::size_t>(num_antennas));
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates.
    for (int i = 0; i < target_active; ++i) {
        std::uniform_int_distribution<int> pick(i, num_antennas - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
    }
    Mask mask(static_cast<std::size_t>(num_antennas), false);
    for (int i = 0; i < target_active; ++i) mask[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = true;
    return mask;
}

}  // namespace greenprec
