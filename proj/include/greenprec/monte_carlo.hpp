#pragma once

#include "greenprec/baselines.hpp"
#include "greenprec/channel_model.hpp"
#include "greenprec/green_precoder.hpp"
#include "greenprec/splitting_solver.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace greenprec {

// ---------------------------------------------------------------------------
// QPSK

/// Gray-mapped unit-energy QPSK; bits[2k], bits[2k+1] map to UE k as
/// ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2).
ComplexVector qpsk_modulate(std::span<const std::uint8_t> bits);

/// Component-sign detection; a zero component decides bit 0.
std::pair<std::uint8_t, std::uint8_t> qpsk_demodulate(Complex s_hat);

// ---------------------------------------------------------------------------
// Transmission

/// beta (H x + noise).
ComplexVector transmit_symbol(const PrecodeSolution& sol, const ChannelMatrix& channel,
                              const ComplexVector& noise);

/// Draws noise ~ CN(0, sigma^2 I_K) from rng, then transmits.
ComplexVector transmit_symbol(const PrecodeSolution& sol, const ChannelMatrix& channel, RandomStream& rng);

ComplexVector draw_noise(int num_ues, double sigma2, RandomStream& rng);

// ---------------------------------------------------------------------------
// Experiment

struct SolverSettings {
    double gamma_scale = 0.1;
    double psi = 1.0;
    int max_iters = 5000;
    std::optional<double> tolerance;  // default: 1e-6 sqrt(2M)
    bool warm_start = false;
};

std::vector<PrecoderKind> all_precoders();

struct ExperimentPlan {
    NetworkConfig network;
    SolverSettings solver;
    std::vector<double> lambdas{1.0, 10.0, 15.0, 20.0, 25.0};
    std::int64_t bits_per_ue = 1'000'000;
    int num_setups = 10;
    std::vector<PrecoderKind> precoders = all_precoders();
    std::uint64_t master_seed = 1;
    double tau_off = 1e-3;
    std::optional<double> rzf_regularizer;  // default: K sigma^2 / P
    double max_failure_rate = 0.01;

    void validate() const;
    std::int64_t symbols_per_setup() const { return bits_per_ue / 2; }
};

/// Solver configuration used for one setup at one lambda.
SolverConfig make_solver_config(const ExperimentPlan& plan, const ChannelMatrix& channel, double lambda);

struct Progress {
    int setup = 0;
    std::int64_t symbols_done = 0;
    std::int64_t symbols_total = 0;
    double running_ber = 0.0;  // first lambda, first precoder
};

struct RunOptions {
    int threads = 1;
    bool trace = false;
    std::function<void(const Progress&)> progress;
};

struct PrecoderResult {
    double lambda = 0.0;
    PrecoderKind kind = PrecoderKind::Green;
    std::vector<double> per_ue_avg_ber;
    std::vector<double> per_ue_ranked_ber;
    double overall_avg_ber = 0.0;
    double avg_active_antennas = 0.0;
    std::int64_t failures = 0;
};

struct SetupSeeds {
    int setup = 0;
    std::uint64_t geometry_seed = 0;
    std::uint64_t channel_seed = 0;
};

struct TraceEntry {
    int setup = 0;
    double lambda = 0.0;
    std::vector<TraceRecord> records;
};

struct RunResult {
    std::vector<double> lambdas;
    std::vector<PrecoderKind> precoders;
    std::vector<PrecoderResult> entries;            // [lambda][precoder], row-major
    std::vector<double> avg_active_antennas;        // green precoder, per lambda
    std::vector<std::vector<double>> setup_active;  // [setup][lambda], green precoder
    std::int64_t monotone_checks = 0;               // per-symbol adjacent-lambda comparisons
    std::int64_t monotone_violations = 0;
    std::int64_t precode_calls = 0;
    std::int64_t failures = 0;
    int num_antennas = 0;
    std::map<std::string, double> timings_s;
    std::vector<SetupSeeds> seed_manifest;
    std::vector<TraceEntry> traces;

    const PrecoderResult& at(std::size_t lambda_index, std::size_t precoder_index) const {
        return entries.at(lambda_index * precoders.size() + precoder_index);
    }
    const PrecoderResult& find(double lambda, PrecoderKind kind) const;
};

class RunAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Channel realization of one setup, derived from (master_seed, setup).
ChannelRealization setup_channel(const ExperimentPlan& plan, int setup);

/// Deterministic for a given plan regardless of options.threads.
RunResult run_experiment(const ExperimentPlan& plan, const RunOptions& options = {});

}  // namespace greenprec
