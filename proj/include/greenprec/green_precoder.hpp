#pragma once

#include "greenprec/channel_model.hpp"
#include "greenprec/linalg.hpp"
#include "greenprec/splitting_solver.hpp"

#include <json.hpp>

namespace greenprec {

/// Per-antenna one-bit DAC codebook {0, +-a +- ja} with a = sqrt(P / 2N).
struct PowerModel {
    double power_w = 1.0;
    int antennas_per_ap = 1;

    double amplitude() const;
};

struct PrecodeSolution {
    RealVector b_r;      // relaxed solver output (empty for linear baselines)
    ComplexVector x;     // codebook-valued transmit vector
    double beta = 0.0;   // receiver scale
    Mask active_mask;
    double mse = 0.0;
    int solver_iters = 0;
};

void to_json(nlohmann::json& j, const PrecodeSolution& sol);

struct Quantized {
    ComplexVector x;
    Mask active_mask;
};

/// Antenna m is off iff its group norm is <= tau_off times the largest group
/// norm; active antennas take the component signs of b_r.
Quantized quantize(const RealVector& b_r, const PowerModel& power, double tau_off);

/// Component-sign quantization of a complex vector restricted to a mask.
ComplexVector sign_quantize(const ComplexVector& w, const Mask& active, const PowerModel& power);

/// MSE-optimal positive receiver scale for a fixed transmit vector:
/// max(1e-12, Re(s^H H x) / (||Hx||^2 + K sigma^2)).
double optimal_beta(const ComplexVector& x, const ComplexVector& s, const ComplexMatrix& h, double sigma2);

/// ||s - beta H x||^2 + sigma^2 K beta^2.
double precode_mse(const ComplexVector& x, double beta, const ComplexVector& s, const ComplexMatrix& h,
                   double sigma2);

/// Fills beta and mse for a solution whose x is set.
void finalize_solution(PrecodeSolution& sol, const ComplexVector& s, const ChannelMatrix& channel);

/// Group-sparse one-bit precoder bound to one channel realization.
class GreenPrecoder {
public:
    GreenPrecoder(const ChannelMatrix& channel, PowerModel power, double tau_off);

    /// Throws PrecodeError when every antenna ends up switched off.
    PrecodeSolution precode(const ComplexVector& s, const SolverConfig& cfg,
                            const RealVector* c_init = nullptr, SolverState* final_state = nullptr,
                            const TraceSink& trace = {}) const;

    const DavisYinSolver& solver() const { return solver_; }

private:
    const ChannelMatrix* channel_;
    PowerModel power_;
    double tau_off_;
    DavisYinSolver solver_;
};

PrecodeSolution precode_symbol(const ComplexVector& s, const ChannelMatrix& channel, const SolverConfig& cfg,
                               const PowerModel& power, double tau_off);

}  // namespace greenprec
