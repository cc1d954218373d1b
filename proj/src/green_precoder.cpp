#include "greenprec/green_precoder.hpp"

#include "greenprec/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace greenprec {

double PowerModel::amplitude() const { return std::sqrt(power_w / (2.0 * antennas_per_ap)); }

void to_json(nlohmann::json& j, const PrecodeSolution& sol) {
    auto cvec = [](const ComplexVector& v) {
        nlohmann::json out = nlohmann::json::array();
        for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back({v[i].real(), v[i].imag()});
        return out;
    };
    j = nlohmann::json{
        {"b_r", std::vector<double>(sol.b_r.data(), sol.b_r.data() + sol.b_r.size())},
        {"x", cvec(sol.x)},
        {"beta", sol.beta},
        {"active_mask", std::vector<bool>(sol.active_mask.begin(), sol.active_mask.end())},
        {"mse", sol.mse},
        {"solver_iters", sol.solver_iters},
    };
}

Quantized quantize(const RealVector& b_r, const PowerModel& power, double tau_off) {
    if (!(tau_off >= 0.0 && tau_off < 1.0)) throw std::invalid_argument("quantize: tau_off must lie in [0, 1)");
    if (b_r.size() % 2 != 0) throw std::invalid_argument("quantize: b_r length must be even");
    const Eigen::Index m = b_r.size() / 2;
    RealVector norms(m);
    for (Eigen::Index i = 0; i < m; ++i) norms[i] = std::hypot(b_r[i], b_r[m + i]);
    const double peak = m > 0 ? norms.maxCoeff() : 0.0;
    const double cutoff = tau_off * peak;
    const double a = power.amplitude();

    Quantized q;
    q.x = ComplexVector::Zero(m);
    q.active_mask.assign(static_cast<std::size_t>(m), false);
    if (peak <= 0.0) return q;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (norms[i] <= cutoff) continue;
        q.active_mask[static_cast<std::size_t>(i)] = true;
        q.x[i] = Complex(a * sign_nonneg(b_r[i]), a * sign_nonneg(b_r[m + i]));
    }
    return q;
}

ComplexVector sign_quantize(const ComplexVector& w, const Mask& active, const PowerModel& power) {
    const double a = power.amplitude();
    ComplexVector x = ComplexVector::Zero(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (active[static_cast<std::size_t>(i)])
            x[i] = Complex(a * sign_nonneg(w[i].real()), a * sign_nonneg(w[i].imag()));
    }
    return x;
}

double optimal_beta(const ComplexVector& x, const ComplexVector& s, const ComplexMatrix& h, double sigma2) {
    if (x.isZero(0.0)) throw PrecodeError("all antennas deactivated");
    const ComplexVector hx = h * x;
    const double num = s.dot(hx).real();  // Re(s^H H x)
    const double den = hx.squaredNorm() + static_cast<double>(s.size()) * sigma2;
    constexpr double kMinBeta = 1e-12;
    return den > 0.0 ? std::max(kMinBeta, num / den) : kMinBeta;
}

double precode_mse(const ComplexVector& x, double beta, const ComplexVector& s, const ComplexMatrix& h,
                   double sigma2) {
    return (s - beta * (h * x)).squaredNorm() + sigma2 * static_cast<double>(s.size()) * beta * beta;
}

void finalize_solution(PrecodeSolution& sol, const ComplexVector& s, const ChannelMatrix& channel) {
    sol.beta = optimal_beta(sol.x, s, channel.h, channel.sigma2);
    sol.mse = precode_mse(sol.x, sol.beta, s, channel.h, channel.sigma2);
}

GreenPrecoder::GreenPrecoder(const ChannelMatrix& channel, PowerModel power, double tau_off)
    : channel_(&channel), power_(power), tau_off_(tau_off), solver_(channel.h_r) {}

PrecodeSolution GreenPrecoder::precode(const ComplexVector& s, const SolverConfig& cfg, const RealVector* c_init,
                                       SolverState* final_state, const TraceSink& trace) const {
    SolverState st = solver_.solve(lift(s), cfg, c_init, trace);
    Quantized q = quantize(st.a_r, power_, tau_off_);

    PrecodeSolution sol;
    sol.b_r = st.a_r;
    sol.x = std::move(q.x);
    sol.active_mask = std::move(q.active_mask);
    sol.solver_iters = st.iter;
    if (final_state != nullptr) *final_state = std::move(st);
    if (count_active(sol.active_mask) == 0) throw PrecodeError("all antennas deactivated");
    finalize_solution(sol, s, *channel_);
    return sol;
}

PrecodeSolution precode_symbol(const ComplexVector& s, const ChannelMatrix& channel, const SolverConfig& cfg,
                               const PowerModel& power, double tau_off) {
    return GreenPrecoder(channel, power, tau_off).precode(s, cfg);
}

}  // namespace greenprec
