#include "greenprec/splitting_solver.hpp"

#include "greenprec/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace greenprec {

namespace {

void check_even(Eigen::Index n, const char* what) {
    if (n % 2 != 0) throw std::invalid_argument(std::string(what) + ": length must be even (real lift)");
}

void prox_group_lasso_into(const RealVector& c_r, double threshold, RealVector& out) {
    const Eigen::Index m = c_r.size() / 2;
    out.resize(c_r.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        const double re = c_r[i], im = c_r[m + i];
        const double norm = std::hypot(re, im);
        const double scale = norm > 0.0 ? std::max(0.0, 1.0 - threshold / norm) : 0.0;
        out[i] = scale * re;
        out[m + i] = scale * im;
    }
}

}  // namespace

void SolverConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda", "must be >= 0");
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma", "must be > 0");
    if (!(psi > 0.0 && psi < 2.0)) throw ConfigError("psi", "must lie in (0, 2)");
    if (max_iters < 1) throw ConfigError("max_iters", "must be >= 1");
    if (!(tolerance >= 0.0)) throw ConfigError("tolerance", "must be >= 0");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa", "must be > 0");
}

double default_step_size(double largest_singular_value_sq, double scale) {
    if (!(largest_singular_value_sq > 0.0)) throw std::invalid_argument("default_step_size: channel has zero spectral norm");
    return scale / (2.0 * largest_singular_value_sq);
}

double infinity_norm_weight(int antennas_per_ap, int num_ues, double sigma2, double power_w) {
    return 2.0 * antennas_per_ap * num_ues * sigma2 / power_w;
}

double default_tolerance(int num_antennas) { return 1e-6 * std::sqrt(2.0 * num_antennas); }

double objective(const RealVector& b_r, const RealVector& s_r, const RealMatrix& h_r, double kappa,
                 double lambda) {
    if (h_r.rows() != s_r.size() || h_r.cols() != b_r.size())
        throw std::invalid_argument("objective: dimension mismatch");
    check_even(b_r.size(), "objective");
    const Eigen::Index m = b_r.size() / 2;
    const double fit = (s_r - h_r * b_r).squaredNorm();
    const double peak = b_r.size() > 0 ? b_r.cwiseAbs().maxCoeff() : 0.0;
    double groups = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) groups += std::hypot(b_r[i], b_r[m + i]);
    return fit + kappa * peak * peak + lambda * groups;
}

RealVector grad_d1(const RealVector& a_r, const RealVector& s_r, const RealMatrix& h_r) {
    if (h_r.rows() != s_r.size() || h_r.cols() != a_r.size())
        throw std::invalid_argument("grad_d1: dimension mismatch");
    return 2.0 * h_r.transpose() * (h_r * a_r - s_r);
}

RealVector prox_group_lasso(const RealVector& c_r, double threshold) {
    check_even(c_r.size(), "prox_group_lasso");
    if (!(threshold >= 0.0)) throw std::invalid_argument("prox_group_lasso: threshold must be >= 0");
    RealVector out;
    prox_group_lasso_into(c_r, threshold, out);
    return out;
}

void prox_linf_sq_into(const RealVector& v, double w, RealVector& out, RealVector& scratch) {
    const Eigen::Index n = v.size();
    out.resize(n);
    if (n == 0) return;
    scratch = v.cwiseAbs();
    std::sort(scratch.data(), scratch.data() + n, std::greater<>());
    double prefix = 0.0;
    double alpha = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
        prefix += scratch[m];
        alpha = std::max(alpha, prefix / (w + static_cast<double>(m + 1)));
    }
    for (Eigen::Index m = 0; m < n; ++m) out[m] = std::min(std::abs(v[m]), alpha) * sign_nonneg(v[m]);
}

RealVector prox_linf_sq(const RealVector& v, double w) {
    if (!(w >= 0.0)) throw std::invalid_argument("prox_linf_sq: weight must be >= 0");
    RealVector out, scratch;
    prox_linf_sq_into(v, w, out, scratch);
    return out;
}

DavisYinSolver::DavisYinSolver(RealMatrix h_r) : h_r_(std::move(h_r)) {
    check_even(h_r_.cols(), "DavisYinSolver");
    gram_ = h_r_.transpose() * h_r_;
}

DavisYinSolver::DavisYinSolver(const RealMatrix& h_r, const Mask& active) : h_r_(h_r) {
    check_even(h_r_.cols(), "DavisYinSolver");
    const Eigen::Index m = h_r_.cols() / 2;
    if (static_cast<Eigen::Index>(active.size()) != m)
        throw std::invalid_argument("DavisYinSolver: mask length must equal the antenna count");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!active[static_cast<std::size_t>(i)]) {
            h_r_.col(i).setZero();
            h_r_.col(m + i).setZero();
        }
    }
    gram_ = h_r_.transpose() * h_r_;
}

SolverState DavisYinSolver::solve(const RealVector& s_r, const SolverConfig& cfg,
                                  const RealVector* c_init, const TraceSink& trace) const {
    cfg.validate();
    const Eigen::Index n = h_r_.cols();
    if (s_r.size() != h_r_.rows()) throw std::invalid_argument("solve: symbol length must equal 2K");
    if (c_init != nullptr && c_init->size() != n)
        throw std::invalid_argument("solve: initial point must have length 2M");

    const RealVector hts = h_r_.transpose() * s_r;
    const double shrink = cfg.gamma * cfg.lambda;
    const double linf_weight = 2.0 * cfg.gamma * cfg.kappa;  // 4 N K sigma^2 gamma / P

    SolverState st;
    st.c_r = c_init != nullptr ? *c_init : RealVector::Zero(n);
    RealVector grad(n), v(n), scratch(n);

    for (int it = 1; it <= cfg.max_iters; ++it) {
        prox_group_lasso_into(st.c_r, shrink, st.a_r);
        grad.noalias() = gram_ * st.a_r;
        grad = 2.0 * (grad - hts);
        v = 2.0 * st.a_r - st.c_r - cfg.gamma * grad;
        prox_linf_sq_into(v, linf_weight, st.b_r, scratch);
        st.c_r += cfg.psi * (st.b_r - st.a_r);
        st.residual = (st.b_r - st.a_r).norm();
        st.iter = it;

        if (!std::isfinite(st.residual) || !st.c_r.allFinite()) throw SolverDiverged(it);
        if (trace) trace({it, objective(st.a_r, s_r, h_r_, cfg.kappa, cfg.lambda), st.residual});
        if (st.residual <= cfg.tolerance) {
            st.converged = true;
            break;
        }
    }
    return st;
}

SolverState solve(const RealVector& s_r, const RealMatrix& h_r, const SolverConfig& cfg,
                  const RealVector* c_init, const TraceSink& trace) {
    return DavisYinSolver(h_r).solve(s_r, cfg, c_init, trace);
}

}  // namespace greenprec
