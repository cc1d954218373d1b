#pragma once

#include "greenprec/linalg.hpp"

#include <functional>

namespace greenprec {

// Relaxed precoding problem over the real lift b_r in R^{2M}:
//
//   minimize  ||s_r - H_r b_r||^2  +  kappa ||b_r||_inf^2  +  lambda sum_m ||(b_r[m], b_r[M+m])||_2
//             \______ d1 ______/     \______ d2 ______/      \______________ d3 ______________/
//
// solved by Davis-Yin (forward Douglas-Rachford) splitting:
//
//   a = prox_{gamma d3}(c)
//   b = prox_{gamma d2}(2a - c - gamma grad d1(a))
//   c = c + psi (b - a)

struct SolverConfig {
    double lambda = 0.0;
    double gamma = 0.0;
    double psi = 1.0;
    int max_iters = 5000;
    double tolerance = 0.0;
    double kappa = 0.0;

    void validate() const;
};

struct SolverState {
    RealVector a_r;
    RealVector b_r;
    RealVector c_r;
    int iter = 0;
    double residual = 0.0;
    bool converged = false;
};

struct TraceRecord {
    int iter = 0;
    double objective = 0.0;
    double residual = 0.0;
};

using TraceSink = std::function<void(const TraceRecord&)>;

/// gamma = scale / (2 sigma_max^2(H_r)); scale 0.1 is the reference rule.
double default_step_size(double largest_singular_value_sq, double scale = 0.1);

/// Weight of the squared infinity norm: 2 N K sigma^2 / P.
double infinity_norm_weight(int antennas_per_ap, int num_ues, double sigma2, double power_w);

/// Default stopping tolerance on ||b_r - a_r||_2: 1e-6 sqrt(2M).
double default_tolerance(int num_antennas);

double objective(const RealVector& b_r, const RealVector& s_r, const RealMatrix& h_r, double kappa,
                 double lambda);

/// 2 H_r^T (H_r a_r - s_r).
RealVector grad_d1(const RealVector& a_r, const RealVector& s_r, const RealMatrix& h_r);

/// Block soft-threshold of each (m, M+m) pair; zero-norm groups map to zero.
RealVector prox_group_lasso(const RealVector& c_r, double threshold);

/// Proximal map of (w/2) ||.||_inf^2 by the sort / prefix-sum rule:
/// alpha = max(0, max_m (sum_{j<=m} f_j) / (w + m)) with f = |v| sorted
/// descending, then u = min(|v|, alpha) sgn(v), sgn(0) = +1.
RealVector prox_linf_sq(const RealVector& v, double w);

/// Same, writing into `out`; `scratch` is resized as needed.
void prox_linf_sq_into(const RealVector& v, double w, RealVector& out, RealVector& scratch);

/// Splitting engine for one channel. Caches the Gram matrix H_r^T H_r so
/// repeated solves over many symbol vectors cost O(M^2) per iteration.
class DavisYinSolver {
public:
    explicit DavisYinSolver(RealMatrix h_r);

    /// Column-masked variant: antennas with active[m] == false have both
    /// lifted columns zeroed.
    DavisYinSolver(const RealMatrix& h_r, const Mask& active);

    SolverState solve(const RealVector& s_r, const SolverConfig& cfg,
                      const RealVector* c_init = nullptr, const TraceSink& trace = {}) const;

    const RealMatrix& h_r() const { return h_r_; }
    int num_antennas() const { return static_cast<int>(h_r_.cols() / 2); }

private:
    RealMatrix h_r_;
    RealMatrix gram_;
};

/// One-shot solve; zero initial point when c_init is null.
SolverState solve(const RealVector& s_r, const RealMatrix& h_r, const SolverConfig& cfg,
                  const RealVector* c_init = nullptr, const TraceSink& trace = {});

}  // namespace greenprec
