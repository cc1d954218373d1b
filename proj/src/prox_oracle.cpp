#include "greenprec/prox_oracle.hpp"

#include "greenprec/rng.hpp"
#include "greenprec/splitting_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace greenprec::oracle {

namespace {

constexpr int kBisections = 200;

// Root of a nondecreasing function on [lo, hi], assuming f(lo) <= 0 <= f(hi).
template <class F>
double bisect(F&& f, double lo, double hi) {
    for (int i = 0; i < kBisections && hi > lo; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

RealVector prox_linf_sq_search(const RealVector& v, double w) {
    if (!(w >= 0.0)) throw std::invalid_argument("prox_linf_sq_search: weight must be >= 0");
    if (v.size() == 0) return v;
    const RealVector e = v.cwiseAbs();
    const double top = e.maxCoeff();
    // phi(alpha) = 1/2 sum (e_i - alpha)_+^2 + (w/2) alpha^2 is convex on [0, top].
    auto dphi = [&](double alpha) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < e.size(); ++i) s += std::max(0.0, e[i] - alpha);
        return w * alpha - s;
    };
    double alpha = 0.0;
    if (top > 0.0) alpha = dphi(top) <= 0.0 ? top : bisect(dphi, 0.0, top);
    RealVector u(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = std::clamp(v[i], -alpha, alpha);
    return u;
}

Eigen::Vector2d prox_group_search(const Eigen::Vector2d& c, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("prox_group_search: t must be >= 0");
    const double bound = std::abs(c[0]) + std::abs(c[1]) + 1.0;

    // Partial derivative in coordinate i at u; at the origin the penalty's
    // subgradient is taken as zero, which only matters on a null set.
    auto partial = [&](const Eigen::Vector2d& u, int i) {
        const double nu = u.norm();
        return u[i] - c[i] + (nu > 0.0 ? t * u[i] / nu : 0.0);
    };
    auto inner = [&](double u0) {
        auto f = [&](double u1) { return partial(Eigen::Vector2d(u0, u1), 1); };
        return bisect(f, -bound, bound);
    };
    auto outer = [&](double u0) { return partial(Eigen::Vector2d(u0, inner(u0)), 0); };
    const double u0 = bisect(outer, -bound, bound);
    return {u0, inner(u0)};
}

RealVector prox_group_lasso_search(const RealVector& c_r, double t) {
    const Eigen::Index m = c_r.size() / 2;
    RealVector out(c_r.size());
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Vector2d u = prox_group_search({c_r[i], c_r[m + i]}, t);
        out[i] = u[0];
        out[m + i] = u[1];
    }
    return out;
}

ProxCheckReport run_prox_check(int n_cases, std::uint64_t seed) {
    if (n_cases < 1) throw std::invalid_argument("run_prox_check: n_cases must be >= 1");
    RandomStream rng(splitmix64(seed));
    std::uniform_int_distribution<int> dim(1, 8);  // groups; real dimension 2..16
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    std::uniform_real_distribution<double> weight(0.0, 20.0);

    ProxCheckReport report;
    report.cases = n_cases;
    for (int c = 0; c < n_cases; ++c) {
        const int m = dim(rng);
        const double amp = scale(rng);
        RealVector v(2 * m);
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = amp * normal(rng);
        const bool zero_weight = c % 5 == 0;
        const double w = zero_weight ? 0.0 : weight(rng);
        const double t = zero_weight ? 0.0 : amp * weight(rng) / 10.0;
        report.zero_weight_cases += zero_weight ? 1 : 0;

        const double d_linf = (prox_linf_sq(v, w) - prox_linf_sq_search(v, w)).cwiseAbs().maxCoeff();
        const double d_group = (prox_group_lasso(v, t) - prox_group_lasso_search(v, t)).cwiseAbs().maxCoeff();
        report.linf_max_deviation = std::max(report.linf_max_deviation, d_linf);
        report.group_max_deviation = std::max(report.group_max_deviation, d_group);
    }
    return report;
}

}  // namespace greenprec::oracle
