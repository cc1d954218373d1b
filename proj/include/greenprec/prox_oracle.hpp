#pragma once

#include "greenprec/linalg.hpp"

#include <cstdint>

// Brute-force reference evaluations of the two proximal maps. They share no
// code with the closed-form operators and exist to cross-check them.
namespace greenprec::oracle {

/// argmin_u 1/2 ||u - v||^2 + (w/2) ||u||_inf^2, found by bisection on the
/// derivative of the clipped objective over the clipping level alpha.
RealVector prox_linf_sq_search(const RealVector& v, double w);

/// argmin_u 1/2 ||u - c||^2 + t ||u||_2 for u in R^2, found by nested
/// bisection on the (sub)gradient of the two coordinates.
Eigen::Vector2d prox_group_search(const Eigen::Vector2d& c, double t);

/// Applies prox_group_search to every (m, M+m) pair.
RealVector prox_group_lasso_search(const RealVector& c_r, double t);

struct ProxCheckReport {
    int cases = 0;
    double linf_max_deviation = 0.0;
    double group_max_deviation = 0.0;
    int zero_weight_cases = 0;
};

/// Random instances (dimension <= 16, every fifth with zero weight) compared
/// against the closed-form operators.
ProxCheckReport run_prox_check(int n_cases, std::uint64_t seed);

}  // namespace greenprec::oracle
