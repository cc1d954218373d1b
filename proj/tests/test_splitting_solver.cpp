#include "generators.hpp"
#include "reference_solver.hpp"

#include "greenprec/errors.hpp"
#include "greenprec/prox_oracle.hpp"
#include "greenprec/splitting_solver.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <numeric>

using namespace greenprec;
using testing_support::random_channel;
using testing_support::random_qpsk;
using testing_support::random_real;
using testing_support::random_tied;

namespace {

SolverConfig config_for(const ChannelMatrix& ch, double lambda, int max_iters, double tol) {
    SolverConfig cfg;
    cfg.lambda = lambda;
    cfg.gamma = default_step_size(ch.largest_singular_value_sq);
    cfg.kappa = infinity_norm_weight(1, ch.num_ues(), ch.sigma2, 1.0);
    cfg.max_iters = max_iters;
    cfg.tolerance = tol;
    return cfg;
}

RealVector vec(std::initializer_list<double> xs) {
    RealVector v(static_cast<Eigen::Index>(xs.size()));
    std::copy(xs.begin(), xs.end(), v.data());
    return v;
}

}  // namespace

TEST_CASE("group soft-threshold") {
    CHECK(prox_group_lasso(RealVector::Zero(6), 1.0).isZero(0.0));
    // groups are (m, M + m): here (3, 4) and (0, 0)
    const RealVector out = prox_group_lasso(vec({3.0, 0.0, 4.0, 0.0}), 2.5);
    CHECK(out[0] == doctest::Approx(1.5));
    CHECK(out[2] == doctest::Approx(2.0));
    CHECK(out[1] == 0.0);
    CHECK(out[3] == 0.0);

    const Eigen::Vector2d oracle = oracle::prox_group_search({3.0, 4.0}, 2.5);
    CHECK(oracle[0] == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(oracle[1] == doctest::Approx(2.0).epsilon(1e-10));

    CHECK(prox_group_lasso(vec({0.3, -0.4}), 0.5).isZero(0.0));
    CHECK(prox_group_lasso(vec({0.3, -0.4}), 0.49).norm() > 0.0);
    CHECK_THROWS(prox_group_lasso(vec({1.0, 2.0, 3.0}), 1.0));
}

TEST_CASE("group soft-threshold properties") {
    RandomStream rng(101);
    std::uniform_real_distribution<double> thr(0.0, 3.0);
    for (int trial = 0; trial < 300; ++trial) {
        const Eigen::Index m = 1 + trial % 9;
        const RealVector c = random_real(2 * m, rng, 2.0);
        const double t = thr(rng);
        const RealVector u = prox_group_lasso(c, t);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double before = std::hypot(c[i], c[m + i]);
            const double after = std::hypot(u[i], u[m + i]);
            CHECK(after <= before + 1e-15);
            if (before <= t) CHECK(after == 0.0);
        }
        CHECK((u - oracle::prox_group_lasso_search(c, t)).cwiseAbs().maxCoeff() <= 1e-8);
        const RealVector d = random_real(2 * m, rng, 2.0);
        CHECK((u - prox_group_lasso(d, t)).norm() <= (c - d).norm() + 1e-12);
    }
}

TEST_CASE("squared infinity-norm prox") {
    CHECK(prox_linf_sq(RealVector::Zero(5), 2.0).isZero(0.0));
    const RealVector u = prox_linf_sq(vec({2.0, -1.0}), 1.0);
    CHECK(u[0] == doctest::Approx(1.0));
    CHECK(u[1] == doctest::Approx(-1.0));
    const RealVector o = oracle::prox_linf_sq_search(vec({2.0, -1.0}), 1.0);
    CHECK(o[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(o[1] == doctest::Approx(-1.0).epsilon(1e-12));

    const RealVector v = vec({0.5, -3.0, 0.0, 2.0});
    CHECK(prox_linf_sq(v, 0.0) == v);
    CHECK_THROWS(prox_linf_sq(v, -1.0));
}

TEST_CASE("squared infinity-norm prox properties") {
    RandomStream rng(202);
    std::uniform_real_distribution<double> weight(0.0, 10.0);
    for (int trial = 0; trial < 400; ++trial) {
        const Eigen::Index n = 1 + trial % 16;
        const RealVector v = trial % 3 == 0 ? random_tied(n, rng) : random_real(n, rng, 3.0);
        const double w = weight(rng);
        const RealVector u = prox_linf_sq(v, w);
        const double alpha = u.cwiseAbs().maxCoeff();

        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(v[i]) < alpha) CHECK(u[i] == v[i]);
            if (u[i] != 0.0) CHECK(sign_nonneg(u[i]) == sign_nonneg(v[i]));
            CHECK(std::abs(u[i]) <= std::abs(v[i]));
        }
        CHECK((u - oracle::prox_linf_sq_search(v, w)).cwiseAbs().maxCoeff() <= 1e-9);

        // optimality against random perturbations
        auto phi = [&](const RealVector& x) {
            const double p = x.cwiseAbs().maxCoeff();
            return 0.5 * (x - v).squaredNorm() + 0.5 * w * p * p;
        };
        for (int j = 0; j < 5; ++j) CHECK(phi(u) <= phi(u + random_real(n, rng, 0.01)) + 1e-12);

        // permutation equivariance
        std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        RealVector pv(n);
        for (Eigen::Index i = 0; i < n; ++i) pv[i] = v[perm[static_cast<std::size_t>(i)]];
        const RealVector pu = prox_linf_sq(pv, w);
        for (Eigen::Index i = 0; i < n; ++i) CHECK(pu[i] == u[perm[static_cast<std::size_t>(i)]]);

        // non-expansive
        const RealVector d = random_real(n, rng, 3.0);
        CHECK((u - prox_linf_sq(d, w)).norm() <= (v - d).norm() + 1e-12);
    }
}

TEST_CASE("prox check report") {
    const auto report = oracle::run_prox_check(100, 4);
    CHECK(report.cases == 100);
    CHECK(report.zero_weight_cases == 20);
    CHECK(report.linf_max_deviation >= 0.0);
    CHECK(report.linf_max_deviation <= 1e-6);
    CHECK(report.group_max_deviation <= 1e-8);
}

TEST_CASE("objective") {
    RandomStream rng(303);
    const auto ch = random_channel(3, 5, 0.1, rng);
    const RealVector s = lift(random_qpsk(3, rng));
    CHECK(objective(RealVector::Zero(10), s, ch.h_r, 0.7, 2.0) == doctest::Approx(s.squaredNorm()));

    // least squares with no penalties leaves the projection residual
    const RealVector ls = ch.h_r.completeOrthogonalDecomposition().solve(s);
    const RealMatrix proj = ch.h_r * ch.h_r.completeOrthogonalDecomposition().pseudoInverse();
    const double residual = (s - proj * s).squaredNorm();
    CHECK(objective(ls, s, ch.h_r, 1e-300, 0.0) == doctest::Approx(residual).epsilon(1e-9));

    // hand-computed value
    const RealVector b = vec({1.0, 0.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 0.0, 0.0});
    const double fit = (s - ch.h_r * b).squaredNorm();
    CHECK(objective(b, s, ch.h_r, 0.5, 3.0) == doctest::Approx(fit + 0.5 * 4.0 + 3.0 * std::sqrt(5.0)));

    // relabeling antennas
    std::vector<Eigen::Index> perm{3, 0, 4, 1, 2};
    RealMatrix hp(ch.h_r.rows(), ch.h_r.cols());
    RealVector bp(10);
    const RealVector br = random_real(10, rng);
    for (Eigen::Index i = 0; i < 5; ++i) {
        hp.col(i) = ch.h_r.col(perm[static_cast<std::size_t>(i)]);
        hp.col(5 + i) = ch.h_r.col(5 + perm[static_cast<std::size_t>(i)]);
        bp[i] = br[perm[static_cast<std::size_t>(i)]];
        bp[5 + i] = br[5 + perm[static_cast<std::size_t>(i)]];
    }
    CHECK(objective(bp, s, hp, 0.7, 1.3) == doctest::Approx(objective(br, s, ch.h_r, 0.7, 1.3)).epsilon(1e-12));
    CHECK_THROWS(objective(RealVector::Zero(8), s, ch.h_r, 1.0, 1.0));
}

TEST_CASE("smooth-term gradient") {
    RandomStream rng(404);
    for (int trial = 0; trial < 50; ++trial) {
        const auto ch = random_channel(2 + trial % 4, 3 + trial % 6, 0.1, rng);
        const RealVector s = lift(random_qpsk(ch.num_ues(), rng));
        const RealVector a = random_real(ch.h_r.cols(), rng);
        const RealVector g = grad_d1(a, s, ch.h_r);
        auto d1 = [&](const RealVector& x) { return (s - ch.h_r * x).squaredNorm(); };
        RealVector fd(a.size());
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            RealVector up = a, dn = a;
            up[i] += h;
            dn[i] -= h;
            fd[i] = (d1(up) - d1(dn)) / (2 * h);
        }
        CHECK((g - fd).norm() <= 1e-5 * g.norm());

        const RealVector b = random_real(a.size(), rng);
        const double lip = 2.0 * ch.largest_singular_value_sq;
        CHECK((g - grad_d1(b, s, ch.h_r)).norm() <= lip * (a - b).norm() * (1 + 1e-12));
    }
    // stationary point
    const auto ch = random_channel(2, 4, 0.1, rng);
    const RealVector a = random_real(8, rng);
    const RealVector s = ch.h_r * a;
    CHECK(grad_d1(a, s, ch.h_r).norm() <= 1e-12);
}

TEST_CASE("solver configuration") {
    CHECK(default_step_size(4.0) == doctest::Approx(0.0125));
    CHECK(default_step_size(4.0, 1.0) == doctest::Approx(0.125));
    CHECK(infinity_norm_weight(2, 60, 0.5, 4.0) == doctest::Approx(30.0));
    CHECK(default_tolerance(100) == doctest::Approx(1e-6 * std::sqrt(200.0)));
    SolverConfig cfg;
    cfg.gamma = 0.1;
    cfg.kappa = 1.0;
    CHECK_NOTHROW(cfg.validate());
    cfg.psi = 2.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.psi = 1.0;
    cfg.kappa = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("solver behaviour") {
    RandomStream rng(505);
    const auto ch = random_channel(4, 8, 0.1, rng);
    const RealVector s = lift(random_qpsk(4, rng));

    SUBCASE("total shrinkage") {
        // a threshold above every reachable group norm pins a at zero
        for (int iters : {1, 50}) {
            SolverConfig cfg = config_for(ch, 1e6, iters, 0.0);
            const SolverState st = DavisYinSolver(ch.h_r).solve(s, cfg);
            CHECK(st.a_r.isZero(0.0));
        }
    }
    SUBCASE("state invariants and stopping contract") {
        SolverConfig cfg = config_for(ch, 1.0, 100000, 1e-9);
        const SolverState st = DavisYinSolver(ch.h_r).solve(s, cfg);
        CHECK(st.a_r.size() == 16);
        CHECK(st.b_r.size() == 16);
        CHECK(st.c_r.size() == 16);
        CHECK(st.residual == doctest::Approx((st.b_r - st.a_r).norm()).epsilon(1e-12));
        REQUIRE(st.iter < cfg.max_iters);
        CHECK(st.converged);
        CHECK(st.residual <= cfg.tolerance);
        CHECK(objective(st.a_r, s, ch.h_r, cfg.kappa, cfg.lambda) <=
              objective(RealVector::Zero(16), s, ch.h_r, cfg.kappa, cfg.lambda));
    }
    SUBCASE("iteration cap") {
        SolverConfig cfg = config_for(ch, 1.0, 7, 0.0);
        const SolverState st = solve(s, ch.h_r, cfg);
        CHECK(st.iter == 7);
        CHECK_FALSE(st.converged);
    }
    SUBCASE("trace sink sees every iteration") {
        SolverConfig cfg = config_for(ch, 1.0, 25, 0.0);
        int calls = 0;
        const SolverState st = solve(s, ch.h_r, cfg, nullptr, [&](const TraceRecord& r) {
            ++calls;
            CHECK(r.iter == calls);
            CHECK(r.residual >= 0.0);
        });
        CHECK(calls == st.iter);
    }
    SUBCASE("divergence is reported with the iteration") {
        SolverConfig cfg = config_for(ch, 1.0, 100, 0.0);
        RealVector bad = RealVector::Zero(16);
        bad[3] = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(solve(s, ch.h_r, cfg, &bad), SolverDiverged);
    }
    SUBCASE("dimension checks") {
        SolverConfig cfg = config_for(ch, 1.0, 10, 0.0);
        CHECK_THROWS(solve(RealVector::Zero(6), ch.h_r, cfg));
        RealVector short_init = RealVector::Zero(4);
        CHECK_THROWS(solve(s, ch.h_r, cfg, &short_init));
    }
}

TEST_CASE("converged iterates satisfy first-order optimality") {
    RandomStream rng(606);
    for (int trial = 0; trial < 12; ++trial) {
        const auto ch = random_channel(3, 6, 0.2, rng);
        const RealVector s = lift(random_qpsk(3, rng));
        const double lambda = std::array{0.0, 0.5, 2.0}[trial % 3];
        SolverConfig cfg = config_for(ch, lambda, 400000, 1e-11);
        const SolverState st = solve(s, ch.h_r, cfg);
        REQUIRE(st.converged);
        // Split the fixed-point relation into one subgradient per nonsmooth term.
        const RealVector g3 = (st.c_r - st.a_r) / cfg.gamma;
        const RealVector g2 = -grad_d1(st.a_r, s, ch.h_r) - g3;
        const auto gaps = testing_support::subgradient_gaps(st.a_r, g2, g3, cfg.kappa, lambda);
        const double scale = 1.0 + s.squaredNorm();
        CHECK(std::abs(gaps.linf_gap) <= 1e-6 * scale);
        CHECK(std::abs(gaps.group_gap) <= 1e-6 * scale);
        CHECK(gaps.group_excess <= 1e-6);
    }
}

TEST_CASE("reference joint prox") {
    RandomStream rng(707);
    SUBCASE("reduces to the separate operators") {
        for (int trial = 0; trial < 50; ++trial) {
            const RealVector v = random_real(2 * (1 + trial % 6), rng, 2.0);
            testing_support::JointProx only_linf(1.5, 0.0);
            CHECK((only_linf(v, 0.4) - prox_linf_sq(v, 2.0 * 0.4 * 1.5)).cwiseAbs().maxCoeff() <= 1e-12);
            testing_support::JointProx only_group(1e-300, 2.0);
            CHECK((only_group(v, 0.3) - prox_group_lasso(v, 0.6)).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
    SUBCASE("beats random perturbations") {
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::Index m = 1 + trial % 8;
            const RealVector v = random_real(2 * m, rng, 2.0);
            const double kappa = 0.2 + 0.1 * (trial % 7), lambda = 0.3 * (trial % 5), t = 0.7;
            testing_support::JointProx prox(kappa, lambda);
            const RealVector u = prox(v, t);
            auto phi = [&](const RealVector& x) {
                const double p = x.cwiseAbs().maxCoeff();
                double g = 0.0;
                for (Eigen::Index i = 0; i < m; ++i) g += std::hypot(x[i], x[m + i]);
                return 0.5 * (x - v).squaredNorm() + t * (kappa * p * p + lambda * g);
            };
            const double best = phi(u);
            for (int j = 0; j < 20; ++j) CHECK(best <= phi(u + random_real(2 * m, rng, 1e-3)) + 1e-13);
        }
    }
}

TEST_CASE("solver agrees with the accelerated reference on small problems") {
    RandomStream rng(808);
    for (int trial = 0; trial < 3; ++trial) {
        const auto ch = random_channel(4, 8, 0.1, rng);
        const RealVector s = lift(random_qpsk(4, rng));
        const double lambda = std::array{0.0, 1.0, 10.0}[trial];
        SolverConfig cfg = config_for(ch, lambda, 400000, 1e-10);
        const SolverState st = solve(s, ch.h_r, cfg);
        const double mine = objective(st.a_r, s, ch.h_r, cfg.kappa, lambda);
        const auto ref = testing_support::reference_solve(s, ch.h_r, cfg.kappa, lambda, 20000);
        CHECK(std::abs(mine - ref.objective) <= 1e-4 * ref.objective);
    }
}
