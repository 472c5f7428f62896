#include <Eigen/Dense>
#include <random>

#include "betanmf/nmf.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace betanmf;
using nmf::Algorithm;
using nmf::Diagnostics;
using nmf::SolverConfig;
using oracles::rel_err;

namespace {

Eigen::MatrixXd random_positive(Eigen::Index r, Eigen::Index c,
                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return nmf::uniform_matrix<double>(r, c, rng);
}

double max_rel_change(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return ((a - b).array().abs() / a.array().abs()).maxCoeff();
}

}  // namespace

TEST_CASE("objective reduces to the elementwise divergence") {
    Eigen::MatrixXd W = random_positive(6, 2, 3);
    Eigen::MatrixXd H = random_positive(2, 5, 4);
    Eigen::MatrixXd V = W * H;
    CHECK(nmf::objective(V, W, H, DivergenceSpecd(BetaParamd::standard_of(2))) ==
          0.0);

    Eigen::MatrixXd v1(1, 1), w1(1, 1), h1(1, 1);
    v1 << 4.0;
    w1 << 2.0;
    h1 << 1.0;
    CHECK(nmf::objective(v1, w1, h1,
                         DivergenceSpecd(BetaParamd::standard_of(2))) ==
          doctest::Approx(2.0).epsilon(1e-15));
    h1 << 2.0;
    CHECK(nmf::objective(v1, w1, h1,
                         DivergenceSpecd(BetaParamd::standard_of(0))) == 0.0);
}

TEST_CASE("MU solves the 1x1 instance in one step") {
    Eigen::MatrixXd V(1, 1), W(1, 1), H(1, 1);
    V << 4.0;
    W << 2.0;
    H << 1.0;
    const auto gen = GeneratorFamilyd::make(Family::B, 2);
    const Eigen::MatrixXd Hn = nmf::mu_update_H(V, W, H, gen);
    CHECK(Hn(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(nmf::objective(V, W, Hn, DivergenceSpecd(gen)) <= 1e-28);

    // KL-like exponent pair (-1, 0) in the flipped convention
    const Eigen::MatrixXd Hb =
        nmf::mu_update_H_beta(V, W, H, BetaParamd::flipped(0));
    CHECK(Hb(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("MU fixed point: exact factorization leaves factors unchanged") {
    const Eigen::MatrixXd W = random_positive(8, 3, 11);
    const Eigen::MatrixXd H = random_positive(3, 6, 12);
    const Eigen::MatrixXd V = W * H;
    for (double beta : {0.0, 1.0, 2.0}) {
        const auto gen = GeneratorFamilyd::make(Family::B, beta);
        const auto b = BetaParamd::standard_of(beta);
        CHECK(max_rel_change(H, nmf::mu_update_H(V, W, H, gen)) <= 1e-12);
        CHECK(max_rel_change(W, nmf::mu_update_W(V, W, H, gen)) <= 1e-12);
        CHECK(max_rel_change(H, nmf::mu_update_H_beta(V, W, H, b)) <= 1e-12);
        CHECK(max_rel_change(W, nmf::mu_update_W_beta(V, W, H, b)) <= 1e-12);
    }
}

TEST_CASE("MU iteration never increases the objective for beta in {1, 2}") {
    for (double beta : {1.0, 2.0}) {
        const DivergenceSpecd spec = BetaParamd::standard_of(beta);
        const auto b = BetaParamd::standard_of(beta);
        const auto gen = GeneratorFamilyd::make(Family::B, beta);
        for (std::uint64_t trial = 0; trial < 100; ++trial) {
            const Eigen::MatrixXd V = random_positive(10, 8, 1000 + trial);
            Eigen::MatrixXd W = random_positive(10, 3, 2000 + trial);
            Eigen::MatrixXd H = random_positive(3, 8, 3000 + trial);
            const double before = nmf::objective(V, W, H, spec);

            Eigen::MatrixXd Hb = nmf::mu_update_H_beta(V, W, H, b);
            Eigen::MatrixXd Wb = nmf::mu_update_W_beta(V, W, Hb, b);
            CHECK(nmf::objective(V, Wb, Hb, spec) <= before * (1 + 1e-9));

            Eigen::MatrixXd Hg = nmf::mu_update_H(V, W, H, gen);
            Eigen::MatrixXd Wg = nmf::mu_update_W(V, W, Hg, gen);
            CHECK(nmf::objective(V, Wg, Hg, spec) <= before * (1 + 1e-9));
        }
    }
}

TEST_CASE("beta update rule equals the Bregman rule with family C") {
    for (double bf : {0.0, 0.5, 1.0, 2.0}) {
        const auto beta = BetaParamd::flipped(bf);
        const auto gen = GeneratorFamilyd::make(Family::C, bf);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Eigen::MatrixXd V = random_positive(5, 4, 10 + seed);
            const Eigen::MatrixXd W = random_positive(5, 2, 20 + seed);
            const Eigen::MatrixXd H = random_positive(2, 4, 30 + seed);
            const Eigen::MatrixXd H1 = nmf::mu_update_H_beta(V, W, H, beta);
            const Eigen::MatrixXd H2 = nmf::mu_update_H(V, W, H, gen);
            CHECK(((H1 - H2).array().abs() /
                   H2.array().abs().max(1.0)).maxCoeff() <= 1e-10);
            const Eigen::MatrixXd W1 = nmf::mu_update_W_beta(V, W, H, beta);
            const Eigen::MatrixXd W2 = nmf::mu_update_W(V, W, H, gen);
            CHECK(((W1 - W2).array().abs() /
                   W2.array().abs().max(1.0)).maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("SBCD solves the scalar instance exactly") {
    Eigen::MatrixXd V(1, 1), W(1, 1), H(1, 1);
    V << 6.0;
    W << 2.0;
    H << 1.0;
    const auto gen = GeneratorFamilyd::make(Family::B, 2);
    auto state = nmf::make_sbcd_state(V, W, H);
    nmf::sbcd_sweep(V, W, H, gen, state);
    // h = (b*6*2)/(b*2*2) = 3; the curvature b cancels and the fit is exact
    CHECK(H(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(nmf::objective(V, W, H, DivergenceSpecd(gen)) <= 1e-20);
}

TEST_CASE("SBCD clamps negative interim solutions to the floor") {
    Eigen::MatrixXd V(1, 1), W(1, 2), H(2, 1);
    V << 1.0;
    W << 1.0, 5.0;
    H << 1.0, 5.0;
    // V - WH = -25, so the k = 0 numerator is strongly negative
    const auto gen = GeneratorFamilyd::make(Family::B, 2);
    auto state = nmf::make_sbcd_state(V, W, H);
    nmf::sbcd_sweep(V, W, H, gen, state, 1e-12);
    CHECK(H.minCoeff() >= 1e-12);
    CHECK(W.minCoeff() >= 1e-12);
    CHECK(H(0, 0) == 1e-12);
}

TEST_CASE("SBCD solves rank-1 exact data in one sweep") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Eigen::MatrixXd Wstar = random_positive(2, 1, 40 + seed);
        const Eigen::MatrixXd Hstar = random_positive(1, 2, 50 + seed);
        const Eigen::MatrixXd V = Wstar * Hstar;
        Eigen::MatrixXd W = random_positive(2, 1, 60 + seed);
        Eigen::MatrixXd H = random_positive(1, 2, 70 + seed);
        const Eigen::MatrixXd W0 = W;

        const auto gen = GeneratorFamilyd::make(Family::B, 2);
        auto state = nmf::make_sbcd_state(V, W, H);
        nmf::sbcd_sweep(V, W, H, gen, state);

        // each scalar block is an exact least-squares step; check the first
        // half-sweep against the closed form computed independently
        const Eigen::MatrixXd h_expected =
            (V.transpose() * W0 / W0.squaredNorm()).transpose();
        CHECK((H - h_expected).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(nmf::objective(V, W, H, DivergenceSpecd(gen)) <= 1e-10);
    }
}

TEST_CASE("SBCD keeps the residual consistent across sweeps") {
    const Eigen::MatrixXd V = random_positive(6, 5, 123);
    Eigen::MatrixXd W = random_positive(6, 2, 124);
    Eigen::MatrixXd H = random_positive(2, 5, 125);
    const auto gen = GeneratorFamilyd::make(Family::B, 2);
    auto state = nmf::make_sbcd_state(V, W, H);
    const double vmax = V.cwiseAbs().maxCoeff();
    for (int sweep = 0; sweep < 50; ++sweep) {
        nmf::sbcd_sweep(V, W, H, gen, state);
        const double drift =
            (state.E - (V - W * H)).cwiseAbs().maxCoeff();
        CHECK(drift <= 1e-9 * vmax);
        CHECK(W.minCoeff() >= kDefaultFloor);
        CHECK(H.minCoeff() >= kDefaultFloor);
    }
}

TEST_CASE("SBCD objective is non-increasing for the Euclidean generator") {
    const Eigen::MatrixXd V = random_positive(9, 7, 321);
    Eigen::MatrixXd W = random_positive(9, 3, 322);
    Eigen::MatrixXd H = random_positive(3, 7, 323);
    const auto gen = GeneratorFamilyd::make(Family::A, 2);
    const DivergenceSpecd spec = gen;
    auto state = nmf::make_sbcd_state(V, W, H);
    double prev = nmf::objective(V, W, H, spec);
    for (int sweep = 0; sweep < 40; ++sweep) {
        nmf::sbcd_sweep(V, W, H, gen, state);
        const double obj = nmf::objective(V, W, H, spec);
        CHECK(obj <= prev * (1 + 1e-9));
        prev = obj;
    }
}

TEST_CASE("solve validates its configuration") {
    const NonNegMatrixd V(random_positive(4, 3, 7));
    SolverConfig<double> config;
    config.rank = 0;
    CHECK_THROWS_AS(nmf::solve(V, config), std::invalid_argument);
    config.rank = 4;  // exceeds min(F, N) = 3
    CHECK_THROWS_AS(nmf::solve(V, config), std::invalid_argument);
    config.rank = 2;
    config.max_iters = 0;
    CHECK_THROWS_AS(nmf::solve(V, config), std::invalid_argument);
    config.max_iters = 10;
    config.rel_tol = 0.0;
    CHECK_THROWS_AS(nmf::solve(V, config), std::invalid_argument);
}

TEST_CASE("solve trajectory contract") {
    const NonNegMatrixd V(random_positive(5, 4, 8));
    SolverConfig<double> config;
    config.rank = 2;
    config.max_iters = 1;
    const auto report = nmf::solve(V, config);
    CHECK(report.trajectory.size() == 2);
    CHECK(report.trajectory[0].first == 0);
    CHECK(report.iterations_run == 1);

    SolverConfig<double> full;
    full.rank = 4;  // K = min(F, N)
    full.max_iters = 300;
    const auto r2 = nmf::solve(V, full);
    CHECK((r2.converged || r2.iterations_run == full.max_iters));
    CHECK(r2.trajectory.size() == std::size_t(r2.iterations_run) + 1);
    CHECK(r2.factors.W.minCoeff() >= full.eps_floor);
    CHECK(r2.factors.H.minCoeff() >= full.eps_floor);
}

TEST_CASE("solve is deterministic") {
    const NonNegMatrixd V(random_positive(8, 6, 9));
    SolverConfig<double> config;
    config.rank = 3;
    config.max_iters = 50;
    config.seed = 42;
    for (Algorithm alg :
         {Algorithm::MuBeta, Algorithm::MuBregman, Algorithm::Sbcd}) {
        config.algorithm = alg;
        const auto a = nmf::solve(V, config);
        const auto b = nmf::solve(V, config);
        CHECK(a.trajectory == b.trajectory);
        CHECK((a.factors.W.array() == b.factors.W.array()).all());
        CHECK((a.factors.H.array() == b.factors.H.array()).all());
    }
}

TEST_CASE("solve recovers an exact factorization") {
    const Eigen::MatrixXd Wstar = random_positive(8, 3, 91);
    const Eigen::MatrixXd Hstar = random_positive(3, 6, 92);
    const NonNegMatrixd V(Wstar * Hstar);
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        SolverConfig<double> config;
        config.rank = 3;
        config.max_iters = 2000;
        config.rel_tol = 1e-16;
        config.seed = seed;
        const auto report = nmf::solve(V, config);
        if (report.trajectory.back().second <=
            1e-6 * report.trajectory.front().second) {
            ++hits;
        }
    }
    CHECK(hits >= 2);
}

TEST_CASE("solve accepts every algorithm and divergence spec combination") {
    const NonNegMatrixd V(random_positive(6, 5, 77));
    for (Algorithm alg :
         {Algorithm::MuBeta, Algorithm::MuBregman, Algorithm::Sbcd}) {
        for (const DivergenceSpecd& spec :
             {DivergenceSpecd(BetaParamd::standard_of(1)),
              DivergenceSpecd(GeneratorFamilyd::make(Family::C, 1))}) {
            SolverConfig<double> config;
            config.rank = 2;
            config.algorithm = alg;
            config.divergence = spec;
            config.max_iters = 20;
            const auto report = nmf::solve(V, config);
            CHECK(report.trajectory.size() >= 2);
            CHECK(std::isfinite(report.trajectory.back().second));
        }
    }
}

TEST_CASE("solve rejects an iterate whose objective overflows") {
    // beta = 3 on entries of 1e103 puts the objective past double range;
    // the solver keeps the previous iterate instead of erroring
    Eigen::MatrixXd big(2, 2);
    big << 1e103, 1e-6, 1e-6, 1e103;
    const NonNegMatrixd V{big};
    SolverConfig<double> config;
    config.rank = 1;
    config.algorithm = Algorithm::MuBeta;
    config.divergence = BetaParamd::standard_of(3);
    config.max_iters = 50;
    const auto report = nmf::solve(V, config);
    CHECK(report.diagnostics.rejected_nonfinite);
    CHECK_FALSE(report.converged);
    CHECK(report.trajectory.size() == std::size_t(report.iterations_run) + 1);
    CHECK(report.factors.W.allFinite());
    CHECK(report.factors.H.allFinite());
    CHECK(report.factors.W.minCoeff() >= config.eps_floor);
}

TEST_CASE("optional post-step rescales W columns to unit max") {
    const NonNegMatrixd V(random_positive(7, 6, 55));
    SolverConfig<double> config;
    config.rank = 3;
    config.max_iters = 30;
    config.normalize_w = true;
    const auto scaled = nmf::solve(V, config);
    for (Eigen::Index k = 0; k < 3; ++k) {
        CHECK(scaled.factors.W.col(k).maxCoeff() ==
              doctest::Approx(1.0).epsilon(1e-14));
    }
    config.normalize_w = false;
    const auto plain = nmf::solve(V, config);
    // the product is unchanged by the rescaling
    const Eigen::MatrixXd p1 = scaled.factors.W * scaled.factors.H;
    const Eigen::MatrixXd p2 = plain.factors.W * plain.factors.H;
    CHECK(((p1 - p2).array().abs() / p2.array().abs()).maxCoeff() <= 1e-12);
    CHECK(scaled.trajectory == plain.trajectory);
}

TEST_CASE("uniform_matrix is deterministic with entries in (0, 1]") {
    std::mt19937_64 a(5), b(5);
    const auto m1 = nmf::uniform_matrix<double>(20, 10, a);
    const auto m2 = nmf::uniform_matrix<double>(20, 10, b);
    CHECK((m1.array() == m2.array()).all());
    CHECK(m1.minCoeff() > 0.0);
    CHECK(m1.maxCoeff() <= 1.0);
}
