#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "betanmf/matrix.hpp"

namespace betanmf::nmf {

template <typename Scalar = double>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class Algorithm { MuBregman, MuBeta, Sbcd };

template <typename Scalar = double>
struct SolverConfig {
    Eigen::Index rank{1};
    Algorithm algorithm{Algorithm::MuBeta};
    DivergenceSpec<Scalar> divergence{BetaParam<Scalar>::standard_of(2)};
    int max_iters{1000};
    Scalar rel_tol{Scalar(1e-6)};
    std::uint64_t seed{0};
    Scalar eps_floor{Scalar(kDefaultFloor)};
    /// Post-step: rescale each column of W to unit maximum and compensate in
    /// H, leaving WH unchanged. Off by default.
    bool normalize_w{false};
};

struct Diagnostics {
    /// Update entries skipped because the multiplicative ratio had a zero
    /// denominator or was otherwise not finite; the previous value is kept.
    long skipped_entries{0};
    /// Iterations whose objective exceeded the previous one (possible for
    /// beta outside [1, 2]; recorded, never rejected).
    long objective_increases{0};
    /// True when an iterate was rolled back because the objective overflowed.
    bool rejected_nonfinite{false};
};

template <typename Scalar = double>
struct FactorPair {
    DenseMatrix<Scalar> W;  // F x K
    DenseMatrix<Scalar> H;  // K x N
    [[nodiscard]] Eigen::Index rank() const { return W.cols(); }
};

template <typename Scalar = double>
struct SolveReport {
    FactorPair<Scalar> factors;
    /// (iteration, objective) pairs; entry 0 is the initial objective.
    std::vector<std::pair<int, Scalar>> trajectory;
    int iterations_run{0};
    bool converged{false};
    Diagnostics diagnostics{};
};

/// Scratch state carried across SBCD sweeps.
template <typename Scalar = double>
struct SbcdState {
    DenseMatrix<Scalar> E;   // residual V - WH; may contain negative entries
    DenseMatrix<Scalar> Vk;  // rank-one-restored data V^(k)
    DenseMatrix<Scalar> B;   // curvature phi''(V') frozen at sweep start
};

/// Uniform (0,1] random matrix. Entries are drawn row-major from the
/// engine's top 53 bits, so the result is identical on every platform for
/// a given seed.
template <typename Scalar = double>
DenseMatrix<Scalar> uniform_matrix(Eigen::Index rows, Eigen::Index cols,
                                   std::mt19937_64& rng) {
    DenseMatrix<Scalar> m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = Scalar(1) - Scalar(rng() >> 11) * Scalar(0x1.0p-53);
        }
    }
    return m;
}

namespace detail {

template <typename Scalar>
void check_factor_shapes(const DenseMatrix<Scalar>& V,
                         const DenseMatrix<Scalar>& W,
                         const DenseMatrix<Scalar>& H) {
    if (W.rows() != V.rows() || H.cols() != V.cols() || W.cols() != H.rows()) {
        throw std::invalid_argument("nmf: factor shapes do not conform");
    }
}

template <typename Scalar>
DenseMatrix<Scalar> curvature(const GeneratorFamily<Scalar>& g,
                              const DenseMatrix<Scalar>& Vp) {
    return Vp.unaryExpr(
        [&g](Scalar v) { return generator_eval(g, v).d2phi; });
}

// Multiplicative step H(i,j) * num/den with the keep-previous rule for zero
// or non-finite ratios, floored to eps.
template <typename Scalar>
DenseMatrix<Scalar> ratio_step(const DenseMatrix<Scalar>& old,
                               const DenseMatrix<Scalar>& num,
                               const DenseMatrix<Scalar>& den, Scalar eps,
                               Diagnostics* diag) {
    DenseMatrix<Scalar> out(old.rows(), old.cols());
    for (Eigen::Index j = 0; j < old.cols(); ++j) {
        for (Eigen::Index i = 0; i < old.rows(); ++i) {
            const Scalar updated = old(i, j) * num(i, j) / den(i, j);
            if (den(i, j) == Scalar(0) || !std::isfinite(updated)) {
                out(i, j) = old(i, j);
                if (diag) ++diag->skipped_entries;
            } else {
                out(i, j) = std::max(updated, eps);
            }
        }
    }
    return out;
}

}  // namespace detail

/// Measure of fit D(V | WH). The product is floored into the divergence
/// domain before evaluation.
template <typename Scalar>
Scalar objective(const DenseMatrix<Scalar>& V, const DenseMatrix<Scalar>& W,
                 const DenseMatrix<Scalar>& H, const DivergenceSpec<Scalar>& d,
                 Scalar eps_floor = Scalar(kDefaultFloor)) {
    detail::check_factor_shapes(V, W, H);
    const DenseMatrix<Scalar> Vp = (W * H).cwiseMax(eps_floor);
    return elementwise_divergence(V, Vp, d);
}

template <typename Scalar>
Scalar objective(const NonNegMatrix<Scalar>& V, const FactorPair<Scalar>& f,
                 const DivergenceSpec<Scalar>& d,
                 Scalar eps_floor = Scalar(kDefaultFloor)) {
    return objective(V.values(), f.W, f.H, d, eps_floor);
}

/// Multiplicative update of H for a general Bregman cost:
///     H <- H .* [W^T (phi''(WH) .* V)] ./ [W^T (phi''(WH) .* WH)].
template <typename Scalar>
DenseMatrix<Scalar> mu_update_H(const DenseMatrix<Scalar>& V,
                                const DenseMatrix<Scalar>& W,
                                const DenseMatrix<Scalar>& H,
                                const GeneratorFamily<Scalar>& g,
                                Scalar eps_floor = Scalar(kDefaultFloor),
                                Diagnostics* diag = nullptr) {
    detail::check_factor_shapes(V, W, H);
    const DenseMatrix<Scalar> Vp = (W * H).cwiseMax(eps_floor);
    const DenseMatrix<Scalar> C = detail::curvature(g, Vp);
    const DenseMatrix<Scalar> num = W.transpose() * C.cwiseProduct(V);
    const DenseMatrix<Scalar> den = W.transpose() * C.cwiseProduct(Vp);
    return detail::ratio_step(H, num, den, eps_floor, diag);
}

/// Multiplicative update of W, symmetric to mu_update_H.
template <typename Scalar>
DenseMatrix<Scalar> mu_update_W(const DenseMatrix<Scalar>& V,
                                const DenseMatrix<Scalar>& W,
                                const DenseMatrix<Scalar>& H,
                                const GeneratorFamily<Scalar>& g,
                                Scalar eps_floor = Scalar(kDefaultFloor),
                                Diagnostics* diag = nullptr) {
    detail::check_factor_shapes(V, W, H);
    const DenseMatrix<Scalar> Vp = (W * H).cwiseMax(eps_floor);
    const DenseMatrix<Scalar> C = detail::curvature(g, Vp);
    const DenseMatrix<Scalar> num = C.cwiseProduct(V) * H.transpose();
    const DenseMatrix<Scalar> den = C.cwiseProduct(Vp) * H.transpose();
    return detail::ratio_step(W, num, den, eps_floor, diag);
}

/// Beta specialization of the multiplicative H update. In the standard
/// convention the exponent pair is ((WH)^{beta-2}, (WH)^{beta-1}); the
/// generator's beta(beta-1) constant has cancelled in the ratio.
template <typename Scalar>
DenseMatrix<Scalar> mu_update_H_beta(const DenseMatrix<Scalar>& V,
                                     const DenseMatrix<Scalar>& W,
                                     const DenseMatrix<Scalar>& H,
                                     const BetaParam<Scalar>& beta,
                                     Scalar eps_floor = Scalar(kDefaultFloor),
                                     Diagnostics* diag = nullptr) {
    detail::check_factor_shapes(V, W, H);
    const Scalar b = betanmf::detail::checked_standard_beta(beta);
    const DenseMatrix<Scalar> Vp = (W * H).cwiseMax(eps_floor);
    const DenseMatrix<Scalar> num =
        W.transpose() *
        (Vp.array().pow(b - Scalar(2)) * V.array()).matrix();
    const DenseMatrix<Scalar> den =
        W.transpose() * Vp.array().pow(b - Scalar(1)).matrix();
    return detail::ratio_step(H, num, den, eps_floor, diag);
}

template <typename Scalar>
DenseMatrix<Scalar> mu_update_W_beta(const DenseMatrix<Scalar>& V,
                                     const DenseMatrix<Scalar>& W,
                                     const DenseMatrix<Scalar>& H,
                                     const BetaParam<Scalar>& beta,
                                     Scalar eps_floor = Scalar(kDefaultFloor),
                                     Diagnostics* diag = nullptr) {
    detail::check_factor_shapes(V, W, H);
    const Scalar b = betanmf::detail::checked_standard_beta(beta);
    const DenseMatrix<Scalar> Vp = (W * H).cwiseMax(eps_floor);
    const DenseMatrix<Scalar> num =
        (Vp.array().pow(b - Scalar(2)) * V.array()).matrix() * H.transpose();
    const DenseMatrix<Scalar> den =
        Vp.array().pow(b - Scalar(1)).matrix() * H.transpose();
    return detail::ratio_step(W, num, den, eps_floor, diag);
}

/// Fresh SBCD state for the current factors: E = V - WH.
template <typename Scalar>
SbcdState<Scalar> make_sbcd_state(const DenseMatrix<Scalar>& V,
                                  const DenseMatrix<Scalar>& W,
                                  const DenseMatrix<Scalar>& H) {
    detail::check_factor_shapes(V, W, H);
    SbcdState<Scalar> s;
    s.E = V - W * H;
    s.Vk = DenseMatrix<Scalar>::Zero(V.rows(), V.cols());
    s.B = DenseMatrix<Scalar>::Ones(V.rows(), V.cols());
    return s;
}

/// One full Scalar Block Coordinate Descent sweep.
///
/// The curvature B = phi''(WH) is frozen once at sweep start; then for each
/// rank index k the rank-one-restored data V^(k) = E + w_k h_k is formed,
/// every h_jk is solved by the weighted scalar least-squares rule
///     h_jk = [sum_i b_ij v^(k)_ij w_ik / sum_i b_ij w_ik^2]
/// (clamped to eps_floor), every w_ik by the symmetric rule with the fresh
/// h_k, and the residual is restored as E = V^(k) - w_k h_k. A zero or
/// non-finite scalar ratio leaves that scalar unchanged and is counted in
/// the diagnostics.
template <typename Scalar>
void sbcd_sweep(const DenseMatrix<Scalar>& V, DenseMatrix<Scalar>& W,
                DenseMatrix<Scalar>& H, const GeneratorFamily<Scalar>& g,
                SbcdState<Scalar>& state,
                Scalar eps_floor = Scalar(kDefaultFloor),
                Diagnostics* diag = nullptr) {
    detail::check_factor_shapes(V, W, H);
    if (state.E.rows() != V.rows() || state.E.cols() != V.cols()) {
        throw std::invalid_argument("sbcd_sweep: state shape mismatch");
    }
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const DenseMatrix<Scalar> Vp = (W * H).cwiseMax(eps_floor);
    state.B = detail::curvature(g, Vp);

    const auto step = [&](Scalar previous, Scalar num, Scalar den) {
        const Scalar updated = num / den;
        if (den == Scalar(0) || !std::isfinite(updated)) {
            if (diag) ++diag->skipped_entries;
            return previous;
        }
        return std::max(updated, eps_floor);
    };

    for (Eigen::Index k = 0; k < W.cols(); ++k) {
        state.Vk = state.E + W.col(k) * H.row(k);
        const DenseMatrix<Scalar> BVk = state.B.cwiseProduct(state.Vk);

        const Vector hnum = BVk.transpose() * W.col(k);
        const Vector hden = state.B.transpose() * W.col(k).cwiseAbs2();
        for (Eigen::Index j = 0; j < H.cols(); ++j) {
            H(k, j) = step(H(k, j), hnum(j), hden(j));
        }

        const Vector wnum = BVk * H.row(k).transpose();
        const Vector wden = state.B * H.row(k).transpose().cwiseAbs2();
        for (Eigen::Index i = 0; i < W.rows(); ++i) {
            W(i, k) = step(W(i, k), wnum(i), wden(i));
        }

        state.E = state.Vk - W.col(k) * H.row(k);
    }
}

namespace detail {

template <typename Scalar>
GeneratorFamily<Scalar> generator_for(const DivergenceSpec<Scalar>& d) {
    if (const auto* g = std::get_if<GeneratorFamily<Scalar>>(&d)) return *g;
    // A bare beta lifts to family B, whose Bregman divergence is d_beta.
    return GeneratorFamily<Scalar>::from(Family::B,
                                         std::get<BetaParam<Scalar>>(d));
}

template <typename Scalar>
BetaParam<Scalar> beta_for(const DivergenceSpec<Scalar>& d) {
    if (const auto* beta = std::get_if<BetaParam<Scalar>>(&d)) return *beta;
    // Exponent updates depend only on the generator's equivalent beta; the
    // family-C proportionality constant cancels in the ratio.
    return equivalent_standard_beta(std::get<GeneratorFamily<Scalar>>(d));
}

}  // namespace detail

/// Minimizes D(V | WH) with the configured update rule.
///
/// W and H start uniform-random in (0,1] from config.seed (W drawn first).
/// Iteration stops after max_iters updates or when the relative objective
/// change over one iteration drops below rel_tol. The trajectory records the
/// objective at every iteration, starting with the initial one. A non-finite
/// objective rolls the iterate back and stops. Deterministic for a fixed
/// config and input.
template <typename Scalar>
SolveReport<Scalar> solve(const NonNegMatrix<Scalar>& V,
                          const SolverConfig<Scalar>& config) {
    const Eigen::Index F = V.rows();
    const Eigen::Index N = V.cols();
    if (config.rank < 1 || config.rank > std::min(F, N)) {
        throw std::invalid_argument("solve: rank must satisfy 1 <= K <= min(F, N)");
    }
    if (config.max_iters < 1) {
        throw std::invalid_argument("solve: max_iters must be >= 1");
    }
    if (!(config.rel_tol > Scalar(0)) || !(config.eps_floor > Scalar(0))) {
        throw std::invalid_argument("solve: rel_tol and eps_floor must be > 0");
    }
    const Scalar eps = config.eps_floor;

    std::mt19937_64 rng(config.seed);
    DenseMatrix<Scalar> W =
        uniform_matrix<Scalar>(F, config.rank, rng).cwiseMax(eps);
    DenseMatrix<Scalar> H =
        uniform_matrix<Scalar>(config.rank, N, rng).cwiseMax(eps);

    SolveReport<Scalar> report;
    Scalar prev = objective(V.values(), W, H, config.divergence, eps);
    report.trajectory.emplace_back(0, prev);

    const bool use_sbcd = config.algorithm == Algorithm::Sbcd;
    GeneratorFamily<Scalar> gen;
    BetaParam<Scalar> beta;
    if (config.algorithm == Algorithm::MuBeta) {
        beta = detail::beta_for(config.divergence);
    } else {
        gen = detail::generator_for(config.divergence);
    }
    SbcdState<Scalar> state;
    if (use_sbcd) state = make_sbcd_state(V.values(), W, H);

    for (int t = 1; t <= config.max_iters; ++t) {
        const DenseMatrix<Scalar> W_before = W;
        const DenseMatrix<Scalar> H_before = H;
        switch (config.algorithm) {
            case Algorithm::MuBregman:
                H = mu_update_H(V.values(), W, H, gen, eps,
                                &report.diagnostics);
                W = mu_update_W(V.values(), W, H, gen, eps,
                                &report.diagnostics);
                break;
            case Algorithm::MuBeta:
                H = mu_update_H_beta(V.values(), W, H, beta, eps,
                                     &report.diagnostics);
                W = mu_update_W_beta(V.values(), W, H, beta, eps,
                                     &report.diagnostics);
                break;
            case Algorithm::Sbcd:
                sbcd_sweep(V.values(), W, H, gen, state, eps,
                           &report.diagnostics);
                break;
        }
        const Scalar obj = objective(V.values(), W, H, config.divergence, eps);
        if (!std::isfinite(obj)) {
            W = W_before;
            H = H_before;
            report.diagnostics.rejected_nonfinite = true;
            break;
        }
        report.trajectory.emplace_back(t, obj);
        if (obj > prev) ++report.diagnostics.objective_increases;
        const Scalar change =
            std::abs(obj - prev) / std::max(prev, Scalar(1e-300));
        prev = obj;
        if (change < config.rel_tol) {
            report.converged = true;
            break;
        }
    }

    if (config.normalize_w) {
        for (Eigen::Index k = 0; k < config.rank; ++k) {
            const Scalar m = W.col(k).maxCoeff();
            W.col(k) = (W.col(k) / m).cwiseMax(eps);
            H.row(k) = (H.row(k) * m).cwiseMax(eps);
        }
    }
    report.factors = FactorPair<Scalar>{std::move(W), std::move(H)};
    report.iterations_run = int(report.trajectory.size()) - 1;
    return report;
}

}  // namespace betanmf::nmf
