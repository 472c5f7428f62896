#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace betanmf {

/// Indexing conventions for the beta-divergence family.
///
/// Standard places the squared Euclidean distance at beta = 2, the
/// Kullback-Leibler divergence at beta = 1 and the Itakura-Saito divergence
/// at beta = 0. FlippedSec4 is the mirrored indexing beta' = 1 - beta
/// (IS at beta' = 1, KL at beta' = 0).
enum class Convention { Standard, FlippedSec4 };

/// Betas within this distance of 0 or 1 are evaluated with the exact limit
/// branch instead of the generic formula, which degenerates to 0/0 there.
inline constexpr double kBetaBranchTol = 1e-6;

template <typename Scalar = double>
struct BetaParam {
    Scalar value{};
    Convention convention{Convention::Standard};

    /// The parameter mapped to the standard convention.
    [[nodiscard]] Scalar standard() const {
        return convention == Convention::Standard ? value : Scalar(1) - value;
    }

    static BetaParam standard_of(Scalar b) { return {b, Convention::Standard}; }
    static BetaParam flipped(Scalar b) { return {b, Convention::FlippedSec4}; }
};

using BetaParamd = BetaParam<double>;

namespace detail {

template <typename Scalar>
void check_pair(Scalar x, Scalar y) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
        throw std::domain_error("beta divergence: non-finite argument");
    }
    if (x <= Scalar(0) || y <= Scalar(0)) {
        throw std::domain_error("beta divergence: arguments must be > 0");
    }
}

template <typename Scalar>
Scalar checked_standard_beta(const BetaParam<Scalar>& beta) {
    if (!std::isfinite(beta.value)) {
        throw std::domain_error("beta divergence: beta must be finite");
    }
    return beta.standard();
}

template <typename Scalar>
bool near(Scalar b, Scalar target) {
    return std::abs(b - target) < Scalar(kBetaBranchTol);
}

// Divergences are nonnegative by construction; sub-epsilon negative values
// and inf-inf NaNs are artifacts of rounding and overflow.
template <typename Scalar>
Scalar sanitize(Scalar d) {
    if (std::isnan(d)) return std::numeric_limits<Scalar>::infinity();
    return d < Scalar(0) ? Scalar(0) : d;
}

}  // namespace detail

/// Scalar beta-divergence d_beta(x|y) on the positive reals.
///
/// The generic branch is
///     (x^b + (b-1) y^b - b x y^{b-1}) / (b (b-1))
/// with the Kullback-Leibler form at b = 1 and the Itakura-Saito form at
/// b = 0. FlippedSec4 parameters are mapped through b_std = 1 - b before
/// evaluation. Overflow yields +infinity rather than an error.
template <typename Scalar>
Scalar beta_divergence(Scalar x, Scalar y, const BetaParam<Scalar>& beta) {
    detail::check_pair(x, y);
    const Scalar b = detail::checked_standard_beta(beta);
    if (x == y) return Scalar(0);
    if (detail::near(b, Scalar(1))) {
        return detail::sanitize(x * (std::log(x) - std::log(y)) + (y - x));
    }
    if (detail::near(b, Scalar(0))) {
        const Scalar r = x / y;
        return detail::sanitize(r - std::log(r) - Scalar(1));
    }
    const Scalar d = (std::pow(x, b) + (b - Scalar(1)) * std::pow(y, b) -
                      b * x * std::pow(y, b - Scalar(1))) /
                     (b * (b - Scalar(1)));
    return detail::sanitize(d);
}

/// First derivative of d_beta(x|y) with respect to y: y^{b-2} (y - x).
/// The single closed form holds for every beta, including the limits.
template <typename Scalar>
Scalar beta_divergence_dy(Scalar x, Scalar y, const BetaParam<Scalar>& beta) {
    detail::check_pair(x, y);
    const Scalar b = detail::checked_standard_beta(beta);
    if (x == y) return Scalar(0);
    return std::pow(y, b - Scalar(2)) * (y - x);
}

/// Second derivative of d_beta(x|y) with respect to y:
///     y^{b-3} [(b-1) y - (b-2) x].
/// Nonnegative for all valid (x, y) whenever b is in [1, 2].
template <typename Scalar>
Scalar beta_divergence_d2y(Scalar x, Scalar y, const BetaParam<Scalar>& beta) {
    detail::check_pair(x, y);
    const Scalar b = detail::checked_standard_beta(beta);
    return std::pow(y, b - Scalar(3)) *
           ((b - Scalar(1)) * y - (b - Scalar(2)) * x);
}

/// Homogeneity degree lambda with d_beta(c x | c y) = c^lambda d_beta(x|y).
/// Degree 0 (beta_std = 0) is the scale-invariant Itakura-Saito member.
template <typename Scalar>
Scalar homogeneity_degree(const BetaParam<Scalar>& beta) {
    return detail::checked_standard_beta(beta);
}

}  // namespace betanmf
