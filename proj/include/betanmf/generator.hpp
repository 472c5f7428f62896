#pragma once

#include <cmath>
#include <stdexcept>

#include "betanmf/divergence.hpp"

namespace betanmf {

/// The three Bregman generator families that reproduce the beta-divergence.
///
///  - A: phi(y) = y^b / (b(b-1)), with y log y at b = 1 and -log y at b = 0.
///  - B: phi(y) = (y^b - b y + b - 1) / (b(b-1)), with the same limits shifted
///       by an affine term so that phi(1) = phi'(1) = 0.
///  - C: the flipped-convention family
///       phi(y) = y^{1-b} + (b-1) y + b          for b < 0 or b > 1,
///       phi(y) = (1-b) y - y^{1-b} - b          for 0 < b < 1,
///       phi(y) = y - log y - 1 at b = 1,  y log y - y + 1 at b = 0.
///
/// Families A and B induce exactly d_beta. Family C induces
/// |b(b-1)| * d_{1-b} for b outside {0, 1} and d_{1-b} at b in {0, 1}.
enum class Family { A, B, C };

template <typename Scalar = double>
struct GeneratorFamily {
    Family family{Family::B};
    BetaParam<Scalar> beta{};

    /// Builds a generator whose beta is expressed in the family's native
    /// convention: Standard for A and B, FlippedSec4 for C.
    static GeneratorFamily make(Family f, Scalar beta_value) {
        if (f == Family::C) return {f, BetaParam<Scalar>::flipped(beta_value)};
        return {f, BetaParam<Scalar>::standard_of(beta_value)};
    }

    /// Builds a generator from a beta in either convention, converting the
    /// value to the family's native convention if necessary.
    static GeneratorFamily from(Family f, const BetaParam<Scalar>& b) {
        const Scalar bs = b.standard();
        if (f == Family::C) return {f, BetaParam<Scalar>::flipped(Scalar(1) - bs)};
        return {f, BetaParam<Scalar>::standard_of(bs)};
    }
};

using GeneratorFamilyd = GeneratorFamily<double>;

template <typename Scalar = double>
struct GeneratorValues {
    Scalar phi{};
    Scalar dphi{};
    Scalar d2phi{};
};

namespace detail {

template <typename Scalar>
Scalar native_beta(const GeneratorFamily<Scalar>& g) {
    if (!std::isfinite(g.beta.value)) {
        throw std::domain_error("generator: beta must be finite");
    }
    // A and B read the parameter in the standard convention, C in the flipped
    // one; stored values in a foreign convention are mapped first.
    const bool wants_flipped = g.family == Family::C;
    const bool is_flipped = g.beta.convention == Convention::FlippedSec4;
    return wants_flipped == is_flipped ? g.beta.value : Scalar(1) - g.beta.value;
}

template <typename Scalar>
GeneratorValues<Scalar> eval_family_a(Scalar b, Scalar y) {
    const Scalar ly = std::log(y);
    if (near(b, Scalar(1))) return {y * ly, ly + Scalar(1), Scalar(1) / y};
    if (near(b, Scalar(0))) return {-ly, Scalar(-1) / y, Scalar(1) / (y * y)};
    return {std::pow(y, b) / (b * (b - Scalar(1))),
            std::pow(y, b - Scalar(1)) / (b - Scalar(1)),
            std::pow(y, b - Scalar(2))};
}

template <typename Scalar>
GeneratorValues<Scalar> eval_family_b(Scalar b, Scalar y) {
    const Scalar ly = std::log(y);
    if (near(b, Scalar(1))) return {y * ly - y + Scalar(1), ly, Scalar(1) / y};
    if (near(b, Scalar(0))) {
        return {-ly + y - Scalar(1), Scalar(1) - Scalar(1) / y,
                Scalar(1) / (y * y)};
    }
    return {(std::pow(y, b) - b * y + b - Scalar(1)) / (b * (b - Scalar(1))),
            (std::pow(y, b - Scalar(1)) - Scalar(1)) / (b - Scalar(1)),
            std::pow(y, b - Scalar(2))};
}

template <typename Scalar>
GeneratorValues<Scalar> eval_family_c(Scalar b, Scalar y) {
    const Scalar ly = std::log(y);
    if (near(b, Scalar(1))) {
        return {y - ly - Scalar(1), Scalar(1) - Scalar(1) / y,
                Scalar(1) / (y * y)};
    }
    if (near(b, Scalar(0))) return {y * ly - y + Scalar(1), ly, Scalar(1) / y};
    const Scalar p = std::pow(y, Scalar(1) - b);
    const Scalar q = std::pow(y, -b);
    if (b > Scalar(0) && b < Scalar(1)) {
        return {(Scalar(1) - b) * y - p - b,
                (Scalar(1) - b) * (Scalar(1) - q),
                b * (Scalar(1) - b) * q / y};
    }
    return {p + (b - Scalar(1)) * y + b,
            (Scalar(1) - b) * q + (b - Scalar(1)),
            b * (b - Scalar(1)) * q / y};
}

}  // namespace detail

/// Evaluates phi, phi' and phi'' of the generator at y > 0. phi'' is
/// strictly positive on the whole domain for every family and beta.
template <typename Scalar>
GeneratorValues<Scalar> generator_eval(const GeneratorFamily<Scalar>& g,
                                       Scalar y) {
    if (!std::isfinite(y) || y <= Scalar(0)) {
        throw std::domain_error("generator_eval: y must be finite and > 0");
    }
    const Scalar b = detail::native_beta(g);
    switch (g.family) {
        case Family::A: return detail::eval_family_a(b, y);
        case Family::B: return detail::eval_family_b(b, y);
        case Family::C: return detail::eval_family_c(b, y);
    }
    throw std::invalid_argument("generator_eval: unknown family");
}

/// Bregman divergence d_phi(x|y) = phi(x) - phi(y) - phi'(y) (x - y)
/// induced by the generator.
template <typename Scalar>
Scalar bregman_divergence(const GeneratorFamily<Scalar>& g, Scalar x,
                          Scalar y) {
    detail::check_pair(x, y);
    if (x == y) return Scalar(0);
    const GeneratorValues<Scalar> at_x = generator_eval(g, x);
    const GeneratorValues<Scalar> at_y = generator_eval(g, y);
    return detail::sanitize(at_x.phi - at_y.phi - at_y.dphi * (x - y));
}

/// The standard-convention beta whose divergence this generator reproduces.
template <typename Scalar>
BetaParam<Scalar> equivalent_standard_beta(const GeneratorFamily<Scalar>& g) {
    const Scalar b = detail::native_beta(g);
    if (g.family == Family::C) {
        return BetaParam<Scalar>::standard_of(Scalar(1) - b);
    }
    return BetaParam<Scalar>::standard_of(b);
}

/// Constant c in d_phi(x|y) = c * d_beta(x|y) at equivalent_standard_beta().
/// Exactly 1 for families A and B; |b(b-1)| for family C away from the
/// special points b in {0, 1}, where the limit generators give 1.
template <typename Scalar>
Scalar proportionality_constant(const GeneratorFamily<Scalar>& g) {
    if (g.family != Family::C) return Scalar(1);
    const Scalar b = detail::native_beta(g);
    if (detail::near(b, Scalar(0)) || detail::near(b, Scalar(1))) {
        return Scalar(1);
    }
    return std::abs(b * (b - Scalar(1)));
}

}  // namespace betanmf
