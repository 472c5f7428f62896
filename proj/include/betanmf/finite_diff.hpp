#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace betanmf {

/// Central finite-difference estimate of f'(y) (order 1) or f''(y) (order 2)
/// for a scalar function on the positive domain.
///
/// Uses Ridders' scheme: a central stencil evaluated over a geometric ladder
/// of shrinking steps with Richardson extrapolation, returning the tableau
/// entry with the smallest error estimate. The estimate combines neighbor
/// disagreement with the per-level round-off floor eps |f| / h^order, so
/// noise-dominated deep entries cannot win by chance agreement. The initial
/// step is 0.45 y and only shrinks, keeping the whole ladder inside (0, inf)
/// for y > 0. Verification and test code only -- never called in solver
/// loops.
template <typename Scalar, typename F>
Scalar finite_diff_oracle(F&& f, Scalar y, int order) {
    if (!std::isfinite(y) || y <= Scalar(0)) {
        throw std::domain_error("finite_diff_oracle: y must be finite and > 0");
    }
    if (order != 1 && order != 2) {
        throw std::invalid_argument("finite_diff_oracle: order must be 1 or 2");
    }

    constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
    const Scalar f0 = f(y);
    // returns the stencil value and its round-off floor
    const auto stencil = [&](Scalar h) {
        const Scalar fp = f(y + h);
        const Scalar fm = f(y - h);
        if (order == 1) {
            const Scalar noise =
                2 * eps * (std::abs(fp) + std::abs(fm)) / (2 * h);
            return std::pair{(fp - fm) / (2 * h), noise};
        }
        const Scalar noise = 2 * eps *
                             (std::abs(fp) + 2 * std::abs(f0) + std::abs(fm)) /
                             (h * h);
        return std::pair{(fp - 2 * f0 + fm) / (h * h), noise};
    };

    constexpr int kTab = 16;
    const Scalar con = Scalar(1.4);
    const Scalar con2 = con * con;
    std::array<std::array<Scalar, kTab>, kTab> a{};

    Scalar h = Scalar(0.45) * y;
    Scalar noise;
    std::tie(a[0][0], noise) = stencil(h);
    Scalar best = a[0][0];
    Scalar best_err = std::numeric_limits<Scalar>::max();
    for (int i = 1; i < kTab; ++i) {
        h /= con;
        std::tie(a[0][i], noise) = stencil(h);
        Scalar fac = con2;
        for (int j = 1; j <= i; ++j) {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1);
            fac *= con2;
            const Scalar err =
                std::max({std::abs(a[j][i] - a[j - 1][i]),
                          std::abs(a[j][i] - a[j - 1][i - 1]), noise});
            if (err <= best_err) {
                best_err = err;
                best = a[j][i];
            }
        }
    }
    return best;
}

}  // namespace betanmf
