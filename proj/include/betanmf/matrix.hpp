#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <variant>

#include "betanmf/divergence.hpp"
#include "betanmf/generator.hpp"

namespace betanmf {

/// Smallest admissible matrix entry; values below it are raised to it so
/// every entry stays inside the divergence domain (0, inf).
inline constexpr double kDefaultFloor = 1e-12;

/// Dense matrix whose entries are guaranteed >= floor > 0 after construction.
template <typename Scalar = double>
class NonNegMatrix {
  public:
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    explicit NonNegMatrix(Dense values, Scalar floor = Scalar(kDefaultFloor))
        : values_(std::move(values)), floor_(floor) {
        if (values_.rows() < 1 || values_.cols() < 1) {
            throw std::invalid_argument("NonNegMatrix: matrix must be non-empty");
        }
        if (!(floor_ > Scalar(0)) || !std::isfinite(floor_)) {
            throw std::invalid_argument("NonNegMatrix: floor must be finite and > 0");
        }
        if (!values_.allFinite()) {
            throw std::domain_error("NonNegMatrix: entries must be finite");
        }
        floored_ = (values_.array() < floor_).count();
        values_ = values_.array().max(floor_).matrix();
    }

    [[nodiscard]] const Dense& values() const { return values_; }
    [[nodiscard]] Scalar floor() const { return floor_; }
    /// Number of source entries raised to the floor at construction.
    [[nodiscard]] Eigen::Index floored_count() const { return floored_; }
    [[nodiscard]] Eigen::Index rows() const { return values_.rows(); }
    [[nodiscard]] Eigen::Index cols() const { return values_.cols(); }

  private:
    Dense values_;
    Scalar floor_;
    Eigen::Index floored_{0};
};

using NonNegMatrixd = NonNegMatrix<double>;

/// A divergence is selected either by a bare beta (Eq.-4 kernel) or by a
/// Bregman generator family.
template <typename Scalar = double>
using DivergenceSpec = std::variant<BetaParam<Scalar>, GeneratorFamily<Scalar>>;

using DivergenceSpecd = DivergenceSpec<double>;

/// Scalar divergence d(x|y) under the given spec.
template <typename Scalar>
Scalar scalar_divergence(Scalar x, Scalar y, const DivergenceSpec<Scalar>& d) {
    if (const auto* beta = std::get_if<BetaParam<Scalar>>(&d)) {
        return beta_divergence(x, y, *beta);
    }
    return bregman_divergence(std::get<GeneratorFamily<Scalar>>(d), x, y);
}

/// Sum of the scalar divergence over all entry pairs of X and Y.
///
/// Accumulation runs column-major in a fixed order, so the result is
/// bit-reproducible for identical inputs.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar elementwise_divergence(
    const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& Y,
    const DivergenceSpec<typename DerivedX::Scalar>& d) {
    using Scalar = typename DerivedX::Scalar;
    if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
        throw std::invalid_argument(
            "elementwise_divergence: shape mismatch (" +
            std::to_string(X.rows()) + "x" + std::to_string(X.cols()) + " vs " +
            std::to_string(Y.rows()) + "x" + std::to_string(Y.cols()) + ")");
    }
    Scalar total(0);
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            total += scalar_divergence<Scalar>(X(i, j), Y(i, j), d);
        }
    }
    return total;
}

template <typename Scalar>
Scalar elementwise_divergence(const NonNegMatrix<Scalar>& X,
                              const NonNegMatrix<Scalar>& Y,
                              const DivergenceSpec<Scalar>& d) {
    return elementwise_divergence(X.values(), Y.values(), d);
}

}  // namespace betanmf
