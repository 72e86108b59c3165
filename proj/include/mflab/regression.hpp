#pragma once

#include <span>
#include <vector>

namespace mflab::regression {

/// Powers z^p for p = min_power..degree, z scaled by max|z| first.
/// min_power < 0 gives a Laurent basis (regressor must stay away from 0).
/// With `adaptive` set, an ill-conditioned basis is trimmed from the top
/// (highest |p| first, constant and z^-1 / z kept longest) before the fit is
/// declared rank deficient; a cross-section with a small spread makes the
/// high powers numerically collinear.
struct BasisConfig {
    int min_power = 0;
    int degree = 3;
    double ridge = 1e-10;
    double max_condition = 1e12;
    bool adaptive = true;
};

/// Least-squares fit of y on the basis via ridge-regularised normal equations.
/// A regressor with zero spread collapses the basis to the constant.
class PolynomialFit {
public:
    /// Throws EstimationError (with the condition number) when the
    /// equilibrated Gram matrix is too ill-conditioned.
    static PolynomialFit fit(std::span<const double> z, std::span<const double> y, const BasisConfig& basis);

    double predict(double z) const;
    std::vector<double> predict(std::span<const double> z) const;

    double condition_number() const noexcept { return condition_; }
    const std::vector<double>& coefficients() const noexcept { return coef_; }
    const std::vector<int>& powers() const noexcept { return powers_; }

private:
    std::vector<int> powers_;
    double scale_ = 1.0;
    double condition_ = 1.0;
    std::vector<double> coef_;
};

}  // namespace mflab::regression
