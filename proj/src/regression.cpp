#include "mflab/regression.hpp"

#include "mflab/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace mflab::regression {

namespace {

double basis_value(double s, int p) {
    double v = 1.0;
    if (p >= 0) {
        for (int i = 0; i < p; ++i) v *= s;
    } else {
        for (int i = 0; i < -p; ++i) v /= s;
    }
    return v;
}

// Constant first, then increasing |p| with the negative power ahead on ties.
std::vector<int> priority_order(int min_power, int degree) {
    std::vector<int> p;
    for (int q = min_power; q <= degree; ++q) p.push_back(q);
    std::stable_sort(p.begin(), p.end(), [](int a, int b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        return a < b;
    });
    return p;
}

struct Solved {
    double condition = std::numeric_limits<double>::infinity();
    Eigen::VectorXd coef;
};

Solved solve_normal(const Eigen::MatrixXd& design, const Eigen::VectorXd& rhs, double ridge) {
    const double n = static_cast<double>(design.rows());
    const Eigen::MatrixXd gram = design.transpose() * design / n;
    const Eigen::VectorXd moment = design.transpose() * rhs / n;

    // Jacobi equilibration before the condition check and solve.
    const Eigen::VectorXd d = gram.diagonal().cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd eq = d.asDiagonal() * gram * d.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(eq, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    Solved out;
    out.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    eq.diagonal().array() += ridge;
    const Eigen::VectorXd w = eq.ldlt().solve(d.asDiagonal() * moment);
    out.coef = d.asDiagonal() * w;
    return out;
}

}  // namespace

PolynomialFit PolynomialFit::fit(std::span<const double> z, std::span<const double> y, const BasisConfig& basis) {
    if (z.size() != y.size() || z.empty()) throw InvalidArgument("regression: z and y must be nonempty and equal length");
    if (basis.min_power > 0 || basis.degree < 0) throw InvalidArgument("regression: need min_power <= 0 <= degree");

    PolynomialFit out;
    const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
    if (*lo == *hi) {
        // Nothing to regress on: the conditional expectation is the mean.
        double mean = 0.0;
        for (double v : y) mean += v;
        out.powers_ = {0};
        out.coef_ = {mean / static_cast<double>(y.size())};
        return out;
    }
    if (basis.min_power < 0 && *lo <= 0.0 && *hi >= 0.0) {
        throw InvalidArgument("regression: Laurent basis needs a regressor of one sign");
    }
    out.scale_ = std::max(std::abs(*lo), std::abs(*hi));

    auto powers = priority_order(basis.min_power, basis.degree);
    const auto n = static_cast<Eigen::Index>(z.size());
    Eigen::MatrixXd full(n, static_cast<Eigen::Index>(powers.size()));
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = z[static_cast<std::size_t>(i)] / out.scale_;
        for (std::size_t j = 0; j < powers.size(); ++j) full(i, static_cast<Eigen::Index>(j)) = basis_value(s, powers[j]);
        rhs(i) = y[static_cast<std::size_t>(i)];
    }

    for (auto cols = static_cast<Eigen::Index>(powers.size());; --cols) {
        const auto solved = solve_normal(full.leftCols(cols), rhs, basis.ridge);
        if (solved.condition <= basis.max_condition) {
            out.condition_ = solved.condition;
            out.powers_.assign(powers.begin(), powers.begin() + cols);
            out.coef_.assign(solved.coef.data(), solved.coef.data() + solved.coef.size());
            return out;
        }
        if (!basis.adaptive || cols <= 2) throw EstimationError("regression: basis is rank deficient", solved.condition);
    }
}

double PolynomialFit::predict(double z) const {
    const double s = z / scale_;
    double v = 0.0;
    for (std::size_t j = 0; j < coef_.size(); ++j) v += coef_[j] * basis_value(s, powers_[j]);
    return v;
}

std::vector<double> PolynomialFit::predict(std::span<const double> z) const {
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = predict(z[i]);
    return out;
}

}  // namespace mflab::regression
