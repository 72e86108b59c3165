#include "mflab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mflab::measures {

// Hermite roots by Newton iteration on the orthonormal three-term recurrence,
// with the classical asymptotic starting guesses.
QuadratureRule gauss_hermite_rule(int n, int k) {
    if (n < 2) throw InvalidArgument("gauss_hermite_rule: n must be at least 2");
    if (k < 0) throw InvalidArgument("gauss_hermite_rule: k must be nonnegative");

    constexpr double kPiMinusQuarter = 0.7511255444649425;  // pi^{-1/4}
    const auto nn = static_cast<std::size_t>(n);
    std::vector<double> x(nn), w(nn);
    const int half = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < half; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * x[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * x[1];
        } else {
            z = 2.0 * z - x[static_cast<std::size_t>(i - 2)];
        }
        double pp = 0.0;
        bool converged = false;
        for (int it = 0; it < 200; ++it) {
            double p1 = kPiMinusQuarter;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1.0)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) {
                converged = true;
                break;
            }
        }
        if (!converged) throw Error("gauss_hermite_rule: Newton iteration did not converge");
        const auto ii = static_cast<std::size_t>(i);
        x[ii] = z;
        x[nn - 1 - ii] = -z;
        w[ii] = 2.0 / (pp * pp);
        w[nn - 1 - ii] = w[ii];
    }
    if (n % 2 == 1) x[static_cast<std::size_t>(half - 1)] = 0.0;

    std::vector<std::size_t> order(nn);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });

    QuadratureRule rule;
    rule.kind = QuadratureKind::gauss_hermite;
    rule.target_k = k;
    rule.nodes.reserve(nn);
    rule.weights.reserve(nn);
    for (auto idx : order) {
        rule.nodes.push_back(x[idx]);
        rule.weights.push_back(w[idx]);
    }
    return rule;
}

QuadratureRule truncated_trapezoid_rule(double half_width, int points, int k) {
    if (!(half_width > 0.0)) throw InvalidArgument("truncated_trapezoid_rule: half width must be positive");
    if (points < 3) throw InvalidArgument("truncated_trapezoid_rule: need at least 3 points");
    QuadratureRule rule;
    rule.kind = QuadratureKind::truncated_trapezoid;
    rule.target_k = k;
    const auto n = static_cast<std::size_t>(points);
    const double h = 2.0 * half_width / static_cast<double>(n - 1);
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = -half_width + h * static_cast<double>(i);
        rule.nodes[i] = y;
        rule.weights[i] = h * std::exp(-y * y) * ((i == 0 || i + 1 == n) ? 0.5 : 1.0);
    }
    return rule;
}

const QuadratureRule& default_rule() {
    static const QuadratureRule rule = gauss_hermite_rule(64, 0);
    return rule;
}

}  // namespace mflab::measures
