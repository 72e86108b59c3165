#pragma once

#include "mflab/core.hpp"

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mflab::measures {

struct Atom {
    double location = 0.0;
    double weight = 0.0;
};

/// Finite signed measure on the real line stored as weighted point masses.
/// Weights may be negative; probability-ness is a predicate, not an invariant.
class DiscreteMeasure {
public:
    DiscreteMeasure() = default;
    /// Throws InvalidArgument when a location or weight is not finite.
    explicit DiscreteMeasure(std::vector<Atom> atoms);

    static DiscreteMeasure dirac(double location, double weight = 1.0);
    /// Uniform weights 1/N at each sample, duplicates kept as separate atoms.
    static DiscreteMeasure uniform(std::span<const double> samples);

    std::span<const Atom> atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }
    bool empty() const noexcept { return atoms_.empty(); }

    double total_mass() const noexcept;
    double mass_in(const Interval& set) const noexcept;
    double first_moment() const noexcept;
    bool is_probability(double tol = 1e-12) const noexcept;

    /// Sorted by location with exactly-equal locations merged.
    DiscreteMeasure coalesced() const;
    DiscreteMeasure scaled(double factor) const;

    DiscreteMeasure& operator+=(const DiscreteMeasure& other);
    DiscreteMeasure& operator-=(const DiscreteMeasure& other);
    friend DiscreteMeasure operator+(DiscreteMeasure a, const DiscreteMeasure& b) { return a += b; }
    friend DiscreteMeasure operator-(DiscreteMeasure a, const DiscreteMeasure& b) { return a -= b; }

private:
    std::vector<Atom> atoms_;
};

/// A random measure: one DiscreteMeasure per omega-sample with probability
/// weights (uniform unless given).
class RandomMeasureEnsemble {
public:
    explicit RandomMeasureEnsemble(std::vector<DiscreteMeasure> scenarios);
    RandomMeasureEnsemble(std::vector<DiscreteMeasure> scenarios, std::vector<double> weights);
    /// Deterministic measure viewed as a one-scenario ensemble.
    RandomMeasureEnsemble(const DiscreteMeasure& deterministic);  // NOLINT(google-explicit-constructor)

    std::size_t size() const noexcept { return scenarios_.size(); }
    const DiscreteMeasure& scenario(std::size_t i) const { return scenarios_.at(i); }
    double weight(std::size_t i) const { return weights_.at(i); }

    RandomMeasureEnsemble minus(const RandomMeasureEnsemble& other) const;

private:
    std::vector<DiscreteMeasure> scenarios_;
    std::vector<double> weights_;
};

enum class QuadratureKind { gauss_hermite, truncated_trapezoid };

/// Nodes/weights for integrals of the form  int f(y) e^{-y^2} dy.
/// The Gaussian weight is already inside `weights`; the |y|^k factor of the
/// M^(k) norms is applied at evaluation time, so one rule serves every k.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    QuadratureKind kind = QuadratureKind::gauss_hermite;
    int target_k = 0;

    std::size_t size() const noexcept { return nodes.size(); }
    /// sum_i w_i |y_i|^k f(y_i)
    double integrate(const std::function<double(double)>& f, int k = 0) const;
};

/// Gauss-Hermite rule of n points; exact for polynomials of degree <= 2n-1
/// against e^{-y^2}. Throws InvalidArgument for n < 2.
QuadratureRule gauss_hermite_rule(int n, int k = 0);

/// Trapezoid rule on [-half_width, half_width] with the Gaussian weight
/// folded into the weights. Independent cross-check for Gauss-Hermite.
QuadratureRule truncated_trapezoid_rule(double half_width = 8.0, int points = 4096, int k = 0);

/// Default rule used by the norms: 64-point Gauss-Hermite.
const QuadratureRule& default_rule();

/// Values of a Fourier transform on a fixed set of y-nodes.
struct FourierTable {
    std::vector<double> nodes;
    std::vector<std::complex<double>> values;

    std::size_t size() const noexcept { return nodes.size(); }
    /// Value at an exactly matching node; throws InvalidArgument otherwise.
    std::complex<double> at(double y) const;
};

/// sum_j w_j exp(i x_j y), exact for atomic measures.
std::complex<double> fourier_transform(const DiscreteMeasure& mu, double y);
FourierTable fourier_table(const DiscreteMeasure& mu, std::span<const double> nodes);
FourierTable fourier_table(const DiscreteMeasure& mu, const QuadratureRule& quad);

/// <mu, eta>_{M^(k)}: scenario-weighted average of
/// int Re(conj(mu^(y)) eta^(y)) |y|^k e^{-y^2} dy.
double inner_product(const RandomMeasureEnsemble& mu, const RandomMeasureEnsemble& eta, int k,
                     const QuadratureRule& quad);

/// ||mu||^2_{M^(k)}. Round-off negatives down to -1e-12 are clamped to 0.
double norm_sq(const RandomMeasureEnsemble& mu, int k, const QuadratureRule& quad);
double distance(const RandomMeasureEnsemble& mu, const RandomMeasureEnsemble& eta, int k,
                const QuadratureRule& quad);

/// Same norms for tabulated Fourier data; nodes must match the rule's nodes.
double table_inner_product(const FourierTable& a, const FourierTable& b, int k, const QuadratureRule& quad);
double table_norm_sq(const FourierTable& table, int k, const QuadratureRule& quad);

struct LawDistanceBound {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// Compares ||L(X1) - L(X2)||^2_{M_0} for the empirical laws of paired samples
/// with sqrt(pi) E[(X1 - X2)^2].
LawDistanceBound law_distance_bound_check(std::span<const double> x1, std::span<const double> x2,
                                          const QuadratureRule& quad, double tol = 1e-8);

/// A named functional through which coefficients read measures. All
/// functionals used by the library are linear in the measure.
struct MeasureFunctional {
    std::string name;
    std::function<double(const DiscreteMeasure&)> evaluate;
};

MeasureFunctional mass_on(const Interval& set, std::string name = "mass_on_V");
MeasureFunctional first_moment_functional();

}  // namespace mflab::measures
