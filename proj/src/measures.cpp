#include "mflab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mflab::measures {

namespace {

void require_finite(const Atom& a) {
    if (!std::isfinite(a.location) || !std::isfinite(a.weight)) {
        throw InvalidArgument("DiscreteMeasure: atom location and weight must be finite");
    }
}

double abs_pow(double y, int k) {
    if (k == 0) return 1.0;
    const double a = std::abs(y);
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= a;
    return r;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
    for (const auto& a : atoms_) require_finite(a);
}

DiscreteMeasure DiscreteMeasure::dirac(double location, double weight) {
    return DiscreteMeasure({Atom{location, weight}});
}

DiscreteMeasure DiscreteMeasure::uniform(std::span<const double> samples) {
    if (samples.empty()) throw InvalidArgument("DiscreteMeasure::uniform: no samples");
    const double w = 1.0 / static_cast<double>(samples.size());
    std::vector<Atom> atoms;
    atoms.reserve(samples.size());
    for (double x : samples) atoms.push_back({x, w});
    return DiscreteMeasure(std::move(atoms));
}

double DiscreteMeasure::total_mass() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight;
    return s;
}

double DiscreteMeasure::mass_in(const Interval& set) const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) {
        if (set.contains(a.location)) s += a.weight;
    }
    return s;
}

double DiscreteMeasure::first_moment() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms_) s += a.weight * a.location;
    return s;
}

bool DiscreteMeasure::is_probability(double tol) const noexcept {
    for (const auto& a : atoms_) {
        if (a.weight < 0.0) return false;
    }
    return std::abs(total_mass() - 1.0) <= tol;
}

DiscreteMeasure DiscreteMeasure::coalesced() const {
    std::vector<Atom> sorted = atoms_;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Atom& a, const Atom& b) { return a.location < b.location; });
    std::vector<Atom> out;
    out.reserve(sorted.size());
    for (const auto& a : sorted) {
        if (!out.empty() && out.back().location == a.location) {
            out.back().weight += a.weight;
        } else {
            out.push_back(a);
        }
    }
    DiscreteMeasure m;
    m.atoms_ = std::move(out);
    return m;
}

DiscreteMeasure DiscreteMeasure::scaled(double factor) const {
    DiscreteMeasure m = *this;
    for (auto& a : m.atoms_) a.weight *= factor;
    return m;
}

DiscreteMeasure& DiscreteMeasure::operator+=(const DiscreteMeasure& other) {
    atoms_.insert(atoms_.end(), other.atoms_.begin(), other.atoms_.end());
    return *this;
}

DiscreteMeasure& DiscreteMeasure::operator-=(const DiscreteMeasure& other) {
    atoms_.reserve(atoms_.size() + other.atoms_.size());
    for (const auto& a : other.atoms_) atoms_.push_back({a.location, -a.weight});
    return *this;
}

RandomMeasureEnsemble::RandomMeasureEnsemble(std::vector<DiscreteMeasure> scenarios)
    : scenarios_(std::move(scenarios)) {
    if (scenarios_.empty()) throw InvalidArgument("RandomMeasureEnsemble: at least one scenario required");
    weights_.assign(scenarios_.size(), 1.0 / static_cast<double>(scenarios_.size()));
}

RandomMeasureEnsemble::RandomMeasureEnsemble(std::vector<DiscreteMeasure> scenarios, std::vector<double> weights)
    : scenarios_(std::move(scenarios)), weights_(std::move(weights)) {
    if (scenarios_.empty()) throw InvalidArgument("RandomMeasureEnsemble: at least one scenario required");
    if (weights_.size() != scenarios_.size()) {
        throw InvalidArgument("RandomMeasureEnsemble: one weight per scenario required");
    }
    double total = 0.0;
    for (double w : weights_) {
        if (!(w >= 0.0)) throw InvalidArgument("RandomMeasureEnsemble: scenario weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("RandomMeasureEnsemble: scenario weights must sum to 1");
}

RandomMeasureEnsemble::RandomMeasureEnsemble(const DiscreteMeasure& deterministic)
    : scenarios_{deterministic}, weights_{1.0} {}

RandomMeasureEnsemble RandomMeasureEnsemble::minus(const RandomMeasureEnsemble& other) const {
    if (other.size() != size()) throw PairingError("RandomMeasureEnsemble::minus: scenario counts differ");
    std::vector<DiscreteMeasure> diff;
    diff.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) diff.push_back(scenarios_[i] - other.scenarios_[i]);
    return RandomMeasureEnsemble(std::move(diff), weights_);
}

double QuadratureRule::integrate(const std::function<double(double)>& f, int k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * abs_pow(nodes[i], k) * f(nodes[i]);
    return s;
}

std::complex<double> FourierTable::at(double y) const {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i] == y) return values[i];
    }
    throw InvalidArgument("FourierTable: no node at y = " + std::to_string(y));
}

std::complex<double> fourier_transform(const DiscreteMeasure& mu, double y) {
    double re = 0.0;
    double im = 0.0;
    for (const auto& a : mu.atoms()) {
        const double phase = a.location * y;
        re += a.weight * std::cos(phase);
        im += a.weight * std::sin(phase);
    }
    return {re, im};
}

FourierTable fourier_table(const DiscreteMeasure& mu, std::span<const double> nodes) {
    FourierTable t;
    t.nodes.assign(nodes.begin(), nodes.end());
    t.values.reserve(nodes.size());
    for (double y : nodes) t.values.push_back(fourier_transform(mu, y));
    return t;
}

FourierTable fourier_table(const DiscreteMeasure& mu, const QuadratureRule& quad) {
    return fourier_table(mu, std::span<const double>(quad.nodes));
}

double table_inner_product(const FourierTable& a, const FourierTable& b, int k, const QuadratureRule& quad) {
    if (a.size() != quad.size() || b.size() != quad.size()) {
        throw InvalidArgument("table_inner_product: tables must be tabulated on the rule's nodes");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < quad.size(); ++i) {
        const auto z = std::conj(a.values[i]) * b.values[i];
        s += quad.weights[i] * abs_pow(quad.nodes[i], k) * z.real();
    }
    return s;
}

double table_norm_sq(const FourierTable& table, int k, const QuadratureRule& quad) {
    return std::max(0.0, table_inner_product(table, table, k, quad));
}

double inner_product(const RandomMeasureEnsemble& mu, const RandomMeasureEnsemble& eta, int k,
                     const QuadratureRule& quad) {
    if (mu.size() != eta.size()) {
        throw PairingError("inner_product: scenario counts differ (" + std::to_string(mu.size()) + " vs " +
                           std::to_string(eta.size()) + ")");
    }
    if (k < 0) throw InvalidArgument("inner_product: k must be nonnegative");
    double total = 0.0;
    for (std::size_t s = 0; s < mu.size(); ++s) {
        const auto a = fourier_table(mu.scenario(s), quad);
        const auto b = fourier_table(eta.scenario(s), quad);
        total += mu.weight(s) * table_inner_product(a, b, k, quad);
    }
    return total;
}

double norm_sq(const RandomMeasureEnsemble& mu, int k, const QuadratureRule& quad) {
    const double v = inner_product(mu, mu, k, quad);
    if (v < 0.0) {
        if (v >= -1e-12) return 0.0;
        throw Error("norm_sq: negative squared norm " + std::to_string(v) + " beyond round-off");
    }
    return v;
}

double distance(const RandomMeasureEnsemble& mu, const RandomMeasureEnsemble& eta, int k,
                const QuadratureRule& quad) {
    return std::sqrt(norm_sq(mu.minus(eta), k, quad));
}

LawDistanceBound law_distance_bound_check(std::span<const double> x1, std::span<const double> x2,
                                          const QuadratureRule& quad, double tol) {
    if (x1.size() != x2.size()) throw InvalidArgument("law_distance_bound_check: sample lengths differ");
    if (x1.empty()) throw InvalidArgument("law_distance_bound_check: empty samples");
    const auto diff = DiscreteMeasure::uniform(x1) - DiscreteMeasure::uniform(x2);
    LawDistanceBound out;
    out.lhs = norm_sq(RandomMeasureEnsemble(diff), 0, quad);
    double ms = 0.0;
    for (std::size_t i = 0; i < x1.size(); ++i) {
        const double d = x1[i] - x2[i];
        ms += d * d;
    }
    out.rhs = kSqrtPi * ms / static_cast<double>(x1.size());
    out.holds = out.lhs <= out.rhs + tol;
    return out;
}

MeasureFunctional mass_on(const Interval& set, std::string name) {
    return MeasureFunctional{std::move(name), [set](const DiscreteMeasure& m) { return m.mass_in(set); }};
}

MeasureFunctional first_moment_functional() {
    return MeasureFunctional{"first_moment", [](const DiscreteMeasure& m) { return m.first_moment(); }};
}

}  // namespace mflab::measures
