#include "mflab/measures.hpp"
#include "mflab/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mflab;
using measures::DiscreteMeasure;
using measures::RandomMeasureEnsemble;

namespace {

DiscreteMeasure random_measure(StreamRng& rng, std::size_t atoms, bool signed_weights) {
    std::normal_distribution<double> normal;
    std::vector<measures::Atom> a;
    for (std::size_t i = 0; i < atoms; ++i) {
        const double w = signed_weights ? normal(rng) : std::abs(normal(rng));
        a.push_back({2.0 * normal(rng), w});
    }
    return DiscreteMeasure(std::move(a));
}

}  // namespace

TEST(FourierTransform, DiracIsPlaneWave) {
    for (double y : {-2.0, 0.3, 5.0}) {
        const auto v = measures::fourier_transform(DiscreteMeasure::dirac(1.7), y);
        EXPECT_NEAR(v.real(), std::cos(1.7 * y), 1e-15);
        EXPECT_NEAR(v.imag(), std::sin(1.7 * y), 1e-15);
    }
}

TEST(FourierTransform, EmptyMeasureIsZero) {
    const auto v = measures::fourier_transform(DiscreteMeasure{}, 1.3);
    EXPECT_EQ(v, std::complex<double>(0.0, 0.0));
}

TEST(FourierTransform, SymmetricPairIsCosine) {
    const DiscreteMeasure m({{-1.0, 0.5}, {1.0, 0.5}});
    for (double y : {0.0, 0.7, 3.1}) {
        const auto v = measures::fourier_transform(m, y);
        EXPECT_NEAR(v.real(), std::cos(y), 1e-15);
        EXPECT_NEAR(v.imag(), 0.0, 1e-15);
    }
}

TEST(InnerProduct, DiracNorms) {
    const auto& q = measures::default_rule();
    EXPECT_NEAR(measures::inner_product(DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(0.0), 0, q), kSqrtPi,
                1e-12);
    for (double x0 : {-3.7, 0.0, 1.0, 12.5}) {
        EXPECT_NEAR(measures::norm_sq(DiscreteMeasure::dirac(x0), 0, q), kSqrtPi, 1e-10);
    }
    EXPECT_NEAR(measures::norm_sq(DiscreteMeasure::dirac(0.0), 2, q), kSqrtPi / 2.0, 1e-12);
}

TEST(InnerProduct, MassBound) {
    StreamRng rng(3, {1});
    const auto& q = measures::default_rule();
    for (int k : {0, 2, 4}) {
        const auto m = random_measure(rng, 7, false);
        const double mass = m.total_mass();
        // int |y|^k e^{-y^2} dy = Gamma((k + 1) / 2)
        const double bound = mass * mass * std::tgamma((k + 1.0) / 2.0);
        EXPECT_LE(measures::norm_sq(m, k, q), bound * (1.0 + 1e-12));
    }
}

TEST(InnerProduct, DiracDistanceMatchesAnalyticAndTrapezoid) {
    const auto trap = measures::truncated_trapezoid_rule(10.0, 20001);
    for (double c : {0.1, 1.0, 3.0, 7.0}) {
        const auto d = DiscreteMeasure::dirac(0.0) - DiscreteMeasure::dirac(c);
        const double analytic = 2.0 * kSqrtPi * (1.0 - std::exp(-c * c / 4.0));
        EXPECT_NEAR(measures::norm_sq(d, 0, measures::default_rule()), analytic, 1e-10);
        EXPECT_NEAR(measures::norm_sq(d, 0, trap), analytic, 1e-10);
    }
}

TEST(InnerProduct, MismatchedScenarioCountsThrow) {
    const RandomMeasureEnsemble a({DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(1.0)});
    const RandomMeasureEnsemble b({DiscreteMeasure::dirac(0.0)});
    EXPECT_THROW(measures::inner_product(a, b, 0, measures::default_rule()), PairingError);
}

TEST(InnerProduct, SymmetryBilinearityCauchySchwarzTriangle) {
    const auto& q = measures::default_rule();
    for (std::uint64_t inst = 0; inst < 25; ++inst) {
        StreamRng rng(11, {inst});
        const auto a = random_measure(rng, 5, true);
        const auto b = random_measure(rng, 4, true);
        const auto c = random_measure(rng, 6, true);
        const double ab = measures::inner_product(a, b, 0, q);
        EXPECT_NEAR(ab, measures::inner_product(b, a, 0, q), 1e-12 * (1.0 + std::abs(ab)));
        EXPECT_NEAR(measures::inner_product(a.scaled(-2.5), b, 0, q), -2.5 * ab, 1e-12 * (1.0 + std::abs(ab)));
        EXPECT_NEAR(measures::inner_product(a + c, b, 0, q), ab + measures::inner_product(c, b, 0, q),
                    1e-11 * (1.0 + std::abs(ab)));
        const double na = measures::norm_sq(a, 0, q);
        const double nb = measures::norm_sq(b, 0, q);
        EXPECT_LE(ab * ab, na * nb * (1.0 + 1e-9));
        const double dac = measures::distance(a, c, 0, q);
        EXPECT_LE(dac, measures::distance(a, b, 0, q) + measures::distance(b, c, 0, q) + 1e-12);
    }
}

TEST(InnerProduct, RandomEnsembleAveragesScenarios) {
    const auto& q = measures::default_rule();
    const RandomMeasureEnsemble e({DiscreteMeasure::dirac(0.0), DiscreteMeasure::dirac(0.0, 2.0)}, {0.25, 0.75});
    EXPECT_NEAR(measures::norm_sq(e, 0, q), 0.25 * kSqrtPi + 0.75 * 4.0 * kSqrtPi, 1e-12);
}

TEST(NormSq, ZeroMeasureIsZero) {
    const auto d = DiscreteMeasure::dirac(0.3) - DiscreteMeasure::dirac(0.3);
    EXPECT_EQ(measures::norm_sq(d, 0, measures::default_rule()), 0.0);
}

TEST(LawDistanceBound, IdenticalSamples) {
    const std::vector<double> x = {0.1, -2.0, 3.3};
    const auto r = measures::law_distance_bound_check(x, x, measures::default_rule());
    EXPECT_NEAR(r.lhs, 0.0, 1e-14);
    EXPECT_EQ(r.rhs, 0.0);
    EXPECT_TRUE(r.holds);
}

TEST(LawDistanceBound, ConstantSamples) {
    for (double c : {0.5, 2.0}) {
        const std::vector<double> x1(50, 0.0);
        const std::vector<double> x2(50, c);
        const auto r = measures::law_distance_bound_check(x1, x2, measures::default_rule());
        EXPECT_NEAR(r.lhs, 2.0 * kSqrtPi * (1.0 - std::exp(-c * c / 4.0)), 1e-10);
        EXPECT_NEAR(r.rhs, kSqrtPi * c * c, 1e-12);
        EXPECT_TRUE(r.holds);
    }
}

TEST(LawDistanceBound, ShiftedNormalSamples) {
    StreamRng rng(5, {0});
    std::normal_distribution<double> normal;
    std::vector<double> x1(1000), x2(1000);
    for (std::size_t i = 0; i < x1.size(); ++i) {
        x1[i] = normal(rng);
        x2[i] = x1[i] + 0.1;
    }
    const auto r = measures::law_distance_bound_check(x1, x2, measures::default_rule());
    EXPECT_TRUE(r.holds);
    EXPECT_NEAR(r.rhs, kSqrtPi * 0.01, 1e-12);
    EXPECT_GT(r.lhs, 0.0);
}

TEST(LawDistanceBound, LengthMismatchThrows) {
    const std::vector<double> a = {1.0, 2.0};
    const std::vector<double> b = {1.0};
    EXPECT_THROW(measures::law_distance_bound_check(a, b, measures::default_rule()), InvalidArgument);
}

TEST(GaussHermite, TwoPointRule) {
    const auto r = measures::gauss_hermite_rule(2);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r.nodes[0], -1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(r.nodes[1], 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(r.weights[0], kSqrtPi / 2.0, 1e-15);
    EXPECT_NEAR(r.weights[1], kSqrtPi / 2.0, 1e-15);
}

TEST(GaussHermite, ExactnessAndCosine) {
    const auto r = measures::gauss_hermite_rule(20);
    EXPECT_NEAR(r.integrate([](double) { return 1.0; }), kSqrtPi, 1e-12);
    EXPECT_NEAR(r.integrate([](double y) { return std::cos(y); }), kSqrtPi * std::exp(-0.25), 1e-10);
    // degree 38 monomial: int y^38 e^{-y^2} = Gamma(39/2)
    EXPECT_NEAR(r.integrate([](double y) { return std::pow(y, 38); }) / std::tgamma(19.5), 1.0, 1e-10);
}

TEST(GaussHermite, NodesIncreasingWeightsPositive) {
    for (int n : {3, 17, 64, 128}) {
        const auto r = measures::gauss_hermite_rule(n);
        for (std::size_t i = 0; i < r.size(); ++i) {
            EXPECT_GT(r.weights[i], 0.0);
            if (i > 0) EXPECT_GT(r.nodes[i], r.nodes[i - 1]);
        }
    }
}

TEST(GaussHermite, ConvergesMonotonically) {
    const double analytic = kSqrtPi * std::exp(-9.0 / 4.0);
    double previous = std::numeric_limits<double>::infinity();
    for (int n : {8, 16, 32, 64}) {
        const auto r = measures::gauss_hermite_rule(n);
        const double err = std::abs(r.integrate([](double y) { return std::cos(3.0 * y); }) - analytic);
        EXPECT_LE(err, std::max(previous, 1e-14));
        previous = err;
    }
    EXPECT_LE(previous, 1e-10);
}

TEST(GaussHermite, RejectsTinyRule) { EXPECT_THROW(measures::gauss_hermite_rule(1), InvalidArgument); }

TEST(Trapezoid, CrossChecksGaussHermite) {
    const auto trap = measures::truncated_trapezoid_rule();
    const auto gh = measures::default_rule();
    for (int k : {0, 2}) {
        const auto f = [](double y) { return std::cos(1.3 * y) * std::cos(1.3 * y); };
        EXPECT_NEAR(trap.integrate(f, k), gh.integrate(f, k), 1e-10);
    }
}

TEST(DiscreteMeasure, PredicatesAndArithmetic) {
    const DiscreteMeasure m({{1.0, 0.25}, {1.0, 0.25}, {-2.0, 0.5}});
    EXPECT_TRUE(m.is_probability());
    EXPECT_DOUBLE_EQ(m.first_moment(), -0.5);
    EXPECT_DOUBLE_EQ(m.mass_in(Interval::positive_half_line()), 0.5);
    const auto c = m.coalesced();
    ASSERT_EQ(c.size(), 2u);
    EXPECT_DOUBLE_EQ(c.atoms()[0].location, -2.0);
    EXPECT_DOUBLE_EQ(c.atoms()[1].weight, 0.5);
    EXPECT_FALSE((m - DiscreteMeasure::dirac(5.0)).is_probability());
    EXPECT_THROW(DiscreteMeasure({{std::nan(""), 1.0}}), InvalidArgument);
}

TEST(MeasureFunctionals, MassOnAndFirstMoment) {
    const DiscreteMeasure m({{-1.0, 0.2}, {0.0, 0.3}, {2.0, 0.5}});
    EXPECT_DOUBLE_EQ(measures::mass_on(Interval::positive_half_line()).evaluate(m), 0.5);
    EXPECT_DOUBLE_EQ(measures::first_moment_functional().evaluate(m), 0.8);
}
