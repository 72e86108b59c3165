#include "mflab/lawproc.hpp"
#include "mflab/rng.hpp"
#include "mflab/sde.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace mflab;
using lawproc::ItoLevyCoeffs;
using measures::DiscreteMeasure;

namespace {

ItoLevyCoeffs constant_coeffs(double alpha, double beta, double gamma = 0.0, lawproc::LevyMeasure levy = {}) {
    ItoLevyCoeffs c;
    c.alpha = [alpha](double, const Scenario&) { return alpha; };
    c.beta = [beta](double, const Scenario&) { return beta; };
    c.gamma = [gamma](double, double, const Scenario&) { return gamma; };
    c.levy = std::move(levy);
    return c;
}

DiscreteMeasure binned_normal(double variance) {
    const double sd = std::sqrt(variance);
    return lawproc::binned_law([sd](double x) { return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0))); }, -12.0 * sd,
                               12.0 * sd, 24000);
}

lawproc::MeasurePath brownian_path(double t0, double t1, std::size_t m) {
    std::vector<double> times;
    std::vector<DiscreteMeasure> values;
    for (std::size_t k = 0; k <= m; ++k) {
        const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(m);
        times.push_back(t);
        values.push_back(binned_normal(t));
    }
    return {times, values};
}

double fd_error_brownian(double h) {
    const auto& q = measures::default_rule();
    const lawproc::MeasurePath path({1.0 - h, 1.0, 1.0 + h},
                                    {binned_normal(1.0 - h), binned_normal(1.0), binned_normal(1.0 + h)});
    auto fd = lawproc::law_derivative_fd(path, 1, q);
    for (std::size_t j = 0; j < q.size(); ++j) {
        const double y = q.nodes[j];
        fd.values[j] -= -0.5 * y * y * std::exp(-0.5 * y * y);
    }
    return std::sqrt(measures::table_norm_sq(fd, 0, q));
}

}  // namespace

TEST(EmpiricalLaw, CoalescesAndHasUnitMass) {
    const auto single = lawproc::empirical_law(std::vector<double>{0.0});
    ASSERT_EQ(single.size(), 1u);
    EXPECT_EQ(single.atoms()[0].weight, 1.0);

    const auto m = lawproc::empirical_law(std::vector<double>{1.0, 1.0, 3.0});
    ASSERT_EQ(m.size(), 2u);
    EXPECT_DOUBLE_EQ(m.atoms()[0].location, 1.0);
    EXPECT_NEAR(m.atoms()[0].weight, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(m.atoms()[1].weight, 1.0 / 3.0, 1e-15);
    EXPECT_THROW(lawproc::empirical_law(std::vector<double>{}), InvalidArgument);
}

TEST(EmpiricalLaw, CoalescingKeepsFourierTransform) {
    StreamRng rng(2, {0});
    std::uniform_int_distribution<int> pick(0, 9);
    std::vector<double> xs(500);
    for (auto& x : xs) x = 0.5 * pick(rng);
    const auto raw = DiscreteMeasure::uniform(xs);
    const auto law = lawproc::empirical_law(xs);
    EXPECT_NEAR(law.total_mass(), 1.0, 1e-12);
    for (double y : {0.3, 1.7, 4.0}) {
        EXPECT_NEAR(std::abs(measures::fourier_transform(raw, y) - measures::fourier_transform(law, y)), 0.0, 1e-14);
    }
}

TEST(EmpiricalLaw, StandardNormalDrawsCloseToBinnedLaw) {
    StreamRng rng(42, {0});
    std::normal_distribution<double> normal;
    std::vector<double> xs(100000);
    for (auto& x : xs) x = normal(rng);
    const double d = measures::distance(lawproc::empirical_law(xs), binned_normal(1.0), 0, measures::default_rule());
    EXPECT_LE(d, 0.05);
}

TEST(Generator, TextbookCases) {
    const Scenario s;
    EXPECT_EQ(lawproc::generator_on_test_fn(constant_coeffs(0, 0), 0.0, 0.4, 1.3, s), std::complex<double>(0, 0));
    const double x = 0.4, y = 1.3;
    const auto plane = std::polar(1.0, x * y);
    const auto drift = lawproc::generator_on_test_fn(constant_coeffs(1, 0), 0.0, x, y, s);
    EXPECT_NEAR(std::abs(drift - std::complex<double>(0, y) * plane), 0.0, 1e-15);
    const auto diffusion = lawproc::generator_on_test_fn(constant_coeffs(0, 1), 0.0, x, y, s);
    EXPECT_NEAR(std::abs(diffusion - (-0.5 * y * y) * plane), 0.0, 1e-15);
    const auto jump =
        lawproc::generator_on_test_fn(constant_coeffs(0, 0, 0.5, lawproc::LevyMeasure::single(0.5, 2.0)), 0, x, y, s);
    const auto expected = 2.0 * (std::polar(1.0, 0.5 * y) - 1.0 - std::complex<double>(0, 0.5 * y)) * plane;
    EXPECT_NEAR(std::abs(jump - expected), 0.0, 1e-14);
}

TEST(Generator, DynkinConsistencyForSimulatedParticles) {
    // mean(phi(X_{t+h})) - mean(phi(X_t)) ~ h mean(A phi(X_t)) for drift-only
    // and diffusion-only particles.
    for (const auto& [alpha, beta] : {std::pair{0.7, 0.0}, std::pair{0.0, 0.5}}) {
        sde::ControlledModel model;
        model.x0 = 0.2;
        model.horizon = 1.0;
        model.drift = [alpha](const sde::CoeffArgs&) { return alpha; };
        model.diffusion = [beta](const sde::CoeffArgs&) { return beta; };
        model.jump = [](const sde::CoeffArgs&, double) { return 0.0; };
        sde::ControlPair controls;
        controls.real = [](const sde::Observation&) { return 0.0; };
        controls.measure = [](const sde::Observation&) { return sde::MeasureControlValue{}; };
        sde::SimulationConfig sc;
        sc.n_particles = 20000;
        sc.n_steps = 100;
        sc.seed = 9;
        const auto b = sde::simulate(model, controls, sc);
        const auto coeffs = constant_coeffs(alpha, beta);
        const std::size_t k0 = 50, k1 = 52;
        const double h = b.grid.time(k1) - b.grid.time(k0);
        for (double y : {0.5, 1.0, 2.0}) {
            std::complex<double> lhs = 0.0, rhs = 0.0;
            for (std::size_t i = 0; i < sc.n_particles; ++i) {
                lhs += std::polar(1.0, y * b.state(i, k1)) - std::polar(1.0, y * b.state(i, k0));
                for (std::size_t k = k0; k < k1; ++k) {
                    rhs += lawproc::generator_on_test_fn(coeffs, b.grid.time(k), b.state(i, k), y, {}) * b.grid.dt();
                }
            }
            const double n = static_cast<double>(sc.n_particles);
            EXPECT_LE(std::abs((lhs - rhs) / n), 4.0 * (h * h + 1.0 / std::sqrt(n))) << "y=" << y;
        }
    }
}

TEST(LawDerivative, ConstantPathIsZero) {
    const lawproc::MeasurePath path({0.0, 0.5, 1.0}, std::vector<DiscreteMeasure>(3, DiscreteMeasure::dirac(0.3)));
    const auto fd = lawproc::law_derivative_fd(path, 1, measures::default_rule());
    for (const auto& v : fd.values) EXPECT_EQ(std::abs(v), 0.0);
    EXPECT_THROW(lawproc::law_derivative_fd(path, 0, measures::default_rule()), InvalidArgument);
    EXPECT_THROW(lawproc::law_derivative_fd(path, 2, measures::default_rule()), InvalidArgument);
}

TEST(LawDerivative, BrownianDensityDerivative) {
    EXPECT_LE(fd_error_brownian(0.01), 1e-3);
}

TEST(LawDerivative, SecondOrderConsistency) {
    const double e1 = fd_error_brownian(0.08);
    const double e2 = fd_error_brownian(0.04);
    EXPECT_NEAR(e1 / e2, 4.0, 0.4);
}

TEST(LawDerivative, PoissonPmfDerivative) {
    const auto& q = measures::default_rule();
    const double rate = 1.0, t = 1.0, h = 1e-3;
    auto pmf = [&](double s) {
        std::vector<measures::Atom> atoms;
        for (int k = 0; k <= 60; ++k) {
            atoms.push_back({double(k), std::exp(-rate * s + k * std::log(rate * s) - std::lgamma(k + 1.0))});
        }
        return DiscreteMeasure(atoms);
    };
    const lawproc::MeasurePath path({t - h, t, t + h}, {pmf(t - h), pmf(t), pmf(t + h)});
    const auto fd = lawproc::law_derivative_fd(path, 1, q);
    // d/dt P(N_t = k) = rate e^{-rate t} (rate t)^{k-1} (k - rate t) / k!
    std::vector<measures::Atom> deriv;
    for (int k = 0; k <= 60; ++k) {
        const double p = std::exp(-rate * t + k * std::log(rate * t) - std::lgamma(k + 1.0));
        deriv.push_back({double(k), p * (k - rate * t) / t});
    }
    const auto exact = measures::fourier_table(DiscreteMeasure(deriv), q);
    auto diff = fd;
    for (std::size_t j = 0; j < q.size(); ++j) diff.values[j] -= exact.values[j];
    EXPECT_LE(std::sqrt(measures::table_norm_sq(diff, 0, q)), 1e-4);
}

TEST(AbsContinuity, ConstantPathAndShortPath) {
    const lawproc::MeasurePath path({0.0, 0.25, 0.5, 0.75, 1.0},
                                    std::vector<DiscreteMeasure>(5, DiscreteMeasure::dirac(1.0)));
    for (const auto& r : lawproc::abs_continuity_scan(path, measures::default_rule())) {
        EXPECT_EQ(r.max_sq_increment, 0.0);
    }
    const lawproc::MeasurePath two({0.0, 1.0}, std::vector<DiscreteMeasure>(2, DiscreteMeasure::dirac(1.0)));
    EXPECT_THROW(lawproc::abs_continuity_scan(two, measures::default_rule()), InvalidArgument);
}

TEST(AbsContinuity, DiracDriftMatchesAnalytic) {
    std::vector<double> times;
    std::vector<DiscreteMeasure> values;
    for (int k = 0; k <= 64; ++k) {
        times.push_back(k / 64.0);
        values.push_back(DiscreteMeasure::dirac(k / 64.0));
    }
    const auto rows = lawproc::abs_continuity_scan({times, values}, measures::default_rule());
    for (const auto& r : rows) {
        EXPECT_NEAR(r.max_sq_increment, 2.0 * kSqrtPi * (1.0 - std::exp(-r.h * r.h / 4.0)), 1e-12);
    }
    EXPECT_GE(lawproc::loglog_slope(rows), 1.8);
}

TEST(M4Bound, ConstantPathGivesZeroRatios) {
    const lawproc::MeasurePath path({0.0, 0.5, 1.0}, std::vector<DiscreteMeasure>(3, DiscreteMeasure::dirac(0.0)));
    for (double r : lawproc::m4_norm_bound_check(path, measures::default_rule())) EXPECT_EQ(r, 0.0);
}

TEST(M4Bound, DiracDriftClosedForm) {
    // M(t) = delta_t: |M'^(y)| = |y|, ||M'||^2_{M0} = sqrt(pi)/2, ||M||^2_{M0^(4)} = 3 sqrt(pi)/4.
    std::vector<double> times;
    std::vector<DiscreteMeasure> values;
    for (int k = 0; k <= 100; ++k) {
        times.push_back(k / 100.0);
        values.push_back(DiscreteMeasure::dirac(k / 100.0));
    }
    const double expected = std::sqrt(0.5) / std::sqrt(0.75);
    for (double r : lawproc::m4_norm_bound_check({times, values}, measures::default_rule())) {
        EXPECT_NEAR(r, expected, 1e-4);
    }
}

TEST(M4Bound, BrownianRatioStableUnderRefinement) {
    const auto& q = measures::default_rule();
    const auto coarse = lawproc::m4_norm_bound_check(brownian_path(0.5, 1.5, 10), q);
    const auto fine = lawproc::m4_norm_bound_check(brownian_path(0.5, 1.5, 20), q);
    const double a = *std::max_element(coarse.begin(), coarse.end());
    const double b = *std::max_element(fine.begin(), fine.end());
    EXPECT_TRUE(std::isfinite(a));
    EXPECT_NEAR(b / a, 1.0, 0.2);
}

TEST(MeasurePathCsv, RoundTrip) {
    const lawproc::MeasurePath path({0.0, 0.5}, {DiscreteMeasure::dirac(1.0), DiscreteMeasure({{-0.5, 0.25}, {2.0, 0.75}})});
    std::stringstream s;
    lawproc::write_csv(s, path);
    const auto back = lawproc::read_csv(s);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back.times[1], 0.5);
    ASSERT_EQ(back.values[1].size(), 2u);
    EXPECT_EQ(back.values[1].atoms()[1].weight, 0.75);
}
