#include "mflab/bsde.hpp"
#include "mflab/regression.hpp"
#include "mflab/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace mflab;

namespace {

bsde::LinearBsdeSpec deterministic_spec(double phi, double alpha, double terminal) {
    bsde::LinearBsdeSpec s;
    s.phi = [phi](double, const Scenario&) { return phi; };
    s.alpha = [alpha](double, const Scenario&) { return alpha; };
    s.beta = [](double, const Scenario&) { return 0.0; };
    s.jump_phi = [](double, double, const Scenario&) { return 0.0; };
    s.terminal = [terminal](const Scenario&) { return terminal; };
    return s;
}

}  // namespace

TEST(Gamma, ExponentialDriftIsEulerProduct) {
    const TimeGrid grid{1.0, 50};
    const auto noise = sde::generate_noise(grid, {}, 4, 1);
    const double a = 0.5;
    const auto g = bsde::simulate_gamma(deterministic_spec(0.0, a, 1.0), *noise);
    for (std::size_t k = 0; k <= grid.steps; ++k) {
        EXPECT_NEAR(g[k], std::pow(1.0 + a * grid.dt(), double(k)), 1e-12);
        EXPECT_NEAR(g[k], std::exp(a * grid.time(k)), 2.0 * grid.dt() * a);
    }
}

TEST(Gamma, ZeroCoefficientsGiveOne) {
    const auto noise = sde::generate_noise(TimeGrid{1.0, 10}, {}, 3, 2);
    for (double v : bsde::simulate_gamma(deterministic_spec(1.0, 0.0, 0.0), *noise)) EXPECT_EQ(v, 1.0);
}

TEST(Gamma, DiffusionGammaIsMartingale) {
    auto spec = deterministic_spec(0.0, 0.0, 1.0);
    spec.beta = [](double, const Scenario&) { return 0.3; };
    const TimeGrid grid{1.0, 50};
    const std::size_t n = 20000;
    const auto noise = sde::generate_noise(grid, {}, n, 3);
    const auto g = bsde::simulate_gamma(spec, *noise);
    std::vector<double> last(n);
    for (std::size_t i = 0; i < n; ++i) last[i] = g[i * grid.points() + grid.steps];
    const auto st = sde::sample_stats(last);
    EXPECT_LE(std::abs(st.mean - 1.0), 3.0 * st.std_error);
}

TEST(Gamma, LargeNegativeJumpThrows) {
    auto spec = deterministic_spec(0.0, 0.0, 1.0);
    spec.levy = lawproc::LevyMeasure::single(1.0, 50.0);
    spec.jump_phi = [](double, double, const Scenario&) { return -1.5; };
    const auto noise = sde::generate_noise(TimeGrid{1.0, 10}, spec.levy, 100, 4);
    EXPECT_THROW(bsde::simulate_gamma(spec, *noise), SimulationError);
}

TEST(Solve, ConstantDriverClosedForm) {
    const double theta = 1.0, T = 1.0;
    const TimeGrid grid{T, 200};
    const auto sol = bsde::solve(deterministic_spec(1.0, 0.0, theta), grid, 10, {}, 5);
    for (std::size_t k = 0; k <= grid.steps; ++k) {
        EXPECT_NEAR(sol.mean(k), theta + T - grid.time(k), 1e-12);
        EXPECT_NEAR(sol.at(3, k), theta + T - grid.time(k), 1e-12);
    }
}

TEST(Solve, ZeroDriverZeroTerminal) {
    const auto sol = bsde::solve(deterministic_spec(0.0, 0.0, 0.0), TimeGrid{1.0, 10}, 5, {}, 6);
    for (double p : sol.P) EXPECT_EQ(p, 0.0);
}

TEST(Solve, TerminalValueIsExact) {
    auto spec = deterministic_spec(0.0, 0.0, 0.0);
    spec.terminal = [](const Scenario& s) { return s.w * s.w; };
    const TimeGrid grid{1.0, 20};
    const auto noise = sde::generate_noise(grid, {}, 50, 7);
    bsde::SolveConfig cfg;
    cfg.estimator = bsde::Estimator::regression;
    const auto sol = bsde::solve_on_noise(spec, *noise, cfg);
    for (std::size_t i = 0; i < 50; ++i) {
        const double w = noise->level(i, grid.steps);
        EXPECT_EQ(sol.at(i, grid.steps), w * w);
    }
}

TEST(Solve, ExponentialCaseAgreesWithBackwardEuler) {
    const double a = 0.5, theta = 1.0, T = 1.0;
    const TimeGrid grid{T, 100};
    const auto spec = deterministic_spec(0.0, a, theta);
    const auto sol = bsde::solve(spec, grid, 20, {}, 8);
    const auto be = bsde::backward_euler(spec, grid);
    ASSERT_EQ(be.size(), grid.points());
    for (std::size_t k = 0; k <= grid.steps; ++k) {
        EXPECT_LE(std::abs(sol.mean(k) - be[k]), 2.0 * grid.dt() * a * theta);
        EXPECT_NEAR(be[k], theta * std::exp(a * (T - grid.time(k))), 2.0 * grid.dt() * a * theta);
    }
}

TEST(Solve, RegressionAndNestedMatchConditionalExpectation) {
    // E[B_T^2 | B_t = w] = w^2 + T - t
    auto spec = deterministic_spec(0.0, 0.0, 0.0);
    spec.terminal = [](const Scenario& s) { return s.w * s.w; };
    const TimeGrid grid{1.0, 20};
    const std::size_t k = 10;
    const double t = grid.time(k);

    const std::size_t n_reg = 10000;
    const auto wide = sde::generate_noise(grid, {}, n_reg, 9);
    bsde::SolveConfig reg;
    reg.estimator = bsde::Estimator::regression;
    const auto r = bsde::solve_on_noise(spec, *wide, reg);
    double rms = 0.0;
    for (std::size_t i = 0; i < n_reg; ++i) {
        const double w = wide->level(i, k);
        rms += std::pow(r.at(i, k) - (w * w + grid.horizon - t), 2);
    }
    // four coefficients fitted to residual variance ~1.5 give rms ~ sqrt(4 * 1.5 / n)
    EXPECT_LE(std::sqrt(rms / n_reg), 3.0 * std::sqrt(6.0 / n_reg));

    const std::size_t n_nested = 200;
    const auto narrow = sde::generate_noise(grid, {}, n_nested, 10);
    bsde::SolveConfig nested;
    nested.estimator = bsde::Estimator::nested_mc;
    nested.n_inner = 400;
    nested.seed = 11;
    const auto q = bsde::solve_on_noise(spec, *narrow, nested);
    double bias = 0.0;
    for (std::size_t i = 0; i < n_nested; ++i) {
        const double w = narrow->level(i, k);
        bias += q.at(i, k) - (w * w + grid.horizon - t);
    }
    // inner sd per scenario ~ sqrt(1.5 / 400), averaged over 200 scenarios
    EXPECT_LE(std::abs(bias / n_nested), 0.02);
    EXPECT_EQ(bsde::estimator_from_string("nested-mc"), bsde::Estimator::nested_mc);
    EXPECT_EQ(bsde::to_string(bsde::Estimator::regression), "regression");
    EXPECT_THROW(bsde::estimator_from_string("bogus"), InvalidArgument);
}

TEST(Solve, NestedNeedsInnerPaths) {
    bsde::SolveConfig cfg;
    cfg.estimator = bsde::Estimator::nested_mc;
    cfg.n_inner = 1;
    EXPECT_THROW(bsde::solve(deterministic_spec(0.0, 0.0, 1.0), TimeGrid{1.0, 5}, 5, cfg, 1), InvalidArgument);
}

TEST(Regression, RecoversCubic) {
    std::vector<double> z, y;
    for (int i = 0; i < 200; ++i) {
        const double x = -2.0 + 4.0 * i / 199.0;
        z.push_back(x);
        y.push_back(1.0 - 2.0 * x + 0.5 * x * x * x);
    }
    const auto fit = regression::PolynomialFit::fit(z, y, {});
    EXPECT_NEAR(fit.predict(1.3), 1.0 - 2.6 + 0.5 * 1.3 * 1.3 * 1.3, 1e-8);
    EXPECT_EQ(fit.powers().size(), 4u);
}

TEST(Regression, ZeroSpreadCollapsesToMean) {
    const std::vector<double> z(10, 2.0);
    std::vector<double> y;
    for (int i = 0; i < 10; ++i) y.push_back(i);
    const auto fit = regression::PolynomialFit::fit(z, y, {});
    EXPECT_NEAR(fit.predict(2.0), 4.5, 1e-12);
}

TEST(Regression, IllConditionedBasis) {
    StreamRng rng(11, {0});
    std::normal_distribution<double> normal;
    std::vector<double> z(500), y(500);
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = 1.0 + 1e-4 * normal(rng);
        y[i] = z[i];
    }
    regression::BasisConfig strict{0, 6, 0.0, 1e12, false};
    try {
        regression::PolynomialFit::fit(z, y, strict);
        FAIL() << "expected EstimationError";
    } catch (const EstimationError& e) {
        EXPECT_GT(e.condition_number(), 1e12);
    }
    regression::BasisConfig adaptive{0, 6, 1e-10, 1e12, true};
    const auto fit = regression::PolynomialFit::fit(z, y, adaptive);
    EXPECT_LT(fit.powers().size(), 7u);
    EXPECT_LE(fit.condition_number(), 1e12);
    EXPECT_NEAR(fit.predict(1.00005), 1.00005, 1e-6);
}

TEST(BackwardEuler, RejectsStepTooLarge) {
    EXPECT_THROW(bsde::backward_euler(deterministic_spec(0.0, 20.0, 1.0), TimeGrid{1.0, 10}), InvalidArgument);
}
