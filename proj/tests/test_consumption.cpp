#include "mflab/consumption.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace mflab;
using consumption::ConsumptionModel;
using consumption::Variant;

namespace {

bsde::SolveConfig state_regression() {
    bsde::SolveConfig c;
    c.estimator = bsde::Estimator::regression;
    c.regressor = bsde::Regressor::state;
    c.basis = regression::BasisConfig{-1, 3, 1e-10, 1e12};
    return c;
}

struct Fixture {
    ConsumptionModel model = ConsumptionModel::canonical();
    game::GameSpec game = consumption::make_game(model);
    std::shared_ptr<const sde::NoiseBundle> noise =
        sde::generate_noise(TimeGrid{model.horizon, 50}, model.levy, 2000, 31);

    sde::ParticleBundle simulate(Variant v, double rho_scale = 1.0) const {
        const auto c = consumption::candidate_controls(model, consumption::closed_form_controls(model, v), rho_scale);
        return sde::simulate_on_noise(game.model, c, noise, sde::MuMode::exogenous);
    }
};

}  // namespace

TEST(ClosedForm, CanonicalValues) {
    const auto model = ConsumptionModel::canonical();
    const auto derived = consumption::closed_form_controls(model, Variant::first_order_derived);
    const auto paper = consumption::closed_form_controls(model, Variant::paper_theorem);
    EXPECT_DOUBLE_EQ(derived.rho_hat(0.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(derived.rho_hat(1.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(derived.mu_hat_V(0.0, 1.0, 1.0) - 1.0, -1.0);
    EXPECT_DOUBLE_EQ(paper.mu_hat_V(0.0, 1.0, 1.0), 1.5);
    EXPECT_EQ(consumption::to_string(Variant::paper_theorem), "paper-theorem");
}

TEST(ClosedForm, DegenerateAndInvalidTheta) {
    auto model = ConsumptionModel::canonical();
    model.theta0 = 0.0;
    const auto c = consumption::closed_form_controls(model, Variant::first_order_derived);
    EXPECT_DOUBLE_EQ(c.rho_hat(0.25, 0.0), 1.0 / 0.75);
    EXPECT_THROW(model.validate(), InvalidArgument);
    model.theta0 = -1.0;
    EXPECT_THROW(consumption::closed_form_controls(model, Variant::first_order_derived), InvalidArgument);
}

TEST(Model, ValidateRejectsBadParameters) {
    auto model = ConsumptionModel::canonical();
    EXPECT_NO_THROW(model.validate());
    model.x0 = 0.0;
    EXPECT_THROW(model.validate(), InvalidArgument);
    model = ConsumptionModel::canonical();
    model.gamma = [](double, double) { return -1.0; };
    EXPECT_THROW(model.validate(), InvalidArgument);
}

TEST(Model, TanhTerminalConditionalExpectation) {
    auto model = ConsumptionModel::canonical();
    model.use_tanh_terminal(1.0, 0.5);
    EXPECT_NEAR(model.conditional_theta(0.0, 0.0), 1.0, 1e-12);
    EXPECT_NEAR(model.conditional_theta(1.0, 0.7), 1.0 + 0.5 * std::tanh(0.7), 1e-15);
    // tanh is odd, so the conditional expectation is odd around a
    EXPECT_NEAR(model.conditional_theta(0.5, 0.4) - 1.0, -(model.conditional_theta(0.5, -0.4) - 1.0), 1e-12);
}

TEST(ReducedHamiltonian, Value) {
    EXPECT_NEAR(consumption::reduced_hamiltonian(0.5, 2.0, 1.0, 1.5, 0.25), 0.25 + 0.25 * (2.0 - 1.0), 1e-15);
}

TEST(P1Pairing, ReadsTotalMassAtNodeZero) {
    const auto p = consumption::p1_pairing(ConsumptionModel::canonical());
    ASSERT_EQ(p.nodes.size(), 1u);
    EXPECT_EQ(p.nodes[0], 0.0);
    const std::vector<double> nodes = {0.0};
    const auto table = measures::fourier_table(measures::DiscreteMeasure::dirac(1.0, 2.0), nodes);
    // scale(0) = T^2 / 2 + theta T = 1.5
    EXPECT_NEAR(p(0.0, table), 3.0, 1e-15);
    EXPECT_NEAR(p(1.0, table), 0.0, 1e-15);
}

TEST(Adjoint, ProductProcessMatchesTarget) {
    const Fixture f;
    const auto b = f.simulate(Variant::first_order_derived);
    const auto adj = game::adjoint_p0_solve(f.game, b, game::Player::control, state_regression());
    const auto check = consumption::product_process_check(f.model, b, adj.p0);
    EXPECT_LE(check.max_deviation, 0.05);
    EXPECT_EQ(check.profile.size(), b.grid.points());
    EXPECT_FALSE(adj.restricted);
}

TEST(Adjoint, RandomTerminalMean) {
    auto model = ConsumptionModel::canonical();
    model.use_tanh_terminal(1.0, 0.5);
    const auto g = consumption::make_game(model);
    const auto c = consumption::candidate_controls(model, consumption::closed_form_controls(model, Variant::first_order_derived));
    sde::SimulationConfig sc;
    sc.n_particles = 4000;
    sc.n_steps = 50;
    sc.seed = 32;
    const auto b = sde::simulate(g.model, c, sc);
    const auto adj = game::adjoint_p0_solve(g, b, game::Player::control, state_regression());
    // p0 X at 0 estimates E[theta] + T = 2 since E[tanh(B_T)] = 0
    std::vector<double> prod(sc.n_particles);
    for (std::size_t i = 0; i < sc.n_particles; ++i) prod[i] = adj.p0.pathwise_at(i, 0) * b.state(i, 0);
    const auto st = sde::sample_stats(prod);
    EXPECT_LE(std::abs(st.mean - 2.0), 3.0 * st.std_error + 1e-8);
}

TEST(Residuals, DerivedVariantPasses) {
    const Fixture f;
    const auto b = f.simulate(Variant::first_order_derived);
    const auto a1 = game::adjoint_p0_solve(f.game, b, game::Player::measure, state_regression());
    const auto a2 = game::adjoint_p0_solve(f.game, b, game::Player::control, state_regression());
    const auto r = game::first_order_residuals(f.game, b, a1, a2, state_regression().basis);
    for (std::size_t k = 0; k < r.u.value.size(); ++k) {
        EXPECT_LE(std::abs(r.u.value[k]), 3.0 * r.u.std_error[k] + 1e-8) << "t=" << r.u.times[k];
        EXPECT_LE(std::abs(r.mu[0].value[k]), 3.0 * r.mu[0].std_error[k] + 1e-8) << "t=" << r.mu[0].times[k];
    }
}

TEST(Residuals, DoubledConsumptionIsDetected) {
    const Fixture f;
    const auto b = f.simulate(Variant::first_order_derived, 2.0);
    const auto a1 = game::adjoint_p0_solve(f.game, b, game::Player::measure, state_regression());
    const auto a2 = game::adjoint_p0_solve(f.game, b, game::Player::control, state_regression());
    const auto r = game::first_order_residuals(f.game, b, a1, a2, state_regression().basis);
    for (std::size_t k = 0; k < r.u.value.size(); ++k) {
        if (r.u.times[k] >= 0.5 * f.model.horizon) break;
        EXPECT_GT(std::abs(r.u.value[k]), 5.0 * r.u.std_error[k]) << "t=" << r.u.times[k];
    }
}

TEST(SaddlePlan, DirectionCounts) {
    const auto model = ConsumptionModel::canonical();
    EXPECT_EQ(consumption::saddle_plan(model, {0.1}).directions.size(), 4u);
    EXPECT_EQ(consumption::saddle_plan(model, {0.1}, true, false).directions.size(), 2u);
    const auto plan = consumption::saddle_plan(model, {0.1}, false, true);
    // measure directions move the mass on V by one without changing total mass
    const auto& eta = plan.directions[0].direction.eta;
    EXPECT_NEAR(eta.mass_in(model.V), 1.0, 1e-15);
}
