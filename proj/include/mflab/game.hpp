#pragma once

#include "mflab/bsde.hpp"
#include "mflab/measures.hpp"
#include "mflab/sde.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mflab::game {

/// Player 1 chooses the measure-valued control, player 2 the real control.
enum class Player { measure = 1, control = 2 };

std::string to_string(Player p);

/// Two-player game on a controlled model. Both players maximise their own
/// payoff. With zero_sum set, `perf` is the game value J that the control
/// player maximises and the measure player minimises; player payoffs are
/// then J for player 2 and -J for player 1.
struct GameSpec {
    sde::ControlledModel model;
    sde::PerformanceSpec perf1;
    sde::PerformanceSpec perf2;
    sde::PerformanceSpec perf;
    bool zero_sum = false;
    sde::InfoPattern info1;
    sde::InfoPattern info2;
    sde::ControlBounds u_bounds;

    /// Payoff maximised by player p.
    sde::PerformanceSpec payoff(Player p) const;
};

/// <p^1(t), m'> in the restricted linear-in-m representation:
/// scale(t) * sum_j c_j Re(m'^(y_j)).
struct FourierPairing {
    std::function<double(double)> scale;
    std::vector<double> nodes;
    std::vector<double> coefficients;

    double operator()(double t, const measures::FourierTable& m_prime) const;
};

struct AdjointState {
    Player player = Player::control;
    bsde::BsdeSolution p0;
    std::optional<FourierPairing> p1;
    /// q^0 and r^0 are not estimated; set when the model's diffusion or
    /// jump coefficient depends on a control, so those terms were dropped.
    bool restricted = false;
};

/// Maps the adjoint equation for player p's p^0 onto a linear BSDE
/// (driver l_x + p b_x + q sigma_x + int r gamma_x nu, terminal g_x) along the
/// bundle's paths and solves it. Law-feedback dynamics are rejected with
/// UnsupportedModel since their adjoint carries mean-field terms.
AdjointState adjoint_p0_solve(const GameSpec& spec, const sde::ParticleBundle& bundle, Player player,
                              const bsde::SolveConfig& config);

struct HamiltonianArgs {
    double t = 0.0;
    double x = 0.0;
    std::span<const double> m;
    std::span<const double> mu;
    double u = 0.0;
    Scenario scenario;
    std::optional<double> p0;
    double q0 = 0.0;
    std::vector<double> r0;  // one per jump atom; empty means zero
    const FourierPairing* p1 = nullptr;
    const measures::FourierTable* m_prime = nullptr;
};

/// H_p = l_p + p0 b + q0 sigma + sum_j rate_j r0_j gamma(zeta_j) + <p1, m'>.
/// Throws InvalidArgument when p0 is missing.
double hamiltonian(const GameSpec& spec, Player player, const HamiltonianArgs& a);

struct ResidualCurve {
    std::vector<double> times;
    std::vector<double> value;
    std::vector<double> std_error;
    /// Control sat on a bound of U at this time for some particle; the
    /// residual need not vanish there.
    std::vector<bool> boundary;
    bool restricted = false;
};

struct Residuals {
    ResidualCurve u;
    std::vector<ResidualCurve> mu;  // one per measure functional
};

/// Conditional expectations of dH/du (player 2) and dH/dmu_f (player 1)
/// given each player's information, at the grid times t_0..t_{M-1}.
/// Delayed information is handled by regression on the delayed state.
Residuals first_order_residuals(const GameSpec& spec, const sde::ParticleBundle& bundle, const AdjointState& adj1,
                                const AdjointState& adj2, const regression::BasisConfig& basis);

struct PerturbationPlan {
    struct Entry {
        Player player = Player::control;
        sde::StepDirection direction;
    };
    std::vector<Entry> directions;
    std::vector<double> lambdas;
};

struct SweepRow {
    std::size_t direction_id = 0;
    Player player = Player::control;
    double lambda = 0.0;
    /// Change of the player's payoff, or of J itself in a zero-sum game.
    double delta = 0.0;
    double std_error = 0.0;
    bool ok = false;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// Every row certified at the tested resolution.
    bool verdict = false;
};

/// Tolerance used by the certificates: a multiple of the standard error plus
/// a small absolute floor, since common random numbers can make the
/// standard error vanish.
bool within_se(double value, double target, double std_error, double k, double floor = 1e-9);

/// Re-simulates each (direction, lambda) cell on the shared noise and
/// compares payoffs with the unperturbed candidate.
/// Nonzero-sum: ok iff delta <= 2 SE. Zero-sum: control rows need
/// delta J <= 2 SE, measure rows delta J >= -2 SE.
SweepResult nash_perturbation_sweep(const GameSpec& spec, const sde::ControlPair& candidate,
                                    const PerturbationPlan& plan, std::shared_ptr<const sde::NoiseBundle> noise,
                                    sde::MuMode mu_mode = sde::MuMode::exogenous, unsigned threads = 1);

struct SlopeEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

struct GateauxResult {
    std::vector<double> lambdas;
    std::vector<SlopeEstimate> fd_slopes;  // central differences per lambda
    SlopeEstimate adjoint_slope;           // E[ sum dH/d(dir) dir dt ]
    SlopeEstimate tangent_slope;           // through the derivative process Z
    double difference = 0.0;               // fd (smallest lambda) - adjoint
    double difference_se = 0.0;
    bool agree = false;
};

/// Compares d/dlambda J_p(candidate + lambda dir) by open-loop central
/// differences on the bundle's noise with the adjoint expression and with
/// the derivative-process expression. agree iff
/// |fd - adjoint| <= max(3 SE, 5% |fd|).
GateauxResult gateaux_check(const GameSpec& spec, const sde::ParticleBundle& bundle, const AdjointState& adjoint,
                            const sde::StepDirection& direction, std::span<const double> lambdas,
                            unsigned threads = 1);

void write_sweep_csv(std::ostream& out, const SweepResult& sweep, std::uint64_t seed);
void write_residual_csv(std::ostream& out, const ResidualCurve& curve, std::uint64_t seed);

// ---- linear-quadratic toy game --------------------------------------------

/// b = mean(mu) + u, sigma = s, l1 = -q1 mean(mu)^2 / 2, g1 = x,
/// l2 = -q2 u^2 / 2, g2 = kappa x. Equilibrium mean(mu) = 1/q1, u = kappa/q2;
/// a step perturbation of size lambda over [t0, T] lowers the deviating
/// player's payoff by q lambda^2 |dir|^2 (T - t0) / 2 exactly.
struct LqParams {
    double q1 = 2.0;
    double q2 = 1.0;
    double kappa = 1.5;
    double s = 0.3;
    double x0 = 0.0;
    double horizon = 1.0;
};

GameSpec lq_game(const LqParams& p);
sde::ControlPair lq_equilibrium(const LqParams& p);

}  // namespace mflab::game
