#pragma once

#include "mflab/core.hpp"
#include "mflab/game.hpp"
#include "mflab/lawproc.hpp"
#include "mflab/sde.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace mflab::consumption {

/// Net cash flow under consumption rate rho and an adversarial measure mu:
///   dX = X [ (mu(V) - rho) dt + sigma dB + int gamma N~(dt, dzeta) ],
///   J  = E[ int log(rho X) + (mu(V) - M(V))^2 dt + theta log X(T) ],
/// where M is the law of X. rho maximises J, mu minimises it.
struct ConsumptionModel {
    double x0 = 1.0;
    double horizon = 1.0;
    std::function<double(double)> sigma;         // t -> sigma(t)
    std::function<double(double, double)> gamma;  // (t, zeta) -> gamma(t, zeta)
    lawproc::LevyMeasure levy;
    Interval V = Interval::positive_half_line();

    /// Deterministic terminal weight unless `theta` is set, in which case
    /// theta(B(T)) is used and `theta_given` must return E[theta | B(t) = w].
    double theta0 = 1.0;
    std::function<double(double)> theta;
    std::function<double(double, double)> theta_given;

    sde::InfoPattern info1;
    sde::InfoPattern info2;

    /// x0 = 1, T = 1, sigma = 0.2, one jump atom zeta = 0.1 at rate 0.5,
    /// gamma(t, zeta) = zeta, theta = 1, full information.
    static ConsumptionModel canonical();

    /// theta = a + b tanh(B(T)); conditional expectations by Gauss-Hermite.
    void use_tanh_terminal(double a, double b);

    /// Throws InvalidArgument for x0 <= 0, theta <= 0 or jumps at or below -1.
    void validate() const;
    double theta_at(double w_terminal) const;
    /// E[theta | B(t) = w].
    double conditional_theta(double t, double w) const;
};

enum class Variant { paper_theorem, first_order_derived };

std::string to_string(Variant v);

/// rho_hat(t) = 1 / (T - t + E[theta | G2_t]) and the two candidate formulas
/// for mu_hat(t)(V):
///   paper_theorem:       M(V) + T - t - E[theta | G1_t] / 2
///   first_order_derived: M(V) - (T - t + E[theta | G1_t]) / 2
struct ClosedFormControls {
    Variant provenance = Variant::first_order_derived;
    double horizon = 1.0;

    double rho_hat(double t, double cond_theta) const;
    double mu_hat_V(double t, double m_V, double cond_theta) const;
};

/// Throws InvalidArgument for a negative terminal weight; theta0 = 0 is the
/// degenerate limit rho_hat = 1/(T - t).
ClosedFormControls closed_form_controls(const ConsumptionModel& model, Variant variant);

/// The game: functional mass_on(V), b = (mu(V) - rho) x, sigma x, gamma x,
/// zero-sum payoff J with analytic partials.
game::GameSpec make_game(const ConsumptionModel& model);

/// Candidate pair: rho = rho_scale * rho_hat and mu = law + a signed atom pair
/// shifting the mass on V to mu_hat(V) + mu_offset.
sde::ControlPair candidate_controls(const ConsumptionModel& model, const ClosedFormControls& controls,
                                    double rho_scale = 1.0, double mu_offset = 0.0);

/// log(rho x) + (mu_V - m_V)^2 + p0 (mu_V x - rho x).
double reduced_hamiltonian(double rho, double x, double mu_V, double m_V, double p0);

/// <p^1(t), m'> for this model: p^1 is constant on V with value
/// (T - t)^2 / 2 + theta0 (T - t), so only the Fourier node y = 0 is read.
game::FourierPairing p1_pairing(const ConsumptionModel& model);

struct ProductCheck {
    double max_deviation = 0.0;
    std::vector<double> profile;  // max over scenarios per grid time
};

/// |p0(t) X(t) - (E[theta | F_t] + T - t)| over scenarios and grid times.
ProductCheck product_process_check(const ConsumptionModel& model, const sde::ParticleBundle& bundle,
                                   const bsde::BsdeSolution& adjoint);

struct VerifyOptions {
    std::size_t n_particles = 10000;
    std::size_t n_steps = 200;
    std::uint64_t seed = 20240611;
    std::vector<double> lambdas = {-0.2, -0.1, -0.05, 0.05, 0.1, 0.2};
    regression::BasisConfig basis{-1, 3, 1e-10, 1e12};
    double product_tolerance = 0.05;
    double rho_inflation = 1.2;
    double mu_offset = 0.5;
    unsigned threads = 1;
};

struct ReportRow {
    std::string criterion;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct VariantOutcome {
    Variant variant = Variant::first_order_derived;
    game::Residuals residuals;
    double worst_u = 0.0;   // max_t |res| / (3 SE + floor)
    double worst_mu = 0.0;
    bool passes = false;
};

struct Section5Report {
    std::vector<ReportRow> rows;
    std::vector<VariantOutcome> variants;
    int accepted = -1;  // index into variants, -1 when not exactly one passes
    ProductCheck product;
    game::SweepResult saddle;
    game::SweepResult inflated;
    game::SweepResult offset;
    std::vector<double> times;
    std::vector<double> rho_hat;
    std::vector<double> mu_paper;
    std::vector<double> mu_derived;
    bool all_pass = false;
};

/// Simulates both mu_hat variants, solves the adjoints, computes first-order
/// residuals, the product process and the saddle sweeps.
Section5Report verify_section5(const ConsumptionModel& model, const VerifyOptions& options);

/// The perturbation plan used by verify_section5.
game::PerturbationPlan saddle_plan(const ConsumptionModel& model, std::vector<double> lambdas, bool controls = true,
                                   bool measures = true);

void write_report_csv(std::ostream& out, const Section5Report& report, std::uint64_t seed);
void write_controls_csv(std::ostream& out, const Section5Report& report, std::uint64_t seed);

}  // namespace mflab::consumption
