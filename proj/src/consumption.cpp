#include "mflab/consumption.hpp"

#include "mflab/csv.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace mflab::consumption {

namespace {

using sde::CoeffArgs;
using sde::PerfArgs;

// Signed pair (a, +c), (b, -c) with a in V and b outside, so total mass is
// unchanged and the mass on V moves by c.
measures::DiscreteMeasure mass_shift(const Interval& v, double c) {
    double inside = 0.0;
    if (std::isfinite(v.lo) && std::isfinite(v.hi)) {
        inside = 0.5 * (v.lo + v.hi);
    } else if (std::isfinite(v.lo)) {
        inside = v.lo + 1.0;
    } else if (std::isfinite(v.hi)) {
        inside = v.hi - 1.0;
    }
    if (!v.contains(inside)) throw InvalidArgument("consumption: V has no interior point");
    if (!std::isfinite(v.lo) && !std::isfinite(v.hi)) return measures::DiscreteMeasure::dirac(inside, c);
    const double outside = std::isfinite(v.lo) ? v.lo - 1.0 : v.hi + 1.0;
    return measures::DiscreteMeasure({{outside, -c}, {inside, c}});
}

constexpr double kResidualFloor = 1e-8;

double worst_ratio(const game::ResidualCurve& c) {
    double worst = 0.0;
    for (std::size_t k = 0; k < c.value.size(); ++k) {
        worst = std::max(worst, std::abs(c.value[k]) / (3.0 * c.std_error[k] + kResidualFloor));
    }
    return worst;
}

std::size_t failing_rows(const game::SweepResult& s) {
    return static_cast<std::size_t>(std::count_if(s.rows.begin(), s.rows.end(), [](const auto& r) { return !r.ok; }));
}

}  // namespace

ConsumptionModel ConsumptionModel::canonical() {
    ConsumptionModel m;
    m.x0 = 1.0;
    m.horizon = 1.0;
    m.sigma = [](double) { return 0.2; };
    m.gamma = [](double, double zeta) { return zeta; };
    m.levy = lawproc::LevyMeasure::single(0.1, 0.5);
    m.theta0 = 1.0;
    return m;
}

void ConsumptionModel::use_tanh_terminal(double a, double b) {
    theta = [a, b](double w) { return a + b * std::tanh(w); };
    const auto rule = measures::gauss_hermite_rule(64);
    const double horizon_copy = horizon;
    theta_given = [a, b, rule, horizon_copy](double t, double w) {
        const double rest = horizon_copy - t;
        if (rest <= 0.0) return a + b * std::tanh(w);
        const double spread = std::sqrt(2.0 * rest);
        double s = 0.0;
        for (std::size_t j = 0; j < rule.size(); ++j) s += rule.weights[j] * std::tanh(w + spread * rule.nodes[j]);
        return a + b * s / kSqrtPi;
    };
}

void ConsumptionModel::validate() const {
    if (!(x0 > 0.0)) throw InvalidArgument("consumption: x0 must be positive");
    if (!(horizon > 0.0)) throw InvalidArgument("consumption: horizon must be positive");
    if (!theta && !(theta0 > 0.0)) throw InvalidArgument("consumption: theta must be positive");
    if (theta && !theta_given) throw InvalidArgument("consumption: random theta needs its conditional expectation");
    for (double z : levy.jump_sizes) {
        for (double t : {0.0, horizon}) {
            const double g = gamma ? gamma(t, z) : 0.0;
            if (!(g > -1.0)) throw InvalidArgument("consumption: jumps must stay above -1 to keep X positive");
        }
    }
}

double ConsumptionModel::theta_at(double w_terminal) const { return theta ? theta(w_terminal) : theta0; }

double ConsumptionModel::conditional_theta(double t, double w) const { return theta ? theta_given(t, w) : theta0; }

std::string to_string(Variant v) { return v == Variant::paper_theorem ? "paper-theorem" : "first-order-derived"; }

double ClosedFormControls::rho_hat(double t, double cond_theta) const { return 1.0 / (horizon - t + cond_theta); }

double ClosedFormControls::mu_hat_V(double t, double m_V, double cond_theta) const {
    if (provenance == Variant::paper_theorem) return m_V + horizon - t - 0.5 * cond_theta;
    return m_V - 0.5 * (horizon - t + cond_theta);
}

ClosedFormControls closed_form_controls(const ConsumptionModel& model, Variant variant) {
    if (!model.theta && model.theta0 < 0.0) throw InvalidArgument("closed_form_controls: theta must be >= 0");
    return ClosedFormControls{variant, model.horizon};
}

game::GameSpec make_game(const ConsumptionModel& model) {
    model.validate();
    auto shared = std::make_shared<const ConsumptionModel>(model);
    game::GameSpec g;
    auto& m = g.model;
    m.functionals = {measures::mass_on(model.V, "mass_on_V")};
    m.x0 = model.x0;
    m.horizon = model.horizon;
    m.levy = model.levy;
    m.lipschitz_const = 1.0;
    m.drift = [](const CoeffArgs& a) { return (a.mu[0] - a.u) * a.x; };
    m.diffusion = [shared](const CoeffArgs& a) { return (shared->sigma ? shared->sigma(a.t) : 0.0) * a.x; };
    m.jump = [shared](const CoeffArgs& a, double z) { return (shared->gamma ? shared->gamma(a.t, z) : 0.0) * a.x; };
    m.drift_partials.dx = [](const CoeffArgs& a) { return a.mu[0] - a.u; };
    m.drift_partials.du = [](const CoeffArgs& a) { return -a.x; };
    m.drift_partials.dmu = [](const CoeffArgs& a, std::size_t) { return a.x; };
    m.diffusion_partials.dx = [shared](const CoeffArgs& a) { return shared->sigma ? shared->sigma(a.t) : 0.0; };
    m.diffusion_partials.du = [](const CoeffArgs&) { return 0.0; };
    m.diffusion_partials.dmu = [](const CoeffArgs&, std::size_t) { return 0.0; };
    m.jump_partials.dx = [shared](const CoeffArgs& a, double z) { return shared->gamma ? shared->gamma(a.t, z) : 0.0; };
    m.jump_partials.du = [](const CoeffArgs&, double) { return 0.0; };
    m.jump_partials.dmu = [](const CoeffArgs&, double, std::size_t) { return 0.0; };

    auto& j = g.perf;
    j.running = [](const PerfArgs& a) {
        const double gap = a.mu[0] - a.m[0];
        return std::log(a.u * a.x) + gap * gap;
    };
    j.running_dx = [](const PerfArgs& a) { return 1.0 / a.x; };
    j.running_du = [](const PerfArgs& a) { return 1.0 / a.u; };
    j.running_dmu = [](const PerfArgs& a, std::size_t) { return 2.0 * (a.mu[0] - a.m[0]); };
    j.terminal = [shared](const sde::TerminalArgs& a) { return shared->theta_at(a.scenario.w) * std::log(a.x); };
    j.terminal_dx = [shared](const sde::TerminalArgs& a) { return shared->theta_at(a.scenario.w) / a.x; };

    g.zero_sum = true;
    g.info1 = model.info1;
    g.info2 = model.info2;
    g.u_bounds = sde::ControlBounds{0.0, std::numeric_limits<double>::infinity()};
    return g;
}

sde::ControlPair candidate_controls(const ConsumptionModel& model, const ClosedFormControls& controls,
                                    double rho_scale, double mu_offset) {
    auto shared = std::make_shared<const ConsumptionModel>(model);
    sde::ControlPair c;
    c.real_info = model.info2;
    c.measure_info = model.info1;
    c.real_bounds = sde::ControlBounds{0.0, std::numeric_limits<double>::infinity()};
    c.real = [shared, controls, rho_scale](const sde::Observation& obs) {
        return rho_scale * controls.rho_hat(obs.t, shared->conditional_theta(obs.observed_t, obs.scenario.w));
    };
    c.measure = [shared, controls, mu_offset](const sde::Observation& obs) {
        const double e = shared->conditional_theta(obs.observed_t, obs.scenario.w);
        // mu_hat(V) - M(V) does not depend on M(V) for either variant.
        const double shift = controls.mu_hat_V(obs.t, 0.0, e) + mu_offset;
        return sde::MeasureControlValue{true, mass_shift(shared->V, shift)};
    };
    return c;
}

double reduced_hamiltonian(double rho, double x, double mu_V, double m_V, double p0) {
    return std::log(rho * x) + (mu_V - m_V) * (mu_V - m_V) + p0 * (mu_V * x - rho * x);
}

game::FourierPairing p1_pairing(const ConsumptionModel& model) {
    const double horizon = model.horizon;
    const double theta = model.conditional_theta(0.0, 0.0);
    game::FourierPairing p;
    p.scale = [horizon, theta](double t) {
        const double r = horizon - t;
        return 0.5 * r * r + theta * r;
    };
    p.nodes = {0.0};
    p.coefficients = {1.0};
    return p;
}

ProductCheck product_process_check(const ConsumptionModel& model, const sde::ParticleBundle& bundle,
                                   const bsde::BsdeSolution& adjoint) {
    if (adjoint.n_scenarios != bundle.n_particles || adjoint.grid.steps != bundle.grid.steps) {
        throw InvalidArgument("product_process_check: adjoint and bundle do not match");
    }
    ProductCheck out;
    for (std::size_t k = 0; k < bundle.grid.points(); ++k) {
        const double t = bundle.grid.time(k);
        double worst = 0.0;
        for (std::size_t i = 0; i < bundle.n_particles; ++i) {
            const double target = model.conditional_theta(t, bundle.noise->level(i, k)) + model.horizon - t;
            worst = std::max(worst, std::abs(adjoint.at(i, k) * bundle.state(i, k) - target));
        }
        out.profile.push_back(worst);
        out.max_deviation = std::max(out.max_deviation, worst);
    }
    return out;
}

game::PerturbationPlan saddle_plan(const ConsumptionModel& model, std::vector<double> lambdas, bool controls,
                                   bool measures) {
    game::PerturbationPlan plan;
    plan.lambdas = std::move(lambdas);
    const double half = 0.5 * model.horizon;
    if (controls) {
        plan.directions.push_back({game::Player::control, sde::StepDirection::on_control(1.0, 0.0)});
        plan.directions.push_back({game::Player::control, sde::StepDirection::on_control(1.0, half)});
    }
    if (measures) {
        plan.directions.push_back({game::Player::measure, sde::StepDirection::on_measure(mass_shift(model.V, 1.0), 0.0)});
        plan.directions.push_back({game::Player::measure, sde::StepDirection::on_measure(mass_shift(model.V, 1.0), half)});
    }
    return plan;
}

Section5Report verify_section5(const ConsumptionModel& model, const VerifyOptions& options) {
    const auto g = make_game(model);
    const TimeGrid grid{model.horizon, options.n_steps};
    const auto noise = sde::generate_noise(grid, model.levy, options.n_particles, options.seed, options.threads);

    bsde::SolveConfig cfg;
    cfg.estimator = bsde::Estimator::regression;
    cfg.regressor = bsde::Regressor::state;
    cfg.basis = options.basis;
    cfg.seed = options.seed;
    cfg.threads = options.threads;

    Section5Report rep;
    double min_state = std::numeric_limits<double>::infinity();
    std::vector<sde::ParticleBundle> bundles;
    std::vector<bsde::BsdeSolution> adjoints;
    for (Variant v : {Variant::paper_theorem, Variant::first_order_derived}) {
        const auto controls = closed_form_controls(model, v);
        auto bundle = sde::simulate_on_noise(g.model, candidate_controls(model, controls), noise, sde::MuMode::exogenous,
                                             options.threads);
        for (double x : bundle.states) min_state = std::min(min_state, x);
        const auto adj2 = game::adjoint_p0_solve(g, bundle, game::Player::control, cfg);
        const auto adj1 = game::adjoint_p0_solve(g, bundle, game::Player::measure, cfg);
        VariantOutcome out;
        out.variant = v;
        out.residuals = game::first_order_residuals(g, bundle, adj1, adj2, options.basis);
        out.worst_u = worst_ratio(out.residuals.u);
        out.worst_mu = worst_ratio(out.residuals.mu.at(0));
        out.passes = out.worst_u <= 1.0 && out.worst_mu <= 1.0;
        rep.variants.push_back(std::move(out));
        bundles.push_back(std::move(bundle));
        adjoints.push_back(adj2.p0);
    }

    const auto passing = std::count_if(rep.variants.begin(), rep.variants.end(), [](const auto& v) { return v.passes; });
    if (passing == 1) {
        rep.accepted = rep.variants[0].passes ? 0 : 1;
    }
    // Without a unique winner the remaining checks still run on the derived variant.
    const std::size_t use = rep.accepted >= 0 ? static_cast<std::size_t>(rep.accepted) : 1;
    const auto accepted = closed_form_controls(model, rep.variants[use].variant);

    rep.product = product_process_check(model, bundles[use], adjoints[use]);

    const auto plan = saddle_plan(model, options.lambdas);
    rep.saddle = game::nash_perturbation_sweep(g, candidate_controls(model, accepted), plan, noise,
                                               sde::MuMode::exogenous, options.threads);
    rep.inflated = game::nash_perturbation_sweep(g, candidate_controls(model, accepted, options.rho_inflation),
                                                 saddle_plan(model, options.lambdas, true, false), noise,
                                                 sde::MuMode::exogenous, options.threads);
    rep.offset = game::nash_perturbation_sweep(g, candidate_controls(model, accepted, 1.0, options.mu_offset),
                                               saddle_plan(model, options.lambdas, false, true), noise,
                                               sde::MuMode::exogenous, options.threads);

    const auto& acc_bundle = bundles[use];
    for (std::size_t k = 0; k < grid.points(); ++k) {
        const double t = grid.time(k);
        const double e = model.conditional_theta(t, 0.0);
        const double m_V = acc_bundle.law_features(k)[0];
        rep.times.push_back(t);
        rep.rho_hat.push_back(k < grid.steps || e > 0.0 ? accepted.rho_hat(t, e) : 0.0);
        rep.mu_paper.push_back(closed_form_controls(model, Variant::paper_theorem).mu_hat_V(t, m_V, e));
        rep.mu_derived.push_back(closed_form_controls(model, Variant::first_order_derived).mu_hat_V(t, m_V, e));
    }

    rep.rows.push_back({"positivity_min_state", min_state, 0.0, min_state > 0.0});
    rep.rows.push_back({"product_process_max_deviation", rep.product.max_deviation, options.product_tolerance,
                        rep.product.max_deviation <= options.product_tolerance});
    rep.rows.push_back({"exactly_one_variant_satisfies_foc", static_cast<double>(passing), 1.0, passing == 1});
    rep.rows.push_back({"saddle_sweep_failing_rows", static_cast<double>(failing_rows(rep.saddle)), 0.0,
                        rep.saddle.verdict});
    rep.rows.push_back({"inflated_rho_failing_rows", static_cast<double>(failing_rows(rep.inflated)), 1.0,
                        !rep.inflated.verdict});
    rep.rows.push_back({"mu_offset_failing_rows", static_cast<double>(failing_rows(rep.offset)), 1.0,
                        !rep.offset.verdict});
    rep.all_pass = std::all_of(rep.rows.begin(), rep.rows.end(), [](const auto& r) { return r.pass; });
    return rep;
}

void write_report_csv(std::ostream& out, const Section5Report& report, std::uint64_t seed) {
    csv::Writer w(out, {"criterion", "value", "threshold", "pass"});
    for (const auto& r : report.rows) w.row(r.criterion, r.value, r.threshold, r.pass);
    // Per-variant findings: worst |residual| / (3 SE + floor); the accepted
    // variant is the one at or below 1.
    for (const auto& v : report.variants) {
        w.row("foc_worst_ratio_" + to_string(v.variant), std::max(v.worst_u, v.worst_mu), 1.0, v.passes);
    }
    w.row(std::string("accepted_variant_") +
              (report.accepted >= 0 ? to_string(report.variants[static_cast<std::size_t>(report.accepted)].variant)
                                    : std::string("none")),
          static_cast<double>(report.accepted), 0.0, report.accepted >= 0);
    w.metadata(seed);
}

void write_controls_csv(std::ostream& out, const Section5Report& report, std::uint64_t seed) {
    csv::Writer w(out, {"t", "rho_hat", "mu_hat_V_paper", "mu_hat_V_derived"});
    for (std::size_t k = 0; k < report.times.size(); ++k) {
        w.row(report.times[k], report.rho_hat[k], report.mu_paper[k], report.mu_derived[k]);
    }
    w.metadata(seed);
}

}  // namespace mflab::consumption
