#include "mflab/game.hpp"

#include "mflab/csv.hpp"

#include <cmath>
#include <ostream>

namespace mflab::game {

namespace {

using sde::CoeffArgs;
using sde::ParticleBundle;
using sde::PerfArgs;

constexpr double kNegligible = 1e-12;

CoeffArgs coeff_args(const ParticleBundle& b, std::size_t i, std::size_t k) {
    return {b.grid.time(k), b.state(i, k), b.mu_features(i, k), b.control(i, k), b.scenario(i, k)};
}

PerfArgs perf_args(const ParticleBundle& b, std::size_t i, std::size_t k) {
    return {b.grid.time(k), b.state(i, k), b.law_features(k), b.mu_features(i, k), b.control(i, k), b.scenario(i, k)};
}

std::size_t grid_index(const TimeGrid& grid, double t) {
    const auto k = static_cast<std::size_t>(std::llround(t / grid.dt()));
    return k > grid.steps ? grid.steps : k;
}

// Reads dH/d(own control) for one particle and step.
double control_gradient(const sde::PerformanceSpec& pay, const sde::CoeffDerivatives& d, const ParticleBundle& b,
                        std::size_t i, std::size_t k, double p0) {
    return pay.du(perf_args(b, i, k)) + p0 * d.drift_du(coeff_args(b, i, k));
}

double measure_gradient(const sde::PerformanceSpec& pay, const sde::CoeffDerivatives& d, const ParticleBundle& b,
                        std::size_t i, std::size_t k, double p0, std::size_t f) {
    return pay.dmu(perf_args(b, i, k), f) + p0 * d.drift_dmu(coeff_args(b, i, k), f);
}

// True when sigma or gamma reacts to player p's control somewhere on the paths,
// in which case the dropped q^0 / r^0 terms matter.
bool reads_dropped_terms(const sde::ControlledModel& model, const sde::CoeffDerivatives& d, const ParticleBundle& b,
                         Player p) {
    const std::size_t probe = std::min<std::size_t>(b.n_particles, 64);
    for (std::size_t i = 0; i < probe; ++i) {
        for (std::size_t k = 0; k < b.grid.steps; ++k) {
            const auto a = coeff_args(b, i, k);
            if (p == Player::control) {
                if (std::abs(d.diffusion_du(a)) > kNegligible) return true;
                for (double z : model.levy.jump_sizes) {
                    if (std::abs(d.jump_du(a, z)) > kNegligible) return true;
                }
            } else {
                for (std::size_t f = 0; f < b.n_functionals; ++f) {
                    if (std::abs(d.diffusion_dmu(a, f)) > kNegligible) return true;
                    for (double z : model.levy.jump_sizes) {
                        if (std::abs(d.jump_dmu(a, z, f)) > kNegligible) return true;
                    }
                }
            }
        }
    }
    return false;
}

// Per-time summary of per-particle values, conditioned on the delayed state
// when the information pattern is delayed.
ResidualCurve summarise(const ParticleBundle& b, const std::vector<double>& values, const sde::InfoPattern& info,
                        const regression::BasisConfig& basis) {
    const std::size_t n = b.n_particles;
    const std::size_t m = b.grid.steps;
    ResidualCurve c;
    std::vector<double> col(n);
    std::vector<double> z(n);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < n; ++i) col[i] = values[i * m + k];
        if (!info.is_full()) {
            const std::size_t kd = b.grid.delayed_index(k, info.delay);
            for (std::size_t i = 0; i < n; ++i) z[i] = b.state(i, kd);
            col = regression::PolynomialFit::fit(z, col, basis).predict(z);
        }
        const auto st = sde::sample_stats(col);
        c.times.push_back(b.grid.time(k));
        c.value.push_back(st.mean);
        c.std_error.push_back(st.std_error);
    }
    return c;
}

}  // namespace

std::string to_string(Player p) { return p == Player::measure ? "measure" : "control"; }

sde::PerformanceSpec GameSpec::payoff(Player p) const {
    if (zero_sum) return p == Player::control ? perf : sde::negated(perf);
    return p == Player::measure ? perf1 : perf2;
}

double FourierPairing::operator()(double t, const measures::FourierTable& m_prime) const {
    if (nodes.size() != coefficients.size()) throw InvalidArgument("FourierPairing: one coefficient per node");
    double s = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) s += coefficients[j] * m_prime.at(nodes[j]).real();
    return (scale ? scale(t) : 1.0) * s;
}

AdjointState adjoint_p0_solve(const GameSpec& spec, const ParticleBundle& bundle, Player player,
                              const bsde::SolveConfig& config) {
    if (bundle.mu_mode == sde::MuMode::empirical) {
        throw UnsupportedModel("adjoint: law-feedback dynamics add mean-field terms outside the linear reduction");
    }
    auto pay = std::make_shared<sde::PerformanceSpec>(spec.payoff(player));
    auto model = std::make_shared<sde::ControlledModel>(spec.model);
    auto d = std::make_shared<sde::CoeffDerivatives>(*model, sde::PartialsMode::analytic_or_fd);
    const ParticleBundle* b = &bundle;

    bsde::LinearBsdeSpec lin;
    lin.levy = model->levy;
    lin.phi = [b, pay](double t, const Scenario& s) {
        return pay->dx(perf_args(*b, s.index, grid_index(b->grid, t)));
    };
    lin.alpha = [b, d](double t, const Scenario& s) {
        return d->drift_dx(coeff_args(*b, s.index, grid_index(b->grid, t)));
    };
    lin.beta = [b, d](double t, const Scenario& s) {
        return d->diffusion_dx(coeff_args(*b, s.index, grid_index(b->grid, t)));
    };
    lin.jump_phi = [b, d](double t, double zeta, const Scenario& s) {
        return d->jump_dx(coeff_args(*b, s.index, grid_index(b->grid, t)), zeta);
    };
    lin.terminal = [b, pay](const Scenario& s) {
        const std::size_t m = b->grid.steps;
        return pay->terminal_derivative({b->state(s.index, m), b->law_features(m), b->scenario(s.index, m)});
    };

    AdjointState adj;
    adj.player = player;
    adj.p0 = bsde::solve_on_noise(lin, *bundle.noise, config, bundle.states);
    adj.restricted = reads_dropped_terms(*model, *d, bundle, player);
    return adj;
}

double hamiltonian(const GameSpec& spec, Player player, const HamiltonianArgs& a) {
    if (!a.p0) throw InvalidArgument("hamiltonian: adjoint p0 missing at t = " + csv::format(a.t));
    const auto pay = spec.payoff(player);
    const CoeffArgs c{a.t, a.x, a.mu, a.u, a.scenario};
    const auto& model = spec.model;
    double h = pay.eval_running(PerfArgs{a.t, a.x, a.m, a.mu, a.u, a.scenario});
    h += *a.p0 * (model.drift ? model.drift(c) : 0.0);
    h += a.q0 * (model.diffusion ? model.diffusion(c) : 0.0);
    if (!a.r0.empty()) {
        if (a.r0.size() != model.levy.size()) throw InvalidArgument("hamiltonian: one r0 value per jump atom");
        for (std::size_t j = 0; j < model.levy.size(); ++j) {
            const double g = model.jump ? model.jump(c, model.levy.jump_sizes[j]) : 0.0;
            h += model.levy.rates[j] * a.r0[j] * g;
        }
    }
    if (a.p1 && a.m_prime) h += (*a.p1)(a.t, *a.m_prime);
    return h;
}

Residuals first_order_residuals(const GameSpec& spec, const ParticleBundle& bundle, const AdjointState& adj1,
                                const AdjointState& adj2, const regression::BasisConfig& basis) {
    if (adj1.player != Player::measure || adj2.player != Player::control) {
        throw InvalidArgument("first_order_residuals: adjoints must belong to players 1 and 2");
    }
    const std::size_t n = bundle.n_particles;
    const std::size_t m = bundle.grid.steps;
    const sde::CoeffDerivatives d(spec.model, sde::PartialsMode::analytic_or_fd);
    const auto pay1 = spec.payoff(Player::measure);
    const auto pay2 = spec.payoff(Player::control);

    Residuals r;
    std::vector<double> values(n * m);
    std::vector<bool> boundary(m, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            values[i * m + k] = control_gradient(pay2, d, bundle, i, k, adj2.p0.at(i, k));
            const double u = bundle.control(i, k);
            if (u == spec.u_bounds.lo || u == spec.u_bounds.hi) boundary[k] = true;
        }
    }
    r.u = summarise(bundle, values, spec.info2, basis);
    r.u.restricted = adj2.restricted;
    r.u.boundary = boundary;

    for (std::size_t f = 0; f < bundle.n_functionals; ++f) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < m; ++k) {
                values[i * m + k] = measure_gradient(pay1, d, bundle, i, k, adj1.p0.at(i, k), f);
            }
        }
        auto curve = summarise(bundle, values, spec.info1, basis);
        curve.restricted = adj1.restricted;
        curve.boundary.assign(m, false);
        r.mu.push_back(std::move(curve));
    }
    return r;
}

bool within_se(double value, double target, double std_error, double k, double floor) {
    return std::abs(value - target) <= k * std_error + floor;
}

SweepResult nash_perturbation_sweep(const GameSpec& spec, const sde::ControlPair& candidate,
                                    const PerturbationPlan& plan, std::shared_ptr<const sde::NoiseBundle> noise,
                                    sde::MuMode mu_mode, unsigned threads) {
    const auto base = sde::simulate_on_noise(spec.model, candidate, noise, mu_mode, threads);
    const auto pay1 = spec.payoff(Player::measure);
    const auto pay2 = spec.payoff(Player::control);
    const auto base1 = sde::evaluate_performance(base, pay1);
    const auto base2 = sde::evaluate_performance(base, pay2);

    SweepResult out;
    out.verdict = true;
    for (std::size_t id = 0; id < plan.directions.size(); ++id) {
        const auto& entry = plan.directions[id];
        const bool control = entry.player == Player::control;
        const auto& ref = control ? base2 : base1;
        const double floor = 1e-9 * std::max(1.0, std::abs(ref.estimate));
        for (double lambda : plan.lambdas) {
            SweepRow row;
            row.direction_id = id;
            row.player = entry.player;
            row.lambda = lambda;
            if (lambda != 0.0) {
                const auto moved = sde::simulate_on_noise(spec.model, sde::perturbed(candidate, entry.direction, lambda),
                                                          noise, mu_mode, threads);
                const auto val = sde::evaluate_performance(moved, control ? pay2 : pay1);
                std::vector<double> diff(val.per_particle.size());
                for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = val.per_particle[i] - ref.per_particle[i];
                const auto st = sde::sample_stats(diff);
                row.delta = st.mean;
                row.std_error = st.std_error;
            }
            // Own-payoff deltas must not be significantly positive. In a
            // zero-sum game the table reports J, which flips the measure rows.
            row.ok = row.delta <= 2.0 * row.std_error + floor;
            if (spec.zero_sum && !control) row.delta = -row.delta;
            out.verdict = out.verdict && row.ok;
            out.rows.push_back(row);
        }
    }
    return out;
}

GateauxResult gateaux_check(const GameSpec& spec, const ParticleBundle& bundle, const AdjointState& adjoint,
                            const sde::StepDirection& direction, std::span<const double> lambdas, unsigned threads) {
    if (lambdas.empty()) throw InvalidArgument("gateaux_check: need at least one lambda");
    const bool on_control = direction.kind == sde::DirectionKind::control;
    if (on_control != (adjoint.player == Player::control)) {
        throw InvalidArgument("gateaux_check: direction does not belong to the adjoint's player");
    }
    const auto pay = spec.payoff(adjoint.player);
    const std::size_t n = bundle.n_particles;
    const std::size_t m = bundle.grid.steps;
    const double dt = bundle.grid.dt();
    const sde::CoeffDerivatives d(spec.model, sde::PartialsMode::analytic_or_fd);

    std::vector<double> eta(bundle.n_functionals, 0.0);
    if (!on_control) eta = spec.model.features(direction.eta);

    GateauxResult g;
    g.lambdas.assign(lambdas.begin(), lambdas.end());
    std::vector<double> smallest_fd;
    double smallest = std::numeric_limits<double>::infinity();
    for (double lambda : lambdas) {
        if (!(lambda > 0.0)) throw InvalidArgument("gateaux_check: lambdas must be positive");
        const auto up = sde::evaluate_performance(sde::replay_perturbed(bundle, spec.model, direction, lambda, threads), pay);
        const auto down =
            sde::evaluate_performance(sde::replay_perturbed(bundle, spec.model, direction, -lambda, threads), pay);
        std::vector<double> slope(n);
        for (std::size_t i = 0; i < n; ++i) slope[i] = (up.per_particle[i] - down.per_particle[i]) / (2.0 * lambda);
        const auto st = sde::sample_stats(slope);
        g.fd_slopes.push_back({st.mean, st.std_error});
        if (lambda < smallest) {
            smallest = lambda;
            smallest_fd = std::move(slope);
        }
    }

    const auto z = sde::simulate_derivative_process(bundle, spec.model, direction);
    std::vector<double> adj(n, 0.0);
    std::vector<double> tan(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double a_sum = 0.0;
        double t_sum = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const auto pa = perf_args(bundle, i, k);
            const double zk = z[i * bundle.grid.points() + k];
            t_sum += pay.dx(pa) * zk * dt;
            if (!direction.active(bundle.grid.time(k))) continue;
            const double p0 = adjoint.p0.at(i, k);
            if (on_control) {
                a_sum += control_gradient(pay, d, bundle, i, k, p0) * direction.amplitude * dt;
                t_sum += pay.du(pa) * direction.amplitude * dt;
            } else {
                for (std::size_t f = 0; f < eta.size(); ++f) {
                    if (eta[f] == 0.0) continue;
                    a_sum += measure_gradient(pay, d, bundle, i, k, p0, f) * eta[f] * dt;
                    t_sum += pay.dmu(pa, f) * eta[f] * dt;
                }
            }
        }
        t_sum += pay.terminal_derivative({bundle.state(i, m), bundle.law_features(m), bundle.scenario(i, m)}) *
                 z[i * bundle.grid.points() + m];
        adj[i] = a_sum;
        tan[i] = t_sum;
    }
    const auto sa = sde::sample_stats(adj);
    const auto stn = sde::sample_stats(tan);
    g.adjoint_slope = {sa.mean, sa.std_error};
    g.tangent_slope = {stn.mean, stn.std_error};

    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = smallest_fd[i] - adj[i];
    const auto sd = sde::sample_stats(diff);
    g.difference = sd.mean;
    g.difference_se = sd.std_error;
    const double fd = sde::sample_stats(smallest_fd).mean;
    g.agree = std::abs(sd.mean) <= std::max(3.0 * sd.std_error, 0.05 * std::abs(fd));
    return g;
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep, std::uint64_t seed) {
    csv::Writer w(out, {"direction_id", "player", "lambda", "delta_J", "std_err", "pass"});
    for (const auto& r : sweep.rows) w.row(r.direction_id, to_string(r.player), r.lambda, r.delta, r.std_error, r.ok);
    w.metadata(seed);
}

void write_residual_csv(std::ostream& out, const ResidualCurve& curve, std::uint64_t seed) {
    csv::Writer w(out, {"t", "residual", "std_err"});
    for (std::size_t k = 0; k < curve.times.size(); ++k) w.row(curve.times[k], curve.value[k], curve.std_error[k]);
    w.metadata(seed);
}

GameSpec lq_game(const LqParams& p) {
    if (!(p.q1 > 0.0) || !(p.q2 > 0.0)) throw InvalidArgument("lq_game: q1, q2 must be positive");
    GameSpec g;
    auto& model = g.model;
    model.drift = [](const CoeffArgs& a) { return a.mu[0] + a.u; };
    model.diffusion = [s = p.s](const CoeffArgs&) { return s; };
    model.functionals = {measures::first_moment_functional()};
    model.x0 = p.x0;
    model.horizon = p.horizon;
    model.lipschitz_const = 1.0;
    model.drift_partials.dx = [](const CoeffArgs&) { return 0.0; };
    model.drift_partials.du = [](const CoeffArgs&) { return 1.0; };
    model.drift_partials.dmu = [](const CoeffArgs&, std::size_t) { return 1.0; };
    model.diffusion_partials.dx = [](const CoeffArgs&) { return 0.0; };
    model.diffusion_partials.du = [](const CoeffArgs&) { return 0.0; };
    model.diffusion_partials.dmu = [](const CoeffArgs&, std::size_t) { return 0.0; };

    g.perf1.running = [q = p.q1](const PerfArgs& a) { return -0.5 * q * a.mu[0] * a.mu[0]; };
    g.perf1.running_dx = [](const PerfArgs&) { return 0.0; };
    g.perf1.running_du = [](const PerfArgs&) { return 0.0; };
    g.perf1.running_dmu = [q = p.q1](const PerfArgs& a, std::size_t) { return -q * a.mu[0]; };
    g.perf1.terminal = [](const sde::TerminalArgs& a) { return a.x; };
    g.perf1.terminal_dx = [](const sde::TerminalArgs&) { return 1.0; };

    g.perf2.running = [q = p.q2](const PerfArgs& a) { return -0.5 * q * a.u * a.u; };
    g.perf2.running_dx = [](const PerfArgs&) { return 0.0; };
    g.perf2.running_du = [q = p.q2](const PerfArgs& a) { return -q * a.u; };
    g.perf2.running_dmu = [](const PerfArgs&, std::size_t) { return 0.0; };
    g.perf2.terminal = [k = p.kappa](const sde::TerminalArgs& a) { return k * a.x; };
    g.perf2.terminal_dx = [k = p.kappa](const sde::TerminalArgs&) { return k; };
    return g;
}

sde::ControlPair lq_equilibrium(const LqParams& p) {
    sde::ControlPair c;
    const double mean = 1.0 / p.q1;
    c.measure = [mean](const sde::Observation&) {
        return sde::MeasureControlValue{false, measures::DiscreteMeasure::dirac(mean)};
    };
    c.real = [u = p.kappa / p.q2](const sde::Observation&) { return u; };
    return c;
}

}  // namespace mflab::game
