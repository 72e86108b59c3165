#include "mflab/sde.hpp"

#include "mflab/csv.hpp"
#include "mflab/parallel.hpp"
#include "mflab/rng.hpp"

#include <array>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

namespace mflab::sde {

namespace {

double central(const std::function<double(double)>& g) { return (g(kFdStep) - g(-kFdStep)) / (2.0 * kFdStep); }

CoeffArgs shift_x(CoeffArgs a, double h) {
    a.x += h;
    return a;
}

CoeffArgs shift_u(CoeffArgs a, double h) {
    a.u += h;
    return a;
}

// Copies the feature vector into `buf` with entry f shifted by h.
CoeffArgs shift_mu(const CoeffArgs& a, std::size_t f, double h, std::array<double, kMaxFunctionals>& buf) {
    if (f >= a.mu.size()) throw InvalidArgument("partial: functional index out of range");
    std::copy(a.mu.begin(), a.mu.end(), buf.begin());
    buf[f] += h;
    CoeffArgs b = a;
    b.mu = std::span<const double>(buf.data(), a.mu.size());
    return b;
}

void require_fd(PartialsMode mode, const char* what) {
    if (mode == PartialsMode::analytic_only) {
        throw InvalidArgument(std::string("missing analytic partial: ") + what);
    }
}

double eval(const CoeffFn& f, const CoeffArgs& a) { return f ? f(a) : 0.0; }
double eval(const JumpCoeffFn& f, const CoeffArgs& a, double z) { return f ? f(a, z) : 0.0; }

bool same_levy(const LevyMeasure& a, const LevyMeasure& b) {
    return a.jump_sizes == b.jump_sizes && a.rates == b.rates;
}

// Fills u and the measure features for particle i on [t_k, t_{k+1}).
using ControlFill = std::function<void(std::size_t i, std::size_t k, const ParticleBundle& b, double& u, double* mu)>;

ParticleBundle run_scheme(const ControlledModel& model, std::shared_ptr<const NoiseBundle> noise, MuMode mode,
                          unsigned threads, const ControlFill& fill) {
    if (!noise) throw InvalidArgument("simulate: no noise bundle");
    if (model.functionals.size() > kMaxFunctionals) throw InvalidArgument("simulate: too many measure functionals");
    if (!same_levy(model.levy, noise->levy)) throw InvalidArgument("simulate: noise was drawn for another Levy measure");
    if (std::abs(model.horizon - noise->grid.horizon) > 1e-12) throw InvalidArgument("simulate: horizon mismatch");

    const TimeGrid grid = noise->grid;
    const std::size_t n = noise->n_particles;
    const std::size_t m = grid.steps;
    const std::size_t nf = model.functionals.size();
    const double dt = grid.dt();

    ParticleBundle b;
    b.grid = grid;
    b.noise = noise;
    b.mu_mode = mode;
    b.n_particles = n;
    b.n_functionals = nf;
    b.states.assign(n * grid.points(), 0.0);
    b.u.assign(n * m, 0.0);
    b.mu.assign(n * m * nf, 0.0);
    b.law.assign(grid.points() * nf, 0.0);
    for (std::size_t i = 0; i < n; ++i) b.states[i * grid.points()] = model.x0;

    std::vector<std::size_t> cursor(noise->event_offsets.begin(), noise->event_offsets.end() - 1);
    std::vector<double> column(n);

    auto fill_law = [&](std::size_t k) {
        if (nf == 0) return;
        for (std::size_t i = 0; i < n; ++i) column[i] = b.states[i * grid.points() + k];
        const auto law = DiscreteMeasure::uniform(column);
        for (std::size_t f = 0; f < nf; ++f) b.law[k * nf + f] = model.functionals[f].evaluate(law);
    };

    for (std::size_t k = 0; k < m; ++k) {
        fill_law(k);
        const double t = grid.time(k);
        parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                double* mu = b.mu.data() + (i * m + k) * nf;
                double& u = b.u[i * m + k];
                fill(i, k, b, u, mu);

                const double x = b.states[i * grid.points() + k];
                const CoeffArgs a{t, x, std::span<const double>(mu, nf), u, {i, noise->level(i, k)}};
                double next = x + eval(model.drift, a) * dt + eval(model.diffusion, a) * noise->increment(i, k);
                for (std::size_t j = 0; j < model.levy.size(); ++j) {
                    next -= dt * model.levy.rates[j] * eval(model.jump, a, model.levy.jump_sizes[j]);
                }
                const std::size_t stop = noise->event_offsets[i + 1];
                while (cursor[i] < stop && noise->events[cursor[i]].step == k) {
                    next += eval(model.jump, a, model.levy.jump_sizes[noise->events[cursor[i]].atom]);
                    ++cursor[i];
                }
                if (!std::isfinite(next)) {
                    throw SimulationError("non-finite state at particle " + std::to_string(i) + ", step " +
                                          std::to_string(k + 1));
                }
                b.states[i * grid.points() + k + 1] = next;
            }
        });
    }
    fill_law(m);
    return b;
}

Observation observe(const ParticleBundle& b, std::size_t i, std::size_t k, const InfoPattern& info) {
    const std::size_t ko = b.grid.delayed_index(k, info.delay);
    return Observation{b.grid.time(k), b.grid.time(ko), b.state(i, ko), b.scenario(i, ko), b.law_features(ko)};
}

}  // namespace

std::vector<double> ControlledModel::features(const DiscreteMeasure& m) const {
    std::vector<double> out;
    out.reserve(functionals.size());
    for (const auto& f : functionals) out.push_back(f.evaluate(m));
    return out;
}

// ---- partials ---------------------------------------------------------------

CoeffDerivatives::CoeffDerivatives(const ControlledModel& model, PartialsMode mode) : model_(model), mode_(mode) {}

double CoeffDerivatives::drift_dx(const CoeffArgs& a) const {
    if (model_.drift_partials.dx) return model_.drift_partials.dx(a);
    if (!model_.drift) return 0.0;
    require_fd(mode_, "db/dx");
    return central([&](double h) { return model_.drift(shift_x(a, h)); });
}

double CoeffDerivatives::drift_du(const CoeffArgs& a) const {
    if (model_.drift_partials.du) return model_.drift_partials.du(a);
    if (!model_.drift) return 0.0;
    require_fd(mode_, "db/du");
    return central([&](double h) { return model_.drift(shift_u(a, h)); });
}

double CoeffDerivatives::drift_dmu(const CoeffArgs& a, std::size_t f) const {
    if (model_.drift_partials.dmu) return model_.drift_partials.dmu(a, f);
    if (!model_.drift) return 0.0;
    require_fd(mode_, "db/dmu");
    std::array<double, kMaxFunctionals> buf{};
    return central([&](double h) { return model_.drift(shift_mu(a, f, h, buf)); });
}

double CoeffDerivatives::diffusion_dx(const CoeffArgs& a) const {
    if (model_.diffusion_partials.dx) return model_.diffusion_partials.dx(a);
    if (!model_.diffusion) return 0.0;
    require_fd(mode_, "dsigma/dx");
    return central([&](double h) { return model_.diffusion(shift_x(a, h)); });
}

double CoeffDerivatives::diffusion_du(const CoeffArgs& a) const {
    if (model_.diffusion_partials.du) return model_.diffusion_partials.du(a);
    if (!model_.diffusion) return 0.0;
    require_fd(mode_, "dsigma/du");
    return central([&](double h) { return model_.diffusion(shift_u(a, h)); });
}

double CoeffDerivatives::diffusion_dmu(const CoeffArgs& a, std::size_t f) const {
    if (model_.diffusion_partials.dmu) return model_.diffusion_partials.dmu(a, f);
    if (!model_.diffusion) return 0.0;
    require_fd(mode_, "dsigma/dmu");
    std::array<double, kMaxFunctionals> buf{};
    return central([&](double h) { return model_.diffusion(shift_mu(a, f, h, buf)); });
}

double CoeffDerivatives::jump_dx(const CoeffArgs& a, double zeta) const {
    if (model_.jump_partials.dx) return model_.jump_partials.dx(a, zeta);
    if (!model_.jump) return 0.0;
    require_fd(mode_, "dgamma/dx");
    return central([&](double h) { return model_.jump(shift_x(a, h), zeta); });
}

double CoeffDerivatives::jump_du(const CoeffArgs& a, double zeta) const {
    if (model_.jump_partials.du) return model_.jump_partials.du(a, zeta);
    if (!model_.jump) return 0.0;
    require_fd(mode_, "dgamma/du");
    return central([&](double h) { return model_.jump(shift_u(a, h), zeta); });
}

double CoeffDerivatives::jump_dmu(const CoeffArgs& a, double zeta, std::size_t f) const {
    if (model_.jump_partials.dmu) return model_.jump_partials.dmu(a, zeta, f);
    if (!model_.jump) return 0.0;
    require_fd(mode_, "dgamma/dmu");
    std::array<double, kMaxFunctionals> buf{};
    return central([&](double h) { return model_.jump(shift_mu(a, f, h, buf), zeta); });
}

// ---- performance ------------------------------------------------------------

double PerformanceSpec::dx(const PerfArgs& a) const {
    if (running_dx) return running_dx(a);
    if (!running) return 0.0;
    return central([&](double h) {
        PerfArgs b = a;
        b.x += h;
        return running(b);
    });
}

double PerformanceSpec::du(const PerfArgs& a) const {
    if (running_du) return running_du(a);
    if (!running) return 0.0;
    return central([&](double h) {
        PerfArgs b = a;
        b.u += h;
        return running(b);
    });
}

double PerformanceSpec::dmu(const PerfArgs& a, std::size_t f) const {
    if (running_dmu) return running_dmu(a, f);
    if (!running) return 0.0;
    if (f >= a.mu.size() || a.mu.size() > kMaxFunctionals) throw InvalidArgument("dl/dmu: functional index out of range");
    std::array<double, kMaxFunctionals> buf{};
    return central([&](double h) {
        std::copy(a.mu.begin(), a.mu.end(), buf.begin());
        buf[f] += h;
        PerfArgs b = a;
        b.mu = std::span<const double>(buf.data(), a.mu.size());
        return running(b);
    });
}

double PerformanceSpec::terminal_derivative(const TerminalArgs& a) const {
    if (terminal_dx) return terminal_dx(a);
    if (!terminal) return 0.0;
    return central([&](double h) {
        TerminalArgs b = a;
        b.x += h;
        return terminal(b);
    });
}

PerformanceSpec negated(const PerformanceSpec& s) {
    PerformanceSpec n;
    if (s.running) n.running = [f = s.running](const PerfArgs& a) { return -f(a); };
    if (s.terminal) n.terminal = [f = s.terminal](const TerminalArgs& a) { return -f(a); };
    if (s.running_dx) n.running_dx = [f = s.running_dx](const PerfArgs& a) { return -f(a); };
    if (s.running_du) n.running_du = [f = s.running_du](const PerfArgs& a) { return -f(a); };
    if (s.running_dmu) n.running_dmu = [f = s.running_dmu](const PerfArgs& a, std::size_t j) { return -f(a, j); };
    if (s.terminal_dx) n.terminal_dx = [f = s.terminal_dx](const TerminalArgs& a) { return -f(a); };
    return n;
}

// ---- controls ---------------------------------------------------------------

InfoPattern InfoPattern::delayed(double d) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw InvalidArgument("InfoPattern: delay must be finite and >= 0");
    return InfoPattern{d};
}

StepDirection StepDirection::on_measure(DiscreteMeasure eta, double t0) {
    StepDirection d;
    d.kind = DirectionKind::measure;
    d.t0 = t0;
    d.eta = std::move(eta);
    return d;
}

StepDirection StepDirection::on_control(double amplitude, double t0) {
    StepDirection d;
    d.kind = DirectionKind::control;
    d.t0 = t0;
    d.amplitude = amplitude;
    return d;
}

ControlPair perturbed(const ControlPair& base, const StepDirection& dir, double lambda) {
    ControlPair out = base;
    if (dir.kind == DirectionKind::control) {
        out.real = [real = base.real, dir, lambda](const Observation& obs) {
            const double u = real ? real(obs) : 0.0;
            return dir.active(obs.t) ? u + lambda * dir.amplitude : u;
        };
    } else {
        const auto shift = dir.eta.scaled(lambda);
        out.measure = [measure = base.measure, dir, shift](const Observation& obs) {
            MeasureControlValue v = measure ? measure(obs) : MeasureControlValue{};
            if (dir.active(obs.t)) v.offset += shift;
            return v;
        };
    }
    return out;
}

// ---- noise ------------------------------------------------------------------

std::shared_ptr<const NoiseBundle> generate_noise(const TimeGrid& grid, const LevyMeasure& levy,
                                                  std::size_t n_particles, std::uint64_t seed, unsigned threads) {
    if (n_particles == 0) throw InvalidArgument("generate_noise: need at least one particle");
    if (grid.steps == 0 || !(grid.horizon > 0.0)) throw InvalidArgument("generate_noise: invalid time grid");

    auto nb = std::make_shared<NoiseBundle>();
    nb->grid = grid;
    nb->n_particles = n_particles;
    nb->seed = seed;
    nb->levy = levy;
    nb->dB.resize(n_particles * grid.steps);
    nb->W.resize(n_particles * grid.points());

    const double dt = grid.dt();
    const double sd = std::sqrt(dt);
    const double total = levy.total_rate();
    std::vector<double> cumulative;
    for (double r : levy.rates) cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + r / total);

    std::vector<std::vector<JumpEvent>> per_particle(n_particles);
    parallel_for(n_particles, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            StreamRng rng(seed, {i});
            std::normal_distribution<double> normal(0.0, 1.0);
            std::uniform_real_distribution<double> uniform(0.0, 1.0);
            double w = 0.0;
            nb->W[i * grid.points()] = 0.0;
            for (std::size_t k = 0; k < grid.steps; ++k) {
                const double db = sd * normal(rng);
                nb->dB[i * grid.steps + k] = db;
                w += db;
                nb->W[i * grid.points() + k + 1] = w;
            }
            if (total > 0.0) {
                std::poisson_distribution<int> count(total * dt);
                for (std::size_t k = 0; k < grid.steps; ++k) {
                    const int c = count(rng);
                    for (int e = 0; e < c; ++e) {
                        const double v = uniform(rng);
                        std::size_t j = 0;
                        while (j + 1 < cumulative.size() && v >= cumulative[j]) ++j;
                        per_particle[i].push_back({static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(j)});
                    }
                }
            }
        }
    });

    nb->event_offsets.resize(n_particles + 1, 0);
    for (std::size_t i = 0; i < n_particles; ++i) {
        nb->event_offsets[i + 1] = nb->event_offsets[i] + per_particle[i].size();
    }
    nb->events.reserve(nb->event_offsets.back());
    for (auto& v : per_particle) nb->events.insert(nb->events.end(), v.begin(), v.end());
    return nb;
}

// ---- bundle -----------------------------------------------------------------

std::vector<double> ParticleBundle::cross_section(std::size_t k) const {
    if (k >= grid.points()) throw InvalidArgument("cross_section: step out of range");
    std::vector<double> out(n_particles);
    for (std::size_t i = 0; i < n_particles; ++i) out[i] = state(i, k);
    return out;
}

DiscreteMeasure ParticleBundle::law_at(std::size_t k) const { return lawproc::empirical_law(cross_section(k)); }

lawproc::MeasurePath ParticleBundle::law_path() const {
    std::vector<double> times;
    std::vector<DiscreteMeasure> values;
    for (std::size_t k = 0; k < grid.points(); ++k) {
        times.push_back(grid.time(k));
        values.push_back(law_at(k));
    }
    return lawproc::MeasurePath(std::move(times), std::move(values));
}

ParticleBundle simulate(const ControlledModel& model, const ControlPair& controls, const SimulationConfig& config) {
    if (config.n_particles == 0) throw InvalidArgument("simulate: n_particles must be >= 1");
    if (config.n_steps == 0) throw InvalidArgument("simulate: n_steps must be >= 1");
    const TimeGrid grid{model.horizon, config.n_steps};
    auto noise = generate_noise(grid, model.levy, config.n_particles, config.seed, config.threads);
    return simulate_on_noise(model, controls, std::move(noise), config.mu_mode, config.threads);
}

ParticleBundle simulate_on_noise(const ControlledModel& model, const ControlPair& controls,
                                 std::shared_ptr<const NoiseBundle> noise, MuMode mu_mode, unsigned threads) {
    const std::size_t nf = model.functionals.size();
    const ControlFill fill = [&](std::size_t i, std::size_t k, const ParticleBundle& b, double& u, double* mu) {
        if (controls.real) {
            u = controls.real(observe(b, i, k, controls.real_info));
            if (!controls.real_bounds.contains(u) || !std::isfinite(u)) {
                throw InadmissibleControl("control value " + csv::format(u) + " outside U at particle " +
                                          std::to_string(i) + ", step " + std::to_string(k));
            }
        }
        const auto law = b.law_features(k);
        if (mu_mode == MuMode::empirical) {
            std::copy(law.begin(), law.end(), mu);
            return;
        }
        if (!controls.measure) return;
        const auto v = controls.measure(observe(b, i, k, controls.measure_info));
        for (std::size_t f = 0; f < nf; ++f) {
            mu[f] = (v.include_law ? law[f] : 0.0) + (v.offset.empty() ? 0.0 : model.functionals[f].evaluate(v.offset));
        }
    };
    return run_scheme(model, std::move(noise), mu_mode, threads, fill);
}

PerformanceEstimate evaluate_performance(const ParticleBundle& bundle, const PerformanceSpec& spec) {
    const std::size_t n = bundle.n_particles;
    const std::size_t m = bundle.grid.steps;
    const double dt = bundle.grid.dt();
    PerformanceEstimate est;
    est.per_particle.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        if (spec.running) {
            for (std::size_t k = 0; k < m; ++k) {
                const PerfArgs a{bundle.grid.time(k), bundle.state(i, k), bundle.law_features(k),
                                 bundle.mu_features(i, k), bundle.control(i, k), bundle.scenario(i, k)};
                s += spec.running(a) * dt;
            }
        }
        s += spec.eval_terminal(TerminalArgs{bundle.state(i, m), bundle.law_features(m), bundle.scenario(i, m)});
        if (!std::isfinite(s)) {
            throw SimulationError("performance functional is not finite for particle " + std::to_string(i));
        }
        est.per_particle[i] = s;
    }
    const auto st = sample_stats(est.per_particle);
    est.estimate = st.mean;
    est.std_error = st.std_error;
    return est;
}

// ---- derivative process ---------------------------------------------------

std::vector<double> simulate_derivative_process(const ParticleBundle& bundle, const ControlledModel& model,
                                                const StepDirection& direction, PartialsMode mode) {
    if (bundle.mu_mode == MuMode::empirical) {
        throw UnsupportedModel("derivative process: law-feedback (empirical) dynamics are not supported");
    }
    const auto& noise = *bundle.noise;
    const std::size_t n = bundle.n_particles;
    const std::size_t m = bundle.grid.steps;
    const std::size_t nf = bundle.n_functionals;
    const double dt = bundle.grid.dt();
    const CoeffDerivatives d(model, mode);

    std::vector<double> eta_features(nf, 0.0);
    if (direction.kind == DirectionKind::measure) eta_features = model.features(direction.eta);

    std::vector<double> z(n * bundle.grid.points(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto events = noise.jumps(i);
        std::size_t e = 0;
        double zi = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double t = bundle.grid.time(k);
            const CoeffArgs a{t, bundle.state(i, k), bundle.mu_features(i, k), bundle.control(i, k),
                              bundle.scenario(i, k)};
            const bool on = direction.active(t);

            // Source terms from the perturbation direction.
            double src_b = 0.0;
            double src_s = 0.0;
            auto jump_src = [&](double zeta) {
                if (!on) return 0.0;
                if (direction.kind == DirectionKind::control) return d.jump_du(a, zeta) * direction.amplitude;
                double s = 0.0;
                for (std::size_t f = 0; f < nf; ++f) {
                    if (eta_features[f] != 0.0) s += d.jump_dmu(a, zeta, f) * eta_features[f];
                }
                return s;
            };
            if (on) {
                if (direction.kind == DirectionKind::control) {
                    src_b = d.drift_du(a) * direction.amplitude;
                    src_s = d.diffusion_du(a) * direction.amplitude;
                } else {
                    for (std::size_t f = 0; f < nf; ++f) {
                        if (eta_features[f] == 0.0) continue;
                        src_b += d.drift_dmu(a, f) * eta_features[f];
                        src_s += d.diffusion_dmu(a, f) * eta_features[f];
                    }
                }
            }

            double next = zi + (d.drift_dx(a) * zi + src_b) * dt + (d.diffusion_dx(a) * zi + src_s) * noise.increment(i, k);
            for (std::size_t j = 0; j < model.levy.size(); ++j) {
                const double zeta = model.levy.jump_sizes[j];
                next -= dt * model.levy.rates[j] * (d.jump_dx(a, zeta) * zi + jump_src(zeta));
            }
            while (e < events.size() && events[e].step == k) {
                const double zeta = model.levy.jump_sizes[events[e].atom];
                next += d.jump_dx(a, zeta) * zi + jump_src(zeta);
                ++e;
            }
            if (!std::isfinite(next)) {
                throw SimulationError("derivative process not finite at particle " + std::to_string(i) + ", step " +
                                      std::to_string(k + 1));
            }
            zi = next;
            z[i * bundle.grid.points() + k + 1] = zi;
        }
    }
    return z;
}

ParticleBundle replay_perturbed(const ParticleBundle& base, const ControlledModel& model, const StepDirection& dir,
                                double lambda, unsigned threads) {
    if (base.mu_mode == MuMode::empirical && dir.kind == DirectionKind::measure) {
        throw UnsupportedModel("replay: measure perturbations need exogenous measure controls");
    }
    const std::size_t nf = base.n_functionals;
    std::vector<double> shift(nf, 0.0);
    if (dir.kind == DirectionKind::measure) {
        shift = model.features(dir.eta);
        for (double& s : shift) s *= lambda;
    }
    const ControlFill fill = [&](std::size_t i, std::size_t k, const ParticleBundle& b, double& u, double* mu) {
        const bool on = dir.active(b.grid.time(k));
        u = base.control(i, k) + (on && dir.kind == DirectionKind::control ? lambda * dir.amplitude : 0.0);
        if (base.mu_mode == MuMode::empirical) {
            const auto law = b.law_features(k);
            std::copy(law.begin(), law.end(), mu);
            return;
        }
        const auto recorded = base.mu_features(i, k);
        for (std::size_t f = 0; f < nf; ++f) mu[f] = recorded[f] + (on ? shift[f] : 0.0);
    };
    return run_scheme(model, base.noise, base.mu_mode, threads, fill);
}

std::vector<double> derivative_l2_errors(const ParticleBundle& bundle, const ControlledModel& model,
                                         const StepDirection& direction, std::span<const double> lambdas,
                                         std::span<const double> z, unsigned threads) {
    if (z.size() != bundle.states.size()) throw InvalidArgument("derivative_l2_errors: Z has the wrong shape");
    const std::size_t n = bundle.n_particles;
    const std::size_t pts = bundle.grid.points();
    const double dt = bundle.grid.dt();
    std::vector<double> errors;
    for (double lambda : lambdas) {
        if (lambda == 0.0) throw InvalidArgument("derivative_l2_errors: lambda must be nonzero");
        const auto moved = replay_perturbed(bundle, model, direction, lambda, threads);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t k = 1; k < pts; ++k) {
                const std::size_t idx = i * pts + k;
                const double r = (moved.states[idx] - bundle.states[idx]) / lambda - z[idx];
                s += r * r * dt;
            }
            total += s;
        }
        errors.push_back(total / static_cast<double>(n));
    }
    return errors;
}

void write_states_csv(std::ostream& out, const ParticleBundle& bundle) {
    csv::Writer w(out, {"particle", "step", "time", "x"});
    for (std::size_t i = 0; i < bundle.n_particles; ++i) {
        for (std::size_t k = 0; k < bundle.grid.points(); ++k) w.row(i, k, bundle.grid.time(k), bundle.state(i, k));
    }
    w.metadata(bundle.seed());
}

void write_events_csv(std::ostream& out, const ParticleBundle& bundle) {
    csv::Writer w(out, {"particle", "step", "atom", "jump_size"});
    const auto& noise = *bundle.noise;
    for (std::size_t i = 0; i < bundle.n_particles; ++i) {
        for (const auto& e : noise.jumps(i)) {
            w.row(i, static_cast<std::size_t>(e.step), static_cast<std::size_t>(e.atom),
                  noise.levy.jump_sizes[e.atom]);
        }
    }
    w.metadata(bundle.seed());
}

SampleStats sample_stats(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("sample_stats: empty sample");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    if (values.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace mflab::sde
