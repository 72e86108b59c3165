#include "mflab/bsde.hpp"

#include "mflab/csv.hpp"
#include "mflab/parallel.hpp"
#include "mflab/rng.hpp"

#include <cmath>
#include <ostream>
#include <random>
#include <string>

namespace mflab::bsde {

namespace {

double eval(const std::function<double(double, const Scenario&)>& f, double t, const Scenario& s) {
    return f ? f(t, s) : 0.0;
}

// Multiplicative Euler factor of Gamma over one step, without the realised jumps.
double gamma_factor(const LinearBsdeSpec& spec, double t, const Scenario& s, double dt, double db) {
    double g = 1.0 + eval(spec.alpha, t, s) * dt + eval(spec.beta, t, s) * db;
    if (spec.jump_phi) {
        for (std::size_t j = 0; j < spec.levy.size(); ++j) {
            g -= dt * spec.levy.rates[j] * spec.jump_phi(t, spec.levy.jump_sizes[j], s);
        }
    }
    return g;
}

double jump_weight(const LinearBsdeSpec& spec, double t, std::size_t atom, const Scenario& s) {
    return spec.jump_phi ? spec.jump_phi(t, spec.levy.jump_sizes[atom], s) : 0.0;
}

void check_gamma(double g, std::size_t i, std::size_t k) {
    if (!(g > 0.0) || !std::isfinite(g)) {
        throw SimulationError("Gamma left (0, inf) at scenario " + std::to_string(i) + ", step " + std::to_string(k) +
                              "; reduce the step size");
    }
}

double terminal_value(const LinearBsdeSpec& spec, const Scenario& s) {
    if (!spec.terminal) throw InvalidArgument("LinearBsdeSpec: terminal value missing");
    return spec.terminal(s);
}

std::vector<double> pathwise_representation(const LinearBsdeSpec& spec, const sde::NoiseBundle& noise,
                                            const std::vector<double>& gamma) {
    const auto& grid = noise.grid;
    const std::size_t pts = grid.points();
    const double dt = grid.dt();
    std::vector<double> y(noise.n_particles * pts);
    for (std::size_t i = 0; i < noise.n_particles; ++i) {
        const double* g = gamma.data() + i * pts;
        const double theta = terminal_value(spec, {i, noise.level(i, grid.steps)});
        double s = theta * g[grid.steps];
        y[i * pts + grid.steps] = theta;
        for (std::size_t k = grid.steps; k-- > 0;) {
            s += g[k] * eval(spec.phi, grid.time(k), {i, noise.level(i, k)}) * dt;
            y[i * pts + k] = s / g[k];
        }
    }
    return y;
}

// One inner path started from (t_start, w). Returns theta Gamma(T) + sum Gamma phi dt
// with Gamma renormalised to 1 at t_k >= t_start.
double inner_path(const LinearBsdeSpec& spec, const TimeGrid& grid, std::size_t i, std::size_t start, std::size_t k,
                  double w, StreamRng& rng, const std::vector<double>& cumulative) {
    const double dt = grid.dt();
    const double sd = std::sqrt(dt);
    const double total = spec.levy.total_rate();
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::poisson_distribution<int> count(total > 0.0 ? total * dt : 1.0);
    double g = 1.0;
    double s = 0.0;
    for (std::size_t step = start; step < grid.steps; ++step) {
        const double t = grid.time(step);
        const Scenario sc{i, w};
        if (step == k) g = 1.0;
        if (step >= k) s += g * eval(spec.phi, t, sc) * dt;
        const double db = sd * normal(rng);
        double factor = gamma_factor(spec, t, sc, dt, db);
        if (total > 0.0) {
            const int c = count(rng);
            for (int e = 0; e < c; ++e) {
                const double v = uniform(rng);
                std::size_t j = 0;
                while (j + 1 < cumulative.size() && v >= cumulative[j]) ++j;
                factor += jump_weight(spec, t, j, sc);
            }
        }
        g *= factor;
        check_gamma(g, i, step + 1);
        w += db;
    }
    return s + terminal_value(spec, {i, w}) * g;
}

}  // namespace

std::string_view to_string(Estimator e) {
    switch (e) {
        case Estimator::closed_form: return "closed-form";
        case Estimator::nested_mc: return "nested-mc";
        case Estimator::regression: return "regression";
    }
    return "unknown";
}

Estimator estimator_from_string(std::string_view name) {
    if (name == "closed-form") return Estimator::closed_form;
    if (name == "nested-mc") return Estimator::nested_mc;
    if (name == "regression") return Estimator::regression;
    throw InvalidArgument("unknown estimator '" + std::string(name) + "'");
}

double BsdeSolution::mean(std::size_t k) const {
    double s = 0.0;
    for (std::size_t i = 0; i < n_scenarios; ++i) s += at(i, k);
    return s / static_cast<double>(n_scenarios);
}

std::vector<double> simulate_gamma(const LinearBsdeSpec& spec, const sde::NoiseBundle& noise) {
    if (spec.levy.jump_sizes != noise.levy.jump_sizes || spec.levy.rates != noise.levy.rates) {
        throw InvalidArgument("simulate_gamma: noise was drawn for another Levy measure");
    }
    const auto& grid = noise.grid;
    const std::size_t pts = grid.points();
    const double dt = grid.dt();
    std::vector<double> gamma(noise.n_particles * pts);
    for (std::size_t i = 0; i < noise.n_particles; ++i) {
        const auto events = noise.jumps(i);
        std::size_t e = 0;
        double g = 1.0;
        gamma[i * pts] = g;
        for (std::size_t k = 0; k < grid.steps; ++k) {
            const double t = grid.time(k);
            const Scenario sc{i, noise.level(i, k)};
            double factor = gamma_factor(spec, t, sc, dt, noise.increment(i, k));
            while (e < events.size() && events[e].step == k) {
                factor += jump_weight(spec, t, events[e].atom, sc);
                ++e;
            }
            g *= factor;
            check_gamma(g, i, k + 1);
            gamma[i * pts + k + 1] = g;
        }
    }
    return gamma;
}

BsdeSolution solve(const LinearBsdeSpec& spec, const TimeGrid& grid, std::size_t n_outer, const SolveConfig& config,
                   std::uint64_t seed) {
    const auto noise = sde::generate_noise(grid, spec.levy, n_outer, seed, config.threads);
    return solve_on_noise(spec, *noise, config);
}

BsdeSolution solve_on_noise(const LinearBsdeSpec& spec, const sde::NoiseBundle& noise, const SolveConfig& config,
                            std::span<const double> states) {
    const auto& grid = noise.grid;
    const std::size_t n = noise.n_particles;
    const std::size_t m = grid.steps;
    const std::size_t pts = grid.points();

    BsdeSolution sol;
    sol.grid = grid;
    sol.n_scenarios = n;
    sol.estimator = config.estimator;
    sol.pathwise = pathwise_representation(spec, noise, simulate_gamma(spec, noise));
    sol.P.assign(n * pts, 0.0);
    sol.std_error.assign(pts, 0.0);

    for (std::size_t i = 0; i < n; ++i) sol.P[i * pts + m] = sol.pathwise[i * pts + m];

    std::vector<double> column(n);
    auto pathwise_column = [&](std::size_t k) {
        for (std::size_t i = 0; i < n; ++i) column[i] = sol.pathwise[i * pts + k];
    };

    switch (config.estimator) {
        case Estimator::closed_form: {
            for (std::size_t k = 0; k < m; ++k) {
                pathwise_column(k);
                const auto st = sde::sample_stats(column);
                for (std::size_t i = 0; i < n; ++i) sol.P[i * pts + k] = st.mean;
                sol.std_error[k] = st.std_error;
            }
            break;
        }
        case Estimator::nested_mc: {
            if (config.n_inner < 2) throw InvalidArgument("nested-mc: n_inner must be >= 2");
            const double total = spec.levy.total_rate();
            std::vector<double> cumulative;
            for (double r : spec.levy.rates) {
                cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + r / total);
            }
            std::vector<double> inner_se(n * m, 0.0);
            parallel_for(n, config.threads, [&](std::size_t begin, std::size_t end) {
                std::vector<double> draws(config.n_inner);
                for (std::size_t i = begin; i < end; ++i) {
                    for (std::size_t k = 0; k < m; ++k) {
                        const std::size_t kd = grid.delayed_index(k, config.delay);
                        const double w = noise.level(i, kd);
                        for (std::size_t j = 0; j < config.n_inner; ++j) {
                            StreamRng rng(config.seed, {i, k, j});
                            draws[j] = inner_path(spec, grid, i, kd, k, w, rng, cumulative);
                        }
                        const auto st = sde::sample_stats(draws);
                        sol.P[i * pts + k] = st.mean;
                        inner_se[i * m + k] = st.std_error;
                    }
                }
            });
            for (std::size_t k = 0; k < m; ++k) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += inner_se[i * m + k];
                sol.std_error[k] = s / static_cast<double>(n);
            }
            break;
        }
        case Estimator::regression: {
            if (config.regressor == Regressor::state && states.size() != n * pts) {
                throw InvalidArgument("regression estimator: state paths required (N x (M+1))");
            }
            const std::size_t last = config.delay > 0.0 ? m : m - 1;
            std::vector<double> z(n);
            for (std::size_t k = 0; k <= last; ++k) {
                const std::size_t kd = grid.delayed_index(k, config.delay);
                for (std::size_t i = 0; i < n; ++i) {
                    z[i] = config.regressor == Regressor::state ? states[i * pts + kd] : noise.level(i, kd);
                }
                pathwise_column(k);
                const auto fit = regression::PolynomialFit::fit(z, column, config.basis);
                double ss = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double p = fit.predict(z[i]);
                    sol.P[i * pts + k] = p;
                    ss += (column[i] - p) * (column[i] - p);
                }
                sol.std_error[k] = std::sqrt(ss / static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
            }
            break;
        }
    }
    return sol;
}

std::vector<double> backward_euler(const LinearBsdeSpec& spec, const TimeGrid& grid) {
    const Scenario origin{0, 0.0};
    const double dt = grid.dt();
    std::vector<double> p(grid.points());
    p[grid.steps] = terminal_value(spec, origin);
    for (std::size_t k = grid.steps; k-- > 0;) {
        const double t = grid.time(k);
        const double denom = 1.0 - eval(spec.alpha, t, origin) * dt;
        if (!(denom > 0.0)) throw InvalidArgument("backward_euler: step too large for alpha");
        p[k] = (p[k + 1] + eval(spec.phi, t, origin) * dt) / denom;
    }
    return p;
}

void write_csv(std::ostream& out, const BsdeSolution& sol, std::uint64_t seed, std::size_t max_scenarios) {
    csv::Writer w(out, {"time", "scenario", "P", "std_error"});
    const std::size_t shown = std::min(max_scenarios, sol.n_scenarios);
    for (std::size_t k = 0; k < sol.grid.points(); ++k) {
        for (std::size_t i = 0; i < shown; ++i) w.row(sol.grid.time(k), i, sol.at(i, k), sol.std_error[k]);
    }
    w.metadata(seed);
}

}  // namespace mflab::bsde
