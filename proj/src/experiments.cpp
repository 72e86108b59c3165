#include "mflab/experiments.hpp"

#include "mflab/bsde.hpp"
#include "mflab/consumption.hpp"
#include "mflab/csv.hpp"
#include "mflab/game.hpp"
#include "mflab/lawproc.hpp"
#include "mflab/measures.hpp"
#include "mflab/rng.hpp"
#include "mflab/sde.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <iterator>
#include <ostream>
#include <random>
#include <sstream>

namespace mflab::experiments {

namespace {

constexpr double kMaxSeed = 9007199254740992.0;  // 2^53

KnobSpec knob(std::string section, std::string key, double fallback, double lo, double hi, bool integer,
              std::string doc) {
    return {std::move(section), std::move(key), fallback, lo, hi, integer, std::move(doc)};
}

KnobSpec particles(double fallback) { return knob("knobs", "N", fallback, 1, 1e7, true, "particles / scenarios"); }
KnobSpec steps(double fallback) { return knob("knobs", "M", fallback, 1, 1e5, true, "time steps"); }
KnobSpec seed(double fallback) { return knob("knobs", "seed", fallback, 0, kMaxSeed, true, "master seed"); }
KnobSpec threads() { return knob("knobs", "threads", 1, 1, 256, true, "worker threads"); }
KnobSpec quadrature() { return knob("knobs", "quadrature_n", 64, 2, 256, true, "Gauss-Hermite points"); }

std::vector<KnobSpec> consumption_knobs() {
    return {
        knob("model", "x0", 1.0, 1e-12, 1e6, false, "initial wealth"),
        knob("model", "horizon", 1.0, 1e-3, 100, false, "T"),
        knob("model", "sigma", 0.2, 0, 10, false, "volatility"),
        knob("model", "jump_size", 0.1, -0.999, 10, false, "relative jump size zeta"),
        knob("model", "jump_rate", 0.5, 0, 100, false, "jump intensity"),
        knob("model", "theta", 1.0, 1e-12, 1e6, false, "terminal weight (or its level a in a + b tanh B_T)"),
    };
}

std::vector<ExperimentInfo> build_catalogue() {
    std::vector<ExperimentInfo> c;
    c.push_back({"norms", "Dirac norms against sqrt(pi) and Gauss-Hermite vs trapezoid cross-check", {quadrature()}, {}});
    c.push_back({"lemma22",
                 "law distance bound on randomized paired samples and the analytic Dirac pair",
                 {particles(1000), knob("knobs", "instances", 100, 1, 1e5, true, "random instances"), seed(7),
                  quadrature()},
                 {}});
    c.push_back({"law-derivative",
                 "Brownian and Poisson law derivatives by finite differences and generator; increment scaling",
                 {quadrature(), knob("knobs", "h", 0.01, 1e-6, 0.25, false, "finite-difference step, Brownian law"),
                  knob("knobs", "h_poisson", 1e-3, 1e-6, 0.25, false, "finite-difference step, Poisson law"),
                  knob("knobs", "scan", 1, 0, 1, true, "also run the increment scaling scan"), particles(10000),
                  steps(100), seed(11), threads(), knob("model", "t", 1.0, 0.3, 10, false, "evaluation time"),
                  knob("model", "rate", 1.0, 1e-6, 100, false, "Poisson intensity")},
                 {}});
    c.push_back({"sde-moments",
                 "Euler means of geometric and compensated-jump dynamics",
                 {particles(100000), steps(200), seed(13), threads(),
                  knob("model", "x0", 1.0, 1e-12, 1e6, false, "initial state"),
                  knob("model", "horizon", 1.0, 1e-3, 100, false, "T"),
                  knob("model", "a1", 0.1, -10, 10, false, "drift rate, case 1"),
                  knob("model", "s1", 0.2, 0, 10, false, "volatility, case 1"),
                  knob("model", "a2", -0.05, -10, 10, false, "drift rate, case 2"),
                  knob("model", "s2", 0.3, 0, 10, false, "volatility, case 2"),
                  knob("model", "jump_size", 0.1, -0.999, 10, false, "relative jump size"),
                  knob("model", "jump_rate", 0.5, 0, 100, false, "jump intensity")},
                 {}});
    c.push_back({"bsde-oracles",
                 "linear BSDE estimators against closed forms, backward Euler and a Gauss-Hermite oracle",
                 {particles(4000), steps(100), seed(17), threads(),
                  knob("knobs", "n_inner", 100, 2, 1e5, true, "inner paths of the nested estimator"),
                  knob("knobs", "nested_N", 200, 1, 1e6, true, "outer scenarios of the nested estimator"),
                  knob("knobs", "nested_M", 20, 1, 1e4, true, "steps of the nested estimator"),
                  knob("knobs", "delay", 0, 0, 100, false, "information delay"),
                  knob("model", "horizon", 1.0, 1e-3, 100, false, "T"),
                  knob("model", "theta", 1.0, 1e-12, 1e6, false, "deterministic terminal value"),
                  knob("model", "a", 0.5, -10, 10, false, "linear coefficient of the exponential case"),
                  knob("model", "tanh_a", 1.0, -1e6, 1e6, false, "random terminal a + b tanh(B_T): a"),
                  knob("model", "tanh_b", 0.5, -1e6, 1e6, false, "random terminal a + b tanh(B_T): b")},
                 {}});
    {
        ExperimentInfo e{"gateaux",
                         "derivative process L2 errors and finite-difference vs adjoint slopes on the consumption game",
                         {particles(10000), steps(200), seed(19), threads(),
                          knob("model", "rho_scale", 1.2, 0.1, 10, false, "consumption rate as a multiple of rho_hat"),
                          knob("model", "mu_offset", 0.5, -1e6, 1e6, false, "mu(V) offset from mu_hat(V)")},
                         {0.1, 0.05, 0.025}};
        for (auto& k : consumption_knobs()) e.knobs.push_back(k);
        c.push_back(std::move(e));
    }
    c.push_back({"nash-sweep",
                 "perturbation sweep of the linear-quadratic game at and off its equilibrium",
                 {particles(2000), steps(100), seed(23), threads(),
                  knob("knobs", "delay", 0, 0, 100, false, "information delay of both players"),
                  knob("model", "q1", 2.0, 1e-6, 1e6, false, "measure player cost weight"),
                  knob("model", "q2", 1.0, 1e-6, 1e6, false, "control player cost weight"),
                  knob("model", "kappa", 1.5, -1e6, 1e6, false, "control player terminal weight"),
                  knob("model", "s", 0.3, 0, 10, false, "volatility"),
                  knob("model", "x0", 0.0, -1e6, 1e6, false, "initial state"),
                  knob("model", "horizon", 1.0, 1e-3, 100, false, "T"),
                  knob("model", "off_shift", 0.5, 1e-6, 1e6, false, "control shift of the off-equilibrium candidate")},
                 {-0.2, -0.1, -0.05, 0.05, 0.1, 0.2}});
    {
        ExperimentInfo e{"section5",
                         "consumption game against an adversarial measure: both mu_hat variants, product process, saddle",
                         {particles(10000), steps(200), seed(20240611), threads(),
                          knob("knobs", "delay", 0, 0, 100, false, "information delay of both players"),
                          knob("knobs", "product_tolerance", 0.05, 0, 1e6, false, "max |p0 X - (E[theta] + T - t)|"),
                          knob("model", "theta_tanh_b", 0.0, -1e6, 1e6, false, "random terminal theta + b tanh(B_T)"),
                          knob("model", "rho_inflation", 1.2, 0.1, 10, false, "consumption multiple for the break test"),
                          knob("model", "mu_offset", 0.5, -1e6, 1e6, false, "mu(V) offset for the break test")},
                         {-0.2, -0.1, -0.05, 0.05, 0.1, 0.2}};
        for (auto& k : consumption_knobs()) e.knobs.push_back(k);
        c.push_back(std::move(e));
    }
    return c;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

// Boost's tree does not keep positions, so keys are located in the text.
std::size_t line_of(std::string_view text, std::string_view section, std::string_view key) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::string current;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            current = trim(std::string_view(t).substr(1, t.size() - 2));
            if (key.empty() && current == section) return n;
            continue;
        }
        const auto eq = t.find('=');
        if (eq != std::string::npos && current == section && trim(std::string_view(t).substr(0, eq)) == key) return n;
    }
    return 0;
}

std::optional<double> parse_number(std::string_view s) {
    const auto t = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// ---- shared helpers for the runners ---------------------------------------

class Run {
public:
    explicit Run(const ExperimentConfig& cfg) : cfg_(cfg) {
        result_.experiment = cfg.experiment;
        std::filesystem::create_directories(cfg.output_dir);
    }

    std::ofstream open(const std::string& name) {
        const auto path = cfg_.output_dir / name;
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot write " + path.string());
        result_.files.push_back(path);
        return f;
    }

    void check(std::string name, double value, double threshold, bool pass) {
        result_.checks.push_back({std::move(name), value, threshold, pass});
    }

    const ExperimentConfig& cfg() const { return cfg_; }
    std::uint64_t seed() const { return cfg_.seed(); }
    RunResult take() { return std::move(result_); }

private:
    const ExperimentConfig& cfg_;
    RunResult result_;
};

unsigned thread_count(const ExperimentConfig& cfg) { return static_cast<unsigned>(cfg.count("threads")); }

sde::ControlPair zero_controls() {
    sde::ControlPair c;
    c.real = [](const sde::Observation&) { return 0.0; };
    c.measure = [](const sde::Observation&) { return sde::MeasureControlValue{}; };
    return c;
}

// dX = a X dt + s X dB + X int zeta N~(dt, dzeta).
sde::ControlledModel linear_model(double x0, double horizon, double a, double s, const lawproc::LevyMeasure& levy) {
    sde::ControlledModel m;
    m.x0 = x0;
    m.horizon = horizon;
    m.drift = [a](const sde::CoeffArgs& c) { return a * c.x; };
    m.diffusion = [s](const sde::CoeffArgs& c) { return s * c.x; };
    m.jump = [](const sde::CoeffArgs& c, double zeta) { return zeta * c.x; };
    m.levy = levy;
    m.lipschitz_const = std::abs(a) + s;
    for (double z : levy.jump_sizes) m.lipschitz_const += std::abs(z);
    return m;
}

consumption::ConsumptionModel consumption_model(const ExperimentConfig& cfg) {
    auto m = consumption::ConsumptionModel::canonical();
    m.x0 = cfg.knob("x0");
    m.horizon = cfg.knob("horizon");
    const double sigma = cfg.knob("sigma");
    m.sigma = [sigma](double) { return sigma; };
    const double rate = cfg.knob("jump_rate");
    m.levy = rate > 0.0 ? lawproc::LevyMeasure::single(cfg.knob("jump_size"), rate) : lawproc::LevyMeasure{};
    m.theta0 = cfg.knob("theta");
    if (cfg.knobs.contains("theta_tanh_b") && cfg.knob("theta_tanh_b") != 0.0) {
        m.use_tanh_terminal(cfg.knob("theta"), cfg.knob("theta_tanh_b"));
    }
    if (cfg.knobs.contains("delay")) {
        m.info1 = sde::InfoPattern::delayed(cfg.knob("delay"));
        m.info2 = m.info1;
    }
    m.validate();
    return m;
}

measures::FourierTable difference(const measures::FourierTable& a, const measures::FourierTable& b) {
    auto d = a;
    for (std::size_t i = 0; i < d.size(); ++i) d.values[i] -= b.values[i];
    return d;
}

// ---- norms ----------------------------------------------------------------

RunResult run_norms(const ExperimentConfig& cfg) {
    Run run(cfg);
    const auto gh = measures::gauss_hermite_rule(static_cast<int>(cfg.count("quadrature_n")));
    const auto trap = measures::truncated_trapezoid_rule();
    auto f = run.open("norms.csv");
    csv::Writer w(f, {"measure", "k", "rule", "value", "expected", "abs_error"});

    for (double x0 : {0.0, 1.0, -3.7}) {
        const double v = measures::norm_sq(measures::DiscreteMeasure::dirac(x0), 0, gh);
        const double err = std::abs(v - kSqrtPi);
        const auto name = "dirac(" + csv::format(x0) + ")";
        w.row(name, 0, "gauss-hermite", v, kSqrtPi, err);
        run.check(name + "_m0_norm_error", err, 1e-10, err <= 1e-10);
    }
    {
        const double v = measures::norm_sq(measures::DiscreteMeasure::dirac(0.0), 2, gh);
        const double err = std::abs(v - 0.5 * kSqrtPi);
        w.row("dirac(0)", 2, "gauss-hermite", v, 0.5 * kSqrtPi, err);
        run.check("dirac(0)_m2_norm_error", err, 1e-10, err <= 1e-10);
    }
    // 0.3 delta_{-1} + 0.7 delta_2: |mu^|^2 = 0.58 + 0.42 cos(3y).
    const measures::DiscreteMeasure mix({{-1.0, 0.3}, {2.0, 0.7}});
    const double exact = kSqrtPi * (0.58 + 0.42 * std::exp(-9.0 / 4.0));
    const double v_gh = measures::norm_sq(mix, 0, gh);
    const double v_tr = measures::norm_sq(mix, 0, trap);
    w.row("mixture", 0, "gauss-hermite", v_gh, exact, std::abs(v_gh - exact));
    w.row("mixture", 0, "trapezoid", v_tr, exact, std::abs(v_tr - exact));
    run.check("mixture_gauss_hermite_error", std::abs(v_gh - exact), 1e-10, std::abs(v_gh - exact) <= 1e-10);
    run.check("mixture_rule_cross_check", std::abs(v_gh - v_tr), 1e-8, std::abs(v_gh - v_tr) <= 1e-8);
    w.metadata(run.seed());
    return run.take();
}

// ---- lemma22 --------------------------------------------------------------

RunResult run_lemma22(const ExperimentConfig& cfg) {
    Run run(cfg);
    const auto quad = measures::gauss_hermite_rule(static_cast<int>(cfg.count("quadrature_n")));
    const std::size_t n = cfg.count("N");
    const std::size_t instances = cfg.count("instances");

    auto f = run.open("lemma22.csv");
    csv::Writer w(f, {"instance", "kind", "lhs", "rhs", "holds"});
    std::size_t violations = 0;
    double worst_excess = -std::numeric_limits<double>::infinity();
    std::vector<double> x1(n), x2(n);
    for (std::size_t inst = 0; inst < instances; ++inst) {
        StreamRng rng(cfg.seed(), {inst});
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double scale = 0.2 + 2.0 * unit(rng);
        const double shift = 2.0 * unit(rng) - 1.0;
        const double noise = 1.5 * unit(rng);
        const std::size_t kind = inst % 3;
        for (std::size_t i = 0; i < n; ++i) {
            x1[i] = scale * normal(rng);
            switch (kind) {
                case 0: x2[i] = x1[i] + noise * normal(rng) + shift; break;
                case 1: x2[i] = x1[i] * (1.0 + noise); break;
                default: x2[i] = x1[i] + shift * std::tanh(x1[i]) + noise * unit(rng); break;
            }
        }
        const auto r = measures::law_distance_bound_check(x1, x2, quad);
        if (!r.holds) ++violations;
        worst_excess = std::max(worst_excess, r.lhs - r.rhs);
        w.row(inst, kind, r.lhs, r.rhs, r.holds);
    }
    w.metadata(run.seed());
    run.check("paired_sample_bound_violations", static_cast<double>(violations), 0.0, violations == 0);
    run.check("paired_sample_max_lhs_minus_rhs", worst_excess, 1e-8, worst_excess <= 1e-8);

    auto g = run.open("lemma22_dirac.csv");
    csv::Writer wd(g, {"c", "lhs", "analytic", "rhs", "abs_error"});
    for (double c : {0.1, 1.0, 3.0}) {
        const auto d = measures::DiscreteMeasure::dirac(0.0) - measures::DiscreteMeasure::dirac(c);
        const double lhs = measures::norm_sq(d, 0, quad);
        const double analytic = 2.0 * kSqrtPi * (1.0 - std::exp(-c * c / 4.0));
        const double rhs = kSqrtPi * c * c;
        const double err = std::abs(lhs - analytic);
        wd.row(c, lhs, analytic, rhs, err);
        run.check("dirac_pair_c=" + csv::format(c) + "_error", err, 1e-8, err <= 1e-8 && lhs <= rhs + 1e-8);
    }
    wd.metadata(run.seed());
    return run.take();
}

// ---- law-derivative -------------------------------------------------------

measures::FourierTable averaged_generator(const lawproc::ItoLevyCoeffs& coeffs, const measures::DiscreteMeasure& law,
                                          double t, const measures::QuadratureRule& quad) {
    measures::FourierTable out;
    out.nodes = quad.nodes;
    out.values.assign(quad.size(), {0.0, 0.0});
    for (std::size_t j = 0; j < quad.size(); ++j) {
        for (const auto& a : law.atoms()) {
            out.values[j] += a.weight * lawproc::generator_on_test_fn(coeffs, t, a.location, quad.nodes[j], Scenario{});
        }
    }
    return out;
}

void law_derivative_rows(csv::Writer& w, const std::string& name, const measures::FourierTable& fd,
                         const measures::FourierTable& exact, const measures::FourierTable& gen) {
    for (std::size_t j = 0; j < fd.size(); ++j) {
        w.row(name, fd.nodes[j], fd.values[j].real(), fd.values[j].imag(), exact.values[j].real(),
              exact.values[j].imag(), gen.values[j].real(), gen.values[j].imag());
    }
}

void law_derivative_part(Run& run, const ExperimentConfig& cfg) {
    const auto quad = measures::gauss_hermite_rule(static_cast<int>(cfg.count("quadrature_n")));
    const double t = cfg.knob("t");
    const double rate = cfg.knob("rate");

    auto f = run.open("law_derivative.csv");
    csv::Writer w(f, {"case", "y", "fd_re", "fd_im", "exact_re", "exact_im", "generator_re", "generator_im"});

    // Brownian motion: M(t) = N(0, t), M^'(t)(y) = -y^2/2 exp(-t y^2 / 2).
    {
        const double h = cfg.knob("h");
        std::vector<measures::DiscreteMeasure> laws;
        for (double s : {t - h, t, t + h}) {
            const double sd = std::sqrt(s);
            const auto cdf = [sd](double x) { return 0.5 * std::erfc(-x / (sd * std::sqrt(2.0))); };
            laws.push_back(lawproc::binned_law(cdf, -12.0 * sd, 12.0 * sd, 24000));
        }
        const lawproc::MeasurePath path({t - h, t, t + h}, laws);
        const auto fd = lawproc::law_derivative_fd(path, 1, quad);
        auto exact = fd;
        for (std::size_t j = 0; j < quad.size(); ++j) {
            const double y = quad.nodes[j];
            exact.values[j] = -0.5 * y * y * std::exp(-0.5 * t * y * y);
        }
        lawproc::ItoLevyCoeffs bm;
        bm.alpha = [](double, const Scenario&) { return 0.0; };
        bm.beta = [](double, const Scenario&) { return 1.0; };
        bm.gamma = [](double, double, const Scenario&) { return 0.0; };
        const auto gen = averaged_generator(bm, laws[1], t, quad);
        law_derivative_rows(w, "brownian", fd, exact, gen);
        const double e_fd = std::sqrt(measures::table_norm_sq(difference(fd, exact), 0, quad));
        const double e_gen = std::sqrt(measures::table_norm_sq(difference(gen, exact), 0, quad));
        run.check("brownian_fd_m0_error", e_fd, 1e-3, e_fd <= 1e-3);
        run.check("brownian_generator_m0_error", e_gen, 1e-3, e_gen <= 1e-3);
    }

    // Poisson counts: M^(t)(y) = exp(rate t (e^{iy} - 1)).
    {
        const double h = cfg.knob("h_poisson");
        std::vector<measures::DiscreteMeasure> laws;
        for (double s : {t - h, t, t + h}) {
            const double mean = rate * s;
            const auto last = static_cast<std::size_t>(mean + 20.0 * std::sqrt(mean) + 40.0);
            std::vector<measures::Atom> atoms;
            for (std::size_t k = 0; k <= last; ++k) {
                const double kk = static_cast<double>(k);
                atoms.push_back({kk, std::exp(-mean + kk * std::log(mean) - std::lgamma(kk + 1.0))});
            }
            laws.emplace_back(std::move(atoms));
        }
        const lawproc::MeasurePath path({t - h, t, t + h}, laws);
        const auto fd = lawproc::law_derivative_fd(path, 1, quad);
        auto exact = fd;
        for (std::size_t j = 0; j < quad.size(); ++j) {
            const std::complex<double> e = std::polar(1.0, quad.nodes[j]) - 1.0;
            exact.values[j] = rate * e * std::exp(rate * t * e);
        }
        lawproc::ItoLevyCoeffs pp;
        pp.alpha = [rate](double, const Scenario&) { return rate; };
        pp.beta = [](double, const Scenario&) { return 0.0; };
        pp.gamma = [](double, double zeta, const Scenario&) { return zeta; };
        pp.levy = lawproc::LevyMeasure::single(1.0, rate);
        const auto gen = averaged_generator(pp, laws[1], t, quad);
        law_derivative_rows(w, "poisson", fd, exact, gen);
        const double e_fd = std::sqrt(measures::table_norm_sq(difference(fd, exact), 0, quad));
        const double e_gen = std::sqrt(measures::table_norm_sq(difference(gen, exact), 0, quad));
        run.check("poisson_fd_m0_error", e_fd, 1e-4, e_fd <= 1e-4);
        run.check("poisson_generator_m0_error", e_gen, 1e-4, e_gen <= 1e-4);
    }
    w.metadata(run.seed());
}

void scaling_part(Run& run, const ExperimentConfig& cfg) {
    const auto quad = measures::gauss_hermite_rule(static_cast<int>(cfg.count("quadrature_n")));
    const std::size_t m = cfg.count("M");
    const TimeGrid grid{1.0, m};

    auto f = run.open("scaling.csv");
    csv::Writer w(f, {"path", "h", "max_sq_increment"});

    // Deterministic drift x(t) = t: M(t) = delta_t.
    std::vector<double> times;
    std::vector<measures::DiscreteMeasure> diracs;
    for (std::size_t k = 0; k <= m; ++k) {
        times.push_back(grid.time(k));
        diracs.push_back(measures::DiscreteMeasure::dirac(grid.time(k)));
    }
    const auto dirac_rows = lawproc::abs_continuity_scan(lawproc::MeasurePath(times, diracs), quad);
    for (const auto& r : dirac_rows) w.row("dirac-drift", r.h, r.max_sq_increment);
    const double dirac_slope = lawproc::loglog_slope(dirac_rows);
    run.check("dirac_drift_loglog_slope", dirac_slope, 1.8, dirac_slope >= 1.8);

    auto model = linear_model(0.0, 1.0, 0.0, 0.0, {});
    model.diffusion = [](const sde::CoeffArgs&) { return 1.0; };
    sde::SimulationConfig sc;
    sc.n_particles = cfg.count("N");
    sc.n_steps = m;
    sc.seed = cfg.seed();
    sc.threads = thread_count(cfg);
    const auto bundle = sde::simulate(model, zero_controls(), sc);
    const auto bm_rows = lawproc::abs_continuity_scan(bundle.law_path(), quad);
    for (const auto& r : bm_rows) w.row("brownian-particles", r.h, r.max_sq_increment);
    // Small h is dominated by Monte Carlo noise, large h by curvature.
    const double bm_slope = lawproc::loglog_slope(bm_rows, 0.01, 0.16);
    run.check("brownian_particles_loglog_slope_min", bm_slope, 1.6, bm_slope >= 1.6);
    run.check("brownian_particles_loglog_slope_max", bm_slope, 2.2, bm_slope <= 2.2);
    w.metadata(run.seed());
}

RunResult run_law_derivative(const ExperimentConfig& cfg) {
    Run run(cfg);
    law_derivative_part(run, cfg);
    if (cfg.count("scan") == 1) scaling_part(run, cfg);
    return run.take();
}

// ---- sde-moments ----------------------------------------------------------

RunResult run_sde_moments(const ExperimentConfig& cfg) {
    Run run(cfg);
    const double x0 = cfg.knob("x0");
    const double horizon = cfg.knob("horizon");
    const double zeta = cfg.knob("jump_size");
    const double rate = cfg.knob("jump_rate");

    struct Case {
        std::string name;
        double a, s, jump, rate;
    };
    const std::vector<Case> cases = {
        {"geometric-1", cfg.knob("a1"), cfg.knob("s1"), 0.0, 0.0},
        {"geometric-2", cfg.knob("a2"), cfg.knob("s2"), 0.0, 0.0},
        {"compensated-jump", 0.0, cfg.knob("s1"), zeta, rate},
    };

    auto f = run.open("sde_moments.csv");
    csv::Writer w(f, {"case", "a", "s", "jump_size", "jump_rate", "mean", "std_error", "expected", "z_score"});
    for (const auto& c : cases) {
        const auto levy = c.rate > 0.0 ? lawproc::LevyMeasure::single(c.jump, c.rate) : lawproc::LevyMeasure{};
        const auto model = linear_model(x0, horizon, c.a, c.s, levy);
        sde::SimulationConfig sc;
        sc.n_particles = cfg.count("N");
        sc.n_steps = cfg.count("M");
        sc.seed = cfg.seed();
        sc.threads = thread_count(cfg);
        const auto bundle = sde::simulate(model, zero_controls(), sc);
        const auto st = sde::sample_stats(bundle.cross_section(sc.n_steps));
        const double expected = x0 * std::exp(c.a * horizon);
        const double z = st.std_error > 0.0 ? (st.mean - expected) / st.std_error : 0.0;
        w.row(c.name, c.a, c.s, c.jump, c.rate, st.mean, st.std_error, expected, z);
        const double gap = std::abs(st.mean - expected);
        run.check(c.name + "_mean_within_3se", gap, 3.0 * st.std_error,
                  game::within_se(st.mean, expected, st.std_error, 3.0));
    }
    w.metadata(run.seed());
    return run.take();
}

// ---- bsde-oracles ---------------------------------------------------------

bsde::LinearBsdeSpec constant_spec(double phi, double alpha, double terminal) {
    bsde::LinearBsdeSpec s;
    s.phi = [phi](double, const Scenario&) { return phi; };
    s.alpha = [alpha](double, const Scenario&) { return alpha; };
    s.beta = [](double, const Scenario&) { return 0.0; };
    s.jump_phi = [](double, double, const Scenario&) { return 0.0; };
    s.terminal = [terminal](const Scenario&) { return terminal; };
    return s;
}

RunResult run_bsde_oracles(const ExperimentConfig& cfg) {
    Run run(cfg);
    const double horizon = cfg.knob("horizon");
    const double theta = cfg.knob("theta");
    const double a = cfg.knob("a");
    const TimeGrid grid{horizon, cfg.count("M")};
    const double dt = grid.dt();

    auto f = run.open("bsde_oracles.csv");
    csv::Writer w(f, {"case", "time", "estimate", "reference", "abs_error"});

    bsde::SolveConfig closed;
    closed.threads = thread_count(cfg);

    // P(t) = theta + T - t.
    {
        const auto sol = bsde::solve(constant_spec(1.0, 0.0, theta), grid, 8, closed, cfg.seed());
        double worst = 0.0;
        for (std::size_t k = 0; k < grid.points(); ++k) {
            const double ref = theta + horizon - grid.time(k);
            for (std::size_t i = 0; i < sol.n_scenarios; ++i) worst = std::max(worst, std::abs(sol.at(i, k) - ref));
            w.row("constant-driver", grid.time(k), sol.mean(k), ref, std::abs(sol.mean(k) - ref));
        }
        run.check("constant_driver_max_deviation", worst, 1e-12, worst < 1e-12);
    }
    // P(t) = theta e^{a (T - t)}: Gamma representation against implicit Euler.
    {
        const auto spec = constant_spec(0.0, a, theta);
        const auto sol = bsde::solve(spec, grid, 8, closed, cfg.seed());
        const auto be = bsde::backward_euler(spec, grid);
        double worst = 0.0;
        for (std::size_t k = 0; k < grid.points(); ++k) {
            const double t = grid.time(k);
            worst = std::max(worst, std::abs(sol.mean(k) - be[k]));
            w.row("exponential-gamma", t, sol.mean(k), be[k], std::abs(sol.mean(k) - be[k]));
            const double exact = theta * std::exp(a * (horizon - t));
            w.row("exponential-exact", t, sol.mean(k), exact, std::abs(sol.mean(k) - exact));
        }
        const double tol = 2.0 * dt * std::abs(a) * theta;
        run.check("exponential_gamma_vs_backward_euler", worst, tol, worst <= tol);
    }
    // theta = ta + tb tanh(B_T), driver 1: P(t) = E[theta | B_t] + T - t.
    {
        const double ta = cfg.knob("tanh_a");
        const double tb = cfg.knob("tanh_b");
        auto spec = constant_spec(1.0, 0.0, 0.0);
        spec.terminal = [ta, tb](const Scenario& s) { return ta + tb * std::tanh(s.w); };
        const auto gh = measures::gauss_hermite_rule(64);
        // E[theta | B(s) = w0] + T - t.
        const auto oracle = [&](double t, double s, double w0) {
            const double spread = std::sqrt(2.0 * (horizon - s));
            double acc = 0.0;
            for (std::size_t j = 0; j < gh.size(); ++j) acc += gh.weights[j] * std::tanh(w0 + spread * gh.nodes[j]);
            return ta + tb * acc / kSqrtPi + horizon - t;
        };

        bsde::SolveConfig reg;
        reg.estimator = bsde::Estimator::regression;
        reg.delay = cfg.knob("delay");
        reg.threads = thread_count(cfg);
        const auto noise = sde::generate_noise(grid, {}, cfg.count("N"), cfg.seed(), reg.threads);
        const auto sol = bsde::solve_on_noise(spec, *noise, reg);
        const double ref0 = ta + horizon;
        w.row("random-terminal-regression", 0.0, sol.mean(0), ref0, std::abs(sol.mean(0) - ref0));
        run.check("random_terminal_p0_mean_within_3se", std::abs(sol.mean(0) - ref0), 3.0 * sol.std_error[0],
                  game::within_se(sol.mean(0), ref0, sol.std_error[0], 3.0));

        // With a delay the regression conditions on B at (t - delay)^+.
        const std::size_t mid = grid.steps / 2;
        const std::size_t kd = grid.delayed_index(mid, reg.delay);
        double ss = 0.0;
        for (std::size_t i = 0; i < sol.n_scenarios; ++i) {
            const double ref = oracle(grid.time(mid), grid.time(kd), noise->level(i, kd));
            ss += (sol.at(i, mid) - ref) * (sol.at(i, mid) - ref);
        }
        const double rms = std::sqrt(ss / static_cast<double>(sol.n_scenarios));
        w.row("random-terminal-regression-rms", grid.time(mid), rms, 0.0, rms);
        run.check("random_terminal_regression_rms_at_mid", rms, 0.05, rms <= 0.05);
        {
            auto g = run.open("bsde_regression_paths.csv");
            bsde::write_csv(g, sol, run.seed());
        }

        bsde::SolveConfig nested;
        nested.estimator = bsde::Estimator::nested_mc;
        nested.n_inner = cfg.count("n_inner");
        nested.seed = cfg.seed() + 1;
        nested.delay = reg.delay;
        nested.threads = reg.threads;
        const TimeGrid coarse{horizon, cfg.count("nested_M")};
        const auto nsol = bsde::solve(spec, coarse, cfg.count("nested_N"), nested, cfg.seed());
        const std::size_t nmid = coarse.steps / 2;
        const std::size_t nkd = coarse.delayed_index(nmid, nested.delay);
        // Inner paths restart from B(t_k) of each outer scenario; rebuild it.
        const auto outer = sde::generate_noise(coarse, {}, cfg.count("nested_N"), cfg.seed(), 1);
        std::vector<double> err(nsol.n_scenarios);
        for (std::size_t i = 0; i < nsol.n_scenarios; ++i) {
            err[i] = nsol.at(i, nmid) - oracle(coarse.time(nmid), coarse.time(nkd), outer->level(i, nkd));
        }
        const auto st = sde::sample_stats(err);
        w.row("random-terminal-nested-bias", coarse.time(nmid), st.mean, 0.0, std::abs(st.mean));
        run.check("random_terminal_nested_bias_within_3se", std::abs(st.mean), 3.0 * st.std_error,
                  game::within_se(st.mean, 0.0, st.std_error, 3.0));
    }
    w.metadata(run.seed());
    return run.take();
}

// ---- gateaux --------------------------------------------------------------

RunResult run_gateaux(const ExperimentConfig& cfg) {
    Run run(cfg);
    const auto model = consumption_model(cfg);
    const auto g = consumption::make_game(model);
    const auto controls = consumption::closed_form_controls(model, consumption::Variant::first_order_derived);
    const auto candidate = consumption::candidate_controls(model, controls, cfg.knob("rho_scale"), cfg.knob("mu_offset"));
    const unsigned threads = thread_count(cfg);
    const TimeGrid grid{model.horizon, cfg.count("M")};
    const auto noise = sde::generate_noise(grid, model.levy, cfg.count("N"), cfg.seed(), threads);
    const auto bundle = sde::simulate_on_noise(g.model, candidate, noise, sde::MuMode::exogenous, threads);

    bsde::SolveConfig sc;
    sc.estimator = bsde::Estimator::regression;
    sc.regressor = bsde::Regressor::state;
    sc.basis = regression::BasisConfig{-1, 3, 1e-10, 1e12};
    sc.threads = threads;

    auto lambdas = cfg.lambdas;
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());

    auto f = run.open("gateaux.csv");
    csv::Writer w(f, {"direction", "lambda", "l2_error", "fd_slope", "fd_std_err"});
    auto s = run.open("gateaux_summary.csv");
    csv::Writer ws(s, {"direction", "adjoint_slope", "adjoint_std_err", "tangent_slope", "tangent_std_err",
                       "difference", "difference_std_err", "agree"});

    struct Dir {
        std::string name;
        game::Player player;
        sde::StepDirection direction;
    };
    const std::vector<Dir> dirs = {
        {"control", game::Player::control, sde::StepDirection::on_control(1.0)},
        {"measure", game::Player::measure, sde::StepDirection::on_measure(measures::DiscreteMeasure::dirac(1.0))},
    };
    for (const auto& d : dirs) {
        const auto adjoint = game::adjoint_p0_solve(g, bundle, d.player, sc);
        const auto z = sde::simulate_derivative_process(bundle, g.model, d.direction);
        const auto l2 = sde::derivative_l2_errors(bundle, g.model, d.direction, lambdas, z, threads);
        const auto gc = game::gateaux_check(g, bundle, adjoint, d.direction, lambdas, threads);
        bool monotone = true;
        for (std::size_t j = 0; j < lambdas.size(); ++j) {
            w.row(d.name, lambdas[j], l2[j], gc.fd_slopes[j].value, gc.fd_slopes[j].std_error);
            if (j > 0 && !(l2[j] < l2[j - 1])) monotone = false;
        }
        ws.row(d.name, gc.adjoint_slope.value, gc.adjoint_slope.std_error, gc.tangent_slope.value,
               gc.tangent_slope.std_error, gc.difference, gc.difference_se, gc.agree);
        run.check(d.name + "_l2_error_decreasing", l2.back() / l2.front(), 1.0, monotone);
        const double fd = gc.fd_slopes.back().value;
        run.check(d.name + "_fd_vs_adjoint_slope", std::abs(gc.difference),
                  std::max(3.0 * gc.difference_se, 0.05 * std::abs(fd)), gc.agree);
    }
    w.metadata(run.seed());
    ws.metadata(run.seed());
    return run.take();
}

// ---- nash-sweep -----------------------------------------------------------

RunResult run_nash_sweep(const ExperimentConfig& cfg) {
    Run run(cfg);
    game::LqParams p;
    p.q1 = cfg.knob("q1");
    p.q2 = cfg.knob("q2");
    p.kappa = cfg.knob("kappa");
    p.s = cfg.knob("s");
    p.x0 = cfg.knob("x0");
    p.horizon = cfg.knob("horizon");
    auto g = game::lq_game(p);
    auto candidate = game::lq_equilibrium(p);
    const auto info = sde::InfoPattern::delayed(cfg.knob("delay"));
    g.info1 = g.info2 = info;
    candidate.measure_info = candidate.real_info = info;

    const unsigned threads = thread_count(cfg);
    const TimeGrid grid{p.horizon, cfg.count("M")};
    const auto noise = sde::generate_noise(grid, {}, cfg.count("N"), cfg.seed(), threads);

    game::PerturbationPlan plan;
    plan.lambdas = cfg.lambdas;
    const double half = grid.time(grid.steps / 2);
    for (double t0 : {0.0, half}) {
        plan.directions.push_back(
            {game::Player::measure, sde::StepDirection::on_measure(measures::DiscreteMeasure::dirac(1.0), t0)});
        plan.directions.push_back({game::Player::control, sde::StepDirection::on_control(1.0, t0)});
    }

    const auto sweep = game::nash_perturbation_sweep(g, candidate, plan, noise, sde::MuMode::exogenous, threads);
    {
        auto f = run.open("nash_sweep.csv");
        game::write_sweep_csv(f, sweep, run.seed());
    }
    auto f = run.open("nash_exact.csv");
    csv::Writer w(f, {"direction_id", "player", "lambda", "delta_J", "exact", "abs_error"});
    double worst = 0.0;
    for (const auto& r : sweep.rows) {
        const auto& d = plan.directions.at(r.direction_id).direction;
        const double q = r.player == game::Player::measure ? p.q1 : p.q2;
        const double exact = -0.5 * q * r.lambda * r.lambda * (p.horizon - d.t0);
        worst = std::max(worst, std::abs(r.delta - exact));
        w.row(r.direction_id, game::to_string(r.player), r.lambda, r.delta, exact, std::abs(r.delta - exact));
    }
    w.metadata(run.seed());
    run.check("equilibrium_sweep_all_rows_ok", static_cast<double>(sweep.verdict), 1.0, sweep.verdict);
    run.check("equilibrium_delta_matches_quadratic_loss", worst, 1e-8, worst <= 1e-8);

    const auto off = sde::perturbed(candidate, sde::StepDirection::on_control(cfg.knob("off_shift")), 1.0);
    const auto off_sweep = game::nash_perturbation_sweep(g, off, plan, noise, sde::MuMode::exogenous, threads);
    {
        auto o = run.open("nash_sweep_off_equilibrium.csv");
        game::write_sweep_csv(o, off_sweep, run.seed());
    }
    const auto failing = std::count_if(off_sweep.rows.begin(), off_sweep.rows.end(), [](const auto& r) { return !r.ok; });
    run.check("off_equilibrium_failing_rows", static_cast<double>(failing), 1.0, failing >= 1);
    return run.take();
}

// ---- section5 -------------------------------------------------------------

RunResult run_section5(const ExperimentConfig& cfg) {
    Run run(cfg);
    const auto model = consumption_model(cfg);
    consumption::VerifyOptions opt;
    opt.n_particles = cfg.count("N");
    opt.n_steps = cfg.count("M");
    opt.seed = cfg.seed();
    opt.lambdas = cfg.lambdas;
    opt.product_tolerance = cfg.knob("product_tolerance");
    opt.rho_inflation = cfg.knob("rho_inflation");
    opt.mu_offset = cfg.knob("mu_offset");
    opt.threads = thread_count(cfg);
    const auto rep = consumption::verify_section5(model, opt);

    {
        auto f = run.open("report.csv");
        consumption::write_report_csv(f, rep, run.seed());
    }
    {
        auto f = run.open("controls.csv");
        consumption::write_controls_csv(f, rep, run.seed());
    }
    const std::pair<const char*, const game::SweepResult*> sweeps[] = {
        {"saddle_sweep.csv", &rep.saddle}, {"inflated_rho_sweep.csv", &rep.inflated}, {"mu_offset_sweep.csv", &rep.offset}};
    for (const auto& [name, sweep] : sweeps) {
        auto f = run.open(name);
        game::write_sweep_csv(f, *sweep, run.seed());
    }
    for (const auto& v : rep.variants) {
        const auto tag = consumption::to_string(v.variant);
        {
            auto f = run.open("residual_u_" + tag + ".csv");
            game::write_residual_csv(f, v.residuals.u, run.seed());
        }
        auto f = run.open("residual_mu_" + tag + ".csv");
        game::write_residual_csv(f, v.residuals.mu.at(0), run.seed());
    }
    for (const auto& r : rep.rows) run.check(r.criterion, r.value, r.threshold, r.pass);
    return run.take();
}

}  // namespace

ConfigError::ConfigError(const std::string& source, std::size_t line, const std::string& what)
    : Error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}

const std::vector<ExperimentInfo>& catalogue() {
    static const std::vector<ExperimentInfo> c = build_catalogue();
    return c;
}

const ExperimentInfo& info(std::string_view name) {
    for (const auto& e : catalogue()) {
        if (e.name == name) return e;
    }
    throw ConfigError("<catalogue>", 0, "unknown experiment '" + std::string(name) + "'");
}

double ExperimentConfig::knob(const std::string& key) const {
    const auto it = knobs.find(key);
    if (it == knobs.end()) throw InvalidArgument("experiment '" + experiment + "' has no knob '" + key + "'");
    return it->second;
}

std::size_t ExperimentConfig::count(const std::string& key) const { return static_cast<std::size_t>(knob(key)); }

std::uint64_t ExperimentConfig::seed() const {
    return knobs.contains("seed") ? static_cast<std::uint64_t>(knobs.at("seed")) : 0;
}

ExperimentConfig default_config(std::string_view experiment) {
    const auto& e = info(experiment);
    ExperimentConfig c;
    c.experiment = e.name;
    for (const auto& k : e.knobs) c.knobs[k.key] = k.fallback;
    c.lambdas = e.lambdas;
    return c;
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    {
        std::istringstream in{std::string(text)};
        try {
            pt::ini_parser::read_ini(in, tree);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError(source, e.line(), e.message());
        }
    }

    for (const auto& [name, node] : tree) {
        if (node.empty() && !node.data().empty()) {
            throw ConfigError(source, line_of(text, "", name), "key '" + name + "' outside a section");
        }
        if (name != "experiment" && name != "knobs" && name != "model") {
            throw ConfigError(source, line_of(text, name, ""), "unknown section [" + name + "]");
        }
    }

    const auto exp_node = tree.get_child_optional("experiment");
    if (!exp_node || !exp_node->get_child_optional("name")) {
        throw ConfigError(source, 0, "missing [experiment] name");
    }
    ExperimentConfig cfg;
    for (const auto& [key, node] : *exp_node) {
        if (key == "name") {
            const auto name = trim(node.data());
            const auto& cat = catalogue();
            if (std::none_of(cat.begin(), cat.end(), [&](const auto& e) { return e.name == name; })) {
                throw ConfigError(source, line_of(text, "experiment", key), "unknown experiment '" + name + "'");
            }
            const auto out = cfg.output_dir;
            cfg = default_config(name);
            cfg.output_dir = out;
        } else if (key != "output_dir") {
            throw ConfigError(source, line_of(text, "experiment", key), "unknown key '" + key + "' in [experiment]");
        }
    }
    if (const auto out = exp_node->get_optional<std::string>("output_dir")) {
        const auto t = trim(*out);
        if (t.empty()) throw ConfigError(source, line_of(text, "experiment", "output_dir"), "empty output_dir");
        cfg.output_dir = t;
    }

    const auto& spec = info(cfg.experiment);
    for (const std::string section : {"knobs", "model"}) {
        const auto node = tree.get_child_optional(section);
        if (!node) continue;
        for (const auto& [key, value] : *node) {
            const auto line = line_of(text, section, key);
            if (section == "knobs" && key == "lambdas" && !spec.lambdas.empty()) {
                std::vector<double> list;
                std::istringstream items(value.data());
                for (std::string item; std::getline(items, item, ',');) {
                    const auto v = parse_number(item);
                    if (!v) throw ConfigError(source, line, "lambdas: '" + trim(item) + "' is not a number");
                    if (std::abs(*v) > 10.0) throw ConfigError(source, line, "lambdas must lie in [-10, 10]");
                    if (cfg.experiment == "gateaux" && !(*v > 0.0)) {
                        throw ConfigError(source, line, "gateaux lambdas must be positive");
                    }
                    list.push_back(*v);
                }
                if (list.empty()) throw ConfigError(source, line, "lambdas: empty list");
                cfg.lambdas = std::move(list);
                continue;
            }
            const auto it = std::find_if(spec.knobs.begin(), spec.knobs.end(),
                                         [&](const KnobSpec& k) { return k.section == section && k.key == key; });
            if (it == spec.knobs.end()) {
                throw ConfigError(source, line,
                                  "unknown key '" + key + "' in [" + section + "] for experiment " + cfg.experiment);
            }
            const auto v = parse_number(value.data());
            if (!v) throw ConfigError(source, line, key + ": '" + trim(value.data()) + "' is not a number");
            if (it->integer && *v != std::floor(*v)) throw ConfigError(source, line, key + " must be an integer");
            if (*v < it->lo || *v > it->hi) {
                throw ConfigError(source, line,
                                  key + " = " + csv::format(*v) + " outside [" + csv::format(it->lo) + ", " +
                                      csv::format(it->hi) + "]");
            }
            cfg.knobs[key] = *v;
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), 0, "cannot read config file");
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_config(text, path.string());
}

bool RunResult::pass() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* RunResult::find(std::string_view name) const {
    const auto it = std::find_if(checks.begin(), checks.end(), [&](const Check& c) { return c.name == name; });
    return it == checks.end() ? nullptr : &*it;
}

RunResult run(const ExperimentConfig& config) {
    const std::string& e = config.experiment;
    if (e == "norms") return run_norms(config);
    if (e == "lemma22") return run_lemma22(config);
    if (e == "law-derivative") return run_law_derivative(config);
    if (e == "sde-moments") return run_sde_moments(config);
    if (e == "bsde-oracles") return run_bsde_oracles(config);
    if (e == "gateaux") return run_gateaux(config);
    if (e == "nash-sweep") return run_nash_sweep(config);
    if (e == "section5") return run_section5(config);
    throw ConfigError("<config>", 0, "unknown experiment '" + e + "'");
}

void print_summary(std::ostream& out, const RunResult& result) {
    std::size_t passed = 0;
    for (const auto& c : result.checks) {
        out << (c.pass ? "PASS " : "FAIL ") << result.experiment << '.' << c.name << " value=" << csv::format(c.value)
            << " threshold=" << csv::format(c.threshold) << '\n';
        if (c.pass) ++passed;
    }
    out << result.experiment << ": " << passed << '/' << result.checks.size() << " checks passed, "
        << result.files.size() << " files written\n";
}

void print_catalogue(std::ostream& out) {
    for (const auto& e : catalogue()) {
        out << e.name << " - " << e.description << " [";
        bool first = true;
        for (const auto& k : e.knobs) {
            out << (first ? "" : ", ") << k.key << '=' << csv::format(k.fallback);
            first = false;
        }
        if (!e.lambdas.empty()) {
            out << (first ? "" : ", ") << "lambdas=";
            for (std::size_t j = 0; j < e.lambdas.size(); ++j) out << (j ? ";" : "") << csv::format(e.lambdas[j]);
        }
        out << "]\n";
    }
}

}  // namespace mflab::experiments
