#pragma once

#include "mflab/core.hpp"
#include "mflab/lawproc.hpp"
#include "mflab/measures.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace mflab::sde {

using lawproc::LevyMeasure;
using measures::DiscreteMeasure;
using measures::MeasureFunctional;

// Coefficients never see a measure directly. They read it through the
// model's finite list of functionals, so `mu` holds one value per functional.
inline constexpr std::size_t kMaxFunctionals = 8;

struct CoeffArgs {
    double t = 0.0;
    double x = 0.0;
    std::span<const double> mu;
    double u = 0.0;
    Scenario scenario;
};

using CoeffFn = std::function<double(const CoeffArgs&)>;
using JumpCoeffFn = std::function<double(const CoeffArgs&, double zeta)>;
using FunctionalPartialFn = std::function<double(const CoeffArgs&, std::size_t functional)>;
using JumpFunctionalPartialFn = std::function<double(const CoeffArgs&, double zeta, std::size_t functional)>;

/// Optional analytic partials of b or sigma. Empty members fall back to
/// central differences.
struct CoeffPartials {
    CoeffFn dx;
    CoeffFn du;
    FunctionalPartialFn dmu;
};

struct JumpPartials {
    JumpCoeffFn dx;
    JumpCoeffFn du;
    JumpFunctionalPartialFn dmu;
};

/// dX = b dt + sigma dB + int gamma N~(dt, dzeta), X(0) = x0.
struct ControlledModel {
    CoeffFn drift;
    CoeffFn diffusion;
    JumpCoeffFn jump;
    LevyMeasure levy;
    std::vector<MeasureFunctional> functionals;
    double x0 = 0.0;
    double horizon = 1.0;
    double lipschitz_const = 1.0;

    CoeffPartials drift_partials;
    CoeffPartials diffusion_partials;
    JumpPartials jump_partials;

    /// Functional values of a measure, in declaration order.
    std::vector<double> features(const DiscreteMeasure& m) const;
};

enum class PartialsMode { analytic_or_fd, analytic_only };

inline constexpr double kFdStep = 1e-5;

/// Partial derivatives of the model coefficients. Analytic when supplied,
/// central differences with step kFdStep otherwise; in analytic_only mode a
/// missing partial throws InvalidArgument.
class CoeffDerivatives {
public:
    CoeffDerivatives(const ControlledModel& model, PartialsMode mode);

    double drift_dx(const CoeffArgs& a) const;
    double drift_du(const CoeffArgs& a) const;
    double drift_dmu(const CoeffArgs& a, std::size_t f) const;
    double diffusion_dx(const CoeffArgs& a) const;
    double diffusion_du(const CoeffArgs& a) const;
    double diffusion_dmu(const CoeffArgs& a, std::size_t f) const;
    double jump_dx(const CoeffArgs& a, double zeta) const;
    double jump_du(const CoeffArgs& a, double zeta) const;
    double jump_dmu(const CoeffArgs& a, double zeta, std::size_t f) const;

private:
    const ControlledModel& model_;
    PartialsMode mode_;
};

// Performance functionals. `m` carries the functionals of the state law,
// `mu` those of the measure control actually fed to the coefficients.
struct PerfArgs {
    double t = 0.0;
    double x = 0.0;
    std::span<const double> m;
    std::span<const double> mu;
    double u = 0.0;
    Scenario scenario;
};

struct TerminalArgs {
    double x = 0.0;
    std::span<const double> m;
    Scenario scenario;
};

/// J = E[ int_0^T l dt + g(X_T, M_T) ]. The optional partials feed adjoint
/// drivers and Hamiltonian derivatives; central differences otherwise.
struct PerformanceSpec {
    std::function<double(const PerfArgs&)> running;
    std::function<double(const TerminalArgs&)> terminal;

    std::function<double(const PerfArgs&)> running_dx;
    std::function<double(const PerfArgs&)> running_du;
    std::function<double(const PerfArgs&, std::size_t)> running_dmu;
    std::function<double(const TerminalArgs&)> terminal_dx;

    double eval_running(const PerfArgs& a) const { return running ? running(a) : 0.0; }
    double eval_terminal(const TerminalArgs& a) const { return terminal ? terminal(a) : 0.0; }
    double dx(const PerfArgs& a) const;
    double du(const PerfArgs& a) const;
    double dmu(const PerfArgs& a, std::size_t f) const;
    double terminal_derivative(const TerminalArgs& a) const;
};

/// The same functional with every term negated (the second player of a
/// zero-sum game).
PerformanceSpec negated(const PerformanceSpec& spec);

// ---- controls -------------------------------------------------------------

/// Full information, or observation of state and law at (t - delay)^+.
struct InfoPattern {
    double delay = 0.0;

    static InfoPattern full() { return {}; }
    static InfoPattern delayed(double d);
    bool is_full() const noexcept { return delay == 0.0; }
};

/// What a control sees at grid time t.
struct Observation {
    double t = 0.0;
    double observed_t = 0.0;
    double x = 0.0;
    Scenario scenario;
    std::span<const double> law;
};

/// Measure-valued control output: optionally the current state law plus an
/// explicit signed offset. Only its functionals reach the coefficients.
struct MeasureControlValue {
    bool include_law = false;
    DiscreteMeasure offset;
};

using MeasureControl = std::function<MeasureControlValue(const Observation&)>;
using RealControl = std::function<double(const Observation&)>;

struct ControlBounds {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double u) const noexcept { return u >= lo && u <= hi; }
};

struct ControlPair {
    MeasureControl measure;
    RealControl real;
    InfoPattern measure_info;
    InfoPattern real_info;
    ControlBounds real_bounds;
};

/// Step perturbation lambda * 1_{[t0, T]}(t) applied to one player's control:
/// the signed measure eta for the measure player, amplitude pi for u.
enum class DirectionKind { measure, control };

struct StepDirection {
    DirectionKind kind = DirectionKind::control;
    double t0 = 0.0;
    DiscreteMeasure eta;
    double amplitude = 0.0;

    static StepDirection on_measure(DiscreteMeasure eta, double t0 = 0.0);
    static StepDirection on_control(double amplitude, double t0 = 0.0);
    bool active(double t) const noexcept { return t >= t0 - 1e-12; }
};

ControlPair perturbed(const ControlPair& base, const StepDirection& dir, double lambda);

// ---- noise and particles --------------------------------------------------

struct JumpEvent {
    std::uint32_t step = 0;
    std::uint32_t atom = 0;
};

/// Pregenerated Brownian increments, Brownian levels and jump events for N
/// particles. Immutable once built; shared between control variants.
struct NoiseBundle {
    TimeGrid grid;
    std::size_t n_particles = 0;
    std::uint64_t seed = 0;
    LevyMeasure levy;
    std::vector<double> dB;                  // N x M
    std::vector<double> W;                   // N x (M+1)
    std::vector<JumpEvent> events;           // grouped by particle, sorted by step
    std::vector<std::size_t> event_offsets;  // N + 1

    double increment(std::size_t i, std::size_t k) const { return dB[i * grid.steps + k]; }
    double level(std::size_t i, std::size_t k) const { return W[i * grid.points() + k]; }
    std::span<const JumpEvent> jumps(std::size_t i) const {
        return {events.data() + event_offsets[i], event_offsets[i + 1] - event_offsets[i]};
    }
};

/// Particle i draws from the stream (seed, i) only.
std::shared_ptr<const NoiseBundle> generate_noise(const TimeGrid& grid, const LevyMeasure& levy,
                                                  std::size_t n_particles, std::uint64_t seed,
                                                  unsigned threads = 1);

/// exogenous: coefficients read the measure control; empirical: they read
/// the current cross-sectional law (the control's measure output is ignored).
enum class MuMode { exogenous, empirical };

struct SimulationConfig {
    std::size_t n_particles = 1000;
    std::size_t n_steps = 100;
    std::uint64_t seed = 0;
    MuMode mu_mode = MuMode::exogenous;
    unsigned threads = 1;
};

/// Simulated paths plus everything needed to re-evaluate them: the noise,
/// the controls actually applied and the law functionals per step.
struct ParticleBundle {
    TimeGrid grid;
    std::shared_ptr<const NoiseBundle> noise;
    MuMode mu_mode = MuMode::exogenous;
    std::size_t n_particles = 0;
    std::size_t n_functionals = 0;
    std::vector<double> states;   // N x (M+1)
    std::vector<double> u;        // N x M, control used on [t_k, t_{k+1})
    std::vector<double> mu;       // N x M x F, measure argument on [t_k, t_{k+1})
    std::vector<double> law;      // (M+1) x F, functionals of the state law

    std::uint64_t seed() const noexcept { return noise ? noise->seed : 0; }
    double state(std::size_t i, std::size_t k) const { return states[i * grid.points() + k]; }
    double control(std::size_t i, std::size_t k) const { return u[i * grid.steps + k]; }
    std::span<const double> mu_features(std::size_t i, std::size_t k) const {
        return {mu.data() + (i * grid.steps + k) * n_functionals, n_functionals};
    }
    std::span<const double> law_features(std::size_t k) const {
        return {law.data() + k * n_functionals, n_functionals};
    }
    Scenario scenario(std::size_t i, std::size_t k) const { return {i, noise->level(i, k)}; }

    std::vector<double> cross_section(std::size_t k) const;
    DiscreteMeasure law_at(std::size_t k) const;
    lawproc::MeasurePath law_path() const;
};

ParticleBundle simulate(const ControlledModel& model, const ControlPair& controls, const SimulationConfig& config);

/// Same scheme on existing noise (common random numbers).
ParticleBundle simulate_on_noise(const ControlledModel& model, const ControlPair& controls,
                                 std::shared_ptr<const NoiseBundle> noise, MuMode mu_mode, unsigned threads = 1);

struct PerformanceEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::vector<double> per_particle;
};

/// Left-endpoint Riemann sum of the running cost plus terminal cost, averaged
/// over particles. Uses the controls recorded in the bundle.
PerformanceEstimate evaluate_performance(const ParticleBundle& bundle, const PerformanceSpec& spec);

/// Euler scheme for the derivative process Z along `direction`, on the same
/// noise as `bundle`. Returns N x (M+1) values with Z(0) = 0.
std::vector<double> simulate_derivative_process(const ParticleBundle& bundle, const ControlledModel& model,
                                                const StepDirection& direction,
                                                PartialsMode mode = PartialsMode::analytic_or_fd);

/// Re-runs the bundle's noise with the recorded controls shifted by
/// lambda along `dir` (open-loop perturbation, common random numbers).
ParticleBundle replay_perturbed(const ParticleBundle& base, const ControlledModel& model, const StepDirection& dir,
                                double lambda, unsigned threads = 1);

/// E[ sum_k ((X^lambda_k - X_k)/lambda - Z_k)^2 dt ] for each lambda, using
/// replay_perturbed for X^lambda.
std::vector<double> derivative_l2_errors(const ParticleBundle& bundle, const ControlledModel& model,
                                         const StepDirection& direction, std::span<const double> lambdas,
                                         std::span<const double> z, unsigned threads = 1);

/// states CSV: particle, step, time, x.  events CSV: particle, step, atom, jump_size.
void write_states_csv(std::ostream& out, const ParticleBundle& bundle);
void write_events_csv(std::ostream& out, const ParticleBundle& bundle);

/// Mean and standard error of a sample.
struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0;
};
SampleStats sample_stats(std::span<const double> values);

}  // namespace mflab::sde
