#pragma once

#include "mflab/core.hpp"
#include "mflab/lawproc.hpp"
#include "mflab/regression.hpp"
#include "mflab/sde.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

namespace mflab::bsde {

/// Linear BSDE with jumps
///   dP = -(phi + alpha P + beta Q + int jump_phi R nu) dt + Q dB + int R N~,
///   P(T) = terminal.
/// Coefficients are evaluated at grid times with Scenario{i, B(t)}.
struct LinearBsdeSpec {
    std::function<double(double, const Scenario&)> phi;
    std::function<double(double, const Scenario&)> alpha;
    std::function<double(double, const Scenario&)> beta;
    std::function<double(double, double, const Scenario&)> jump_phi;
    std::function<double(const Scenario&)> terminal;
    lawproc::LevyMeasure levy;
};

enum class Estimator { closed_form, nested_mc, regression };

std::string_view to_string(Estimator e);
Estimator estimator_from_string(std::string_view name);

/// Conditioning variable for the regression estimator.
enum class Regressor { brownian_level, state };

struct SolveConfig {
    Estimator estimator = Estimator::closed_form;
    std::size_t n_inner = 100;
    regression::BasisConfig basis;
    Regressor regressor = Regressor::brownian_level;
    /// Conditioning information is read at (t - delay)^+.
    double delay = 0.0;
    /// Seed for inner paths of the nested estimator.
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct BsdeSolution {
    TimeGrid grid;
    std::size_t n_scenarios = 0;
    Estimator estimator = Estimator::closed_form;
    std::vector<double> P;          // N x (M+1)
    std::vector<double> pathwise;   // N x (M+1), the integrand of the representation before conditioning
    std::vector<double> std_error;  // M+1

    double at(std::size_t i, std::size_t k) const { return P[i * grid.points() + k]; }
    double pathwise_at(std::size_t i, std::size_t k) const { return pathwise[i * grid.points() + k]; }
    /// Scenario average of P at step k.
    double mean(std::size_t k) const;
};

/// Euler scheme for dGamma = Gamma(alpha dt + beta dB + int jump_phi N~),
/// Gamma(0) = 1, on the given noise. Returns N x (M+1). A nonpositive value
/// throws SimulationError (step too large for the jump or drift size).
std::vector<double> simulate_gamma(const LinearBsdeSpec& spec, const sde::NoiseBundle& noise);

/// Draws fresh noise for n_outer scenarios and solves.
BsdeSolution solve(const LinearBsdeSpec& spec, const TimeGrid& grid, std::size_t n_outer, const SolveConfig& config,
                   std::uint64_t seed);

/// Solves on existing noise. `states` (N x (M+1)) is required when the
/// regression estimator conditions on the state.
///
/// closed_form: scenario average of the pathwise representation, valid for
///   deterministic coefficients and terminal value.
/// nested_mc: inner paths restarted from (t_k, B(t_k)) with fresh noise;
///   coefficients may depend on (t, B) but not on the scenario index.
/// regression: least squares on the conditioning variable at the delayed
///   index, one fit per grid time.
BsdeSolution solve_on_noise(const LinearBsdeSpec& spec, const sde::NoiseBundle& noise, const SolveConfig& config,
                            std::span<const double> states = {});

/// Implicit backward Euler sweep P_k = (P_{k+1} + phi_k dt) / (1 - alpha_k dt)
/// for deterministic coefficients and terminal value (Q = R = 0).
std::vector<double> backward_euler(const LinearBsdeSpec& spec, const TimeGrid& grid);

/// CSV: time, scenario, P, std_error. At most max_scenarios scenarios.
void write_csv(std::ostream& out, const BsdeSolution& sol, std::uint64_t seed, std::size_t max_scenarios = 100);

}  // namespace mflab::bsde
