#pragma once

#include "mflab/measures.hpp"

#include <complex>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace mflab::lawproc {

using measures::DiscreteMeasure;
using measures::FourierTable;
using measures::QuadratureRule;

/// Finite-activity Levy measure nu = sum_j rate_j delta_{zeta_j}.
struct LevyMeasure {
    std::vector<double> jump_sizes;
    std::vector<double> rates;

    LevyMeasure() = default;
    LevyMeasure(std::vector<double> sizes, std::vector<double> jump_rates);

    static LevyMeasure single(double jump_size, double rate) { return LevyMeasure({jump_size}, {rate}); }

    std::size_t size() const noexcept { return jump_sizes.size(); }
    bool empty() const noexcept { return jump_sizes.empty(); }
    double total_rate() const noexcept;
};

/// Law process sampled on a time grid.
struct MeasurePath {
    std::vector<double> times;
    std::vector<DiscreteMeasure> values;

    MeasurePath() = default;
    MeasurePath(std::vector<double> t, std::vector<DiscreteMeasure> v);
    std::size_t size() const noexcept { return times.size(); }
};

/// Coefficients of a one-dimensional Ito-Levy process
///   dX = alpha dt + beta dB + int gamma(t, zeta) N~(dt, dzeta).
struct ItoLevyCoeffs {
    std::function<double(double, const Scenario&)> alpha;
    std::function<double(double, const Scenario&)> beta;
    std::function<double(double, double, const Scenario&)> gamma;
    LevyMeasure levy;
    double bound = 1.0;
};

/// Uniform atoms at the samples, duplicates coalesced; total mass 1.
DiscreteMeasure empirical_law(std::span<const double> particles);

/// Bins a distribution given by its CDF into atoms at bin centres with the
/// exact bin probabilities as weights.
DiscreteMeasure binned_law(const std::function<double(double)>& cdf, double lo, double hi, std::size_t bins);

/// Generator applied to the Fourier test function exp(ixy).
std::complex<double> generator_on_test_fn(const ItoLevyCoeffs& coeffs, double t, double x, double y,
                                          const Scenario& scenario);

/// Central difference (M^_{t+h} - M^_{t-h}) / 2h on the quadrature nodes.
FourierTable law_derivative_fd(const MeasurePath& path, std::size_t index, const QuadratureRule& quad);

struct IncrementScanRow {
    double h = 0.0;
    double max_sq_increment = 0.0;
};

/// Worst-case ||M_{t+h} - M_t||^2_{M_0} over the grid for h = multiple * dt.
/// Defaults to dyadic multiples 1, 2, 4, ... up to half the path length.
std::vector<IncrementScanRow> abs_continuity_scan(const MeasurePath& path, const QuadratureRule& quad,
                                                  std::vector<std::size_t> multiples = {});

/// Least-squares slope of log(max_sq_increment) against log(h) restricted to
/// h in [h_lo, h_hi]; rows with zero increments are skipped.
double loglog_slope(std::span<const IncrementScanRow> rows, double h_lo = 0.0,
                    double h_hi = std::numeric_limits<double>::infinity());

/// ||M'(t)||_{M_0} / ||M(t)||_{M_0^(4)} at interior grid points.
std::vector<double> m4_norm_bound_check(const MeasurePath& path, const QuadratureRule& quad);

/// CSV with columns time, atom_location, atom_weight.
void write_csv(std::ostream& out, const MeasurePath& path);
MeasurePath read_csv(std::istream& in);

}  // namespace mflab::lawproc
