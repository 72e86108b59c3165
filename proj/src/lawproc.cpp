#include "mflab/lawproc.hpp"

#include "mflab/csv.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace mflab::lawproc {

namespace {

void require_uniform(const MeasurePath& path) {
    if (path.size() < 2) return;
    const double h = path.times[1] - path.times[0];
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
        const double d = path.times[i + 1] - path.times[i];
        if (std::abs(d - h) > 1e-9 * std::max(1.0, std::abs(h))) {
            throw InvalidArgument("law path: grid must be uniform");
        }
    }
}

std::vector<FourierTable> tabulate(const MeasurePath& path, const QuadratureRule& quad) {
    std::vector<FourierTable> tables;
    tables.reserve(path.size());
    for (const auto& m : path.values) tables.push_back(measures::fourier_table(m, quad));
    return tables;
}

}  // namespace

LevyMeasure::LevyMeasure(std::vector<double> sizes, std::vector<double> jump_rates)
    : jump_sizes(std::move(sizes)), rates(std::move(jump_rates)) {
    if (jump_sizes.size() != rates.size()) throw InvalidArgument("LevyMeasure: one rate per jump size required");
    for (std::size_t j = 0; j < jump_sizes.size(); ++j) {
        if (!(rates[j] > 0.0) || !std::isfinite(rates[j])) throw InvalidArgument("LevyMeasure: rates must be positive");
        if (jump_sizes[j] == 0.0 || !std::isfinite(jump_sizes[j])) {
            throw InvalidArgument("LevyMeasure: jump sizes must be finite and nonzero");
        }
    }
}

double LevyMeasure::total_rate() const noexcept {
    double s = 0.0;
    for (double r : rates) s += r;
    return s;
}

MeasurePath::MeasurePath(std::vector<double> t, std::vector<DiscreteMeasure> v)
    : times(std::move(t)), values(std::move(v)) {
    if (times.size() != values.size()) throw InvalidArgument("MeasurePath: one measure per time required");
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (!(times[i] > times[i - 1])) throw InvalidArgument("MeasurePath: times must be strictly increasing");
    }
}

DiscreteMeasure empirical_law(std::span<const double> particles) {
    if (particles.empty()) throw InvalidArgument("empirical_law: no particles");
    std::vector<double> sorted(particles.begin(), particles.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    std::vector<measures::Atom> atoms;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        atoms.push_back({sorted[i], static_cast<double>(j - i) / n});
        i = j;
    }
    return DiscreteMeasure(std::move(atoms));
}

DiscreteMeasure binned_law(const std::function<double(double)>& cdf, double lo, double hi, std::size_t bins) {
    if (!(hi > lo) || bins == 0) throw InvalidArgument("binned_law: need hi > lo and at least one bin");
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<measures::Atom> atoms;
    atoms.reserve(bins);
    double left = cdf(lo);
    for (std::size_t b = 0; b < bins; ++b) {
        const double edge = lo + width * static_cast<double>(b + 1);
        const double right = cdf(edge);
        const double p = right - left;
        if (p != 0.0) atoms.push_back({edge - 0.5 * width, p});
        left = right;
    }
    return DiscreteMeasure(std::move(atoms));
}

std::complex<double> generator_on_test_fn(const ItoLevyCoeffs& coeffs, double t, double x, double y,
                                          const Scenario& scenario) {
    using namespace std::complex_literals;
    const double a = coeffs.alpha ? coeffs.alpha(t, scenario) : 0.0;
    const double b = coeffs.beta ? coeffs.beta(t, scenario) : 0.0;
    std::complex<double> symbol = 1i * y * a - 0.5 * b * b * y * y;
    for (std::size_t j = 0; j < coeffs.levy.size(); ++j) {
        const double g = coeffs.gamma ? coeffs.gamma(t, coeffs.levy.jump_sizes[j], scenario) : 0.0;
        symbol += coeffs.levy.rates[j] * (std::exp(1i * g * y) - 1.0 - 1i * y * g);
    }
    return symbol * std::exp(1i * x * y);
}

FourierTable law_derivative_fd(const MeasurePath& path, std::size_t index, const QuadratureRule& quad) {
    if (index == 0 || index + 1 >= path.size()) {
        throw InvalidArgument("law_derivative_fd: index must be an interior grid point");
    }
    const double h_minus = path.times[index] - path.times[index - 1];
    const double h_plus = path.times[index + 1] - path.times[index];
    if (std::abs(h_plus - h_minus) > 1e-9 * std::max(1.0, h_plus)) {
        throw InvalidArgument("law_derivative_fd: grid must be locally uniform");
    }
    const auto up = measures::fourier_table(path.values[index + 1], quad);
    const auto down = measures::fourier_table(path.values[index - 1], quad);
    FourierTable d;
    d.nodes = quad.nodes;
    d.values.resize(quad.size());
    const double span = path.times[index + 1] - path.times[index - 1];
    for (std::size_t i = 0; i < quad.size(); ++i) d.values[i] = (up.values[i] - down.values[i]) / span;
    return d;
}

std::vector<IncrementScanRow> abs_continuity_scan(const MeasurePath& path, const QuadratureRule& quad,
                                                  std::vector<std::size_t> multiples) {
    if (path.size() < 3) throw InvalidArgument("abs_continuity_scan: path needs at least 3 points");
    require_uniform(path);
    const std::size_t m = path.size() - 1;
    if (multiples.empty()) {
        for (std::size_t q = 1; q <= m / 2; q *= 2) multiples.push_back(q);
    }
    const auto tables = tabulate(path, quad);
    const double dt = path.times[1] - path.times[0];

    std::vector<IncrementScanRow> rows;
    rows.reserve(multiples.size());
    FourierTable diff;
    diff.nodes = quad.nodes;
    diff.values.resize(quad.size());
    for (std::size_t q : multiples) {
        if (q == 0 || q > m) throw InvalidArgument("abs_continuity_scan: multiple outside the path");
        double worst = 0.0;
        for (std::size_t k = 0; k + q <= m; ++k) {
            for (std::size_t i = 0; i < quad.size(); ++i) {
                diff.values[i] = tables[k + q].values[i] - tables[k].values[i];
            }
            worst = std::max(worst, measures::table_norm_sq(diff, 0, quad));
        }
        rows.push_back({dt * static_cast<double>(q), worst});
    }
    return rows;
}

double loglog_slope(std::span<const IncrementScanRow> rows, double h_lo, double h_hi) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (const auto& r : rows) {
        if (r.h < h_lo * (1.0 - 1e-9) || r.h > h_hi * (1.0 + 1e-9) || !(r.max_sq_increment > 0.0)) continue;
        const double x = std::log(r.h);
        const double y = std::log(r.max_sq_increment);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw InvalidArgument("loglog_slope: need at least two usable rows");
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

std::vector<double> m4_norm_bound_check(const MeasurePath& path, const QuadratureRule& quad) {
    if (path.size() < 3) throw InvalidArgument("m4_norm_bound_check: path needs at least 3 points");
    require_uniform(path);
    std::vector<double> ratios;
    ratios.reserve(path.size() - 2);
    for (std::size_t k = 1; k + 1 < path.size(); ++k) {
        const auto derivative = law_derivative_fd(path, k, quad);
        const double num = std::sqrt(measures::table_norm_sq(derivative, 0, quad));
        const auto table = measures::fourier_table(path.values[k], quad);
        const double den = std::sqrt(measures::table_norm_sq(table, 4, quad));
        if (num == 0.0) {
            ratios.push_back(0.0);
        } else if (den == 0.0) {
            throw Error("m4_norm_bound_check: zero M^(4) norm with nonzero derivative");
        } else {
            ratios.push_back(num / den);
        }
    }
    return ratios;
}

void write_csv(std::ostream& out, const MeasurePath& path) {
    csv::Writer w(out, {"time", "atom_location", "atom_weight"});
    for (std::size_t k = 0; k < path.size(); ++k) {
        for (const auto& a : path.values[k].atoms()) w.row(path.times[k], a.location, a.weight);
    }
}

MeasurePath read_csv(std::istream& in) {
    std::vector<double> times;
    std::vector<std::vector<measures::Atom>> atoms;
    std::string line;
    bool header = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (header) {
            if (line != "time,atom_location,atom_weight") {
                throw InvalidArgument("MeasurePath CSV: unexpected header on line " + std::to_string(line_no));
            }
            header = false;
            continue;
        }
        std::istringstream ss(line);
        std::string f0, f1, f2;
        if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') || !std::getline(ss, f2)) {
            throw InvalidArgument("MeasurePath CSV: malformed row on line " + std::to_string(line_no));
        }
        const double t = std::stod(f0);
        if (times.empty() || times.back() != t) {
            times.push_back(t);
            atoms.emplace_back();
        }
        atoms.back().push_back({std::stod(f1), std::stod(f2)});
    }
    std::vector<DiscreteMeasure> values;
    values.reserve(atoms.size());
    for (auto& a : atoms) values.emplace_back(std::move(a));
    return MeasurePath(std::move(times), std::move(values));
}

}  // namespace mflab::lawproc
