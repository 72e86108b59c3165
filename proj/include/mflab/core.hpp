#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace mflab {

inline constexpr double kSqrtPi = 1.7724538509055160273;

// Error hierarchy. Everything thrown by the library derives from Error so the
// CLI can map it onto exit codes in one place.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Paired random measures with different scenario counts.
class PairingError : public Error {
public:
    using Error::Error;
};

class SimulationError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    EstimationError(const std::string& what, double condition_number)
        : Error(what), condition_number_(condition_number) {}
    double condition_number() const noexcept { return condition_number_; }

private:
    double condition_number_;
};

class UnsupportedModel : public Error {
public:
    using Error::Error;
};

class InadmissibleControl : public Error {
public:
    using Error::Error;
};

/// Real interval used as the Borel set V. Endpoints may be infinite.
struct Interval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool lo_closed = false;
    bool hi_closed = false;

    bool contains(double x) const noexcept {
        const bool above = lo_closed ? x >= lo : x > lo;
        const bool below = hi_closed ? x <= hi : x < hi;
        return above && below;
    }

    static Interval positive_half_line() { return Interval{0.0, std::numeric_limits<double>::infinity(), false, false}; }
    static Interval whole_line() { return Interval{}; }
};

/// Identifies one omega-sample. `w` is the Brownian level B(t) at the time
/// the scenario is queried, which is all the randomness the supported
/// coefficient families read.
struct Scenario {
    std::size_t index = 0;
    double w = 0.0;
};

/// Uniform grid t_k = T k / M on [0, T].
struct TimeGrid {
    double horizon = 1.0;
    std::size_t steps = 1;

    double dt() const noexcept { return horizon / static_cast<double>(steps); }
    double time(std::size_t k) const noexcept {
        return horizon * static_cast<double>(k) / static_cast<double>(steps);
    }
    std::size_t points() const noexcept { return steps + 1; }

    /// Grid index of max(t - delay, 0), rounding down.
    std::size_t delayed_index(std::size_t k, double delay) const noexcept {
        if (delay <= 0.0) return k;
        const double shifted = time(k) - delay;
        if (shifted <= 0.0) return 0;
        const auto idx = static_cast<std::size_t>(std::floor(shifted / dt() + 1e-9));
        return idx > k ? k : idx;
    }
};

}  // namespace mflab
