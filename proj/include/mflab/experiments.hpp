#pragma once

#include "mflab/core.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mflab::experiments {

/// Malformed or out-of-range configuration. `line` is 0 when the problem is
/// not tied to a line (missing key, unreadable file).
class ConfigError : public Error {
public:
    ConfigError(const std::string& source, std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct KnobSpec {
    std::string section;  // "knobs" or "model"
    std::string key;
    double fallback = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    bool integer = false;
    std::string doc;
};

struct ExperimentInfo {
    std::string name;
    std::string description;
    std::vector<KnobSpec> knobs;
    /// Empty when the experiment takes no lambda grid.
    std::vector<double> lambdas;
};

/// All eight experiments in catalogue order.
const std::vector<ExperimentInfo>& catalogue();
const ExperimentInfo& info(std::string_view name);

struct ExperimentConfig {
    std::string experiment;
    std::filesystem::path output_dir = "out";
    std::map<std::string, double> knobs;
    std::vector<double> lambdas;

    double knob(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    std::uint64_t seed() const;
};

/// Defaults of the named experiment. Throws ConfigError for an unknown name.
ExperimentConfig default_config(std::string_view experiment);

/// INI text:
///   [experiment]  name = <tag>, output_dir = <path>
///   [knobs]       numeric run knobs, lambdas = comma separated list
///   [model]       model parameters
/// Unknown sections or keys and out-of-range values are rejected.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

struct RunResult {
    std::string experiment;
    std::vector<Check> checks;
    std::vector<std::filesystem::path> files;

    bool pass() const;
    /// First check with this name; nullptr when absent.
    const Check* find(std::string_view name) const;
};

/// Runs the experiment, writes its CSV files into output_dir (created when
/// missing) and returns the checks.
RunResult run(const ExperimentConfig& config);

/// One line per check: PASS|FAIL name value threshold.
void print_summary(std::ostream& out, const RunResult& result);
void print_catalogue(std::ostream& out);

}  // namespace mflab::experiments
