#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace mflab {

inline constexpr std::string_view kVersion = "1.0.0";

namespace csv {

/// Shortest round-trip decimal representation; locale independent.
std::string format(double value);

/// Comma-separated writer. Numbers go through `format` so identical inputs
/// give byte-identical files.
class Writer {
public:
    Writer(std::ostream& out, std::initializer_list<std::string_view> header);
    Writer(std::ostream& out, const std::vector<std::string>& header);

    template <typename... Fields>
    void row(const Fields&... fields) {
        bool first = true;
        (emit(fields, first), ...);
        out_ << '\n';
    }

    /// Trailing `# seed=..., version=...` line.
    void metadata(std::uint64_t seed);

private:
    template <typename T>
    void emit(const T& v, bool& first) {
        if (!first) out_ << ',';
        first = false;
        if constexpr (std::is_same_v<T, bool>) {
            out_ << (v ? "true" : "false");
        } else if constexpr (std::is_floating_point_v<T>) {
            out_ << format(static_cast<double>(v));
        } else if constexpr (std::is_integral_v<T>) {
            out_ << v;
        } else {
            out_ << std::string_view(v);
        }
    }

    std::ostream& out_;
    std::size_t columns_;
};

}  // namespace csv
}  // namespace mflab
