#include "mflab/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace mflab::csv {

std::string format(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), res.ptr);
}

Writer::Writer(std::ostream& out, std::initializer_list<std::string_view> header)
    : out_(out), columns_(header.size()) {
    bool first = true;
    for (auto h : header) {
        if (!first) out_ << ',';
        first = false;
        out_ << h;
    }
    out_ << '\n';
}

Writer::Writer(std::ostream& out, const std::vector<std::string>& header) : out_(out), columns_(header.size()) {
    bool first = true;
    for (const auto& h : header) {
        if (!first) out_ << ',';
        first = false;
        out_ << h;
    }
    out_ << '\n';
}

void Writer::metadata(std::uint64_t seed) { out_ << "# seed=" << seed << ", version=" << kVersion << '\n'; }

}  // namespace mflab::csv
