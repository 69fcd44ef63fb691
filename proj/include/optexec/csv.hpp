#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>

namespace optexec::csv {

/// Shortest round-trip decimal form; '.' separator regardless of locale.
inline std::string format(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

inline std::string format(std::int64_t x) { return std::to_string(x); }

/// Row-at-a-time CSV writer with LF line endings.
class Writer {
public:
    Writer(std::ostream& out, std::initializer_list<std::string_view> header) : out_(out) {
        bool first = true;
        for (auto col : header) {
            if (!first) out_ << ',';
            out_ << col;
            first = false;
        }
        out_ << '\n';
    }

    Writer& cell(double x) { return raw(format(x)); }
    Writer& cell(int x) { return raw(std::to_string(x)); }
    Writer& cell(std::int64_t x) { return raw(std::to_string(x)); }
    Writer& cell(std::size_t x) { return raw(std::to_string(x)); }
    Writer& cell(std::string_view s) { return raw(s); }
    Writer& cell(const char* s) { return raw(s); }
    Writer& cell(std::optional<double> x) { return raw(x ? format(*x) : std::string{}); }

    void end_row() {
        out_ << '\n';
        fresh_ = true;
    }

private:
    Writer& raw(std::string_view s) {
        if (!fresh_) out_ << ',';
        out_ << s;
        fresh_ = false;
        return *this;
    }

    std::ostream& out_;
    bool fresh_ = true;
};

}  // namespace optexec::csv
