#include "glucosindy/time_format.hpp"

#include "glucosindy/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <chrono>
#include <cmath>

namespace glucosindy {

namespace {

int take_int(std::string_view text, std::size_t& pos, std::size_t digits) {
    if (pos + digits > text.size()) throw InvalidArgument("truncated timestamp");
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + digits, value);
    if (ec != std::errc{} || ptr != text.data() + pos + digits) {
        throw InvalidArgument("non-numeric field in timestamp");
    }
    pos += digits;
    return value;
}

void expect(std::string_view text, std::size_t& pos, char c) {
    if (pos >= text.size() || text[pos] != c) {
        throw InvalidArgument(fmt::format("expected '{}' in timestamp", c));
    }
    ++pos;
}

}  // namespace

double parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    try {
        std::size_t pos = 0;
        const int y = take_int(text, pos, 4);
        expect(text, pos, '-');
        const int mo = take_int(text, pos, 2);
        expect(text, pos, '-');
        const int d = take_int(text, pos, 2);
        if (pos >= text.size() || (text[pos] != 'T' && text[pos] != ' ')) {
            throw InvalidArgument("missing time part");
        }
        ++pos;
        const int hh = take_int(text, pos, 2);
        expect(text, pos, ':');
        const int mm = take_int(text, pos, 2);
        double ss = 0.0;
        if (pos < text.size() && text[pos] == ':') {
            ++pos;
            ss = take_int(text, pos, 2);
            if (pos < text.size() && text[pos] == '.') {
                const std::size_t start = pos;
                ++pos;
                while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
                double frac = 0.0;
                auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + pos, frac);
                if (ec != std::errc{} || ptr != text.data() + pos) throw InvalidArgument("bad fraction");
                ss += frac;
            }
        }
        int offset_sec = 0;
        if (pos < text.size()) {
            if (text[pos] == 'Z') {
                ++pos;
            } else if (text[pos] == '+' || text[pos] == '-') {
                const int sign = text[pos] == '-' ? -1 : 1;
                ++pos;
                const int oh = take_int(text, pos, 2);
                if (pos < text.size() && text[pos] == ':') ++pos;
                const int om = take_int(text, pos, 2);
                offset_sec = sign * (oh * 3600 + om * 60);
            }
        }
        if (pos != text.size()) throw InvalidArgument("trailing characters");

        const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
        if (!ymd.ok() || hh > 23 || mm > 59 || ss >= 61.0) throw InvalidArgument("field out of range");
        const auto days = sys_days{ymd}.time_since_epoch().count();
        return static_cast<double>(days) * 86400.0 + hh * 3600.0 + mm * 60.0 + ss - offset_sec;
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(fmt::format("invalid ISO-8601 timestamp '{}': {}", text, e.what()));
    }
}

std::string format_iso8601(double seconds) {
    using namespace std::chrono;
    const auto total = static_cast<long long>(std::llround(seconds));
    long long days = total / 86400;
    long long rem = total % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), rem / 3600,
                       (rem / 60) % 60, rem % 60);
}

}  // namespace glucosindy
