#include "glucosindy/timeseries.hpp"

#include "glucosindy/error.hpp"

#include <fmt/format.h>

#include <cmath>

namespace glucosindy {

UniformSeries::UniformSeries(double t0, double dt, std::vector<double> values, std::string unit)
    : t0_(t0), dt_(dt), values_(std::move(values)), unit_(std::move(unit)) {
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) {
        throw InvalidArgument(fmt::format("series step must be positive, got {}", dt_));
    }
    if (values_.empty()) {
        throw InvalidArgument("series must contain at least one value");
    }
}

UniformSeries make_series(double t0, double dt, std::vector<double> values, std::string unit) {
    return UniformSeries(t0, dt, std::move(values), std::move(unit));
}

UniformSeries slice(const UniformSeries& series, IndexRange range) {
    if (range.empty() || range.end > series.size()) {
        throw InvalidArgument(
            fmt::format("slice [{}, {}) invalid for series of length {}", range.begin, range.end, series.size()));
    }
    const auto& v = series.values();
    std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(range.begin),
                            v.begin() + static_cast<std::ptrdiff_t>(range.end));
    return UniformSeries(series.time(range.begin), series.dt(), std::move(out), series.unit());
}

const UniformSeries& AlignedDataset::channel(const std::string& name) const {
    if (auto it = states.find(name); it != states.end()) return it->second;
    if (auto it = controls.find(name); it != controls.end()) return it->second;
    throw InvalidArgument(fmt::format("unknown channel '{}'", name));
}

bool AlignedDataset::has_channel(const std::string& name) const {
    return states.contains(name) || controls.contains(name);
}

void AlignedDataset::validate() const {
    auto check = [&](const std::string& name, const UniformSeries& s) {
        if (s.size() != grid.n || s.dt() != grid.dt || s.t0() != grid.t0) {
            throw InvalidArgument(fmt::format("channel '{}' is not on the dataset grid", name));
        }
    };
    for (const auto& [name, s] : states) check(name, s);
    for (const auto& [name, s] : controls) check(name, s);

    std::size_t prev_end = 0;
    for (const auto& seg : segments) {
        if (seg.size() < 2 || seg.end > grid.n || seg.begin < prev_end) {
            throw InvalidArgument(fmt::format("bad segment [{}, {})", seg.begin, seg.end));
        }
        prev_end = seg.end;
    }
}

}  // namespace glucosindy
