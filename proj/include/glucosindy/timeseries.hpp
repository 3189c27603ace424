#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace glucosindy {

/// Half-open index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t size() const { return end > begin ? end - begin : 0; }
    [[nodiscard]] bool empty() const { return end <= begin; }
    bool operator==(const IndexRange&) const = default;
};

/// One channel of values on a fixed-step grid. Sample i lives at t0 + i*dt;
/// no per-sample timestamps are stored. Times are UTC seconds.
class UniformSeries {
public:
    UniformSeries(double t0, double dt, std::vector<double> values, std::string unit = {});

    [[nodiscard]] double t0() const { return t0_; }
    [[nodiscard]] double dt() const { return dt_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }
    [[nodiscard]] double time(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
    [[nodiscard]] const std::string& unit() const { return unit_; }

    bool operator==(const UniformSeries&) const = default;

private:
    double t0_;
    double dt_;
    std::vector<double> values_;
    std::string unit_;
};

UniformSeries make_series(double t0, double dt, std::vector<double> values, std::string unit = {});

/// Copy of samples [range.begin, range.end) with t0 shifted accordingly.
UniformSeries slice(const UniformSeries& series, IndexRange range);

struct Grid {
    double t0 = 0.0;
    double dt = 300.0;
    std::size_t n = 0;

    [[nodiscard]] double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    bool operator==(const Grid&) const = default;
};

/// State and control channels sharing one grid. Segments are the gap-free
/// stretches of the state channels; outside them state values are NaN.
struct AlignedDataset {
    Grid grid;
    std::map<std::string, UniformSeries> states;
    std::map<std::string, UniformSeries> controls;
    std::vector<IndexRange> segments;

    /// Looks a channel up among states, then controls. Throws InvalidArgument when absent.
    [[nodiscard]] const UniformSeries& channel(const std::string& name) const;
    [[nodiscard]] bool has_channel(const std::string& name) const;

    /// Checks the shared-grid and segment invariants, throwing InvalidArgument on violation.
    void validate() const;
};

}  // namespace glucosindy
