#include "glucosindy/differentiation.hpp"

#include "glucosindy/error.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <limits>

namespace glucosindy {

namespace {

/// Derivative weights (per grid step) for a degree-`order` fit over `window`
/// samples, evaluated at sample `at` of the window.
Eigen::VectorXd polyfit_derivative_weights(int window, int order, int at) {
    Eigen::MatrixXd vander(window, order + 1);
    for (int j = 0; j < window; ++j) {
        const double u = j - at;
        double p = 1.0;
        for (int k = 0; k <= order; ++k) {
            vander(j, k) = p;
            p *= u;
        }
    }
    // Row 1 of the pseudo-inverse maps samples to the linear coefficient.
    const Eigen::MatrixXd pinv =
        vander.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(window, window));
    return pinv.row(1).transpose();
}

std::vector<double> smoothed(std::span<const double> x, double h, int window, int order) {
    const auto n = static_cast<int>(x.size());
    const int half = window / 2;
    std::vector<Eigen::VectorXd> weights(static_cast<std::size_t>(window));
    for (int at = 0; at < window; ++at) weights[static_cast<std::size_t>(at)] = polyfit_derivative_weights(window, order, at);

    std::vector<double> out(x.size());
    for (int i = 0; i < n; ++i) {
        const int start = std::clamp(i - half, 0, n - window);
        const auto& w = weights[static_cast<std::size_t>(i - start)];
        double acc = 0.0;
        for (int j = 0; j < window; ++j) acc += w[j] * x[static_cast<std::size_t>(start + j)];
        out[static_cast<std::size_t>(i)] = acc / h;
    }
    return out;
}

std::vector<double> derivative_values(std::span<const double> x, double h, const DerivativeSpec& spec) {
    const std::size_t n = x.size();
    std::vector<double> out(n);
    switch (spec.scheme) {
        case DiffScheme::forward:
            for (std::size_t i = 0; i + 1 < n; ++i) out[i] = (x[i + 1] - x[i]) / h;
            out[n - 1] = (x[n - 1] - x[n - 2]) / h;
            break;
        case DiffScheme::central:
            out[0] = (x[1] - x[0]) / h;
            for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
            out[n - 1] = (x[n - 1] - x[n - 2]) / h;
            break;
        case DiffScheme::smoothed:
            out = smoothed(x, h, spec.window, spec.polyorder);
            break;
    }
    return out;
}

}  // namespace

void DerivativeSpec::validate() const {
    if (scheme != DiffScheme::smoothed) return;
    if (window < 5 || window % 2 == 0) {
        throw InvalidArgument(fmt::format("smoothing window must be odd and >= 5, got {}", window));
    }
    if (polyorder < 2 || polyorder > window - 1) {
        throw InvalidArgument(fmt::format("polyorder must lie in [2, {}], got {}", window - 1, polyorder));
    }
}

std::size_t DerivativeSpec::min_length() const {
    switch (scheme) {
        case DiffScheme::forward: return 2;
        case DiffScheme::central: return 3;
        case DiffScheme::smoothed: return static_cast<std::size_t>(window);
    }
    return 0;
}

UniformSeries differentiate(const UniformSeries& series, const DerivativeSpec& spec) {
    spec.validate();
    if (series.size() < spec.min_length()) {
        throw InvalidArgument(
            fmt::format("series of length {} is shorter than the stencil support {}", series.size(), spec.min_length()));
    }
    const double h = series.dt() / 60.0;
    auto unit = series.unit().empty() ? std::string{} : series.unit() + "/min";
    return UniformSeries(series.t0(), series.dt(), derivative_values(series.values(), h, spec), std::move(unit));
}

UniformSeries differentiate_segments(const UniformSeries& series, std::span<const IndexRange> segments,
                                     const DerivativeSpec& spec, std::vector<IndexRange>* skipped) {
    spec.validate();
    const double h = series.dt() / 60.0;
    std::vector<double> out(series.size(), std::numeric_limits<double>::quiet_NaN());
    const auto& v = series.values();
    for (const auto& seg : segments) {
        if (seg.end > series.size()) throw InvalidArgument("segment outside series");
        if (seg.size() < spec.min_length()) {
            if (skipped) skipped->push_back(seg);
            continue;
        }
        const auto d = derivative_values(std::span(v).subspan(seg.begin, seg.size()), h, spec);
        std::copy(d.begin(), d.end(), out.begin() + static_cast<std::ptrdiff_t>(seg.begin));
    }
    auto unit = series.unit().empty() ? std::string{} : series.unit() + "/min";
    return UniformSeries(series.t0(), series.dt(), std::move(out), std::move(unit));
}

}  // namespace glucosindy
