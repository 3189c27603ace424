#include "glucosindy/insulin_pk.hpp"

#include "glucosindy/error.hpp"
#include "glucosindy/ingest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace glucosindy::pk {

namespace {

bool coincident(const ActionProfile& p) { return std::abs(p.tau1 - p.tau2) < 1e-9 * p.tau1; }

}  // namespace

void ActionProfile::validate() const {
    if (!(tau1 > 0.0) || !(tau2 > 0.0) || !std::isfinite(tau1) || !std::isfinite(tau2)) {
        throw InvalidArgument(fmt::format("action profile time constants must be positive, got ({}, {})", tau1, tau2));
    }
}

double impulse_response(const ActionProfile& profile, double t) {
    profile.validate();
    if (t < 0.0) throw InvalidArgument(fmt::format("impulse response needs t >= 0, got {}", t));
    if (coincident(profile)) {
        const double tau = profile.tau1;
        return t / (tau * tau) * std::exp(-t / tau);
    }
    const double h = (std::exp(-t / profile.tau1) - std::exp(-t / profile.tau2)) / (profile.tau1 - profile.tau2);
    return std::max(h, 0.0);
}

double cumulative_response(const ActionProfile& profile, double t) {
    profile.validate();
    if (t < 0.0) throw InvalidArgument("cumulative response needs t >= 0");
    if (coincident(profile)) {
        const double u = t / profile.tau1;
        return 1.0 - (1.0 + u) * std::exp(-u);
    }
    const double a = profile.tau1 * std::exp(-t / profile.tau1);
    const double b = profile.tau2 * std::exp(-t / profile.tau2);
    return 1.0 - (a - b) / (profile.tau1 - profile.tau2);
}

std::vector<double> activity_kernel(const ActionProfile& profile, double dt_min) {
    profile.validate();
    if (!(dt_min > 0.0)) throw InvalidArgument("kernel step must be positive");
    std::vector<double> kernel;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt_min;
        kernel.push_back(impulse_response(profile, t) * dt_min);
        if (cumulative_response(profile, t) > kKernelMass) break;
    }
    return kernel;
}

UniformSeries events_to_activity(const UniformSeries& doses, const ActionProfile& profile) {
    const auto& d = doses.values();
    for (double v : d) {
        if (!(v >= 0.0)) throw InvalidArgument("dose values must be non-negative");
    }
    const auto kernel = activity_kernel(profile, doses.dt() / 60.0);
    std::vector<double> out(d.size(), 0.0);
    for (std::size_t k = 0; k < d.size(); ++k) {
        if (d[k] == 0.0) continue;
        const auto stop = std::min(d.size(), k + kernel.size());
        for (std::size_t i = k; i < stop; ++i) out[i] += d[k] * kernel[i - k];
    }
    return UniformSeries(doses.t0(), doses.dt(), std::move(out), doses.unit());
}

ContinuousActivity::ContinuousActivity(std::vector<Dose> doses, ActionProfile profile, double dt_min)
    : doses_(std::move(doses)), profile_(profile), dt_min_(dt_min) {
    for (const auto& d : doses_) {
        if (!(d.amount >= 0.0)) throw InvalidArgument("dose amounts must be non-negative");
    }
    std::stable_sort(doses_.begin(), doses_.end(), [](const Dose& a, const Dose& b) { return a.time_min < b.time_min; });
    horizon_ = static_cast<double>(activity_kernel(profile_, dt_min_).size() - 1) * dt_min_;
}

double ContinuousActivity::operator()(double t_min) const {
    double acc = 0.0;
    for (const auto& dose : doses_) {
        const double s = t_min - dose.time_min;
        if (s < 0.0) break;
        if (s > horizon_) continue;
        acc += dose.amount * impulse_response(profile_, s) * dt_min_;
    }
    return acc;
}

void add_activity_channels(AlignedDataset& dataset, const ActionProfile& bolus, const ActionProfile& carbs) {
    auto activity = [&](const char* source, const ActionProfile& profile) {
        auto it = dataset.controls.find(source);
        if (it == dataset.controls.end()) throw InvalidArgument(fmt::format("dataset lacks '{}' channel", source));
        return events_to_activity(it->second, profile);
    };
    auto insulin = activity(ingest::kBolus, bolus);
    auto carb = activity(ingest::kCarbs, carbs);
    dataset.controls.insert_or_assign(kInsulinActivity, std::move(insulin));
    dataset.controls.insert_or_assign(kCarbActivity, std::move(carb));
}

}  // namespace glucosindy::pk
