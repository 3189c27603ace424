#include "glucosindy/synth.hpp"

#include "glucosindy/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace glucosindy::synth {

namespace {

constexpr double kInternalStepMin = 0.1;

std::vector<ScheduledEvent> repeat_daily(const std::vector<ScheduledEvent>& day, double duration_h) {
    std::vector<ScheduledEvent> out;
    for (int d = 0; d * 24.0 < duration_h; ++d) {
        for (const auto& e : day) {
            const double t = d * 24.0 + e.time_h;
            if (t <= duration_h) out.push_back({t, e.amount});
        }
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform in the open interval (0, 1).
double counter_uniform(std::uint64_t seed, std::uint64_t counter) {
    const std::uint64_t z = splitmix64(seed + (counter + 1) * 0x9E3779B97F4A7C15ULL);
    return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

void SynthConfig::validate() const {
    if (!(p1 > 0.0)) throw InvalidArgument("p1 must be positive");
    if (!(gb > 50.0 && gb < 200.0)) throw InvalidArgument("Gb must lie in (50, 200) mg/dL");
    if (!(duration_h >= 4.0)) throw InvalidArgument("synthetic duration must be at least 4 h");
    if (!(noise_sd >= 0.0)) throw InvalidArgument("noise_sd must be >= 0");
    if (!(dt > 0.0)) throw InvalidArgument("grid step must be positive");
    if (!(basal_rate >= 0.0)) throw InvalidArgument("basal_rate must be >= 0");
    bolus_profile.validate();
    carb_profile.validate();
    auto check = [&](const std::optional<std::vector<ScheduledEvent>>& events, const char* what) {
        if (!events) return;
        for (const auto& e : *events) {
            if (e.time_h < 0.0 || e.time_h > duration_h) {
                throw InvalidArgument(fmt::format("{} at {} h lies outside the {} h simulation", what, e.time_h, duration_h));
            }
            if (!(e.amount >= 0.0)) throw InvalidArgument(fmt::format("{} amounts must be >= 0", what));
        }
    };
    check(meals, "meal");
    check(boluses, "bolus");
}

std::vector<ScheduledEvent> daily_meals(double duration_h) {
    return repeat_daily({{7.0, 90.0}, {12.5, 120.0}, {19.0, 100.0}}, duration_h);
}

std::vector<ScheduledEvent> daily_boluses(double duration_h) {
    return repeat_daily({{9.0, 4.0}, {14.5, 5.0}, {21.0, 4.0}}, duration_h);
}

double counter_normal(std::uint64_t seed, std::uint64_t index) {
    const double u1 = counter_uniform(seed, 2 * index);
    const double u2 = counter_uniform(seed, 2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SparseModel true_model(const SynthConfig& config, int poly_degree) {
    if (poly_degree < 1) throw InvalidArgument("the true model needs a library of degree >= 1");
    LibrarySpec spec;
    spec.poly_degree = poly_degree;
    spec.channels = {ingest::kGlucose, pk::kInsulinActivity, pk::kCarbActivity};

    SparseModel m;
    m.terms = enumerate_terms(spec);
    m.state_names = {ingest::kGlucose};
    m.control_names = {pk::kInsulinActivity, pk::kCarbActivity};
    m.xi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.terms.size()), 1);
    m.xi(0, 0) = config.p1 * config.gb;
    m.xi(1, 0) = -config.p1;
    m.xi(2, 0) = -config.p2;
    m.xi(3, 0) = config.p3;
    return m;
}

SynthDataset generate(const SynthConfig& config) {
    config.validate();
    const double dt_min = config.dt / 60.0;
    const auto n_grid = static_cast<std::size_t>(std::floor(config.duration_h * 60.0 / dt_min + 1e-9)) + 1;
    const auto steps_per_bin = static_cast<int>(std::lround(dt_min / kInternalStepMin));
    const double h = dt_min / steps_per_bin;

    // Doses snap to the grid so the exported records bin exactly where they act.
    auto snap = [&](const std::vector<ScheduledEvent>& events) {
        std::vector<pk::Dose> doses;
        for (const auto& e : events) doses.push_back({std::round(e.time_h * 60.0 / dt_min) * dt_min, e.amount});
        return doses;
    };
    const auto meals = snap(config.meals.value_or(daily_meals(config.duration_h)));
    const auto boluses = snap(config.boluses.value_or(daily_boluses(config.duration_h)));

    const pk::ContinuousActivity insulin(boluses, config.bolus_profile, dt_min);
    const pk::ContinuousActivity carbs(meals, config.carb_profile, dt_min);
    auto rhs = [&](double g, double t) {
        return -config.p1 * (g - config.gb) - config.p2 * insulin(t) + config.p3 * carbs(t);
    };

    std::vector<double> clean(n_grid);
    double g = config.g0;
    clean[0] = g;
    for (std::size_t i = 1; i < n_grid; ++i) {
        for (int s = 0; s < steps_per_bin; ++s) {
            const double t = static_cast<double>(i - 1) * dt_min + s * h;
            const double k1 = rhs(g, t);
            const double k2 = rhs(g + 0.5 * h * k1, t + 0.5 * h);
            const double k3 = rhs(g + 0.5 * h * k2, t + 0.5 * h);
            const double k4 = rhs(g + h * k3, t + h);
            g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        clean[i] = g;
    }
    for (double v : clean) {
        if (!(v > 20.0 && v < 600.0)) {
            throw InvalidArgument(fmt::format("synthetic glucose left (20, 600) mg/dL (reached {:.1f}); check parameters", v));
        }
    }

    SynthDataset out;
    out.clean_glucose = clean;
    auto& events = out.events;
    events.push_back({config.start, ingest::EventKind::basal, config.basal_rate});
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double noise = config.noise_sd > 0.0 ? config.noise_sd * counter_normal(config.seed, i) : 0.0;
        events.push_back({config.start + static_cast<double>(i) * config.dt, ingest::EventKind::glucose, clean[i] + noise});
    }
    for (const auto& d : boluses) events.push_back({config.start + d.time_min * 60.0, ingest::EventKind::bolus, d.amount});
    for (const auto& d : meals) events.push_back({config.start + d.time_min * 60.0, ingest::EventKind::carbs, d.amount});
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

    out.dataset = ingest::align(events, {config.dt, 1800.0});
    pk::add_activity_channels(out.dataset, config.bolus_profile, config.carb_profile);
    out.truth = true_model(config);
    return out;
}

}  // namespace glucosindy::synth
