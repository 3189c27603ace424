#pragma once

#include "glucosindy/ingest.hpp"
#include "glucosindy/insulin_pk.hpp"
#include "glucosindy/stlsq.hpp"
#include "glucosindy/timeseries.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace glucosindy::synth {

struct ScheduledEvent {
    double time_h = 0.0;  // hours after start
    double amount = 0.0;  // grams (meals) or units (boluses)

    bool operator==(const ScheduledEvent&) const = default;
};

/// Synthetic patient whose glucose follows
///   dG/dt = -p1 (G - Gb) - p2 I_act + p3 C_act
/// with I_act and C_act the bolus and carb activity signals.
struct SynthConfig {
    double duration_h = 48.0;
    std::uint64_t seed = 1;
    double noise_sd = 0.0;  // mg/dL, glucose only
    double p1 = 0.02;       // 1/min
    double p2 = 1.5;        // mg/dL per unit of insulin activity per min
    double p3 = 0.05;       // mg/dL per unit of carb activity per min
    double gb = 110.0;      // mg/dL
    double g0 = 180.0;      // mg/dL at t = 0
    double start = 1704067200.0;  // 2024-01-01T00:00:00Z
    double dt = 300.0;            // output grid, seconds
    double basal_rate = 0.8;      // U/hr, emitted once at the start
    std::optional<std::vector<ScheduledEvent>> meals;     // default: daily_meals()
    std::optional<std::vector<ScheduledEvent>> boluses;   // default: daily_boluses()
    pk::ActionProfile bolus_profile = pk::kBolusInsulinProfile;
    pk::ActionProfile carb_profile = pk::kCarbProfile;

    void validate() const;
};

/// Three meals a day (07:00 90 g, 12:30 120 g, 19:00 100 g) over `duration_h`.
std::vector<ScheduledEvent> daily_meals(double duration_h);
/// Boluses two hours after each meal (09:00 4 U, 14:30 5 U, 21:00 4 U).
std::vector<ScheduledEvent> daily_boluses(double duration_h);

struct SynthDataset {
    std::vector<ingest::EventRecord> events;  // what the CSV export contains (unrounded)
    AlignedDataset dataset;                   // aligned with activity channels added
    SparseModel truth;                        // generating model in the degree-2 library
    std::vector<double> clean_glucose;        // noise-free trajectory on the grid
};

/// Counter-based standard normal draw `index` of stream `seed`
/// (SplitMix64 finaliser + Box-Muller); see README.
double counter_normal(std::uint64_t seed, std::uint64_t index);

/// Integrates the true dynamics with RK4 at a 0.1-minute step and samples
/// them on the grid. Deterministic for a fixed seed.
/// Throws InvalidArgument on a schedule event outside [0, duration] or when
/// the clean trajectory leaves (20, 600) mg/dL.
SynthDataset generate(const SynthConfig& config);

/// The generating model expressed over library channels [G, I_act, C_act]
/// with `poly_degree` (>= 1).
SparseModel true_model(const SynthConfig& config, int poly_degree = 2);

}  // namespace glucosindy::synth
