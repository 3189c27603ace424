#pragma once

#include "glucosindy/timeseries.hpp"

#include <span>
#include <vector>

namespace glucosindy::pk {

/// Two-compartment absorption time constants in minutes.
struct ActionProfile {
    double tau1 = 55.0;
    double tau2 = 70.0;

    void validate() const;
};

inline constexpr ActionProfile kBolusInsulinProfile{55.0, 70.0};
inline constexpr ActionProfile kCarbProfile{20.0, 40.0};

/// Cumulative kernel mass kept before truncation.
inline constexpr double kKernelMass = 0.9999;

/// Unit-dose response in 1/min at t minutes after the dose:
/// (exp(-t/tau1) - exp(-t/tau2)) / (tau1 - tau2), or (t/tau^2) exp(-t/tau)
/// when the time constants coincide. Integrates to 1 over [0, inf).
double impulse_response(const ActionProfile& profile, double t);

/// Closed-form integral of impulse_response over [0, t].
double cumulative_response(const ActionProfile& profile, double t);

/// Sampled kernel h(k*dt)*dt for k = 0..K, where K is the first index whose
/// cumulative mass exceeds kKernelMass. dt in minutes.
std::vector<double> activity_kernel(const ActionProfile& profile, double dt_min);

/// Causal convolution of per-bin dose totals with the sampled kernel:
/// activity[i] = sum_{k <= i} dose[k] * h((i - k) dt) * dt.
/// Throws InvalidArgument on negative doses.
UniformSeries events_to_activity(const UniformSeries& doses, const ActionProfile& profile);

/// A dose at an absolute time, used to evaluate activity between grid points.
struct Dose {
    double time_min = 0.0;
    double amount = 0.0;
};

/// Continuous-time activity for the same truncated kernel that
/// events_to_activity samples: the sum of amount * h(t - time) * dt_min over
/// doses with 0 <= t - time <= truncation horizon. On grid points this
/// coincides with events_to_activity.
class ContinuousActivity {
public:
    ContinuousActivity(std::vector<Dose> doses, ActionProfile profile, double dt_min);

    [[nodiscard]] double operator()(double t_min) const;

private:
    std::vector<Dose> doses_;  // sorted by time
    ActionProfile profile_;
    double dt_min_;
    double horizon_;
};

inline constexpr const char* kInsulinActivity = "I_act";
inline constexpr const char* kCarbActivity = "C_act";

/// Adds control channels I_act and C_act computed from the "bolus" and
/// "carbs" dose channels. Throws InvalidArgument when those are missing.
void add_activity_channels(AlignedDataset& dataset, const ActionProfile& bolus, const ActionProfile& carbs);

}  // namespace glucosindy::pk
