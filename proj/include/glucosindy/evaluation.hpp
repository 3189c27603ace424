#pragma once

#include "glucosindy/ode_sim.hpp"
#include "glucosindy/stlsq.hpp"
#include "glucosindy/timeseries.hpp"

#include <json.hpp>

#include <cstddef>
#include <string>
#include <vector>

namespace glucosindy::eval {

struct EvalConfig {
    std::size_t horizon = 72;       // grid steps (6 h at 5 min)
    std::size_t origin_stride = 12; // grid steps between origins
    double split = 0.75;            // training fraction of each segment

    void validate() const;
};

/// Root-mean-square error. Throws InvalidArgument unless both series share
/// length and grid.
double rmse(const UniformSeries& pred, const UniformSeries& truth);
/// Mean absolute error, same preconditions as rmse.
double mae(const UniformSeries& pred, const UniformSeries& truth);

/// Constant forecast at the last observed value for steps 1..horizon after
/// an origin at `t_origin`.
UniformSeries persistence_baseline(double truth_at_origin, std::size_t horizon, double t_origin = 0.0,
                                   double dt = 300.0);

enum class OriginOutcome { completed, diverged_prefix, excluded };

struct OriginResult {
    std::size_t origin = 0;  // grid index
    double time = 0.0;
    OriginOutcome outcome = OriginOutcome::completed;
    std::size_t n_scored = 0;  // forecast steps the metrics cover
    double rmse = 0.0;
    double mae = 0.0;
    double baseline_rmse = 0.0;
    double baseline_mae = 0.0;
};

/// Aggregates pool squared / absolute errors over every scored step of the
/// included origins; the baseline is scored on exactly the same steps.
struct EvalReport {
    std::vector<OriginResult> origins;
    double rmse = 0.0;
    double mae = 0.0;
    double baseline_rmse = 0.0;
    double baseline_mae = 0.0;
    std::size_t n_origins = 0;
    std::size_t n_diverged = 0;
    std::size_t n_excluded = 0;
};

/// Recomputes the pooled aggregates of `report` from its origin entries.
void aggregate(EvalReport& report);

/// Origins of the held-out part of each segment: from the split point
/// onwards every origin_stride steps, as long as the full horizon of
/// observed glucose follows within the segment.
std::vector<std::size_t> evaluation_origins(const AlignedDataset& dataset, const EvalConfig& config);

/// Simulates the model from the observed state at each origin with the
/// recorded controls and scores it against observed values and persistence.
/// A diverged forecast is scored on its finite prefix when that covers at
/// least half the horizon, otherwise it is excluded.
/// Throws InvalidArgument when no origin fits.
EvalReport rolling_evaluate(const SparseModel& model, const AlignedDataset& dataset, const EvalConfig& config,
                            const SimConfig& sim = {});

nlohmann::json to_json(const EvalReport& report);
std::string origins_to_csv(const EvalReport& report);

}  // namespace glucosindy::eval
