#pragma once

#include "glucosindy/stlsq.hpp"
#include "glucosindy/timeseries.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace glucosindy {

enum class ControlInterp { hold, linear };

struct SimConfig {
    int substeps = 5;  // RK4 steps per grid interval
    ControlInterp control_interp = ControlInterp::linear;
    std::map<std::string, ControlInterp> channel_interp{{"B", ControlInterp::hold}};
    std::optional<double> clamp_min;
    std::optional<double> clamp_max;

    void validate() const;
    [[nodiscard]] ControlInterp interp_for(const std::string& channel) const;
};

struct ForecastStatus {
    bool completed = true;
    std::size_t diverged_at = 0;  // index of the first forecast step that failed

    bool operator==(const ForecastStatus&) const = default;
};

/// Forecast for steps 1..horizon after the origin; values[s][k] is state s at
/// origin + (k + 1) * dt. A diverged forecast keeps only the finite prefix.
struct Forecast {
    double t0 = 0.0;  // time of the first forecast step
    double dt = 300.0;
    std::vector<std::string> state_names;
    std::vector<std::vector<double>> values;
    ForecastStatus status;

    [[nodiscard]] std::size_t length() const { return values.empty() ? 0 : values.front().size(); }
    /// Throws InvalidArgument when the forecast is empty.
    [[nodiscard]] UniformSeries series(std::size_t state) const;

    bool operator==(const Forecast&) const = default;
};

/// Evaluates a model's right-hand side with term-to-channel lookups resolved once.
class RhsEvaluator {
public:
    explicit RhsEvaluator(const SparseModel& model);

    [[nodiscard]] Eigen::VectorXd operator()(std::span<const double> state, std::span<const double> controls) const;

private:
    struct Factor {
        std::size_t channel;
        int power;
    };
    struct CompiledTerm {
        TermKind kind;
        std::vector<Factor> factors;
        TrigFunction function;
        double omega;
        std::size_t channel;
    };

    Eigen::MatrixXd xi_;
    std::vector<CompiledTerm> terms_;
    std::size_t n_states_;
    std::size_t n_controls_;
    std::vector<Eigen::Index> active_rows_;
};

/// xi^T * phi(state, controls). Throws InvalidArgument on length mismatch.
Eigen::VectorXd rhs_eval(const SparseModel& model, std::span<const double> state, std::span<const double> controls);

/// Fixed-step RK4 from x0 over `horizon` grid steps.
///
/// `controls` maps each model control name to a series starting at the
/// origin with at least horizon + 1 samples. Control values between grid
/// points are held or linearly interpolated per SimConfig. Integration stops
/// at the first non-finite state (or one beyond 10x the clamp bounds) and the
/// status records where.
///
/// Throws InvalidArgument when controls are missing or too short, or x0 is
/// not finite.
Forecast simulate(const SparseModel& model, std::span<const double> x0,
                  const std::map<std::string, UniformSeries>& controls, std::size_t horizon,
                  const SimConfig& config = {});

/// Autonomous model (no controls) on a grid of step `dt` seconds starting at t=0.
Forecast simulate(const SparseModel& model, std::span<const double> x0, std::size_t horizon, double dt,
                  const SimConfig& config = {});

/// Same, with controls read from `dataset` starting at grid index `origin`.
Forecast simulate(const SparseModel& model, std::span<const double> x0, const AlignedDataset& dataset,
                  std::size_t origin, std::size_t horizon, const SimConfig& config = {});

/// CSV text: `t_iso,<state>...` rows and a trailing `# status: ...` line.
std::string forecast_to_csv(const Forecast& forecast);

std::string to_string(const ForecastStatus& status);

}  // namespace glucosindy
