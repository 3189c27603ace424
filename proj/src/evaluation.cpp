#include "glucosindy/evaluation.hpp"

#include "glucosindy/error.hpp"
#include "glucosindy/time_format.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace glucosindy::eval {

namespace {

void check_comparable(const UniformSeries& pred, const UniformSeries& truth) {
    if (pred.size() != truth.size()) {
        throw InvalidArgument(fmt::format("length mismatch: {} predicted vs {} observed", pred.size(), truth.size()));
    }
    if (pred.dt() != truth.dt() || pred.t0() != truth.t0()) throw InvalidArgument("series are on different grids");
}

const char* outcome_name(OriginOutcome o) {
    switch (o) {
        case OriginOutcome::completed: return "completed";
        case OriginOutcome::diverged_prefix: return "diverged_prefix";
        case OriginOutcome::excluded: return "excluded";
    }
    return "";
}

struct ErrorSums {
    double sq = 0.0;
    double abs = 0.0;
    std::size_t n = 0;
};

}  // namespace

void EvalConfig::validate() const {
    if (horizon < 1) throw InvalidArgument("evaluation horizon must be >= 1");
    if (origin_stride < 1) throw InvalidArgument("origin_stride must be >= 1");
    if (!(split > 0.0 && split < 1.0)) throw InvalidArgument("split must lie strictly between 0 and 1");
}

double rmse(const UniformSeries& pred, const UniformSeries& truth) {
    check_comparable(pred, truth);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(pred.size()));
}

double mae(const UniformSeries& pred, const UniformSeries& truth) {
    check_comparable(pred, truth);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - truth[i]);
    return acc / static_cast<double>(pred.size());
}

UniformSeries persistence_baseline(double truth_at_origin, std::size_t horizon, double t_origin, double dt) {
    if (!std::isfinite(truth_at_origin)) throw InvalidArgument("persistence origin value must be finite");
    return UniformSeries(t_origin + dt, dt, std::vector<double>(horizon, truth_at_origin));
}

void aggregate(EvalReport& report) {
    ErrorSums model;
    ErrorSums base;
    report.n_origins = report.origins.size();
    report.n_diverged = 0;
    report.n_excluded = 0;
    for (const auto& o : report.origins) {
        if (o.outcome != OriginOutcome::completed) ++report.n_diverged;
        if (o.outcome == OriginOutcome::excluded) {
            ++report.n_excluded;
            continue;
        }
        const auto n = static_cast<double>(o.n_scored);
        model.sq += n * o.rmse * o.rmse;
        model.abs += n * o.mae;
        base.sq += n * o.baseline_rmse * o.baseline_rmse;
        base.abs += n * o.baseline_mae;
        model.n += o.n_scored;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto n = static_cast<double>(model.n);
    report.rmse = model.n ? std::sqrt(model.sq / n) : nan;
    report.mae = model.n ? model.abs / n : nan;
    report.baseline_rmse = model.n ? std::sqrt(base.sq / n) : nan;
    report.baseline_mae = model.n ? base.abs / n : nan;
}

std::vector<std::size_t> evaluation_origins(const AlignedDataset& dataset, const EvalConfig& config) {
    config.validate();
    std::vector<std::size_t> origins;
    for (const auto& seg : dataset.segments) {
        const auto split = seg.begin + static_cast<std::size_t>(std::floor(config.split * static_cast<double>(seg.size())));
        for (std::size_t o = split; o + config.horizon < seg.end; o += config.origin_stride) origins.push_back(o);
    }
    return origins;
}

EvalReport rolling_evaluate(const SparseModel& model, const AlignedDataset& dataset, const EvalConfig& config,
                            const SimConfig& sim) {
    const auto origins = evaluation_origins(dataset, config);
    if (origins.empty()) throw InvalidArgument("no evaluation origin fits the held-out data");

    std::vector<const UniformSeries*> truth;
    for (const auto& name : model.state_names) {
        auto it = dataset.states.find(name);
        if (it == dataset.states.end()) throw InvalidArgument(fmt::format("dataset lacks state channel '{}'", name));
        truth.push_back(&it->second);
    }

    EvalReport report;
    std::vector<double> x0(truth.size());
    for (auto o : origins) {
        for (std::size_t s = 0; s < truth.size(); ++s) x0[s] = (*truth[s])[o];
        const Forecast fc = simulate(model, x0, dataset, o, config.horizon, sim);

        OriginResult r;
        r.origin = o;
        r.time = dataset.grid.time(o);
        const std::size_t steps = fc.length();
        if (fc.status.completed) {
            r.outcome = OriginOutcome::completed;
        } else if (2 * steps >= config.horizon && steps > 0) {
            r.outcome = OriginOutcome::diverged_prefix;
        } else {
            r.outcome = OriginOutcome::excluded;
        }
        if (r.outcome == OriginOutcome::excluded) {
            r.rmse = r.mae = r.baseline_rmse = r.baseline_mae = std::numeric_limits<double>::quiet_NaN();
        } else {
            ErrorSums m;
            ErrorSums b;
            for (std::size_t s = 0; s < truth.size(); ++s) {
                const auto observed = slice(*truth[s], {o + 1, o + 1 + steps});
                const auto predicted = fc.series(s);
                const auto base = persistence_baseline(x0[s], steps, dataset.grid.time(o), dataset.grid.dt);
                const double n = static_cast<double>(steps);
                m.sq += std::pow(rmse(predicted, observed), 2) * n;
                m.abs += mae(predicted, observed) * n;
                b.sq += std::pow(rmse(base, observed), 2) * n;
                b.abs += mae(base, observed) * n;
                m.n += steps;
            }
            const auto n = static_cast<double>(m.n);
            r.n_scored = m.n;
            r.rmse = std::sqrt(m.sq / n);
            r.mae = m.abs / n;
            r.baseline_rmse = std::sqrt(b.sq / n);
            r.baseline_mae = b.abs / n;
        }
        report.origins.push_back(r);
    }
    aggregate(report);
    return report;
}

nlohmann::json to_json(const EvalReport& report) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json origins = nlohmann::json::array();
    for (const auto& o : report.origins) {
        origins.push_back({{"origin", o.origin},
                           {"time", format_iso8601(o.time)},
                           {"outcome", outcome_name(o.outcome)},
                           {"n_scored", o.n_scored},
                           {"rmse", num(o.rmse)},
                           {"mae", num(o.mae)},
                           {"baseline_rmse", num(o.baseline_rmse)},
                           {"baseline_mae", num(o.baseline_mae)}});
    }
    return {{"n_origins", report.n_origins},
            {"n_diverged", report.n_diverged},
            {"n_excluded", report.n_excluded},
            {"rmse", num(report.rmse)},
            {"mae", num(report.mae)},
            {"baseline_rmse", num(report.baseline_rmse)},
            {"baseline_mae", num(report.baseline_mae)},
            {"origins", origins}};
}

std::string origins_to_csv(const EvalReport& report) {
    std::string out = "origin,t_iso,outcome,n_scored,rmse,mae,baseline_rmse,baseline_mae\n";
    for (const auto& o : report.origins) {
        out += fmt::format("{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", o.origin, format_iso8601(o.time),
                           outcome_name(o.outcome), o.n_scored, o.rmse, o.mae, o.baseline_rmse, o.baseline_mae);
    }
    return out;
}

}  // namespace glucosindy::eval
