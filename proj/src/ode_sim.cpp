#include "glucosindy/ode_sim.hpp"

#include "glucosindy/error.hpp"
#include "glucosindy/time_format.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace glucosindy {

void SimConfig::validate() const {
    if (substeps < 1) throw InvalidArgument("substeps must be >= 1");
    if (clamp_min && clamp_max && !(*clamp_min < *clamp_max)) {
        throw InvalidArgument("clamp_min must be below clamp_max");
    }
}

ControlInterp SimConfig::interp_for(const std::string& channel) const {
    auto it = channel_interp.find(channel);
    return it == channel_interp.end() ? control_interp : it->second;
}

UniformSeries Forecast::series(std::size_t state) const {
    return UniformSeries(t0, dt, values.at(state), {});
}

std::string to_string(const ForecastStatus& status) {
    return status.completed ? std::string("completed") : fmt::format("diverged-at {}", status.diverged_at);
}

RhsEvaluator::RhsEvaluator(const SparseModel& model)
    : xi_(model.xi), n_states_(model.state_names.size()), n_controls_(model.control_names.size()) {
    model.validate();
    if (static_cast<std::size_t>(xi_.cols()) != n_states_) {
        throw InvalidArgument("model xi columns differ from its state count");
    }
    const auto names = model.channel_names();
    auto index_of = [&](const std::string& name) {
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw InvalidArgument(fmt::format("model term uses unknown channel '{}'", name));
        return static_cast<std::size_t>(it - names.begin());
    };
    for (const auto& t : model.terms) {
        CompiledTerm c{t.kind, {}, t.function, t.omega, 0};
        for (const auto& [name, p] : t.exponents) c.factors.push_back({index_of(name), p});
        if (t.kind == TermKind::trig) c.channel = index_of(t.channel);
        terms_.push_back(std::move(c));
    }
    for (Eigen::Index j = 0; j < xi_.rows(); ++j) {
        if ((xi_.row(j).array() != 0.0).any()) active_rows_.push_back(j);
    }
}

Eigen::VectorXd RhsEvaluator::operator()(std::span<const double> state, std::span<const double> controls) const {
    if (state.size() != n_states_ || controls.size() != n_controls_) {
        throw InvalidArgument(fmt::format("rhs expects {} states and {} controls, got {} and {}", n_states_,
                                          n_controls_, state.size(), controls.size()));
    }
    auto value = [&](std::size_t ch) { return ch < n_states_ ? state[ch] : controls[ch - n_states_]; };
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states_));
    for (auto j : active_rows_) {
        const auto& t = terms_[static_cast<std::size_t>(j)];
        double phi = 1.0;
        switch (t.kind) {
            case TermKind::constant: break;
            case TermKind::monomial:
                for (const auto& f : t.factors) {
                    const double x = value(f.channel);
                    for (int k = 0; k < f.power; ++k) phi *= x;
                }
                break;
            case TermKind::trig: {
                const double arg = t.omega * value(t.channel);
                phi = t.function == TrigFunction::sin ? std::sin(arg) : std::cos(arg);
                break;
            }
        }
        out += phi * xi_.row(j).transpose();
    }
    return out;
}

Eigen::VectorXd rhs_eval(const SparseModel& model, std::span<const double> state, std::span<const double> controls) {
    return RhsEvaluator(model)(state, controls);
}

namespace {

Forecast integrate(const SparseModel& model, std::span<const double> x0,
                   const std::map<std::string, UniformSeries>& controls, std::size_t horizon, const SimConfig& config,
                   std::optional<double> dt, std::optional<double> t_origin) {
    config.validate();
    const RhsEvaluator rhs(model);
    const auto n_states = model.state_names.size();
    if (x0.size() != n_states) throw InvalidArgument("initial state length differs from model states");
    for (double v : x0) {
        if (!std::isfinite(v)) throw InvalidArgument("initial state must be finite");
    }

    std::vector<const UniformSeries*> u;
    std::vector<ControlInterp> interp;
    for (const auto& name : model.control_names) {
        auto it = controls.find(name);
        if (it == controls.end()) throw InvalidArgument(fmt::format("missing control channel '{}'", name));
        if (it->second.size() < horizon + 1) {
            throw InvalidArgument(fmt::format("control '{}' covers {} steps, horizon needs {}", name,
                                              it->second.size() - 1, horizon));
        }
        if (!u.empty() && (*dt != it->second.dt() || *t_origin != it->second.t0())) {
            throw InvalidArgument("control channels are not on a common grid");
        }
        dt = it->second.dt();
        t_origin = it->second.t0();
        u.push_back(&it->second);
        interp.push_back(config.interp_for(name));
    }
    if (!dt) throw InvalidArgument("simulation grid step is unknown: no control channels given");

    Forecast fc;
    fc.dt = *dt;
    fc.t0 = t_origin.value_or(0.0) + fc.dt;
    fc.state_names = model.state_names;
    fc.values.assign(n_states, {});
    for (auto& v : fc.values) v.reserve(horizon);

    const double h = fc.dt / 60.0 / config.substeps;  // minutes
    const double frac_step = 1.0 / config.substeps;

    std::vector<double> uval(u.size());
    auto controls_at = [&](std::size_t k, double frac) -> std::span<const double> {
        for (std::size_t c = 0; c < u.size(); ++c) {
            const auto& vals = u[c]->values();
            uval[c] = interp[c] == ControlInterp::hold ? vals[k] : vals[k] + (vals[k + 1] - vals[k]) * frac;
        }
        return uval;
    };

    double bound = std::numeric_limits<double>::infinity();
    if (config.clamp_min || config.clamp_max) {
        bound = 10.0 * std::max(std::abs(config.clamp_min.value_or(0.0)), std::abs(config.clamp_max.value_or(0.0)));
    }

    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(n_states));
    std::vector<double> tmp(n_states);
    auto f = [&](const Eigen::VectorXd& state, std::size_t k, double frac) {
        std::copy(state.data(), state.data() + state.size(), tmp.begin());
        return rhs(tmp, controls_at(k, frac));
    };

    for (std::size_t k = 0; k < horizon; ++k) {
        bool ok = true;
        for (int s = 0; s < config.substeps && ok; ++s) {
            const double a = s * frac_step;
            const Eigen::VectorXd k1 = f(x, k, a);
            const Eigen::VectorXd k2 = f(x + 0.5 * h * k1, k, a + 0.5 * frac_step);
            const Eigen::VectorXd k3 = f(x + 0.5 * h * k2, k, a + 0.5 * frac_step);
            const Eigen::VectorXd k4 = f(x + h * k3, k, a + frac_step);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                if (!std::isfinite(x(i)) || std::abs(x(i)) > bound) ok = false;
            }
            if (ok && config.clamp_min) x = x.cwiseMax(*config.clamp_min);
            if (ok && config.clamp_max) x = x.cwiseMin(*config.clamp_max);
        }
        if (!ok) {
            fc.status = {false, k};
            break;
        }
        for (std::size_t i = 0; i < n_states; ++i) fc.values[i].push_back(x(static_cast<Eigen::Index>(i)));
    }
    return fc;
}

}  // namespace

Forecast simulate(const SparseModel& model, std::span<const double> x0,
                  const std::map<std::string, UniformSeries>& controls, std::size_t horizon,
                  const SimConfig& config) {
    std::optional<double> dt;
    std::optional<double> t_origin;
    if (!controls.empty()) {
        dt = controls.begin()->second.dt();
        t_origin = controls.begin()->second.t0();
    }
    return integrate(model, x0, controls, horizon, config, dt, t_origin);
}

Forecast simulate(const SparseModel& model, std::span<const double> x0, std::size_t horizon, double dt,
                  const SimConfig& config) {
    if (!model.control_names.empty()) throw InvalidArgument("model has control inputs; pass control channels");
    if (!(dt > 0.0)) throw InvalidArgument("grid step must be positive");
    return integrate(model, x0, {}, horizon, config, dt, 0.0);
}

Forecast simulate(const SparseModel& model, std::span<const double> x0, const AlignedDataset& dataset,
                  std::size_t origin, std::size_t horizon, const SimConfig& config) {
    if (origin + horizon >= dataset.grid.n) {
        throw InvalidArgument(fmt::format("horizon of {} steps from index {} runs past the data end ({} samples)",
                                          horizon, origin, dataset.grid.n));
    }
    std::map<std::string, UniformSeries> controls;
    for (const auto& name : model.control_names) {
        controls.emplace(name, slice(dataset.channel(name), {origin, origin + horizon + 1}));
    }
    return integrate(model, x0, controls, horizon, config, dataset.grid.dt, dataset.grid.time(origin));
}

std::string forecast_to_csv(const Forecast& forecast) {
    std::string out = "t_iso";
    for (const auto& name : forecast.state_names) out += "," + name;
    out += "\n";
    for (std::size_t k = 0; k < forecast.length(); ++k) {
        out += format_iso8601(forecast.t0 + static_cast<double>(k) * forecast.dt);
        for (const auto& v : forecast.values) out += fmt::format(",{:.6f}", v[k]);
        out += "\n";
    }
    out += fmt::format("# status: {}\n", to_string(forecast.status));
    return out;
}

}  // namespace glucosindy
