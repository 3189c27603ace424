// Command-line driver: synth, fit, predict, evaluate.

#include "glucosindy/error.hpp"
#include "glucosindy/file_io.hpp"
#include "glucosindy/pipeline.hpp"
#include "glucosindy/time_format.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace glucosindy;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDegenerate = 2, kIo = 3 };

struct Common {
    std::string config_path;
    std::map<std::string, std::string> overrides;
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config_path, "INI configuration file")->check(CLI::ExistingFile);
    for (const auto& key : pipeline::known_keys()) {
        cmd->add_option("--" + key, common.overrides[key], "override " + key)->group("Config overrides");
    }
}

pipeline::PipelineConfig load(const Common& common) {
    auto config = common.config_path.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(common.config_path);
    for (const auto& [key, value] : common.overrides) {
        if (!value.empty()) pipeline::apply_setting(config, key, value);
    }
    config.validate();
    return config;
}

AlignedDataset load_dataset(const std::string& path, const pipeline::PipelineConfig& config) {
    auto loaded = ingest::load_events(path);
    ingest::IngestReport report = loaded.report;
    auto dataset = pipeline::prepare_dataset(loaded.events, config, &report);
    if (report.n_dropped() > 0) {
        fmt::print(stderr, "warning: {} malformed row(s) dropped from {}\n", report.n_dropped(), path);
        for (const auto& d : report.dropped) fmt::print(stderr, "  line {}: {}\n", d.line, d.reason);
    }
    if (report.n_gaps() > 0) fmt::print(stderr, "note: {} glucose gap(s) split the data into segments\n", report.n_gaps());
    return dataset;
}

std::string fmt_value(double v) {
    return std::isfinite(v) ? fmt::format("{:.6f}", v) : std::string();
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    Common common;
    std::string out_dir;
};

int run_synth(const SynthArgs& args) {
    const auto config = load(args.common);
    const auto data = synth::generate(config.synth);
    fs::create_directories(args.out_dir);
    const fs::path dir(args.out_dir);
    write_file_atomic(dir / "synth.csv", ingest::format_events(data.events));
    save_model(data.truth, dir / "true_model.json");
    fmt::print("wrote {} records over {} grid points to {}\n", data.events.size(), data.dataset.grid.n,
               (dir / "synth.csv").string());
    for (const auto& line : model_to_equations(data.truth)) fmt::print("true: {}\n", line);
    return kOk;
}

// ---------------------------------------------------------------- fit

struct FitArgs {
    Common common;
    std::string data;
    std::string out;
    std::optional<double> train_fraction;
    std::vector<double> sweep;
};

int run_fit(const FitArgs& args) {
    const auto config = load(args.common);
    const auto dataset = load_dataset(args.data, config);
    const auto problem = pipeline::build_problem(dataset, config, args.train_fraction);

    if (!args.sweep.empty()) {
        fmt::print("threshold,active_terms,residual_rms\n");
        for (double lambda : args.sweep) {
            auto stlsq_config = config.stlsq;
            stlsq_config.threshold = lambda;
            const auto m = stlsq(problem.theta, problem.dxdt, stlsq_config, problem.state_names, problem.control_names);
            int active = 0;
            double res = 0.0;
            for (std::size_t s = 0; s < m.state_names.size(); ++s) {
                active += m.diagnostics.active_terms[s];
                res = std::max(res, m.diagnostics.residual_rms[s]);
            }
            fmt::print("{},{},{:.6g}\n", lambda, active, res);
        }
        return kOk;
    }

    const auto model =
        stlsq(problem.theta, problem.dxdt, config.stlsq, problem.state_names, problem.control_names);
    for (const auto& w : model.diagnostics.warnings) fmt::print(stderr, "warning: {}\n", w);
    for (const auto& line : model_to_equations(model)) fmt::print("{}\n", line);
    if (model.all_supports_empty()) {
        fmt::print(stderr, "error: every state has an empty support at threshold {}; no model written\n",
                   config.stlsq.threshold);
        return kDegenerate;
    }
    save_model(model, args.out);
    return kOk;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
    Common common;
    std::string model;
    std::string data;
    std::string origin;
    std::size_t horizon = 0;
    std::string out;
};

int run_predict(const PredictArgs& args) {
    const auto config = load(args.common);
    const auto model = load_model(args.model);
    const auto dataset = load_dataset(args.data, config);
    const auto& grid = dataset.grid;

    const double t = parse_iso8601(args.origin);
    const double offset = (t - grid.t0) / grid.dt;
    const double k = std::round(offset);
    if (std::abs(offset - k) > 1e-6 || k < 0.0 || k >= static_cast<double>(grid.n)) {
        throw InvalidArgument(fmt::format("origin {} is not a grid point of the data ({} to {}, step {} s)",
                                          args.origin, format_iso8601(grid.t0), format_iso8601(grid.time(grid.n - 1)),
                                          grid.dt));
    }
    const auto origin = static_cast<std::size_t>(k);
    if (origin + args.horizon >= grid.n) {
        throw InvalidArgument(fmt::format("horizon of {} steps from {} runs past the end of the data ({} steps available)",
                                          args.horizon, args.origin, grid.n - 1 - origin));
    }

    std::vector<double> x0;
    for (const auto& name : model.state_names) {
        const double v = dataset.channel(name)[origin];
        if (!std::isfinite(v)) throw InvalidArgument(fmt::format("{} is missing at the origin {}", name, args.origin));
        x0.push_back(v);
    }
    const auto fc = simulate(model, x0, dataset, origin, args.horizon, config.simulation);

    std::string csv = "t_iso";
    for (const auto& name : model.state_names) csv += fmt::format(",{0},{0}_observed", name);
    csv += "\n";
    for (std::size_t step = 0; step < args.horizon; ++step) {
        csv += format_iso8601(grid.time(origin + step + 1));
        for (std::size_t s = 0; s < model.state_names.size(); ++s) {
            const double pred = step < fc.length() ? fc.values[s][step] : NAN;
            csv += "," + fmt_value(pred) + "," + fmt_value(dataset.channel(model.state_names[s])[origin + step + 1]);
        }
        csv += "\n";
    }
    csv += fmt::format("# status: {}\n", to_string(fc.status));
    write_file_atomic(args.out, csv);
    if (!fc.status.completed) fmt::print(stderr, "warning: forecast {}\n", to_string(fc.status));
    fmt::print("wrote {} forecast steps to {}\n", args.horizon, args.out);
    return kOk;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
    Common common;
    std::string model;
    std::string data;
    std::string out;
    std::string origins_out;
};

int run_evaluate(const EvaluateArgs& args) {
    const auto config = load(args.common);
    const auto model = load_model(args.model);
    const auto dataset = load_dataset(args.data, config);
    const auto report = eval::rolling_evaluate(model, dataset, config.evaluation, config.simulation);

    const fs::path origins =
        args.origins_out.empty() ? fs::path(args.out).replace_extension(".csv") : fs::path(args.origins_out);
    write_file_atomic(args.out, eval::to_json(report).dump(2) + "\n");
    write_file_atomic(origins, eval::origins_to_csv(report));
    fmt::print("origins: {} ({} diverged, {} excluded)\n", report.n_origins, report.n_diverged, report.n_excluded);
    fmt::print("rmse: {:.4f} mg/dL  baseline_rmse: {:.4f} mg/dL\n", report.rmse, report.baseline_rmse);
    fmt::print("mae:  {:.4f} mg/dL  baseline_mae:  {:.4f} mg/dL\n", report.mae, report.baseline_mae);
    return kOk;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const InvalidArgument& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUsage;
    } catch (const IoError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kIo;
    } catch (const SchemaError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kIo;
    } catch (const fs::filesystem_error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kUsage;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse glucose dynamics identification and forecasting"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic patient CSV and its true model");
    add_common(synth_cmd, synth_args.common);
    synth_cmd->add_option("--out", synth_args.out_dir, "output directory")->required();

    FitArgs fit_args;
    auto* fit_cmd = app.add_subcommand("fit", "identify a sparse model from a data CSV");
    add_common(fit_cmd, fit_args.common);
    fit_cmd->add_option("--data", fit_args.data, "event CSV")->required()->check(CLI::ExistingFile);
    auto* fit_out = fit_cmd->add_option("--out", fit_args.out, "model JSON to write");
    fit_cmd->add_option("--train-fraction", fit_args.train_fraction, "fit on the leading fraction of each segment")
        ->check(CLI::Range(0.0, 1.0));
    fit_cmd->add_option("--sweep", fit_args.sweep, "print support size per threshold instead of fitting")
        ->delimiter(',')
        ->excludes(fit_out);

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "forecast from one origin and export predicted vs observed");
    add_common(predict_cmd, predict_args.common);
    predict_cmd->add_option("--model", predict_args.model, "model JSON")->required();
    predict_cmd->add_option("--data", predict_args.data, "event CSV")->required()->check(CLI::ExistingFile);
    predict_cmd->add_option("--origin", predict_args.origin, "origin timestamp (ISO-8601, on the grid)")->required();
    predict_cmd->add_option("--horizon", predict_args.horizon, "forecast steps")->required()->check(CLI::PositiveNumber);
    predict_cmd->add_option("--out", predict_args.out, "forecast CSV to write")->required();

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "rolling-origin forecast evaluation against persistence");
    add_common(eval_cmd, eval_args.common);
    eval_cmd->add_option("--model", eval_args.model, "model JSON")->required();
    eval_cmd->add_option("--data", eval_args.data, "event CSV")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", eval_args.out, "report JSON to write")->required();
    eval_cmd->add_option("--origins-out", eval_args.origins_out, "per-origin CSV (default: report path with .csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    if (*synth_cmd) return guarded([&] { return run_synth(synth_args); });
    if (*fit_cmd) {
        if (fit_args.sweep.empty() && fit_args.out.empty()) {
            fmt::print(stderr, "error: fit needs --out (or --sweep)\n");
            return kUsage;
        }
        return guarded([&] { return run_fit(fit_args); });
    }
    if (*predict_cmd) return guarded([&] { return run_predict(predict_args); });
    return guarded([&] { return run_evaluate(eval_args); });
}
