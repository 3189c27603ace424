#include "glucosindy/pipeline.hpp"

#include "glucosindy/error.hpp"
#include "glucosindy/file_io.hpp"
#include "glucosindy/time_format.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

namespace glucosindy::pipeline {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_as(std::string_view text) {
    text = trim(text);
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw InvalidArgument(fmt::format("cannot parse '{}' as a number", text));
    }
    return value;
}

bool parse_bool(std::string_view text) {
    text = trim(text);
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw InvalidArgument(fmt::format("cannot parse '{}' as a boolean", text));
}

std::optional<double> parse_optional(std::string_view text) {
    text = trim(text);
    if (text.empty() || text == "none") return std::nullopt;
    return parse_as<double>(text);
}

DiffScheme parse_scheme(std::string_view text) {
    text = trim(text);
    if (text == "forward") return DiffScheme::forward;
    if (text == "central") return DiffScheme::central;
    if (text == "smoothed") return DiffScheme::smoothed;
    throw InvalidArgument(fmt::format("unknown differentiation scheme '{}'", text));
}

ControlInterp parse_interp(std::string_view text) {
    text = trim(text);
    if (text == "hold") return ControlInterp::hold;
    if (text == "linear") return ControlInterp::linear;
    throw InvalidArgument(fmt::format("unknown control interpolation '{}'", text));
}

/// "7:60, 12.5:80" -> {(7, 60), (12.5, 80)}
std::vector<synth::ScheduledEvent> parse_schedule(std::string_view text) {
    std::vector<synth::ScheduledEvent> out;
    for (auto item : split_list(text)) {
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
            throw InvalidArgument(fmt::format("schedule entry '{}' is not hours:amount", item));
        }
        out.push_back({parse_as<double>(item.substr(0, colon)), parse_as<double>(item.substr(colon + 1))});
    }
    return out;
}

using Setter = std::function<void(PipelineConfig&, std::string_view)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"ingest.dt", [](auto& c, auto v) { c.ingest.dt = parse_as<double>(v); }},
        {"ingest.max_gap", [](auto& c, auto v) { c.ingest.max_gap = parse_as<double>(v); }},

        {"differentiation.scheme", [](auto& c, auto v) { c.differentiation.scheme = parse_scheme(v); }},
        {"differentiation.window", [](auto& c, auto v) { c.differentiation.window = parse_as<int>(v); }},
        {"differentiation.polyorder", [](auto& c, auto v) { c.differentiation.polyorder = parse_as<int>(v); }},
        {"differentiation.mask_dose_onsets", [](auto& c, auto v) { c.mask_dose_onsets = parse_bool(v); }},

        {"library.poly_degree", [](auto& c, auto v) { c.library.poly_degree = parse_as<int>(v); }},
        {"library.include_trig", [](auto& c, auto v) { c.library.include_trig = parse_bool(v); }},
        {"library.trig_frequencies",
         [](auto& c, auto v) {
             c.library.trig_frequencies.clear();
             for (auto item : split_list(v)) c.library.trig_frequencies.push_back(parse_as<double>(item));
         }},
        {"library.channels",
         [](auto& c, auto v) {
             c.library.channels.clear();
             for (auto item : split_list(v)) c.library.channels.emplace_back(item);
         }},

        {"insulin.tau1", [](auto& c, auto v) { c.insulin.tau1 = parse_as<double>(v); }},
        {"insulin.tau2", [](auto& c, auto v) { c.insulin.tau2 = parse_as<double>(v); }},
        {"carbs.tau1", [](auto& c, auto v) { c.carbs.tau1 = parse_as<double>(v); }},
        {"carbs.tau2", [](auto& c, auto v) { c.carbs.tau2 = parse_as<double>(v); }},

        {"stlsq.threshold", [](auto& c, auto v) { c.stlsq.threshold = parse_as<double>(v); }},
        {"stlsq.ridge", [](auto& c, auto v) { c.stlsq.ridge = parse_as<double>(v); }},
        {"stlsq.max_iter", [](auto& c, auto v) { c.stlsq.max_iter = parse_as<int>(v); }},
        {"stlsq.normalize_columns", [](auto& c, auto v) { c.stlsq.normalize_columns = parse_bool(v); }},

        {"simulation.substeps", [](auto& c, auto v) { c.simulation.substeps = parse_as<int>(v); }},
        {"simulation.control_interp", [](auto& c, auto v) { c.simulation.control_interp = parse_interp(v); }},
        {"simulation.hold_channels",
         [](auto& c, auto v) {
             std::erase_if(c.simulation.channel_interp, [](const auto& kv) { return kv.second == ControlInterp::hold; });
             for (auto item : split_list(v)) c.simulation.channel_interp[std::string(item)] = ControlInterp::hold;
         }},
        {"simulation.linear_channels",
         [](auto& c, auto v) {
             std::erase_if(c.simulation.channel_interp, [](const auto& kv) { return kv.second == ControlInterp::linear; });
             for (auto item : split_list(v)) c.simulation.channel_interp[std::string(item)] = ControlInterp::linear;
         }},
        {"simulation.clamp_min", [](auto& c, auto v) { c.simulation.clamp_min = parse_optional(v); }},
        {"simulation.clamp_max", [](auto& c, auto v) { c.simulation.clamp_max = parse_optional(v); }},

        {"evaluation.horizon", [](auto& c, auto v) { c.evaluation.horizon = parse_as<std::size_t>(v); }},
        {"evaluation.origin_stride", [](auto& c, auto v) { c.evaluation.origin_stride = parse_as<std::size_t>(v); }},
        {"evaluation.split", [](auto& c, auto v) { c.evaluation.split = parse_as<double>(v); }},

        {"synth.duration_h", [](auto& c, auto v) { c.synth.duration_h = parse_as<double>(v); }},
        {"synth.seed", [](auto& c, auto v) { c.synth.seed = parse_as<std::uint64_t>(v); }},
        {"synth.noise_sd", [](auto& c, auto v) { c.synth.noise_sd = parse_as<double>(v); }},
        {"synth.p1", [](auto& c, auto v) { c.synth.p1 = parse_as<double>(v); }},
        {"synth.p2", [](auto& c, auto v) { c.synth.p2 = parse_as<double>(v); }},
        {"synth.p3", [](auto& c, auto v) { c.synth.p3 = parse_as<double>(v); }},
        {"synth.gb", [](auto& c, auto v) { c.synth.gb = parse_as<double>(v); }},
        {"synth.g0", [](auto& c, auto v) { c.synth.g0 = parse_as<double>(v); }},
        {"synth.start", [](auto& c, auto v) { c.synth.start = parse_iso8601(trim(v)); }},
        {"synth.basal_rate", [](auto& c, auto v) { c.synth.basal_rate = parse_as<double>(v); }},
        {"synth.meals", [](auto& c, auto v) { c.synth.meals = parse_schedule(v); }},
        {"synth.boluses", [](auto& c, auto v) { c.synth.boluses = parse_schedule(v); }},
    };
    return table;
}

/// First and last sample index of the stencil that produces the derivative at `i`.
std::pair<std::size_t, std::size_t> stencil_extent(const DerivativeSpec& spec, IndexRange r, std::size_t i) {
    switch (spec.scheme) {
        case DiffScheme::forward:
            return i + 1 < r.end ? std::pair{i, i + 1} : std::pair{i - 1, i};
        case DiffScheme::central:
            if (i == r.begin) return {i, i + 1};
            if (i + 1 == r.end) return {i - 1, i};
            return {i - 1, i + 1};
        case DiffScheme::smoothed: {
            const auto w = static_cast<std::size_t>(spec.window);
            const auto half = w / 2;
            const std::size_t start = std::clamp(i < r.begin + half ? r.begin : i - half, r.begin, r.end - w);
            return {start, start + w - 1};
        }
    }
    return {i, i};
}

}  // namespace

LibrarySpec PipelineConfig::default_library() {
    LibrarySpec spec;
    spec.poly_degree = 2;
    spec.channels = {ingest::kGlucose, pk::kInsulinActivity, pk::kCarbActivity};
    return spec;
}

void PipelineConfig::validate() const {
    if (!(ingest.dt > 0.0)) throw InvalidArgument("ingest.dt must be positive");
    if (!(ingest.max_gap >= 0.0)) throw InvalidArgument("ingest.max_gap must be >= 0");
    differentiation.validate();
    library.validate();
    insulin.validate();
    carbs.validate();
    stlsq.validate();
    simulation.validate();
    evaluation.validate();
}

void apply_setting(PipelineConfig& config, std::string_view dotted_key, std::string_view value) {
    for (const auto& [key, setter] : setters()) {
        if (key == dotted_key) {
            try {
                setter(config, value);
            } catch (const InvalidArgument& e) {
                throw InvalidArgument(fmt::format("{}: {}", dotted_key, e.what()));
            }
            return;
        }
    }
    throw InvalidArgument(fmt::format("unknown config key '{}'", dotted_key));
}

std::vector<std::string> known_keys() {
    std::vector<std::string> keys;
    for (const auto& [key, setter] : setters()) keys.push_back(key);
    return keys;
}

PipelineConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw InvalidArgument(fmt::format("config line {}: {}", e.line(), e.message()));
    }
    PipelineConfig config;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw InvalidArgument(fmt::format("config key '{}' is outside any section", section));
        for (const auto& [key, value] : body) {
            apply_setting(config, section + "." + key, value.data());
        }
    }
    config.validate();
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

AlignedDataset prepare_dataset(const std::vector<ingest::EventRecord>& events, const PipelineConfig& config,
                               ingest::IngestReport* report) {
    auto ds = ingest::align(events, config.ingest, report);
    pk::add_activity_channels(ds, config.insulin, config.carbs);
    return ds;
}

RegressionProblem build_problem(const AlignedDataset& dataset, const PipelineConfig& config,
                                std::optional<double> train_fraction) {
    const auto& spec = config.library;
    spec.validate();
    config.differentiation.validate();

    RegressionProblem problem;
    for (const auto& name : spec.channels) {
        if (dataset.states.contains(name)) {
            if (!problem.control_names.empty()) {
                throw InvalidArgument(fmt::format("library lists state '{}' after a control channel", name));
            }
            problem.state_names.push_back(name);
        } else if (dataset.controls.contains(name)) {
            problem.control_names.push_back(name);
        } else {
            throw InvalidArgument(fmt::format("library channel '{}' is not in the dataset", name));
        }
    }
    if (problem.state_names.empty()) throw InvalidArgument("library lists no state channel");

    std::vector<std::size_t> onsets;
    if (config.mask_dose_onsets) {
        for (const char* name : {ingest::kBolus, ingest::kCarbs}) {
            auto it = dataset.controls.find(name);
            if (it == dataset.controls.end()) continue;
            for (std::size_t i = 0; i < it->second.size(); ++i) {
                if (it->second[i] > 0.0) onsets.push_back(i);
            }
        }
        std::sort(onsets.begin(), onsets.end());
    }

    std::vector<Eigen::MatrixXd> theta_blocks;
    std::vector<Eigen::MatrixXd> dxdt_blocks;
    Eigen::Index total = 0;
    for (const auto& seg : dataset.segments) {
        IndexRange r = seg;
        if (train_fraction) {
            r.end = seg.begin + static_cast<std::size_t>(std::floor(*train_fraction * static_cast<double>(seg.size())));
        }
        if (r.size() < config.differentiation.min_length()) {
            problem.skipped_ranges.push_back(r);
            continue;
        }
        auto fm = build_matrix(dataset, spec, r);
        Eigen::MatrixXd d(fm.values.rows(), static_cast<Eigen::Index>(problem.state_names.size()));
        for (std::size_t s = 0; s < problem.state_names.size(); ++s) {
            const auto deriv = differentiate(slice(dataset.states.at(problem.state_names[s]), r), config.differentiation);
            d.col(static_cast<Eigen::Index>(s)) = Eigen::Map<const Eigen::VectorXd>(deriv.values().data(), fm.values.rows());
        }

        std::vector<Eigen::Index> keep;
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const auto [lo, hi] = stencil_extent(config.differentiation, r, i);
            auto it = std::upper_bound(onsets.begin(), onsets.end(), lo);
            if (it != onsets.end() && *it < hi) {
                ++problem.masked_rows;
                continue;
            }
            keep.push_back(static_cast<Eigen::Index>(i - r.begin));
        }
        if (keep.empty()) continue;
        total += static_cast<Eigen::Index>(keep.size());
        if (problem.theta.terms.empty()) problem.theta.terms = fm.terms;
        theta_blocks.push_back(fm.values(keep, Eigen::all));
        dxdt_blocks.push_back(d(keep, Eigen::all));
        problem.used_ranges.push_back(r);
    }
    if (theta_blocks.empty()) throw InvalidArgument("no segment is long enough to differentiate");

    problem.theta.values.resize(total, theta_blocks.front().cols());
    problem.dxdt.resize(total, dxdt_blocks.front().cols());
    Eigen::Index row = 0;
    for (std::size_t b = 0; b < theta_blocks.size(); ++b) {
        const auto n = theta_blocks[b].rows();
        problem.theta.values.middleRows(row, n) = theta_blocks[b];
        problem.dxdt.middleRows(row, n) = dxdt_blocks[b];
        row += n;
    }
    return problem;
}

SparseModel fit(const AlignedDataset& dataset, const PipelineConfig& config, std::optional<double> train_fraction) {
    auto problem = build_problem(dataset, config, train_fraction);
    return stlsq(problem.theta, problem.dxdt, config.stlsq, problem.state_names, problem.control_names);
}

}  // namespace glucosindy::pipeline
