#include "glucosindy/error.hpp"
#include "glucosindy/file_io.hpp"
#include "glucosindy/stlsq.hpp"

#include <fmt/format.h>
#include <json.hpp>

namespace glucosindy {

using nlohmann::json;

namespace {

json term_to_json(const TermDescriptor& t) {
    switch (t.kind) {
        case TermKind::constant: return {{"kind", "constant"}};
        case TermKind::monomial: {
            json exps = json::array();
            for (const auto& [name, p] : t.exponents) exps.push_back(json::array({name, p}));
            return {{"kind", "monomial"}, {"exponents", exps}};
        }
        case TermKind::trig:
            return {{"kind", "trig"},
                    {"function", t.function == TrigFunction::sin ? "sin" : "cos"},
                    {"omega", t.omega},
                    {"channel", t.channel}};
    }
    return {};
}

TermDescriptor term_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "constant") return TermDescriptor::constant();
    if (kind == "monomial") {
        std::vector<std::pair<std::string, int>> exps;
        for (const auto& e : j.at("exponents")) exps.emplace_back(e.at(0).get<std::string>(), e.at(1).get<int>());
        return TermDescriptor::monomial(std::move(exps));
    }
    if (kind == "trig") {
        const auto fn = j.at("function").get<std::string>();
        if (fn != "sin" && fn != "cos") throw SchemaError(fmt::format("unknown trig function '{}'", fn));
        return TermDescriptor::trig(fn == "sin" ? TrigFunction::sin : TrigFunction::cos, j.at("omega").get<double>(),
                                    j.at("channel").get<std::string>());
    }
    throw SchemaError(fmt::format("unknown term kind '{}'", kind));
}

}  // namespace

std::string model_to_json_text(const SparseModel& model) {
    model.validate();
    json terms = json::array();
    for (const auto& t : model.terms) terms.push_back(term_to_json(t));
    json xi = json::array();
    for (Eigen::Index r = 0; r < model.xi.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < model.xi.cols(); ++c) row.push_back(model.xi(r, c));
        xi.push_back(row);
    }
    const auto& d = model.diagnostics;
    json doc = {
        {"schema_version", kModelSchemaVersion},
        {"states", model.state_names},
        {"controls", model.control_names},
        {"terms", terms},
        {"xi", xi},
        {"config",
         {{"threshold", model.config.threshold},
          {"ridge", model.config.ridge},
          {"max_iter", model.config.max_iter},
          {"normalize_columns", model.config.normalize_columns}}},
        {"diagnostics",
         {{"residual_rms", d.residual_rms},
          {"iterations", d.iterations},
          {"active_terms", d.active_terms},
          {"empty_support", d.empty_support},
          {"warnings", d.warnings}}},
    };
    return doc.dump(2) + "\n";
}

SparseModel model_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(fmt::format("model file is not valid JSON: {}", e.what()));
    }
    try {
        for (const char* key : {"schema_version", "states", "controls", "terms", "xi", "config"}) {
            if (!doc.contains(key)) throw SchemaError(fmt::format("model JSON missing \"{}\"", key));
        }
        const int version = doc.at("schema_version").get<int>();
        if (version != kModelSchemaVersion) {
            throw SchemaError(fmt::format("model schema_version {} is not supported (expected {})", version,
                                          kModelSchemaVersion));
        }
        SparseModel m;
        m.state_names = doc.at("states").get<std::vector<std::string>>();
        m.control_names = doc.at("controls").get<std::vector<std::string>>();
        for (const auto& t : doc.at("terms")) m.terms.push_back(term_from_json(t));

        const auto& xi = doc.at("xi");
        const auto rows = static_cast<Eigen::Index>(xi.size());
        const auto cols = static_cast<Eigen::Index>(m.state_names.size());
        m.xi.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            const auto& row = xi.at(static_cast<std::size_t>(r));
            if (static_cast<Eigen::Index>(row.size()) != cols) throw SchemaError("xi row length differs from state count");
            for (Eigen::Index c = 0; c < cols; ++c) m.xi(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }

        const auto& cfg = doc.at("config");
        m.config.threshold = cfg.at("threshold").get<double>();
        m.config.ridge = cfg.at("ridge").get<double>();
        m.config.max_iter = cfg.at("max_iter").get<int>();
        m.config.normalize_columns = cfg.at("normalize_columns").get<bool>();

        if (doc.contains("diagnostics")) {
            const auto& d = doc.at("diagnostics");
            m.diagnostics.residual_rms = d.value("residual_rms", std::vector<double>{});
            m.diagnostics.iterations = d.value("iterations", std::vector<int>{});
            m.diagnostics.active_terms = d.value("active_terms", std::vector<int>{});
            m.diagnostics.empty_support = d.value("empty_support", std::vector<bool>{});
            m.diagnostics.warnings = d.value("warnings", std::vector<std::string>{});
        }
        m.validate();
        return m;
    } catch (const json::exception& e) {
        throw SchemaError(fmt::format("malformed model JSON: {}", e.what()));
    } catch (const InvalidArgument& e) {
        throw SchemaError(fmt::format("inconsistent model JSON: {}", e.what()));
    }
}

void save_model(const SparseModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, model_to_json_text(model));
}

SparseModel load_model(const std::filesystem::path& path) { return model_from_json_text(read_file(path)); }

}  // namespace glucosindy
