#include "glucosindy/stlsq.hpp"

#include "glucosindy/error.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <cmath>

namespace glucosindy {

namespace {

double rms(const Eigen::Ref<const Eigen::VectorXd>& v) {
    return v.size() == 0 ? 0.0 : v.norm() / std::sqrt(static_cast<double>(v.size()));
}

/// Ridge least squares restricted to `support`; entries outside stay zero.
Eigen::VectorXd solve_on_support(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const std::vector<bool>& support,
                                 double ridge) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (support[static_cast<std::size_t>(j)]) cols.push_back(j);
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(a.cols());
    if (cols.empty()) return c;

    const auto k = static_cast<Eigen::Index>(cols.size());
    const Eigen::Index rows = a.rows();
    const bool regularised = ridge > 0.0;
    Eigen::MatrixXd lhs = Eigen::MatrixXd::Zero(rows + (regularised ? k : 0), k);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(lhs.rows());
    for (Eigen::Index i = 0; i < k; ++i) lhs.col(i).head(rows) = a.col(cols[static_cast<std::size_t>(i)]);
    rhs.head(rows) = y;
    if (regularised) lhs.bottomRows(k).diagonal().setConstant(std::sqrt(ridge));

    const Eigen::VectorXd sol = lhs.colPivHouseholderQr().solve(rhs);
    for (Eigen::Index i = 0; i < k; ++i) c(cols[static_cast<std::size_t>(i)]) = sol(i);
    return c;
}

}  // namespace

void StlsqConfig::validate() const {
    if (!(threshold >= 0.0)) throw InvalidArgument("threshold must be >= 0");
    if (!(ridge >= 0.0)) throw InvalidArgument("ridge must be >= 0");
    if (max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
}

std::vector<std::string> SparseModel::channel_names() const {
    std::vector<std::string> names = state_names;
    names.insert(names.end(), control_names.begin(), control_names.end());
    return names;
}

bool SparseModel::all_supports_empty() const { return (xi.array() == 0.0).all(); }

void SparseModel::validate() const {
    if (static_cast<std::size_t>(xi.rows()) != terms.size()) {
        throw InvalidArgument(fmt::format("xi has {} rows for {} terms", xi.rows(), terms.size()));
    }
    if (!state_names.empty() && static_cast<std::size_t>(xi.cols()) != state_names.size()) {
        throw InvalidArgument(fmt::format("xi has {} columns for {} states", xi.cols(), state_names.size()));
    }
    for (const auto& t : terms) t.validate();
}

bool SparseModel::operator==(const SparseModel& other) const {
    return xi.rows() == other.xi.rows() && xi.cols() == other.xi.cols() && xi == other.xi && terms == other.terms &&
           state_names == other.state_names && control_names == other.control_names && config == other.config &&
           diagnostics == other.diagnostics;
}

SparseModel stlsq(const FeatureMatrix& theta, const Eigen::MatrixXd& dxdt, const StlsqConfig& config,
                  std::vector<std::string> state_names, std::vector<std::string> control_names) {
    config.validate();
    const Eigen::MatrixXd& a_raw = theta.values;
    if (a_raw.rows() != dxdt.rows()) {
        throw InvalidArgument(fmt::format("library has {} rows, derivatives have {}", a_raw.rows(), dxdt.rows()));
    }
    if (static_cast<std::size_t>(a_raw.cols()) != theta.terms.size()) {
        throw InvalidArgument("feature matrix column count differs from its term list");
    }
    if (!state_names.empty() && static_cast<Eigen::Index>(state_names.size()) != dxdt.cols()) {
        throw InvalidArgument("state name count differs from derivative columns");
    }

    const Eigen::Index n_terms = a_raw.cols();
    const Eigen::Index n_states = dxdt.cols();

    SparseModel model;
    model.terms = theta.terms;
    model.state_names = std::move(state_names);
    model.control_names = std::move(control_names);
    model.config = config;
    model.xi = Eigen::MatrixXd::Zero(n_terms, n_states);
    if (a_raw.rows() < n_terms) {
        model.diagnostics.warnings.push_back(
            fmt::format("{} samples for {} library terms; the fit is underdetermined", a_raw.rows(), n_terms));
    }

    Eigen::VectorXd col_scale = Eigen::VectorXd::Ones(n_terms);
    std::vector<bool> usable(static_cast<std::size_t>(n_terms), true);
    for (Eigen::Index j = 0; j < n_terms; ++j) {
        const double s = rms(a_raw.col(j));
        if (s == 0.0) usable[static_cast<std::size_t>(j)] = false;
        if (config.normalize_columns && s > 0.0) col_scale(j) = s;
    }
    const Eigen::MatrixXd a = a_raw * col_scale.cwiseInverse().asDiagonal();

    for (Eigen::Index s = 0; s < n_states; ++s) {
        const Eigen::VectorXd y_raw = dxdt.col(s);
        double y_scale = 1.0;
        if (config.normalize_columns && rms(y_raw) > 0.0) y_scale = rms(y_raw);
        const Eigen::VectorXd y = y_raw / y_scale;

        std::vector<bool> support = usable;
        Eigen::VectorXd c = solve_on_support(a, y, support, config.ridge);
        int iterations = 0;
        bool converged = false;
        while (iterations < config.max_iter) {
            ++iterations;
            std::vector<bool> next = support;
            for (Eigen::Index j = 0; j < n_terms; ++j) {
                if (std::abs(c(j)) < config.threshold) next[static_cast<std::size_t>(j)] = false;
            }
            if (next == support) {
                converged = true;
                break;
            }
            support = std::move(next);
            c = solve_on_support(a, y, support, config.ridge);
        }
        if (!converged) {
            for (Eigen::Index j = 0; j < n_terms; ++j) {
                if (std::abs(c(j)) < config.threshold) c(j) = 0.0;
            }
            model.diagnostics.warnings.push_back(
                fmt::format("state {}: support still changing after {} iterations", s, config.max_iter));
        }

        const Eigen::VectorXd xi = c.cwiseQuotient(col_scale) * y_scale;
        model.xi.col(s) = xi;
        const int active = static_cast<int>((xi.array() != 0.0).count());
        model.diagnostics.iterations.push_back(iterations);
        model.diagnostics.active_terms.push_back(active);
        model.diagnostics.empty_support.push_back(active == 0);
        model.diagnostics.residual_rms.push_back(rms(a_raw * xi - y_raw));
    }
    return model;
}

std::vector<std::string> model_to_equations(const SparseModel& model) {
    std::vector<std::string> lines;
    for (Eigen::Index s = 0; s < model.xi.cols(); ++s) {
        const auto name = static_cast<std::size_t>(s) < model.state_names.size()
                              ? model.state_names[static_cast<std::size_t>(s)]
                              : fmt::format("x{}", s);
        std::string rhs;
        for (Eigen::Index j = 0; j < model.xi.rows(); ++j) {
            const double v = model.xi(j, s);
            if (v == 0.0) continue;
            const auto term = fmt::format("{:#.4g}·{}", std::abs(v), term_to_string(model.terms[static_cast<std::size_t>(j)]));
            if (rhs.empty()) {
                rhs = v < 0.0 ? "-" + term : term;
            } else {
                rhs += (v < 0.0 ? " - " : " + ") + term;
            }
        }
        lines.push_back(fmt::format("d{}/dt = {}", name, rhs.empty() ? "0" : rhs));
    }
    return lines;
}

}  // namespace glucosindy
