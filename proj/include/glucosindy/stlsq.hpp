#pragma once

#include "glucosindy/library.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace glucosindy {

struct StlsqConfig {
    double threshold = 0.05;  // on the normalized scale when normalize_columns
    double ridge = 1e-6;
    int max_iter = 20;
    bool normalize_columns = true;

    void validate() const;
    bool operator==(const StlsqConfig&) const = default;
};

struct StlsqDiagnostics {
    std::vector<double> residual_rms;  // per state
    std::vector<int> iterations;       // per state
    std::vector<int> active_terms;     // per state
    std::vector<bool> empty_support;   // per state; a zero right-hand side is flagged, not an error
    std::vector<std::string> warnings;

    bool operator==(const StlsqDiagnostics&) const = default;
};

/// Identified ODE right-hand side: d(state_s)/dt = sum_j xi(j, s) * term_j.
/// Terms are evaluated over channels ordered states first, then controls.
struct SparseModel {
    Eigen::MatrixXd xi;  // n_terms x n_states
    std::vector<TermDescriptor> terms;
    std::vector<std::string> state_names;
    std::vector<std::string> control_names;
    StlsqConfig config;
    StlsqDiagnostics diagnostics;

    [[nodiscard]] std::vector<std::string> channel_names() const;
    [[nodiscard]] bool all_supports_empty() const;
    /// Throws InvalidArgument on inconsistent dimensions.
    void validate() const;

    bool operator==(const SparseModel& other) const;
};

/// Sequentially thresholded least squares, one state column at a time.
///
/// Each column of theta (and the target) is scaled to unit RMS when
/// normalize_columns is set; a ridge-regularised least-squares problem is
/// solved with a column-pivoted QR; coefficients below the threshold are
/// removed and the fit repeated on the survivors until the support stops
/// changing or max_iter is reached. Columns that are identically zero never
/// enter the support.
///
/// Throws InvalidArgument when theta and dxdt disagree on the row count.
SparseModel stlsq(const FeatureMatrix& theta, const Eigen::MatrixXd& dxdt, const StlsqConfig& config,
                  std::vector<std::string> state_names = {}, std::vector<std::string> control_names = {});

/// One line per state, e.g. "dG/dt = 2.200·1 - 0.02000·G - 1.500·I_act".
std::vector<std::string> model_to_equations(const SparseModel& model);

inline constexpr int kModelSchemaVersion = 1;

/// Writes the model JSON atomically (temp file, then rename).
void save_model(const SparseModel& model, const std::filesystem::path& path);
/// Throws IoError when unreadable, SchemaError on a malformed or mismatched document.
SparseModel load_model(const std::filesystem::path& path);

std::string model_to_json_text(const SparseModel& model);
SparseModel model_from_json_text(const std::string& text);

}  // namespace glucosindy
