#pragma once

#include "glucosindy/timeseries.hpp"

#include <Eigen/Core>

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace glucosindy {

enum class TermKind { constant, monomial, trig };
enum class TrigFunction { sin, cos };

/// One candidate right-hand-side function.
///
/// Monomials keep their factors in library channel order with positive
/// powers, e.g. {("G", 2), ("I_act", 1)} for G^2·I_act.
struct TermDescriptor {
    TermKind kind = TermKind::constant;
    std::vector<std::pair<std::string, int>> exponents;
    TrigFunction function = TrigFunction::sin;
    double omega = 1.0;
    std::string channel;

    static TermDescriptor constant();
    static TermDescriptor monomial(std::vector<std::pair<std::string, int>> exponents);
    static TermDescriptor trig(TrigFunction fn, double omega, std::string channel);

    [[nodiscard]] int degree() const;
    /// Throws InvalidArgument when the populated fields do not match `kind`.
    void validate() const;

    bool operator==(const TermDescriptor&) const = default;
};

struct LibrarySpec {
    int poly_degree = 2;
    bool include_trig = false;
    std::vector<double> trig_frequencies;
    std::vector<std::string> channels;  // states first, then controls

    void validate() const;
};

struct FeatureMatrix {
    Eigen::MatrixXd values;  // rows: samples, columns: terms
    std::vector<TermDescriptor> terms;
};

/// Constant, then monomials of degree 1..poly_degree in graded lexicographic
/// order over `channels`, then per channel per frequency sin and cos terms.
std::vector<TermDescriptor> enumerate_terms(const LibrarySpec& spec);

/// Evaluates one term given channel values ordered like `channels`.
double evaluate_term(const TermDescriptor& term, std::span<const std::string> channels,
                     std::span<const double> values);

/// Rows [segment.begin, segment.end) of the library evaluated on `dataset`.
FeatureMatrix build_matrix(const AlignedDataset& dataset, const LibrarySpec& spec, IndexRange segment);

/// Canonical text form: "1", "G^2·I_act", "sin(0.5·G)".
std::string term_to_string(const TermDescriptor& term);

/// Shortest round-trip decimal with at least one fractional digit ("1.0", "0.25").
std::string format_real(double value);

}  // namespace glucosindy
