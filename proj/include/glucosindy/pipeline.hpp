#pragma once

#include "glucosindy/differentiation.hpp"
#include "glucosindy/evaluation.hpp"
#include "glucosindy/ingest.hpp"
#include "glucosindy/insulin_pk.hpp"
#include "glucosindy/library.hpp"
#include "glucosindy/ode_sim.hpp"
#include "glucosindy/stlsq.hpp"
#include "glucosindy/synth.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace glucosindy::pipeline {

/// Every tunable of the identification pipeline, one INI section per module.
struct PipelineConfig {
    ingest::AlignOptions ingest;
    DerivativeSpec differentiation;
    bool mask_dose_onsets = true;  // drop rows whose stencil straddles a bolus or carb event
    LibrarySpec library = default_library();
    pk::ActionProfile insulin = pk::kBolusInsulinProfile;
    pk::ActionProfile carbs = pk::kCarbProfile;
    StlsqConfig stlsq;
    SimConfig simulation;
    eval::EvalConfig evaluation;
    synth::SynthConfig synth;

    static LibrarySpec default_library();
    void validate() const;
};

/// Sets `section.key` from its text form. Throws InvalidArgument on an
/// unknown key or an unparsable value.
void apply_setting(PipelineConfig& config, std::string_view dotted_key, std::string_view value);

/// Every accepted `section.key`, in documentation order.
std::vector<std::string> known_keys();

/// Parses INI text (sections and `key = value` lines, `#`/`;` comments).
/// Unknown sections or keys are rejected.
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Aligns events onto the grid and adds the insulin and carb activity channels.
AlignedDataset prepare_dataset(const std::vector<ingest::EventRecord>& events, const PipelineConfig& config,
                               ingest::IngestReport* report = nullptr);

/// Rows of the regression problem gathered across segments.
struct RegressionProblem {
    FeatureMatrix theta;
    Eigen::MatrixXd dxdt;
    std::vector<std::string> state_names;
    std::vector<std::string> control_names;
    std::vector<IndexRange> used_ranges;
    std::vector<IndexRange> skipped_ranges;
    std::size_t masked_rows = 0;
};

/// Differentiates the state channels per segment and stacks library rows.
/// With `train_fraction`, only the leading fraction of each segment is used.
/// With mask_dose_onsets, a row is dropped when a bolus or carb event lies
/// strictly inside its derivative stencil: activity signals have a slope
/// discontinuity at onset, which polynomial stencils cannot follow.
/// Throws InvalidArgument when the library names an absent channel, lists a
/// control before a state, or no segment is long enough.
RegressionProblem build_problem(const AlignedDataset& dataset, const PipelineConfig& config,
                                std::optional<double> train_fraction = std::nullopt);

/// build_problem followed by stlsq.
SparseModel fit(const AlignedDataset& dataset, const PipelineConfig& config,
                std::optional<double> train_fraction = std::nullopt);

}  // namespace glucosindy::pipeline
