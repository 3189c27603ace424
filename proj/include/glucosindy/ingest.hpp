#pragma once

#include "glucosindy/timeseries.hpp"

#include <json.hpp>

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace glucosindy::ingest {

enum class EventKind { glucose, basal, bolus, carbs };

inline constexpr std::array<EventKind, 4> kAllKinds{EventKind::glucose, EventKind::basal, EventKind::bolus,
                                                    EventKind::carbs};

std::string_view to_string(EventKind kind);
/// Throws InvalidArgument for anything outside {glucose, basal, bolus, carbs}.
EventKind parse_kind(std::string_view text);

/// One patient record. Units: glucose mg/dL, basal U/hr, bolus U, carbs g.
struct EventRecord {
    double timestamp = 0.0;  // UTC seconds
    EventKind kind = EventKind::glucose;
    double value = 0.0;

    bool operator==(const EventRecord&) const = default;
};

struct DroppedRow {
    std::size_t line = 0;  // 1-based line number in the file
    std::string reason;
};

struct GapSpan {
    double start = 0.0;  // time of the last observed sample before the hole
    double end = 0.0;    // time of the first observed sample after it
};

struct IngestReport {
    std::array<std::size_t, 4> n_records{};  // indexed by EventKind
    std::size_t n_rows = 0;                  // data rows seen, excluding header and blank lines
    std::vector<DroppedRow> dropped;
    std::vector<GapSpan> gaps;

    [[nodiscard]] std::size_t n_dropped() const { return dropped.size(); }
    [[nodiscard]] std::size_t n_gaps() const { return gaps.size(); }
    [[nodiscard]] std::size_t count(EventKind kind) const { return n_records[static_cast<std::size_t>(kind)]; }
};

nlohmann::json to_json(const IngestReport& report);

/// Returns the reason a record violates the value invariants, or an empty string.
std::string validate_record(const EventRecord& record);

struct LoadResult {
    std::vector<EventRecord> events;  // sorted by timestamp (stable)
    IngestReport report;
};

/// Parses CSV text with header `timestamp,kind,value` (columns in any order).
/// Malformed rows are dropped and listed in the report.
/// Throws IoError when the header lacks a required column or no row parses.
LoadResult parse_events(std::string_view csv_text);

/// Reads and parses a CSV file. Throws IoError when unreadable.
LoadResult load_events(const std::filesystem::path& path);

/// Writes events as CSV with the `timestamp,kind,value` header, values
/// rounded to `decimals` places.
std::string format_events(const std::vector<EventRecord>& events, int decimals = 4);

struct AlignOptions {
    double dt = 300.0;       // grid step, seconds
    double max_gap = 1800.0; // longest glucose hole bridged by interpolation, seconds
};

/// Channel names produced by align().
inline constexpr const char* kGlucose = "G";
inline constexpr const char* kBasal = "B";
inline constexpr const char* kBolus = "bolus";
inline constexpr const char* kCarbs = "carbs";

/// Aligns events onto a uniform grid anchored at the first glucose reading.
///
/// Glucose snaps to the nearest grid index (later readings win collisions)
/// and is linearly interpolated over holes no longer than max_gap; longer
/// holes split the data into segments and leave NaN in between. Basal is a
/// zero-order hold of the latest rate (0 before the first basal record).
/// Bolus and carbs are summed per grid bin. The grid is widened so every
/// insulin and carb event lands in a bin.
///
/// Gaps are appended to `report` when it is non-null.
AlignedDataset align(const std::vector<EventRecord>& events, const AlignOptions& options = {},
                     IngestReport* report = nullptr);

}  // namespace glucosindy::ingest
