#include "glucosindy/ingest.hpp"

#include "glucosindy/error.hpp"
#include "glucosindy/file_io.hpp"
#include "glucosindy/time_format.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>

namespace glucosindy::ingest {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::optional<double> parse_number(std::string_view s) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

long long grid_index(double t, double anchor, double dt) {
    return std::llround((t - anchor) / dt);
}

}  // namespace

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::glucose: return "glucose";
        case EventKind::basal: return "basal";
        case EventKind::bolus: return "bolus";
        case EventKind::carbs: return "carbs";
    }
    return "unknown";
}

EventKind parse_kind(std::string_view text) {
    for (auto kind : kAllKinds) {
        if (text == to_string(kind)) return kind;
    }
    throw InvalidArgument(fmt::format("unknown event kind '{}'", text));
}

std::string validate_record(const EventRecord& r) {
    if (!std::isfinite(r.value) || !std::isfinite(r.timestamp)) return "non-finite value";
    switch (r.kind) {
        case EventKind::glucose:
            if (r.value <= 0.0 || r.value >= 1000.0) return "glucose out of range";
            break;
        case EventKind::basal:
            if (r.value < 0.0) return "negative rate";
            break;
        case EventKind::bolus:
        case EventKind::carbs:
            if (r.value < 0.0) return r.kind == EventKind::bolus ? "negative dose" : "negative carbs";
            break;
    }
    return {};
}

nlohmann::json to_json(const IngestReport& report) {
    nlohmann::json records = nlohmann::json::object();
    for (auto kind : kAllKinds) records[std::string(to_string(kind))] = report.count(kind);
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& d : report.dropped) dropped.push_back({{"line", d.line}, {"reason", d.reason}});
    nlohmann::json gaps = nlohmann::json::array();
    for (const auto& g : report.gaps) {
        gaps.push_back({{"start", format_iso8601(g.start)}, {"end", format_iso8601(g.end)}});
    }
    return {{"n_rows", report.n_rows},   {"n_records", records},       {"n_dropped", report.n_dropped()},
            {"dropped", dropped},        {"n_gaps", report.n_gaps()}, {"gaps", gaps}};
}

LoadResult parse_events(std::string_view csv_text) {
    LoadResult result;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::optional<std::array<std::size_t, 3>> columns;  // timestamp, kind, value
    std::size_t n_columns = 0;

    while (pos <= csv_text.size()) {
        const auto nl = csv_text.find('\n', pos);
        const auto raw = csv_text.substr(pos, nl == std::string_view::npos ? csv_text.npos : nl - pos);
        pos = nl == std::string_view::npos ? csv_text.size() + 1 : nl + 1;
        ++line_no;

        auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_commas(line);

        if (!columns) {
            std::array<std::size_t, 3> idx{};
            const std::array<std::string_view, 3> required{"timestamp", "kind", "value"};
            for (std::size_t r = 0; r < required.size(); ++r) {
                auto it = std::find(fields.begin(), fields.end(), required[r]);
                if (it == fields.end()) {
                    throw IoError(fmt::format("CSV header missing required column '{}'", required[r]));
                }
                idx[r] = static_cast<std::size_t>(it - fields.begin());
            }
            columns = idx;
            n_columns = fields.size();
            continue;
        }

        ++result.report.n_rows;
        auto drop = [&](std::string reason) { result.report.dropped.push_back({line_no, std::move(reason)}); };
        if (fields.size() != n_columns) {
            drop("wrong field count");
            continue;
        }
        EventRecord record;
        try {
            record.timestamp = parse_iso8601(fields[(*columns)[0]]);
        } catch (const InvalidArgument&) {
            drop("bad timestamp");
            continue;
        }
        try {
            record.kind = parse_kind(fields[(*columns)[1]]);
        } catch (const InvalidArgument&) {
            drop("unknown kind");
            continue;
        }
        auto value = parse_number(fields[(*columns)[2]]);
        if (!value) {
            drop("non-numeric value");
            continue;
        }
        record.value = *value;
        if (auto reason = validate_record(record); !reason.empty()) {
            drop(std::move(reason));
            continue;
        }
        ++result.report.n_records[static_cast<std::size_t>(record.kind)];
        result.events.push_back(record);
    }

    if (!columns) throw IoError("CSV has no header line");
    if (result.events.empty()) throw IoError("CSV contains no parsable rows");
    std::stable_sort(result.events.begin(), result.events.end(),
                     [](const EventRecord& a, const EventRecord& b) { return a.timestamp < b.timestamp; });
    return result;
}

LoadResult load_events(const std::filesystem::path& path) { return parse_events(read_file(path)); }

std::string format_events(const std::vector<EventRecord>& events, int decimals) {
    std::string out = "timestamp,kind,value\n";
    for (const auto& e : events) {
        out += fmt::format("{},{},{:.{}f}\n", format_iso8601(e.timestamp), to_string(e.kind), e.value, decimals);
    }
    return out;
}

AlignedDataset align(const std::vector<EventRecord>& events, const AlignOptions& options, IngestReport* report) {
    const double dt = options.dt;
    if (!(dt > 0.0)) throw InvalidArgument("grid step must be positive");
    if (options.max_gap < 0.0) throw InvalidArgument("max_gap must be non-negative");

    std::vector<EventRecord> sorted = events;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const EventRecord& a, const EventRecord& b) { return a.timestamp < b.timestamp; });

    std::vector<const EventRecord*> glucose;
    for (const auto& e : sorted) {
        if (e.kind == EventKind::glucose) glucose.push_back(&e);
    }
    if (glucose.size() < 2) throw InvalidArgument("need at least 2 glucose records to align");

    const double anchor = glucose.front()->timestamp;
    long long lo = 0;
    long long hi = grid_index(glucose.back()->timestamp, anchor, dt);
    for (const auto& e : sorted) {
        if (e.kind == EventKind::bolus || e.kind == EventKind::carbs) {
            const auto k = grid_index(e.timestamp, anchor, dt);
            lo = std::min(lo, k);
            hi = std::max(hi, k);
        }
    }
    const auto n = static_cast<std::size_t>(hi - lo + 1);
    const Grid grid{anchor + static_cast<double>(lo) * dt, dt, n};
    const auto bin = [&](double t) { return static_cast<std::size_t>(grid_index(t, anchor, dt) - lo); };

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> g(n, nan);
    std::vector<bool> observed(n, false);
    for (const auto* e : glucose) {
        const auto i = bin(e->timestamp);
        g[i] = e->value;
        observed[i] = true;
    }

    std::vector<IndexRange> segments;
    std::size_t seg_start = n;
    std::size_t prev = n;
    auto close_segment = [&](std::size_t last) {
        if (last + 1 - seg_start >= 2) segments.push_back({seg_start, last + 1});
    };
    for (std::size_t i = 0; i < n; ++i) {
        if (!observed[i]) continue;
        if (prev == n) {
            seg_start = i;
        } else if (i - prev > 1) {
            if (static_cast<double>(i - prev) * dt <= options.max_gap) {
                const double a = g[prev];
                const double b = g[i];
                const auto span = static_cast<double>(i - prev);
                for (std::size_t k = prev + 1; k < i; ++k) {
                    g[k] = a + (b - a) * static_cast<double>(k - prev) / span;
                }
            } else {
                close_segment(prev);
                if (report) report->gaps.push_back({grid.time(prev), grid.time(i)});
                seg_start = i;
            }
        }
        prev = i;
    }
    close_segment(prev);
    if (segments.empty()) throw InvalidArgument("no glucose segment with at least 2 samples");

    std::vector<double> basal(n, 0.0);
    std::vector<double> bolus(n, 0.0);
    std::vector<double> carbs(n, 0.0);
    {
        std::size_t next = 0;
        double rate = 0.0;
        std::vector<const EventRecord*> basal_events;
        for (const auto& e : sorted) {
            if (e.kind == EventKind::basal) basal_events.push_back(&e);
        }
        for (std::size_t i = 0; i < n; ++i) {
            while (next < basal_events.size() && basal_events[next]->timestamp <= grid.time(i)) {
                rate = basal_events[next]->value;
                ++next;
            }
            basal[i] = rate;
        }
    }
    for (const auto& e : sorted) {
        if (e.kind == EventKind::bolus) bolus[bin(e.timestamp)] += e.value;
        if (e.kind == EventKind::carbs) carbs[bin(e.timestamp)] += e.value;
    }

    AlignedDataset ds;
    ds.grid = grid;
    ds.segments = std::move(segments);
    ds.states.emplace(kGlucose, UniformSeries(grid.t0, dt, std::move(g), "mg/dL"));
    ds.controls.emplace(kBasal, UniformSeries(grid.t0, dt, std::move(basal), "U/hr"));
    ds.controls.emplace(kBolus, UniformSeries(grid.t0, dt, std::move(bolus), "U"));
    ds.controls.emplace(kCarbs, UniformSeries(grid.t0, dt, std::move(carbs), "g"));
    return ds;
}

}  // namespace glucosindy::ingest
