#include "glucosindy/error.hpp"
#include "glucosindy/ingest.hpp"
#include "glucosindy/time_format.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace glucosindy;
using namespace glucosindy::ingest;

namespace {

constexpr double kT0 = 1704067200.0;  // 2024-01-01T00:00:00Z

EventRecord glucose(double t, double v) { return {kT0 + t, EventKind::glucose, v}; }
EventRecord bolus(double t, double v) { return {kT0 + t, EventKind::bolus, v}; }

}  // namespace

TEST_CASE("parse valid rows") {
    const auto r = parse_events("timestamp,kind,value\n"
                                "2024-01-01T00:00:00Z,glucose,110\n"
                                "2024-01-01T00:05:00Z,bolus,2.5\n"
                                "2024-01-01T00:10:00Z,carbs,40\n");
    CHECK(r.events.size() == 3);
    CHECK(r.report.n_dropped() == 0);
    CHECK(r.report.n_rows == 3);
    CHECK(r.report.count(EventKind::bolus) == 1);
    CHECK(r.events[1] == EventRecord{kT0 + 300, EventKind::bolus, 2.5});
}

TEST_CASE("negative bolus is dropped with its reason") {
    const auto r = parse_events("timestamp,kind,value\n"
                                "2024-01-01T00:00:00Z,glucose,110\n"
                                "2024-01-01T00:05:00Z,bolus,-1\n"
                                "2024-01-01T00:10:00Z,glucose,112\n");
    REQUIRE(r.report.n_dropped() == 1);
    CHECK(r.report.dropped[0].reason == "negative dose");
    CHECK(r.report.dropped[0].line == 3);
    CHECK(r.events.size() == 2);
}

TEST_CASE("shuffled rows come back sorted") {
    const auto r = parse_events("timestamp,kind,value\n"
                                "2024-01-01T00:10:00Z,glucose,3\n"
                                "2024-01-01T00:00:00Z,glucose,1\n"
                                "2024-01-01T00:05:00Z,glucose,2\n");
    REQUIRE(r.events.size() == 3);
    CHECK(std::is_sorted(r.events.begin(), r.events.end(),
                         [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
    CHECK(r.events.front().value == 1);
    CHECK(r.events.back().value == 3);
}

TEST_CASE("malformed rows are dropped and counted") {
    const auto r = parse_events("# exported\n"
                                "kind,value,timestamp\n"
                                "glucose,110,2024-01-01T00:00:00Z\n"
                                "glucose,110\n"
                                "glucose,110,not-a-time\n"
                                "ketones,1,2024-01-01T00:00:00Z\n"
                                "glucose,abc,2024-01-01T00:00:00Z\n"
                                "glucose,0,2024-01-01T00:00:00Z\n"
                                "glucose,nan,2024-01-01T00:00:00Z\n"
                                "basal,-0.5,2024-01-01T00:00:00Z\n"
                                "carbs,-10,2024-01-01T00:00:00Z\n"
                                "\n");
    CHECK(r.events.size() == 1);
    std::vector<std::string> reasons;
    for (const auto& d : r.report.dropped) reasons.push_back(d.reason);
    CHECK(reasons == std::vector<std::string>{"wrong field count", "bad timestamp", "unknown kind",
                                              "non-numeric value", "glucose out of range", "non-finite value",
                                              "negative rate", "negative carbs"});
    CHECK(r.report.n_rows == r.events.size() + r.report.n_dropped());
    const auto json = to_json(r.report);
    CHECK(json["n_dropped"] == 8);
    CHECK(json["dropped"][0]["line"] == 4);
}

TEST_CASE("load errors") {
    CHECK_THROWS_AS(parse_events(""), IoError);
    CHECK_THROWS_AS(parse_events("timestamp,kind\n2024-01-01T00:00:00Z,glucose\n"), IoError);
    CHECK_THROWS_AS(parse_events("timestamp,kind,value\n2024-01-01T00:00:00Z,glucose,-4\n"), IoError);
    CHECK_THROWS_AS(load_events("/nonexistent/events.csv"), IoError);
}

TEST_CASE("format then parse reproduces rounded events") {
    const std::vector<EventRecord> events{glucose(0, 110.123456), bolus(300, 1.5), {kT0 + 600, EventKind::carbs, 45}};
    const auto text = format_events(events);
    CHECK(text.starts_with("timestamp,kind,value\n2024-01-01T00:00:00Z,glucose,110.1235\n"));
    const auto back = parse_events(text).events;
    REQUIRE(back.size() == 3);
    CHECK(back[0].value == 110.1235);
    CHECK(back[2] == events[2]);
}

TEST_CASE("glucose already on the grid") {
    const auto ds = align({glucose(0, 100), glucose(300, 110), glucose(600, 120)});
    REQUIRE(ds.segments == std::vector<IndexRange>{{0, 3}});
    CHECK(ds.states.at(kGlucose).values() == std::vector<double>{100, 110, 120});
    CHECK(ds.grid.t0 == kT0);
    CHECK_NOTHROW(ds.validate());
}

TEST_CASE("missing sample is interpolated at the midpoint") {
    const auto ds = align({glucose(0, 100), glucose(600, 130)}, {300, 600});
    REQUIRE(ds.segments == std::vector<IndexRange>{{0, 3}});
    CHECK(ds.states.at(kGlucose)[1] == 115.0);
}

TEST_CASE("long hole splits segments") {
    IngestReport report;
    std::vector<EventRecord> ev;
    for (int i = 0; i < 5; ++i) ev.push_back(glucose(300.0 * i, 100 + i));
    for (int i = 20; i < 25; ++i) ev.push_back(glucose(300.0 * i, 100 + i));
    const auto ds = align(ev, {300, 1800}, &report);
    CHECK(ds.segments == std::vector<IndexRange>{{0, 5}, {20, 25}});
    REQUIRE(report.n_gaps() == 1);
    CHECK(report.gaps[0].start == kT0 + 1200);
    CHECK(report.gaps[0].end == kT0 + 6000);
    CHECK(std::isnan(ds.states.at(kGlucose)[10]));
    for (const auto& seg : ds.segments) {
        for (auto i = seg.begin; i < seg.end; ++i) CHECK(std::isfinite(ds.states.at(kGlucose)[i]));
    }
}

TEST_CASE("off-grid readings snap and the later one wins") {
    const auto ds = align({glucose(0, 100), glucose(290, 105), glucose(310, 107), glucose(600, 110)});
    CHECK(ds.states.at(kGlucose).values() == std::vector<double>{100, 107, 110});
}

TEST_CASE("boluses in one bin accumulate") {
    const auto ds = align({glucose(0, 100), bolus(290, 2), bolus(420, 3), glucose(600, 100)});
    CHECK(ds.controls.at(kBolus).values() == std::vector<double>{0, 5, 0});
}

TEST_CASE("basal is a zero-order hold") {
    const auto ds = align({glucose(0, 100), {kT0 + 400, EventKind::basal, 0.8}, {kT0 + 900, EventKind::basal, 1.2},
                           glucose(1500, 100)});
    CHECK(ds.controls.at(kBasal).values() == std::vector<double>{0, 0, 0.8, 1.2, 1.2, 1.2});
}

TEST_CASE("grid widens to keep doses outside the glucose span") {
    const auto ds = align({bolus(-600, 1), glucose(0, 100), glucose(300, 100), {kT0 + 1200, EventKind::carbs, 30}});
    CHECK(ds.grid.t0 == kT0 - 600);
    CHECK(ds.grid.n == 7);
    CHECK(ds.controls.at(kBolus)[0] == 1);
    CHECK(ds.controls.at(kCarbs)[6] == 30);
    CHECK(ds.segments == std::vector<IndexRange>{{2, 4}});
}

TEST_CASE("bolus channel conserves total dose") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<EventRecord> ev;
        for (int i = 0; i < 100; ++i) ev.push_back(glucose(300.0 * i, 120));
        double total = 0;
        const int n_doses = 1 + static_cast<int>(rng() % 30);
        for (int k = 0; k < n_doses; ++k) {
            // pump resolution of 1/64 U keeps every partial sum exact
            const double dose = static_cast<double>(rng() % 640) / 64.0;
            const double t = static_cast<double>(rng() % 40000) - 5000.0;
            ev.push_back(bolus(t, dose));
            total += dose;
        }
        std::shuffle(ev.begin(), ev.end(), rng);
        const auto ds = align(ev);
        const auto& b = ds.controls.at(kBolus).values();
        CHECK(std::accumulate(b.begin(), b.end(), 0.0) == total);
    }
}

TEST_CASE("align is idempotent on gap-free gridded data") {
    std::vector<EventRecord> ev;
    for (int i = 0; i < 30; ++i) ev.push_back(glucose(300.0 * i, 100 + 10 * std::sin(i / 3.0)));
    ev.push_back({kT0, EventKind::basal, 0.8});
    ev.push_back({kT0 + 3000, EventKind::basal, 1.1});
    ev.push_back(bolus(1500, 2));
    ev.push_back({kT0 + 2100, EventKind::carbs, 50});
    const auto once = align(ev);

    std::vector<EventRecord> again;
    for (std::size_t i = 0; i < once.grid.n; ++i) {
        const double t = once.grid.time(i);
        again.push_back({t, EventKind::glucose, once.states.at(kGlucose)[i]});
        again.push_back({t, EventKind::basal, once.controls.at(kBasal)[i]});
        if (double v = once.controls.at(kBolus)[i]; v > 0) again.push_back({t, EventKind::bolus, v});
        if (double v = once.controls.at(kCarbs)[i]; v > 0) again.push_back({t, EventKind::carbs, v});
    }
    const auto twice = align(again);
    CHECK(twice.grid == once.grid);
    CHECK(twice.segments == once.segments);
    CHECK(twice.states.at(kGlucose) == once.states.at(kGlucose));
    for (const auto& [name, series] : once.controls) CHECK(twice.controls.at(name) == series);
}

TEST_CASE("align preconditions") {
    CHECK_THROWS_AS(align({glucose(0, 100)}), InvalidArgument);
    CHECK_THROWS_AS(align({glucose(0, 100), glucose(300, 100)}, {0, 1800}), InvalidArgument);
    CHECK_THROWS_AS(align({glucose(0, 100), glucose(3000, 100)}, {300, 600}), InvalidArgument);
}
