#include "glucosindy/error.hpp"
#include "glucosindy/ode_sim.hpp"

#include "trajectories.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace glucosindy;

namespace {

using Exps = std::vector<std::pair<std::string, int>>;

SparseModel linear_model(std::vector<std::string> states, std::vector<std::string> controls,
                         const std::vector<std::vector<double>>& coefficients) {
    SparseModel m;
    m.state_names = std::move(states);
    m.control_names = std::move(controls);
    m.terms.push_back(TermDescriptor::constant());
    for (const auto& name : m.channel_names()) m.terms.push_back(TermDescriptor::monomial(Exps{{name, 1}}));
    m.xi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.terms.size()),
                                 static_cast<Eigen::Index>(m.state_names.size()));
    for (std::size_t s = 0; s < coefficients.size(); ++s) {
        for (std::size_t j = 0; j < coefficients[s].size(); ++j) {
            m.xi(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) = coefficients[s][j];
        }
    }
    return m;
}

double decay_error(int substeps) {
    // dx/dt = -x over 10 minutes on a 0.1-minute grid
    const auto m = linear_model({"x"}, {}, {{0.0, -1.0}});
    SimConfig cfg;
    cfg.substeps = substeps;
    const double x0 = 1.0;
    const auto fc = simulate(m, std::span(&x0, 1), 100, 6.0, cfg);
    double err = 0;
    for (std::size_t k = 0; k < fc.length(); ++k) {
        err = std::max(err, std::abs(fc.values[0][k] - std::exp(-0.1 * (k + 1.0))));
    }
    return err;
}

AlignedDataset constant_controls(double u, std::size_t n) {
    AlignedDataset ds;
    ds.grid = {0, 300, n};
    ds.segments = {{0, n}};
    ds.states.emplace("G", make_series(0, 300, std::vector<double>(n, 100.0)));
    ds.controls.emplace("u", make_series(0, 300, std::vector<double>(n, u)));
    return ds;
}

}  // namespace

TEST_CASE("right-hand side evaluation") {
    const auto zero = linear_model({"x", "y"}, {"u"}, {});
    const std::vector<double> state{3, 4}, controls{5};
    const auto r = rhs_eval(zero, state, controls);
    CHECK(r.size() == 2);
    CHECK(r.isZero(0));

    const auto decay = linear_model({"x"}, {}, {{0, -0.5}});
    const std::vector<double> two{2.0};
    CHECK(rhs_eval(decay, two, {})(0) == -1.0);
    CHECK_THROWS_AS(rhs_eval(decay, state, {}), InvalidArgument);
    CHECK_THROWS_AS(rhs_eval(zero, state, {}), InvalidArgument);

    const auto p = testing_support::oscillator_problem();
    const auto osc = stlsq(p.theta, p.dxdt, {0.05, 1e-6, 20, true}, p.states);
    const std::vector<double> at{0.0, 1.0};
    const auto v = rhs_eval(osc, at, {});
    CHECK(std::abs(v(0) - 1.0) < 1e-3);
    CHECK(std::abs(v(1)) < 1e-3);
}

TEST_CASE("zero dynamics hold the initial state") {
    const auto m = linear_model({"G"}, {"u"}, {});
    const double x0 = 100;
    std::vector<double> u(20);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(static_cast<double>(i));
    const auto fc = simulate(m, std::span(&x0, 1), {{"u", make_series(1000, 300, u)}}, 19);
    CHECK(fc.status.completed);
    REQUIRE(fc.length() == 19);
    for (double v : fc.values[0]) CHECK(v == 100.0);
    CHECK(fc.t0 == 1300.0);
}

TEST_CASE("rk4 is fourth order") {
    for (int substeps : {1, 2, 4}) {
        const double ratio = decay_error(substeps) / decay_error(2 * substeps);
        CHECK(ratio >= 14.0);
        CHECK(ratio <= 18.0);
    }
}

TEST_CASE("control interpolation within a step") {
    // dx/dt = u with u ramping 0, 1, 2 per one-minute step
    const auto m = linear_model({"x"}, {"u"}, {{0, 0, 1}});
    const double x0 = 0;
    const std::map<std::string, UniformSeries> ramp{{"u", make_series(0, 60, {0, 1, 2})}};
    SimConfig linear;
    const auto a = simulate(m, std::span(&x0, 1), ramp, 2, linear);
    CHECK(a.values[0][0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(a.values[0][1] == doctest::Approx(2.0).epsilon(1e-14));

    SimConfig hold;
    hold.channel_interp["u"] = ControlInterp::hold;
    const auto b = simulate(m, std::span(&x0, 1), ramp, 2, hold);
    CHECK(b.values[0][0] == 0.0);
    CHECK(b.values[0][1] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(hold.interp_for("B") == ControlInterp::hold);
    CHECK(hold.interp_for("I_act") == ControlInterp::linear);
}

TEST_CASE("equilibrium is preserved") {
    // dG/dt = 0.5 + 0.5 u - 0.25 G has G* = 4 at u = 1
    const auto m = linear_model({"G"}, {"u"}, {{0.5, -0.25, 0.5}});
    const double x0 = 4.0;
    const auto fc = simulate(m, std::span(&x0, 1), constant_controls(1.0, 300), 0, 288);
    for (double v : fc.values[0]) CHECK(std::abs(v - 4.0) <= 1e-12);
}

TEST_CASE("constant controls make the trajectory shift invariant") {
    const auto m = linear_model({"G"}, {"u"}, {{2.0, -0.02, -1.5}});
    const auto ds = constant_controls(0.3, 200);
    const double x0 = 150.0;
    const auto a = simulate(m, std::span(&x0, 1), ds, 0, 72);
    const auto b = simulate(m, std::span(&x0, 1), ds, 100, 72);
    CHECK(a.values == b.values);
    CHECK(b.t0 - a.t0 == 100 * 300.0);
}

TEST_CASE("divergence keeps the finite prefix") {
    SparseModel m;
    m.state_names = {"x"};
    m.terms = {TermDescriptor::monomial(Exps{{"x", 2}})};
    m.xi = Eigen::MatrixXd::Constant(1, 1, 1.0);
    const double x0 = 1.0;
    // dx/dt = x^2 from 1 blows up at t = 1 minute
    const auto fc = simulate(m, std::span(&x0, 1), 20, 6.0);
    CHECK_FALSE(fc.status.completed);
    CHECK(fc.length() == fc.status.diverged_at);
    CHECK(fc.length() < 20);
    for (double v : fc.values[0]) CHECK(std::isfinite(v));
    CHECK(to_string(fc.status) == "diverged-at " + std::to_string(fc.status.diverged_at));

    SimConfig clamped;
    clamped.clamp_max = 5.0;
    const auto c = simulate(m, std::span(&x0, 1), 20, 6.0, clamped);
    CHECK(c.status.completed);
    CHECK(c.values[0].back() == 5.0);

    // one substep from the clamp overshoots ten times its magnitude
    const double big = 4.0;
    const auto d = simulate(m, std::span(&big, 1), 20, 600.0, clamped);
    CHECK_FALSE(d.status.completed);
    CHECK(d.status.diverged_at == 0);
    CHECK(d.length() == 0);
}

TEST_CASE("simulation preconditions") {
    const auto m = linear_model({"G"}, {"u"}, {{0, -0.1, 1}});
    const auto ds = constant_controls(0.0, 10);
    const double x0 = 100;
    const double bad = std::nan("");
    CHECK_THROWS_AS(simulate(m, std::span(&x0, 1), ds, 5, 5), InvalidArgument);
    CHECK_NOTHROW(simulate(m, std::span(&x0, 1), ds, 5, 4));
    CHECK_THROWS_AS(simulate(m, std::span(&bad, 1), ds, 0, 4), InvalidArgument);
    CHECK_THROWS_AS(simulate(m, std::span(&x0, 1), {{"v", make_series(0, 300, {0, 0, 0})}}, 2), InvalidArgument);
    CHECK_THROWS_AS(simulate(m, std::span(&x0, 1), {{"u", make_series(0, 300, {0, 0})}}, 2), InvalidArgument);
    CHECK_THROWS_AS(simulate(m, std::span(&x0, 1), 4, 300.0), InvalidArgument);
    SimConfig cfg;
    cfg.substeps = 0;
    CHECK_THROWS_AS(simulate(m, std::span(&x0, 1), ds, 0, 4, cfg), InvalidArgument);
}

TEST_CASE("forecast from a reloaded model is bit-identical") {
    const auto m = linear_model({"G"}, {"u"}, {{2.2, -0.02, -1.5}});
    const auto dir = std::filesystem::temp_directory_path() / "glucosindy_sim";
    std::filesystem::create_directories(dir);
    save_model(m, dir / "m.json");
    const auto loaded = load_model(dir / "m.json");
    std::filesystem::remove_all(dir);

    AlignedDataset ds = constant_controls(0.0, 100);
    std::vector<double> u(100);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = 0.05 * std::abs(std::sin(0.1 * static_cast<double>(i)));
    ds.controls.insert_or_assign("u", make_series(0, 300, u));
    const double x0 = 140;
    const auto a = simulate(m, std::span(&x0, 1), ds, 3, 72);
    const auto b = simulate(loaded, std::span(&x0, 1), ds, 3, 72);
    const auto c = simulate(loaded, std::span(&x0, 1), ds, 3, 72);
    CHECK(a == b);
    CHECK(b == c);
    CHECK(forecast_to_csv(a) == forecast_to_csv(c));
}

TEST_CASE("forecast csv") {
    Forecast fc;
    fc.t0 = 1704067500.0;
    fc.dt = 300;
    fc.state_names = {"G"};
    fc.values = {{101.5, 102.25}};
    CHECK(forecast_to_csv(fc) ==
          "t_iso,G\n2024-01-01T00:05:00Z,101.500000\n2024-01-01T00:10:00Z,102.250000\n# status: completed\n");
}
