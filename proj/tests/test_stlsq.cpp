#include "glucosindy/error.hpp"
#include "glucosindy/stlsq.hpp"

#include "trajectories.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <json.hpp>

#include <filesystem>
#include <random>

using namespace glucosindy;
using testing_support::decay_problem;
using testing_support::oscillator_problem;

namespace {

FeatureMatrix random_theta(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> n(0, 1);
    FeatureMatrix fm;
    fm.values.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) fm.values(i, j) = n(rng) * static_cast<double>(j + 1);
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
        fm.terms.push_back(TermDescriptor::monomial({{"x" + std::to_string(j), 1}}));
    }
    return fm;
}

std::vector<bool> support_of(const Eigen::VectorXd& v) {
    std::vector<bool> s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s.push_back(v(i) != 0.0);
    return s;
}

const Eigen::Index kOne = 0, kX = 1, kY = 2;

}  // namespace

TEST_CASE("no threshold and no ridge is ordinary least squares") {
    std::mt19937_64 rng(2);
    const auto fm = random_theta(rng, 60, 5);
    std::normal_distribution<double> n(0, 1);
    Eigen::MatrixXd y(60, 2);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        y(i, 0) = n(rng);
        y(i, 1) = n(rng);
    }
    const Eigen::MatrixXd normal = (fm.values.transpose() * fm.values).llt().solve(fm.values.transpose() * y);
    for (bool normalize : {true, false}) {
        const auto m = stlsq(fm, y, {0.0, 0.0, 20, normalize});
        CHECK((m.xi - normal).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("exponential decay is recovered") {
    const auto p = decay_problem();
    const auto m = stlsq(p.theta, p.dxdt, {0.1, 1e-6, 20, true}, p.states);
    CHECK(m.xi(kOne, 0) == 0.0);
    CHECK(m.xi(2, 0) == 0.0);
    CHECK(std::abs(m.xi(kX, 0) + 0.5) < 1e-3);
}

TEST_CASE("linear oscillator is recovered") {
    const auto p = oscillator_problem();
    const auto m = stlsq(p.theta, p.dxdt, {0.05, 1e-6, 20, true}, p.states);
    REQUIRE(m.xi.rows() == 6);
    for (Eigen::Index j = 0; j < 6; ++j) {
        if (j != kY) CHECK(m.xi(j, 0) == 0.0);
        if (j != kX) CHECK(m.xi(j, 1) == 0.0);
    }
    CHECK(std::abs(m.xi(kY, 0) - 1.0) < 1e-3);
    CHECK(std::abs(m.xi(kX, 1) + 1.0) < 1e-3);

    const auto eq = model_to_equations(m);
    REQUIRE(eq.size() == 2);
    CHECK(eq[0] == "dx/dt = 1.000\xC2\xB7y");
    CHECK(eq[1] == "dy/dt = -1.000\xC2\xB7x");
}

TEST_CASE("equation rendering") {
    SparseModel m;
    m.terms = {TermDescriptor::constant(), TermDescriptor::monomial({{"G", 1}})};
    m.state_names = {"G"};
    m.xi = Eigen::MatrixXd::Zero(2, 1);
    CHECK(model_to_equations(m) == std::vector<std::string>{"dG/dt = 0"});
    m.xi(1, 0) = -0.021;
    CHECK(model_to_equations(m) == std::vector<std::string>{"dG/dt = -0.02100\xC2\xB7G"});
    m.xi(0, 0) = 0.93;
    CHECK(model_to_equations(m) == std::vector<std::string>{"dG/dt = 0.9300\xC2\xB7" "1 - 0.02100\xC2\xB7G"});
}

TEST_CASE("scaling a column rescales its coefficient only") {
    const auto p = oscillator_problem();
    const StlsqConfig cfg{0.05, 1e-6, 20, true};
    const auto base = stlsq(p.theta, p.dxdt, cfg);
    for (Eigen::Index col : {kX, kY, Eigen::Index{4}}) {
        auto scaled = p.theta;
        scaled.values.col(col) *= 4.0;
        const auto m = stlsq(scaled, p.dxdt, cfg);
        for (Eigen::Index s = 0; s < 2; ++s) {
            CHECK(support_of(m.xi.col(s)) == support_of(base.xi.col(s)));
            for (Eigen::Index j = 0; j < m.xi.rows(); ++j) {
                const double expected = j == col ? base.xi(j, s) / 4.0 : base.xi(j, s);
                CHECK(m.xi(j, s) == doctest::Approx(expected).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("surviving coefficients clear the threshold on the normalized scale") {
    std::mt19937_64 rng(8);
    const auto fm = random_theta(rng, 200, 8);
    std::normal_distribution<double> n(0, 1);
    Eigen::VectorXd truth = Eigen::VectorXd::Zero(8);
    truth(1) = 0.7;
    truth(5) = -0.2;
    Eigen::MatrixXd y = fm.values * truth;
    for (Eigen::Index i = 0; i < y.rows(); ++i) y(i, 0) += 0.3 * n(rng);
    const StlsqConfig cfg{0.1, 1e-6, 20, true};
    const auto m = stlsq(fm, y, cfg);
    const double y_rms = y.norm() / std::sqrt(static_cast<double>(y.rows()));
    for (Eigen::Index j = 0; j < 8; ++j) {
        if (m.xi(j, 0) == 0.0) continue;
        const double col_rms = fm.values.col(j).norm() / std::sqrt(static_cast<double>(y.rows()));
        CHECK(std::abs(m.xi(j, 0)) * col_rms / y_rms >= cfg.threshold);
    }
}

TEST_CASE("support shrinks monotonically across iterations") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const auto fm = random_theta(rng, 80, 10);
        Eigen::VectorXd y(80);
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = fm.values(i, 2) - 0.5 * fm.values(i, 7) + 4.0 * n(rng);
        std::vector<bool> previous(10, true);
        for (int iters = 1; iters <= 8; ++iters) {
            const auto m = stlsq(fm, y, {0.15, 1e-6, iters, true});
            const auto current = support_of(m.xi.col(0));
            for (std::size_t j = 0; j < current.size(); ++j) {
                if (!previous[j]) CHECK_FALSE(current[j]);
            }
            previous = current;
        }
    }
}

TEST_CASE("refitting on the selected support is a fixed point") {
    const auto p = oscillator_problem();
    const StlsqConfig cfg{0.05, 1e-6, 20, true};
    const auto m = stlsq(p.theta, p.dxdt, cfg);
    for (Eigen::Index s = 0; s < 2; ++s) {
        std::vector<Eigen::Index> keep;
        for (Eigen::Index j = 0; j < m.xi.rows(); ++j) {
            if (m.xi(j, s) != 0.0) keep.push_back(j);
        }
        FeatureMatrix sub;
        sub.values = p.theta.values(Eigen::all, keep);
        for (auto j : keep) sub.terms.push_back(p.theta.terms[static_cast<std::size_t>(j)]);
        const auto again = stlsq(sub, p.dxdt.col(s), cfg);
        for (std::size_t k = 0; k < keep.size(); ++k) {
            CHECK(again.xi(static_cast<Eigen::Index>(k), 0) == doctest::Approx(m.xi(keep[k], s)).epsilon(1e-12));
        }
    }
}

TEST_CASE("identical inputs give bit-identical coefficients") {
    const auto p = oscillator_problem();
    const StlsqConfig cfg{0.05, 1e-6, 20, true};
    CHECK(stlsq(p.theta, p.dxdt, cfg) == stlsq(p.theta, p.dxdt, cfg));
}

TEST_CASE("degenerate and invalid inputs") {
    std::mt19937_64 rng(1);
    const auto fm = random_theta(rng, 20, 3);
    const auto zero = stlsq(fm, Eigen::MatrixXd::Zero(20, 1), {});
    CHECK(zero.all_supports_empty());
    CHECK(zero.diagnostics.empty_support == std::vector<bool>{true});

    CHECK_THROWS_AS(stlsq(fm, Eigen::MatrixXd::Zero(19, 1), {}), InvalidArgument);
    CHECK_THROWS_AS(stlsq(fm, Eigen::MatrixXd::Zero(20, 1), {-1.0, 0, 20, true}), InvalidArgument);
    CHECK_THROWS_AS(stlsq(fm, Eigen::MatrixXd::Zero(20, 1), {0.1, 0, 0, true}), InvalidArgument);

    const auto wide = random_theta(rng, 3, 5);
    const auto m = stlsq(wide, Eigen::MatrixXd::Ones(3, 1), {});
    CHECK_FALSE(m.diagnostics.warnings.empty());
}

TEST_CASE("model json round trip") {
    const auto p = oscillator_problem();
    auto m = stlsq(p.theta, p.dxdt, {0.05, 1e-6, 20, true}, p.states);
    m.terms.push_back(TermDescriptor::trig(TrigFunction::cos, 0.3, "x"));
    m.xi.conservativeResize(m.xi.rows() + 1, Eigen::NoChange);
    m.xi.row(m.xi.rows() - 1).setConstant(0.1 + 1e-17);
    m.control_names = {"u"};

    const auto dir = std::filesystem::temp_directory_path() / "glucosindy_model";
    std::filesystem::create_directories(dir);
    save_model(m, dir / "model.json");
    const auto back = load_model(dir / "model.json");
    CHECK(back == m);
    CHECK(model_to_json_text(back) == model_to_json_text(m));

    auto json = nlohmann::json::parse(model_to_json_text(m));
    json.erase("terms");
    CHECK_THROWS_AS(model_from_json_text(json.dump()), SchemaError);
    json = nlohmann::json::parse(model_to_json_text(m));
    json["schema_version"] = 2;
    CHECK_THROWS_AS(model_from_json_text(json.dump()), SchemaError);
    CHECK_THROWS_AS(model_from_json_text("{not json"), SchemaError);
    CHECK_THROWS_AS(load_model(dir / "absent.json"), IoError);
    std::filesystem::remove_all(dir);
}
