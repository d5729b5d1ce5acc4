#include "doctest.h"

#include <cmath>
#include <numeric>

#include "temperfilt/gridworld.hpp"
#include "temperfilt/nll_gradient.hpp"
#include "temperfilt/tempered_filter.hpp"
#include "test_support.hpp"

using namespace temperfilt;

namespace {

// 1-based grid positions to 0-based indices
std::size_t at(int position) { return static_cast<std::size_t>(position - 1); }

double row_entropy(std::span<const double> row) { return entropy(std::vector<double>(row.begin(), row.end())); }

}  // namespace

TEST_CASE("grid-world initial distribution")
{
    const FiniteHmm m = build_gridworld(GridworldSpec{});
    CHECK(m.p0[at(1)] == 0.5);
    CHECK(m.p0[at(39)] == 0.5);
    CHECK(std::accumulate(m.p0.begin(), m.p0.end(), 0.0) == 1.0);
}

TEST_CASE("grid-world transition rows")
{
    const FiniteHmm m = build_gridworld(GridworldSpec{});
    CHECK(m.trans(at(20), at(20)) == 1.0);
    CHECK(m.trans(at(19), at(20)) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(m.trans(at(19), at(19)) == doctest::Approx(0.15).epsilon(1e-15));
    CHECK(m.trans(at(19), at(18)) == doctest::Approx(0.1).epsilon(1e-15));
    // lower edge: the -1 move folds onto state 1
    CHECK(m.trans(at(1), at(1)) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(m.trans(at(1), at(2)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.trans(at(5), at(8)) == doctest::Approx(0.1).epsilon(1e-15));
    for (int x = 21; x <= 39; ++x) CHECK(m.trans(at(x), at(x - 1)) == 1.0);
    for (int x = 1; x < 20; ++x) {
        const auto row = m.trans.row(at(x));
        CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
        for (int xn = 21; xn <= 39; ++xn) CHECK(m.trans(at(x), at(xn)) == 0.0);
    }
}

TEST_CASE("grid-world emission rows")
{
    const GridworldSpec spec;
    const FiniteHmm m = build_gridworld(spec);
    for (std::size_t x = 0; x < 39; ++x) {
        const auto row = m.emit.row(x);
        CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) <= 1e-12);
    }
    // interior bin: P(y = x) = P(|noise| < 1/2)
    const double sd = spec.obs_std;
    const double expected = std::erf(0.5 / (sd * std::sqrt(2.0)));
    CHECK(m.emit(at(20), at(20)) == doctest::Approx(expected).epsilon(1e-12));
    // the first bin collects the whole lower tail
    CHECK(m.emit(at(1), at(1)) == doctest::Approx(0.5 * std::erfc(-0.5 / (sd * std::sqrt(2.0)))).epsilon(1e-12));
    // symmetry of the discretization about the middle of the alphabet
    CHECK(m.emit(at(10), at(7)) == doctest::Approx(m.emit(at(30), at(33))).epsilon(1e-12));
}

TEST_CASE("GridworldSpec validation")
{
    CHECK_THROWS_AS(build_gridworld(GridworldSpec::with_states(10, 10)), std::invalid_argument);
    CHECK_THROWS_AS(build_gridworld(GridworldSpec::with_states(10, 1)), std::invalid_argument);
    GridworldSpec s;
    s.obs_std = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    const FiniteHmm small = build_gridworld(GridworldSpec::with_states(9, 4));
    CHECK(validate_model(small).ok());
    CHECK(small.n_outputs == 9);
}

TEST_CASE("generate_dataset is deterministic and within the alphabets")
{
    const GridworldSpec spec;
    const Dataset a = generate_dataset(spec, 5, 77);
    const Dataset b = generate_dataset(spec, 5, 77);
    REQUIRE(a.size() == 5);
    CHECK(a.horizon == 40);
    CHECK(a.provenance.system_id == spec.system_id());
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(a.trajectories[i].states == b.trajectories[i].states);
        CHECK(a.trajectories[i].observations == b.trajectories[i].observations);
        CHECK(a.trajectories[i].observations.size() == 41);
        for (int x : a.trajectories[i].states) CHECK((x >= 0 && x < 39));
        for (int y : a.trajectories[i].observations) CHECK((y >= 0 && y < 39));
        CHECK((a.trajectories[i].states[0] == 0 || a.trajectories[i].states[0] == 38));
    }
    CHECK(validate_dataset(a, spec.n_x, spec.n_outputs).ok());
}

TEST_CASE("grid-world neutral NLL equals the classic forward filter reference")
{
    const GridworldSpec spec;
    const FiniteHmm m = build_gridworld(spec);
    const Dataset d = generate_dataset(spec, 1, 5);
    const Trajectory& tr = d.trajectories[0];
    const auto ref = classic_forward_filter(m, tr.observations);
    double total = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) total += -std::log(ref[k][tr.states[k]]);
    const double expected = total / static_cast<double>(ref.size());
    CHECK(std::abs(nll_score(m, TemperingParams::neutral(), d).mean_nll - expected) <= 1e-12);
}

TEST_CASE("run_sweep_cell records failures without throwing")
{
    SweepConfig cfg;
    const ExperimentRow row = run_sweep_cell(cfg, 2, 0, AblationMode::none);  // too few for 5 folds
    CHECK(row.error.has_value());
    CHECK(std::isnan(row.nll_tempered));
}

TEST_CASE("sweep_experiment is reproducible and sorted")
{
    SweepConfig cfg;
    cfg.world = GridworldSpec::with_states(9, 4);
    cfg.world.horizon = 10;
    cfg.tune.max_iters = 10;
    cfg.tune.n_folds = 2;
    cfg.ablations = {AblationMode::none, AblationMode::fix_B};
    cfg.jobs = 2;
    const auto a = sweep_experiment({12, 8}, {3, 1}, cfg);
    cfg.jobs = 1;
    const auto b = sweep_experiment({12, 8}, {3, 1}, cfg);
    REQUIRE(a.rows.size() == 8);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK_FALSE(a.rows[i].error);
        CHECK(a.rows[i].dataset_size == b.rows[i].dataset_size);
        CHECK(a.rows[i].nll_tempered == b.rows[i].nll_tempered);
        CHECK(a.rows[i].lambda_star == b.rows[i].lambda_star);
        if (a.rows[i].ablation == AblationMode::fix_B) CHECK(a.rows[i].lambda_star.lambda_B == 1.0);
    }
    CHECK(a.rows.front().dataset_size == 8);
    CHECK(a.rows.front().seed == 1);
    CHECK(a.rows.back().dataset_size == 12);
}

TEST_CASE("geometric_grid")
{
    const auto g = geometric_grid(0.25, 4.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g[0] == 0.25);
    CHECK(g[2] == 1.0);
    for (std::size_t steps : {3, 9, 17, 33, 65}) CHECK(geometric_grid(0.125, 8.0, steps)[steps / 2] == 1.0);
    CHECK(g[4] == 4.0);
    CHECK(geometric_grid(2.0, 3.0, 1) == std::vector<double>{2.0});
    CHECK_THROWS_AS(geometric_grid(0.0, 1.0, 3), std::invalid_argument);
}

TEST_CASE("landscape axes strings")
{
    for (auto a : {LandscapeAxes::PB, LandscapeAxes::LP, LandscapeAxes::LB})
        CHECK(landscape_axes_from_string(to_string(a)) == a);
    CHECK_THROWS_AS(landscape_axes_from_string("XY"), std::invalid_argument);
}

TEST_CASE("landscape: the neutral cell equals the untempered score and every cell is finite")
{
    const GridworldSpec spec;
    const Dataset d = generate_dataset(spec, 6, 4);
    const FiniteHmm model = identify(d, {1.0, spec.n_x, spec.n_outputs});
    const auto grid = geometric_grid(0.5, 2.0, 3);
    const double untempered = nll_score(model, TemperingParams::neutral(), d).mean_nll;
    for (auto axes : {LandscapeAxes::PB, LandscapeAxes::LP, LandscapeAxes::LB}) {
        const LandscapeTable t = cost_landscape(model, d, axes, grid, grid, TemperingParams::neutral());
        CHECK(t.at(1, 1) == TemperingParams::neutral());
        CHECK(t.nll[1][1] == untempered);
        for (const auto& row : t.nll)
            for (double v : row) CHECK(std::isfinite(v));
    }
    const LandscapeTable lb = cost_landscape(model, d, LandscapeAxes::LB, grid, grid, {1.0, 1.7, 1.0});
    CHECK(lb.at(0, 2) == TemperingParams{0.5, 1.7, 2.0});
}

TEST_CASE("export at the neutral point reproduces the model")
{
    Rng rng(3);
    const FiniteHmm m = temperfilt::testing::random_model(rng, 3, 2);
    const auto j = export_tempered_model(m, TemperingParams::neutral());
    CHECK(j.at("display_normalized") == true);
    const auto display = j.at("display");
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t k = 0; k < 3; ++k)
            CHECK(display.at("trans")[i][k].get<double>() == doctest::Approx(m.trans(i, k)).epsilon(1e-15));
    CHECK(j.at("lambda").at("lambda_P") == 1.0);
}

TEST_CASE("display export sharpens rows")
{
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const FiniteHmm m = temperfilt::testing::random_model(rng, 4, 3);
        // the display exponent is lambda_P for transitions and lambda_L lambda_P lambda_B for emissions
        const TemperingParams l{0.5 + rng.uniform(), 1.05 + 2 * rng.uniform(), 1.0 + rng.uniform()};
        REQUIRE(l.lambda_L * l.lambda_P * l.lambda_B > 1.0);
        const FiniteHmm d = display_normalized(temper_model(m, l));
        CHECK(validate_model(d).ok());
        CHECK(entropy(d.p0) < entropy(m.p0));
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(row_entropy(d.trans.row(i)) < row_entropy(m.trans.row(i)));
            CHECK(row_entropy(d.emit.row(i)) < row_entropy(m.emit.row(i)));
        }
    }
}

TEST_CASE("display export leaves uniform rows unchanged")
{
    FiniteHmm m;
    m.n_states = 2;
    m.n_outputs = 3;
    m.p0 = {0.5, 0.5};
    m.trans = Table(2, 2, 0.5);
    m.emit = Table(2, 3, 1.0 / 3.0);
    const FiniteHmm d = display_normalized(temper_model(m, {2.0, 3.0, 0.7}));
    for (double v : d.trans.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
    for (double v : d.emit.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}
