#include "temperfilt/gridworld.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "temperfilt/io.hpp"

namespace temperfilt {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Displacement probabilities in the stochastic region, as (offset, probability).
constexpr std::pair<int, double> kStochasticMoves[] = {
    {+3, 0.1}, {+2, 0.15}, {+1, 0.5}, {0, 0.15}, {-1, 0.1}};

}  // namespace

GridworldSpec GridworldSpec::with_states(std::size_t n_x, std::size_t x_home)
{
    GridworldSpec s;
    s.n_x = n_x;
    s.x_home = x_home;
    s.obs_std = static_cast<double>(n_x) / 8.0;
    s.n_outputs = n_x;
    return s;
}

void GridworldSpec::validate() const
{
    if (!(1 < x_home && x_home < n_x)) throw std::invalid_argument("gridworld: need 1 < x_home < n_x");
    if (!(obs_std > 0.0)) throw std::invalid_argument("gridworld: obs_std must be > 0");
    if (n_outputs < 1) throw std::invalid_argument("gridworld: n_outputs must be >= 1");
}

std::string GridworldSpec::system_id() const
{
    return "gridworld(n_x=" + std::to_string(n_x) + ",x_home=" + std::to_string(x_home) +
           ",obs_std=" + nlohmann::json(obs_std).dump() + ",n_outputs=" + std::to_string(n_outputs) +
           ",h=" + std::to_string(horizon) + ")";
}

FiniteHmm build_gridworld(const GridworldSpec& spec)
{
    spec.validate();
    const std::size_t n = spec.n_x;
    const int home = static_cast<int>(spec.x_home);  // 1-based positions throughout this function
    auto idx = [](int position) { return static_cast<std::size_t>(position - 1); };

    FiniteHmm m;
    m.n_states = n;
    m.n_outputs = spec.n_outputs;
    m.p0.assign(n, 0.0);
    m.p0[idx(1)] = 0.5;
    m.p0[idx(static_cast<int>(n))] = 0.5;

    m.trans = Table(n, n, 0.0);
    for (int x = 1; x <= static_cast<int>(n); ++x) {
        if (x == home) {
            m.trans(idx(x), idx(home)) = 1.0;
        } else if (x > home) {
            m.trans(idx(x), idx(x - 1)) = 1.0;
        } else {
            for (const auto& [offset, p] : kStochasticMoves) {
                const int target = std::clamp(x + offset, 1, home);  // fold overshoot onto the edges
                m.trans(idx(x), idx(target)) += p;
            }
        }
    }

    // Unit bins centered on 1..n_outputs; the two end bins absorb the tails.
    m.emit = Table(n, spec.n_outputs, 0.0);
    const std::size_t ny = spec.n_outputs;
    for (int x = 1; x <= static_cast<int>(n); ++x) {
        std::vector<double> cdf(ny + 1);
        cdf[0] = 0.0;
        cdf[ny] = 1.0;
        for (std::size_t b = 1; b < ny; ++b)
            cdf[b] = normal_cdf((static_cast<double>(b) + 0.5 - x) / spec.obs_std);
        for (std::size_t y = 0; y < ny; ++y) m.emit(idx(x), y) = cdf[y + 1] - cdf[y];
    }
    return m;
}

Dataset generate_dataset(const GridworldSpec& spec, std::size_t n, std::uint64_t seed)
{
    const FiniteHmm world = build_gridworld(spec);
    Dataset data;
    data.horizon = spec.horizon;
    data.provenance = {seed, spec.system_id()};
    data.trajectories.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        data.trajectories.push_back(sample_trajectory(world, spec.horizon, derive_seed(seed, i)));
    return data;
}

ExperimentRow run_sweep_cell(const SweepConfig& cfg, std::size_t n, std::uint64_t seed,
                             AblationMode ablation)
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    ExperimentRow row{n, seed, ablation, nan, nan, TemperingParams::neutral(), std::nullopt};
    try {
        const Dataset data = generate_dataset(cfg.world, n, seed);
        TuneConfig tune = cfg.tune;
        tune.seed = seed;
        tune.ablation = ablation;
        const IdentConfig ident{cfg.pseudocount, cfg.world.n_x, cfg.world.n_outputs};
        const PipelineResult r = fit_pipeline(data, cfg.split_ratio, tune, ident);
        row.nll_untempered = r.untempered.mean_nll;
        row.nll_tempered = r.tempered.mean_nll;
        row.lambda_star = r.lambda_star;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

ExperimentResult sweep_experiment(const std::vector<std::size_t>& sizes,
                                  const std::vector<std::uint64_t>& seeds, const SweepConfig& cfg)
{
    struct Cell {
        std::size_t n;
        std::uint64_t seed;
        AblationMode ablation;
    };
    std::vector<Cell> cells;
    for (std::size_t n : sizes)
        for (std::uint64_t s : seeds)
            for (AblationMode a : cfg.ablations) cells.push_back({n, s, a});

    ExperimentResult result;
    result.rows.resize(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++)
            result.rows[i] = run_sweep_cell(cfg, cells[i].n, cells[i].seed, cells[i].ablation);
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, cells.size()));
    std::vector<std::thread> pool;
    for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::sort(result.rows.begin(), result.rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
        return std::tie(a.dataset_size, a.seed, a.ablation) < std::tie(b.dataset_size, b.seed, b.ablation);
    });
    return result;
}

// ---------------------------------------------------------------------------------------------

LandscapeAxes landscape_axes_from_string(const std::string& s)
{
    if (s == "PB") return LandscapeAxes::PB;
    if (s == "LP") return LandscapeAxes::LP;
    if (s == "LB") return LandscapeAxes::LB;
    throw std::invalid_argument("unknown landscape axes '" + s + "' (expected PB, LP or LB)");
}

std::string to_string(LandscapeAxes axes)
{
    switch (axes) {
    case LandscapeAxes::PB: return "PB";
    case LandscapeAxes::LP: return "LP";
    case LandscapeAxes::LB: return "LB";
    }
    return "PB";
}

TemperingParams LandscapeTable::at(std::size_t i, std::size_t j) const
{
    TemperingParams l = fixed;
    const double a = first_values[i];
    const double b = second_values[j];
    switch (axes) {
    case LandscapeAxes::PB: l.lambda_P = a; l.lambda_B = b; break;
    case LandscapeAxes::LP: l.lambda_L = a; l.lambda_P = b; break;
    case LandscapeAxes::LB: l.lambda_L = a; l.lambda_B = b; break;
    }
    return l;
}

LandscapeTable cost_landscape(const FiniteHmm& model, const Dataset& data, LandscapeAxes axes,
                              const std::vector<double>& first_values,
                              const std::vector<double>& second_values,
                              const TemperingParams& fixed)
{
    LandscapeTable t{axes, first_values, second_values, fixed, {}};
    t.nll.assign(first_values.size(), std::vector<double>(second_values.size()));
    for (std::size_t i = 0; i < first_values.size(); ++i)
        for (std::size_t j = 0; j < second_values.size(); ++j)
            t.nll[i][j] = nll_score(model, t.at(i, j), data).mean_nll;
    return t;
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t steps)
{
    if (!(lo > 0.0 && hi >= lo) || steps == 0) throw std::invalid_argument("geometric_grid: need 0 < lo <= hi, steps >= 1");
    std::vector<double> v(steps);
    if (steps == 1) {
        v[0] = lo;
        return v;
    }
    const double r = std::log(hi / lo) / static_cast<double>(steps - 1);
    for (std::size_t i = 0; i < steps; ++i) {
        v[i] = lo * std::exp(r * static_cast<double>(i));
        if (std::abs(std::log(v[i])) < 1e-12) v[i] = 1.0;  // keep the neutral point exact
    }
    v.back() = hi;
    return v;
}

// ---------------------------------------------------------------------------------------------

FiniteHmm display_normalized(const TemperedModel& tm)
{
    FiniteHmm m;
    m.n_states = tm.n_states();
    m.n_outputs = tm.n_outputs();
    m.p0 = tm.p0_t;
    m.trans = tm.trans_t;
    m.emit = tm.emit_t;
    auto normalize = [](std::span<double> row) {
        double s = 0.0;
        for (double v : row) s += v;
        if (s > 0.0)
            for (double& v : row) v /= s;
    };
    normalize(m.p0);
    for (std::size_t i = 0; i < m.n_states; ++i) {
        normalize(m.trans.row(i));
        normalize(m.emit.row(i));
    }
    return m;
}

nlohmann::json export_tempered_model(const FiniteHmm& m, const TemperingParams& lambda)
{
    const TemperedModel tm = temper_model(m, lambda);
    FiniteHmm raw;
    raw.n_states = tm.n_states();
    raw.n_outputs = tm.n_outputs();
    raw.p0 = tm.p0_t;
    raw.trans = tm.trans_t;
    raw.emit = tm.emit_t;
    return {{"lambda", to_json(lambda)},
            {"raw_weights", model_to_json(raw)},
            {"display", model_to_json(display_normalized(tm))},
            {"display_normalized", true}};
}

}  // namespace temperfilt
