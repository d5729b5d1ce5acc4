#ifndef TEMPERFILT_GRIDWORLD_HPP
#define TEMPERFILT_GRIDWORLD_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "temperfilt/hmm.hpp"
#include "temperfilt/tuning.hpp"

namespace temperfilt {

/// One-dimensional world: states 1..n_x (stored as indices 0..n_x-1). An agent starts at 1 or
/// n_x with equal odds and walks to x_home, stochastically below home and deterministically
/// above it. Observations are the position plus Gaussian noise, binned to 1..n_outputs.
struct GridworldSpec {
    std::size_t n_x = 39;
    std::size_t x_home = 20;
    double obs_std = 39.0 / 8.0;
    std::size_t horizon = 40;
    std::size_t n_outputs = 39;

    /// Defaults derived from n_x: obs_std = n_x / 8 and n_outputs = n_x.
    static GridworldSpec with_states(std::size_t n_x, std::size_t x_home);
    void validate() const;
    std::string system_id() const;
};

FiniteHmm build_gridworld(const GridworldSpec& spec);

/// N trajectories; trajectory i uses seed derive_seed(seed, i).
Dataset generate_dataset(const GridworldSpec& spec, std::size_t n, std::uint64_t seed);

struct SweepConfig {
    GridworldSpec world;
    double split_ratio = 0.7;
    TuneConfig tune;
    double pseudocount = 1.0;
    std::vector<AblationMode> ablations{AblationMode::none};
    std::size_t jobs = 1;
};

struct ExperimentRow {
    std::size_t dataset_size;
    std::uint64_t seed;
    AblationMode ablation;
    double nll_untempered;
    double nll_tempered;
    TemperingParams lambda_star;
    std::optional<std::string> error;
};

struct ExperimentResult {
    std::vector<ExperimentRow> rows;  // sorted by (N, seed, ablation)
};

/// Runs one (N, seed, ablation) cell: generate data, fit, score on the held-out split.
ExperimentRow run_sweep_cell(const SweepConfig& cfg, std::size_t n, std::uint64_t seed,
                             AblationMode ablation);

ExperimentResult sweep_experiment(const std::vector<std::size_t>& sizes,
                                  const std::vector<std::uint64_t>& seeds, const SweepConfig& cfg);

/// The two free tempering axes of a cost-landscape slice.
enum class LandscapeAxes { PB, LP, LB };

LandscapeAxes landscape_axes_from_string(const std::string& s);
std::string to_string(LandscapeAxes axes);

struct LandscapeTable {
    LandscapeAxes axes;
    std::vector<double> first_values;
    std::vector<double> second_values;
    TemperingParams fixed;           // the third component is read from here
    std::vector<std::vector<double>> nll;  // nll[i][j] at (first_values[i], second_values[j])

    TemperingParams at(std::size_t i, std::size_t j) const;
};

/// Evaluates nll_score over a rectangular grid in two components; the third stays at `fixed`.
LandscapeTable cost_landscape(const FiniteHmm& model, const Dataset& data, LandscapeAxes axes,
                              const std::vector<double>& first_values,
                              const std::vector<double>& second_values,
                              const TemperingParams& fixed);

/// lo, lo*r, ..., hi: geometric grid with `steps` points.
std::vector<double> geometric_grid(double lo, double hi, std::size_t steps);

/// Raw tempered weight tables plus a row-normalized display copy (flagged as such).
nlohmann::json export_tempered_model(const FiniteHmm& m, const TemperingParams& lambda);

/// Display normalization of a tempered model: every row of every table rescaled to sum to one.
FiniteHmm display_normalized(const TemperedModel& tm);

}  // namespace temperfilt

#endif  // TEMPERFILT_GRIDWORLD_HPP
