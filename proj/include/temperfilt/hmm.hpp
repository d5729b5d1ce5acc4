#ifndef TEMPERFILT_HMM_HPP
#define TEMPERFILT_HMM_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace temperfilt {

/// Dense row-major table. Row index is the conditioning state.
class Table {
public:
    Table() = default;
    Table(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }

    bool operator==(const Table&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Finite-state, finite-output autonomous HMM.
/// trans(i, j) = p(x' = j | x = i), emit(i, m) = p(y = m | x = i).
struct FiniteHmm {
    std::size_t n_states = 0;
    std::size_t n_outputs = 0;
    std::vector<double> p0;
    Table trans;
    Table emit;
};

/// The tempering triple (lambda_L, lambda_P, lambda_B). (1, 1, 1) is the classic Bayes filter.
struct TemperingParams {
    double lambda_L = 1.0;
    double lambda_P = 1.0;
    double lambda_B = 1.0;

    static constexpr TemperingParams neutral() { return {1.0, 1.0, 1.0}; }

    bool nonnegative() const { return lambda_L >= 0.0 && lambda_P >= 0.0 && lambda_B >= 0.0; }
    bool positive() const { return lambda_L > 0.0 && lambda_P > 0.0 && lambda_B > 0.0; }

    bool operator==(const TemperingParams&) const = default;
};

/// Precomputed tempered weights.
///
/// The linear-domain tables are the display form: trans^lambda_P, emit^(lambda_L lambda_P lambda_B)
/// and p0^lambda_P. Rows do not sum to one. The log-domain tables are what the filter
/// recursion consumes; they leave lambda_B out of the emission exponent because lambda_B is
/// applied only when a belief is read out.
struct TemperedModel {
    Table trans_t;
    Table emit_t;
    std::vector<double> p0_t;

    TemperingParams lambda;
    Table log_trans;             // lambda_P * log trans
    Table log_emit;              // lambda_L * lambda_P * log emit
    std::vector<double> log_p0;  // lambda_P * log p0

    // Linear copy of the tempered transitions for the inner loops: pred_weight(xn, x) =
    // exp(log_trans(x, xn) - pred_log_scale[xn]), with the column maximum as the scale.
    Table pred_weight;
    std::vector<double> pred_log_scale;

    std::size_t n_states() const { return p0_t.size(); }
    std::size_t n_outputs() const { return emit_t.cols(); }
};

/// Probability vector over states, summing to one.
using Belief = std::vector<double>;

struct Trajectory {
    std::vector<int> states;
    std::vector<int> observations;
    std::uint64_t seed = 0;

    std::size_t horizon() const { return observations.empty() ? 0 : observations.size() - 1; }
    bool labeled() const { return !states.empty(); }
};

struct Provenance {
    std::uint64_t seed = 0;
    std::string system_id;
};

struct Dataset {
    std::vector<Trajectory> trajectories;
    std::size_t horizon = 0;
    Provenance provenance;

    std::size_t size() const { return trajectories.size(); }
    bool empty() const { return trajectories.empty(); }
};

struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
};

inline constexpr double kStochasticTolerance = 1e-12;

ValidationReport validate_model(const FiniteHmm& m);

/// Checks trajectory lengths, shared horizon and alphabet bounds against a model's alphabets.
ValidationReport validate_dataset(const Dataset& data, std::size_t n_states, std::size_t n_outputs);

/// x0 ~ p0, x_{k+1} ~ trans[x_k], y_k ~ emit[x_k]. Deterministic in seed on every platform.
Trajectory sample_trajectory(const FiniteHmm& m, std::size_t horizon, std::uint64_t seed);

TemperedModel temper_model(const FiniteHmm& m, const TemperingParams& lambda);

/// p^alpha / sum(p^alpha). alpha = 0 gives the uniform distribution over the strictly
/// positive support of p. Throws std::invalid_argument on an all-zero input.
std::vector<double> temper_distribution(std::span<const double> p, double alpha);

/// Shannon entropy in nats with 0 log 0 = 0.
double entropy(std::span<const double> p);

/// std::mt19937_64 with platform-independent derived draws (the standard library
/// distributions are implementation-defined, the engine output is not).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    /// Uniform double in [0, 1) with 53 bits of resolution.
    double uniform();
    /// Uniform integer in [0, n).
    std::size_t below(std::size_t n);
    /// Index drawn from an (unnormalized is fine) nonnegative weight vector.
    std::size_t categorical(std::span<const double> weights);

private:
    std::mt19937_64 engine_;
};

/// Mixes two 64-bit values into a derived seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace temperfilt

#endif  // TEMPERFILT_HMM_HPP
