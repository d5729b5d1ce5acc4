#ifndef TEMPERFILT_TUNING_HPP
#define TEMPERFILT_TUNING_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "temperfilt/hmm.hpp"
#include "temperfilt/nll_gradient.hpp"

namespace temperfilt {

struct IdentConfig {
    double pseudocount = 1.0;
    std::size_t n_states = 0;
    std::size_t n_outputs = 0;
};

/// Which tempering component, if any, stays pinned at 1 during descent.
enum class AblationMode { none, fix_L, fix_P, fix_B };

std::string to_string(AblationMode mode);
AblationMode ablation_from_string(const std::string& s);

struct TuneConfig {
    std::size_t n_folds = 5;
    std::size_t max_iters = 200;
    TemperingParams init_lambda = TemperingParams::neutral();
    double step_size = 0.1;
    double convergence_tol = 1e-4;
    std::size_t max_halvings = 30;
    std::uint64_t seed = 0;
    AblationMode ablation = AblationMode::none;
};

struct TraceEntry {
    std::size_t iter;
    TemperingParams lambda;
    double score;
    double grad_norm;  // of the log-lambda gradient, pinned components excluded
};

struct DescentResult {
    TemperingParams lambda;
    double initial_score;
    double final_score;
    std::vector<TraceEntry> trace;  // accepted iterates only, starting with the initial point
    bool converged = false;
};

struct TuneResult {
    TemperingParams lambda_star;
    std::vector<TemperingParams> per_fold_lambdas;
    std::vector<std::pair<double, double>> per_fold_val_nll;  // (before, after)
    std::vector<std::vector<TraceEntry>> trace;               // one per fold
};

struct Fold {
    Dataset train;
    Dataset val;
    std::vector<std::size_t> val_indices;
};

/// Laplace-smoothed counts: every cell gets `pseudocount` before row normalization.
FiniteHmm identify(const Dataset& data, const IdentConfig& cfg);

/// Trajectory-level K-fold partition; fold sizes differ by at most one.
std::vector<Fold> kfold_split(const Dataset& data, std::size_t k, std::uint64_t seed);

/// Trajectory-level shuffle-and-cut into (train, test) with round(ratio * N) training trajectories.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double train_ratio,
                                             std::uint64_t seed);

/// Gradient descent on log(lambda) with accept-on-improve and step halving.
DescentResult descend(const FiniteHmm& model, const Dataset& val, const TuneConfig& cfg);

TuneResult tune_lambda(const Dataset& data, const TuneConfig& cfg, const IdentConfig& ident);

struct PipelineResult {
    FiniteHmm model;
    TemperingParams lambda_star;
    ScoreReport untempered;
    ScoreReport tempered;
    TuneResult tuning;
};

/// Train/test split, tuning on train, final identification on all of train, scoring on test.
PipelineResult fit_pipeline(const Dataset& data, double split_ratio, const TuneConfig& tune,
                            const IdentConfig& ident);

}  // namespace temperfilt

#endif  // TEMPERFILT_TUNING_HPP
