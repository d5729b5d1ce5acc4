#ifndef TEMPERFILT_NLL_GRADIENT_HPP
#define TEMPERFILT_NLL_GRADIENT_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "temperfilt/hmm.hpp"

namespace temperfilt {

/// (trajectory, step) at which the filter gave the true state zero mass, or collapsed.
struct ScoreDiagnostic {
    std::size_t trajectory;
    std::size_t step;
    std::string reason;
};

/// Mean negative log belief at the true state, in nats per state estimate.
struct ScoreReport {
    double mean_nll = 0.0;
    std::vector<double> per_step_nll;  // averaged over trajectories, one entry per k
    std::size_t n_samples = 0;         // number of (trajectory, k) terms in the mean
    std::vector<ScoreDiagnostic> diagnostics;
};

/// Monte-Carlo NLL score: the observed x_k stands in for a draw from p(x_k | y_{0:k}).
/// Collapse or a zero belief at the true state makes the score +inf and is listed in
/// diagnostics. Requires labeled trajectories.
ScoreReport nll_score(const FiniteHmm& m, const TemperingParams& lambda, const Dataset& data);

/// Forward state plus the two additive-functional accumulators.
///
/// acc_L(x) = E[sum_t log emit(x_t, y_t) | x_k = x] and
/// acc_P(x) = E[log p_lambda(x_{0:k}, y_{0:k}) | x_k = x], both under the tempered backward
/// trajectory posterior. States with zero forward weight carry acc = 0.
struct GradientAccumulators {
    std::vector<double> log_alpha;  // sum-normalized, lambda_B free
    std::vector<double> acc_L;
    std::vector<double> acc_P;
    std::size_t step = 0;
};

GradientAccumulators gradient_init(const FiniteHmm& m, const TemperedModel& tm, int y0);
GradientAccumulators gradient_step(const GradientAccumulators& acc, const FiniteHmm& m,
                                   const TemperedModel& tm, int y);

/// Per-state score functions s_i = d log b_lambda(x, y) / d lambda_i, each up to a per-y constant.
struct SComponents {
    std::vector<double> s_L;
    std::vector<double> s_P;
    std::vector<double> s_B;
};

SComponents s_components(const GradientAccumulators& acc, const TemperingParams& lambda);

struct NllGradient {
    double d_lambda_L = 0.0;
    double d_lambda_P = 0.0;
    double d_lambda_B = 0.0;

    double operator[](std::size_t i) const { return i == 0 ? d_lambda_L : i == 1 ? d_lambda_P : d_lambda_B; }
    double max_abs() const;
};

/// sum_x (b(x) - p(x)) s_i(x), for each i, with p a distribution over states.
NllGradient assemble_gradient(std::span<const double> belief, std::span<const double> target,
                              const SComponents& s);

/// Analytic gradient of nll_score with respect to lambda. Requires lambda > 0 componentwise.
/// Throws std::domain_error when the score is infinite (gradient undefined).
NllGradient nll_gradient(const FiniteHmm& m, const TemperingParams& lambda, const Dataset& data);

/// Central differences of nll_score on the same data.
NllGradient fd_gradient(const FiniteHmm& m, const TemperingParams& lambda, const Dataset& data,
                        double step);

// ---------------------------------------------------------------------------------------------
// Exact expectations. The expectation over (x, y) is taken under `truth` by enumerating
// Y^{h+1}, instead of sampling. Only for tiny alphabets and horizons.

/// Mean over k = 0..h of N_k = E_y H_c(p(x_k | y_{0:k}), b_lambda(x_k | y_{0:k})).
double expected_nll_score(const FiniteHmm& truth, const FiniteHmm& model,
                          const TemperingParams& lambda, std::size_t horizon);

/// Mean over k of E_y H(p(x_k | y_{0:k})), the minimum of expected_nll_score.
double expected_posterior_entropy(const FiniteHmm& truth, std::size_t horizon);

NllGradient expected_nll_gradient(const FiniteHmm& truth, const FiniteHmm& model,
                                  const TemperingParams& lambda, std::size_t horizon);

NllGradient fd_expected_gradient(const FiniteHmm& truth, const FiniteHmm& model,
                                 const TemperingParams& lambda, std::size_t horizon, double step);

}  // namespace temperfilt

#endif  // TEMPERFILT_NLL_GRADIENT_HPP
