#ifndef TEMPERFILT_TEMPERED_FILTER_HPP
#define TEMPERFILT_TEMPERED_FILTER_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "temperfilt/hmm.hpp"

namespace temperfilt {

/// Thrown when every state receives zero tempered weight.
class FilterCollapsed : public std::runtime_error {
public:
    explicit FilterCollapsed(std::size_t step);
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

/// Log-domain tempered forward weight, sum-normalized after every step.
///
/// This is the lambda_B-free inner marginal of the tempered belief. lambda_B only enters in
/// belief_readout, so one state can be read out under any lambda_B.
struct LogForwardState {
    std::vector<double> log_alpha;
    double log_norm_accum = 0.0;  // sum of the subtracted log-normalizers
    std::size_t step = 0;
};

struct FilterOutput {
    std::vector<Belief> beliefs;  // one per step that completed before any collapse
    std::optional<std::size_t> collapsed_at;
};

LogForwardState filter_init(const TemperedModel& tm, int y0);

/// One recursion step (log-sum-exp over the previous state, then the tempered emission).
/// log sum_x trans^lambda_P(x, xn) alpha(x) for every xn. Sums below kLinearFloor are
/// recomputed with logsumexp, so the linear fast path never loses accuracy to underflow.
inline constexpr double kLinearFloor = 1e-280;
std::vector<double> log_predict(const TemperedModel& tm, std::span<const double> log_alpha);

LogForwardState filter_step(const LogForwardState& state, const TemperedModel& tm, int y);

/// exp(lambda_B * l - logsumexp(lambda_B * l)).
Belief belief_readout(const LogForwardState& state, double lambda_B);

FilterOutput run_filter(const FiniteHmm& m, const TemperingParams& lambda, std::span<const int> ys);

/// Straightforward linear-domain recursion with per-step normalization. Underflows for large
/// exponents and small probabilities; kept to document that failure mode. Returned beliefs may
/// contain NaN once every weight has underflowed to zero.
std::vector<Belief> naive_filter(const FiniteHmm& m, const TemperingParams& lambda,
                                 std::span<const int> ys);

/// Classic normalized forward filter, written without any tempering machinery.
std::vector<Belief> classic_forward_filter(const FiniteHmm& m, std::span<const int> ys);

// ---------------------------------------------------------------------------------------------
// Enumeration over trajectory space. Used as the independent oracle for the recursions.

inline constexpr std::size_t kMaxEnumeratedTrajectories = 10'000'000;

/// Indexing of X^{k+1}: trajectory index i has x_t = digit t of i in base n_states
/// (x_0 least significant).
class TrajectorySpace {
public:
    TrajectorySpace(std::size_t n_states, std::size_t length);
    std::size_t size() const { return size_; }
    std::size_t length() const { return length_; }
    std::vector<int> decode(std::size_t index) const;
    int state_at(std::size_t index, std::size_t t) const;

private:
    std::size_t n_states_;
    std::size_t length_;
    std::size_t size_;
};

/// log p(y_{0:k} | x_{0:k}) and log p(x_{0:k}) for one trajectory.
struct PathLogTerms {
    double log_likelihood;
    double log_prior;
};
PathLogTerms path_log_terms(const FiniteHmm& m, std::span<const int> xs, std::span<const int> ys);

/// Tempered posterior over all of X^{k+1} (k = ys.size() - 1), in TrajectorySpace order.
std::vector<double> tempered_posterior(const FiniteHmm& m, const TemperingParams& lambda,
                                       std::span<const int> ys);

/// Tempered belief at time k computed by direct marginalization over X^{k+1}.
Belief brute_force_belief(const FiniteHmm& m, const TemperingParams& lambda,
                          std::span<const int> ys, std::size_t k);

// ---------------------------------------------------------------------------------------------
// MAP filter and the MAP limit of the tempered filter.

struct MapFilterResult {
    std::vector<double> log_max_weight;       // log max over x_{0:k-1} of the joint weight
    Belief belief;                            // log_max_weight normalized over x_k
    std::vector<std::vector<int>> backpointer;  // backpointer[t][x] = best x_{t-1}, t >= 1
};

/// Max-product recursion with the emission raised to lambda_L. Ties go to the lowest index.
MapFilterResult map_filter(const FiniteHmm& m, double lambda_L, std::span<const int> ys);

/// The maximizing past trajectory that ends in `final_state`.
std::vector<int> map_path(const MapFilterResult& r, int final_state);

/// L-infinity distance between the tempered belief at (1, pbar, 1/pbar) and the MAP belief,
/// both at the last time step of ys.
double map_limit_check(const FiniteHmm& m, std::span<const int> ys, double pbar);

/// E_q[log p(y|x)] - KL(q || prior) / lambda_L + (1/lambda_P - 1) H(q) / lambda_L, with q given
/// over TrajectorySpace order. Returns -inf when the KL term or the likelihood term is infinite.
double elbo_objective(std::span<const double> q, const FiniteHmm& m, std::span<const int> ys,
                      const TemperingParams& lambda);

}  // namespace temperfilt

#endif  // TEMPERFILT_TEMPERED_FILTER_HPP
