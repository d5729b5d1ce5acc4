#include "temperfilt/nll_gradient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "temperfilt/log_math.hpp"
#include "temperfilt/tempered_filter.hpp"

namespace temperfilt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double neg_log(double p) { return p > 0.0 ? -std::log(p) : kInf; }

template <typename Fn>
NllGradient central_differences(const TemperingParams& lambda, double step, Fn&& score)
{
    NllGradient g;
    double* out[3] = {&g.d_lambda_L, &g.d_lambda_P, &g.d_lambda_B};
    for (int i = 0; i < 3; ++i) {
        TemperingParams lo = lambda;
        TemperingParams hi = lambda;
        double* lo_c[3] = {&lo.lambda_L, &lo.lambda_P, &lo.lambda_B};
        double* hi_c[3] = {&hi.lambda_L, &hi.lambda_P, &hi.lambda_B};
        *lo_c[i] -= step;
        *hi_c[i] += step;
        *out[i] = (score(hi) - score(lo)) / (2.0 * step);
    }
    return g;
}

/// Visits every y in Y^{h+1} that has positive probability under `truth`, handing over
/// p(y_{0:h}) and the exact filtering distributions p(x_k | y_{0:k}) for k = 0..h.
template <typename Visit>
void for_each_output_sequence(const FiniteHmm& truth, std::size_t horizon, Visit&& visit)
{
    const std::size_t length = horizon + 1;
    const TrajectorySpace ys_space(truth.n_outputs, length);
    const std::size_t n = truth.n_states;
    std::vector<int> ys(length);
    std::vector<Belief> posteriors(length, Belief(n));
    for (std::size_t idx = 0; idx < ys_space.size(); ++idx) {
        ys = ys_space.decode(idx);
        double prob = 1.0;
        Belief b(n);
        for (std::size_t k = 0; k < length && prob > 0.0; ++k) {
            Belief pred(n, 0.0);
            if (k == 0) {
                pred = truth.p0;
            } else {
                for (std::size_t x = 0; x < n; ++x)
                    for (std::size_t xn = 0; xn < n; ++xn) pred[xn] += truth.trans(x, xn) * b[x];
            }
            double ev = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                pred[x] *= truth.emit(x, ys[k]);
                ev += pred[x];
            }
            prob *= ev;
            if (ev > 0.0)
                for (double& v : pred) v /= ev;
            b = pred;
            posteriors[k] = b;
        }
        if (prob > 0.0) visit(std::span<const int>(ys), prob, posteriors);
    }
}

}  // namespace

ScoreReport nll_score(const FiniteHmm& m, const TemperingParams& lambda, const Dataset& data)
{
    ScoreReport report;
    const TemperedModel tm = temper_model(m, lambda);
    std::vector<double> step_sum;
    std::vector<std::size_t> step_count;
    double total = 0.0;

    for (std::size_t t = 0; t < data.trajectories.size(); ++t) {
        const Trajectory& tr = data.trajectories[t];
        if (!tr.labeled()) throw std::invalid_argument("nll_score: trajectory without true states");
        const std::size_t len = tr.observations.size();
        if (step_sum.size() < len) {
            step_sum.resize(len, 0.0);
            step_count.resize(len, 0);
        }
        LogForwardState s;
        bool collapsed = false;
        for (std::size_t k = 0; k < len; ++k) {
            double term = kInf;
            if (!collapsed) {
                try {
                    s = (k == 0) ? filter_init(tm, tr.observations[0])
                                 : filter_step(s, tm, tr.observations[k]);
                    const Belief b = belief_readout(s, lambda.lambda_B);
                    term = neg_log(b[tr.states[k]]);
                    if (term == kInf) report.diagnostics.push_back({t, k, "zero belief at true state"});
                } catch (const FilterCollapsed&) {
                    collapsed = true;
                    report.diagnostics.push_back({t, k, "filter collapsed"});
                }
            }
            step_sum[k] += term;
            step_count[k] += 1;
            total += term;
            ++report.n_samples;
        }
    }
    report.per_step_nll.resize(step_sum.size());
    for (std::size_t k = 0; k < step_sum.size(); ++k)
        report.per_step_nll[k] = step_sum[k] / static_cast<double>(step_count[k]);
    report.mean_nll = report.n_samples ? total / static_cast<double>(report.n_samples) : 0.0;
    return report;
}

// ---------------------------------------------------------------------------------------------

GradientAccumulators gradient_init(const FiniteHmm& m, const TemperedModel& tm, int y0)
{
    const std::size_t n = m.n_states;
    GradientAccumulators acc;
    acc.log_alpha.resize(n);
    acc.acc_L.assign(n, 0.0);
    acc.acc_P.assign(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        acc.log_alpha[x] = tm.log_emit(x, y0) + tm.log_p0[x];
        if (acc.log_alpha[x] == kNegInf) continue;
        acc.acc_L[x] = std::log(m.emit(x, y0));
        acc.acc_P[x] = tm.log_emit(x, y0) + tm.log_p0[x];
    }
    if (log_normalize(acc.log_alpha) == kNegInf) throw FilterCollapsed(0);
    return acc;
}

GradientAccumulators gradient_step(const GradientAccumulators& acc, const FiniteHmm& m,
                                   const TemperedModel& tm, int y)
{
    const std::size_t n = m.n_states;
    GradientAccumulators next;
    next.step = acc.step + 1;
    next.log_alpha.assign(n, kNegInf);
    next.acc_L.assign(n, 0.0);
    next.acc_P.assign(n, 0.0);
    const double top = *std::max_element(acc.log_alpha.begin(), acc.log_alpha.end());
    std::vector<double> a(n);
    for (std::size_t x = 0; x < n; ++x) a[x] = std::exp(acc.log_alpha[x] - top);
    std::vector<double> w(n);
    for (std::size_t xn = 0; xn < n; ++xn) {
        if (tm.log_emit(xn, y) == kNegInf || tm.pred_log_scale[xn] == kNegInf) continue;
        // backward weights p(x | xn) proportional to trans^lambda_P(x, xn) alpha(x)
        const auto pw = tm.pred_weight.row(xn);
        double s = 0.0;
        double e_l = 0.0;
        double e_p = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            const double t = pw[x] * a[x];
            if (t == 0.0) continue;
            s += t;
            e_l += t * acc.acc_L[x];
            e_p += t * (acc.acc_P[x] + tm.log_trans(x, xn));
        }
        double z;
        if (s >= kLinearFloor) {
            e_l /= s;
            e_p /= s;
            z = tm.pred_log_scale[xn] + top + std::log(s);
        } else {
            for (std::size_t x = 0; x < n; ++x) w[x] = tm.log_trans(x, xn) + acc.log_alpha[x];
            z = logsumexp(w);
            if (z == kNegInf) continue;
            e_l = 0.0;
            e_p = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                if (w[x] == kNegInf) continue;
                const double p = std::exp(w[x] - z);
                e_l += p * acc.acc_L[x];
                e_p += p * (acc.acc_P[x] + tm.log_trans(x, xn));
            }
        }
        next.log_alpha[xn] = tm.log_emit(xn, y) + z;
        next.acc_L[xn] = e_l + std::log(m.emit(xn, y));
        next.acc_P[xn] = e_p + tm.log_emit(xn, y);
    }
    if (log_normalize(next.log_alpha) == kNegInf) throw FilterCollapsed(next.step);
    return next;
}

SComponents s_components(const GradientAccumulators& acc, const TemperingParams& lambda)
{
    const std::size_t n = acc.log_alpha.size();
    SComponents s{std::vector<double>(n), std::vector<double>(n), acc.log_alpha};
    const double scale_l = lambda.lambda_P * lambda.lambda_B;
    const double scale_p = lambda.lambda_B / lambda.lambda_P;
    for (std::size_t x = 0; x < n; ++x) {
        s.s_L[x] = scale_l * acc.acc_L[x];
        s.s_P[x] = scale_p * acc.acc_P[x];
    }
    return s;
}

double NllGradient::max_abs() const
{
    return std::max({std::abs(d_lambda_L), std::abs(d_lambda_P), std::abs(d_lambda_B)});
}

NllGradient assemble_gradient(std::span<const double> belief, std::span<const double> target,
                              const SComponents& s)
{
    NllGradient g;
    for (std::size_t x = 0; x < belief.size(); ++x) {
        const double d = belief[x] - target[x];
        if (d == 0.0) continue;
        g.d_lambda_L += d * s.s_L[x];
        g.d_lambda_P += d * s.s_P[x];
        g.d_lambda_B += d * s.s_B[x];
    }
    return g;
}

NllGradient nll_gradient(const FiniteHmm& m, const TemperingParams& lambda, const Dataset& data)
{
    if (!lambda.positive()) throw std::invalid_argument("nll_gradient: lambda must be > 0");
    const TemperedModel tm = temper_model(m, lambda);
    NllGradient total;
    std::size_t terms = 0;
    std::vector<double> onehot(m.n_states, 0.0);

    for (std::size_t t = 0; t < data.trajectories.size(); ++t) {
        const Trajectory& tr = data.trajectories[t];
        if (!tr.labeled()) throw std::invalid_argument("nll_gradient: trajectory without true states");
        GradientAccumulators acc;
        for (std::size_t k = 0; k < tr.observations.size(); ++k) {
            acc = (k == 0) ? gradient_init(m, tm, tr.observations[0])
                           : gradient_step(acc, m, tm, tr.observations[k]);
            const Belief b = belief_readout({acc.log_alpha, 0.0, k}, lambda.lambda_B);
            const int truth = tr.states[k];
            if (!(b[truth] > 0.0))
                throw std::domain_error("nll_gradient: zero belief at true state (trajectory " +
                                        std::to_string(t) + ", k=" + std::to_string(k) + ")");
            onehot[truth] = 1.0;
            const NllGradient g = assemble_gradient(b, onehot, s_components(acc, lambda));
            onehot[truth] = 0.0;
            total.d_lambda_L += g.d_lambda_L;
            total.d_lambda_P += g.d_lambda_P;
            total.d_lambda_B += g.d_lambda_B;
            ++terms;
        }
    }
    if (terms > 0) {
        total.d_lambda_L /= static_cast<double>(terms);
        total.d_lambda_P /= static_cast<double>(terms);
        total.d_lambda_B /= static_cast<double>(terms);
    }
    return total;
}

NllGradient fd_gradient(const FiniteHmm& m, const TemperingParams& lambda, const Dataset& data,
                        double step)
{
    return central_differences(lambda, step, [&](const TemperingParams& l) {
        return nll_score(m, l, data).mean_nll;
    });
}

// ---------------------------------------------------------------------------------------------

double expected_nll_score(const FiniteHmm& truth, const FiniteHmm& model,
                          const TemperingParams& lambda, std::size_t horizon)
{
    std::vector<double> per_k(horizon + 1, 0.0);
    for_each_output_sequence(truth, horizon, [&](std::span<const int> ys, double prob,
                                                 const std::vector<Belief>& post) {
        const FilterOutput out = run_filter(model, lambda, ys);
        for (std::size_t k = 0; k <= horizon; ++k) {
            double hc = 0.0;
            for (std::size_t x = 0; x < truth.n_states; ++x) {
                if (post[k][x] == 0.0) continue;
                if (k >= out.beliefs.size()) {
                    hc = kInf;
                    break;
                }
                hc += post[k][x] * neg_log(out.beliefs[k][x]);
            }
            per_k[k] += prob * hc;
        }
    });
    double mean = 0.0;
    for (double v : per_k) mean += v;
    return mean / static_cast<double>(horizon + 1);
}

double expected_posterior_entropy(const FiniteHmm& truth, std::size_t horizon)
{
    double total = 0.0;
    for_each_output_sequence(truth, horizon, [&](std::span<const int>, double prob,
                                                 const std::vector<Belief>& post) {
        for (const Belief& p : post) total += prob * entropy(p);
    });
    return total / static_cast<double>(horizon + 1);
}

NllGradient expected_nll_gradient(const FiniteHmm& truth, const FiniteHmm& model,
                                  const TemperingParams& lambda, std::size_t horizon)
{
    if (!lambda.positive()) throw std::invalid_argument("expected_nll_gradient: lambda must be > 0");
    const TemperedModel tm = temper_model(model, lambda);
    NllGradient total;
    for_each_output_sequence(truth, horizon, [&](std::span<const int> ys, double prob,
                                                 const std::vector<Belief>& post) {
        GradientAccumulators acc;
        for (std::size_t k = 0; k <= horizon; ++k) {
            acc = (k == 0) ? gradient_init(model, tm, ys[0]) : gradient_step(acc, model, tm, ys[k]);
            const Belief b = belief_readout({acc.log_alpha, 0.0, k}, lambda.lambda_B);
            const NllGradient g = assemble_gradient(b, post[k], s_components(acc, lambda));
            total.d_lambda_L += prob * g.d_lambda_L;
            total.d_lambda_P += prob * g.d_lambda_P;
            total.d_lambda_B += prob * g.d_lambda_B;
        }
    });
    const double inv = 1.0 / static_cast<double>(horizon + 1);
    total.d_lambda_L *= inv;
    total.d_lambda_P *= inv;
    total.d_lambda_B *= inv;
    return total;
}

NllGradient fd_expected_gradient(const FiniteHmm& truth, const FiniteHmm& model,
                                 const TemperingParams& lambda, std::size_t horizon, double step)
{
    return central_differences(lambda, step, [&](const TemperingParams& l) {
        return expected_nll_score(truth, model, l, horizon);
    });
}

}  // namespace temperfilt
