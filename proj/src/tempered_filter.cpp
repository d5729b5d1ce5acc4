#include "temperfilt/tempered_filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "temperfilt/log_math.hpp"

namespace temperfilt {

FilterCollapsed::FilterCollapsed(std::size_t step)
    : std::runtime_error("belief collapsed at k=" + std::to_string(step)), step_(step)
{}

namespace {

void check_output(const TemperedModel& tm, int y)
{
    if (y < 0 || static_cast<std::size_t>(y) >= tm.n_outputs())
        throw std::out_of_range("observation index " + std::to_string(y) + " out of range");
}

}  // namespace

LogForwardState filter_init(const TemperedModel& tm, int y0)
{
    check_output(tm, y0);
    const std::size_t n = tm.n_states();
    LogForwardState s;
    s.log_alpha.resize(n);
    for (std::size_t x = 0; x < n; ++x) s.log_alpha[x] = tm.log_emit(x, y0) + tm.log_p0[x];
    const double z = log_normalize(s.log_alpha);
    if (z == kNegInf) throw FilterCollapsed(0);
    s.log_norm_accum = z;
    s.step = 0;
    return s;
}

std::vector<double> log_predict(const TemperedModel& tm, std::span<const double> log_alpha)
{
    const std::size_t n = tm.n_states();
    std::vector<double> out(n, kNegInf);
    const double top = *std::max_element(log_alpha.begin(), log_alpha.end());
    if (top == kNegInf) return out;
    std::vector<double> a(n);
    for (std::size_t x = 0; x < n; ++x) a[x] = std::exp(log_alpha[x] - top);
    std::vector<double> terms(n);
    for (std::size_t xn = 0; xn < n; ++xn) {
        if (tm.pred_log_scale[xn] == kNegInf) continue;
        const auto w = tm.pred_weight.row(xn);
        double s = 0.0;
        for (std::size_t x = 0; x < n; ++x) s += w[x] * a[x];
        if (s >= kLinearFloor) {
            out[xn] = tm.pred_log_scale[xn] + top + std::log(s);
        } else {
            // terms lost to underflow could matter here; redo the column exactly
            for (std::size_t x = 0; x < n; ++x) terms[x] = tm.log_trans(x, xn) + log_alpha[x];
            out[xn] = logsumexp(terms);
        }
    }
    return out;
}

LogForwardState filter_step(const LogForwardState& state, const TemperedModel& tm, int y)
{
    check_output(tm, y);
    const std::size_t n = tm.n_states();
    LogForwardState next;
    next.step = state.step + 1;
    next.log_alpha.resize(n);
    const std::vector<double> pred = log_predict(tm, state.log_alpha);
    for (std::size_t xn = 0; xn < n; ++xn) next.log_alpha[xn] = tm.log_emit(xn, y) + pred[xn];
    const double z = log_normalize(next.log_alpha);
    if (z == kNegInf) throw FilterCollapsed(next.step);
    next.log_norm_accum = state.log_norm_accum + z;
    return next;
}

Belief belief_readout(const LogForwardState& state, double lambda_B)
{
    std::vector<double> scaled(state.log_alpha.size());
    for (std::size_t x = 0; x < scaled.size(); ++x) {
        const double l = state.log_alpha[x];
        scaled[x] = std::isfinite(l) ? lambda_B * l : kNegInf;
    }
    if (logsumexp(scaled) == kNegInf) throw FilterCollapsed(state.step);
    return softmax(scaled);
}

FilterOutput run_filter(const FiniteHmm& m, const TemperingParams& lambda, std::span<const int> ys)
{
    FilterOutput out;
    if (ys.empty()) return out;
    const TemperedModel tm = temper_model(m, lambda);
    try {
        LogForwardState s = filter_init(tm, ys[0]);
        out.beliefs.push_back(belief_readout(s, lambda.lambda_B));
        for (std::size_t k = 1; k < ys.size(); ++k) {
            s = filter_step(s, tm, ys[k]);
            out.beliefs.push_back(belief_readout(s, lambda.lambda_B));
        }
    } catch (const FilterCollapsed& e) {
        out.collapsed_at = e.step();
    }
    return out;
}

std::vector<Belief> naive_filter(const FiniteHmm& m, const TemperingParams& lambda,
                                 std::span<const int> ys)
{
    if (!(lambda.lambda_B > 0.0)) throw std::invalid_argument("naive_filter: lambda_B must be > 0");
    const TemperedModel tm = temper_model(m, lambda);
    const std::size_t n = m.n_states;
    const double lb = lambda.lambda_B;
    std::vector<Belief> out;
    Belief b(n);

    auto normalize = [](Belief& v) {
        double s = 0.0;
        for (double x : v) s += x;
        for (double& x : v) x /= s;  // 0/0 -> NaN on total underflow
    };

    for (std::size_t k = 0; k < ys.size(); ++k) {
        const int y = ys[k];
        Belief next(n);
        for (std::size_t xn = 0; xn < n; ++xn) {
            double inner;
            if (k == 0) {
                inner = std::pow(tm.p0_t[xn], lb);
            } else {
                double acc = 0.0;
                for (std::size_t x = 0; x < n; ++x) acc += tm.trans_t(x, xn) * std::pow(b[x], 1.0 / lb);
                inner = std::pow(acc, lb);
            }
            next[xn] = tm.emit_t(xn, y) * inner;
        }
        normalize(next);
        b = next;
        out.push_back(b);
    }
    return out;
}

std::vector<Belief> classic_forward_filter(const FiniteHmm& m, std::span<const int> ys)
{
    const std::size_t n = m.n_states;
    std::vector<Belief> out;
    Belief b(n, 0.0);
    for (std::size_t k = 0; k < ys.size(); ++k) {
        Belief pred(n, 0.0);
        if (k == 0) {
            pred = m.p0;
        } else {
            for (std::size_t x = 0; x < n; ++x)
                for (std::size_t xn = 0; xn < n; ++xn) pred[xn] += m.trans(x, xn) * b[x];
        }
        double evidence = 0.0;
        for (std::size_t x = 0; x < n; ++x) {
            pred[x] *= m.emit(x, ys[k]);
            evidence += pred[x];
        }
        if (!(evidence > 0.0)) throw FilterCollapsed(k);
        for (double& v : pred) v /= evidence;
        b = pred;
        out.push_back(b);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------

TrajectorySpace::TrajectorySpace(std::size_t n_states, std::size_t length)
    : n_states_(n_states), length_(length), size_(1)
{
    for (std::size_t t = 0; t < length; ++t) {
        if (size_ > kMaxEnumeratedTrajectories / n_states)
            throw std::length_error("trajectory space exceeds enumeration guard of 1e7");
        size_ *= n_states;
    }
}

std::vector<int> TrajectorySpace::decode(std::size_t index) const
{
    std::vector<int> xs(length_);
    for (std::size_t t = 0; t < length_; ++t) {
        xs[t] = static_cast<int>(index % n_states_);
        index /= n_states_;
    }
    return xs;
}

int TrajectorySpace::state_at(std::size_t index, std::size_t t) const
{
    for (std::size_t i = 0; i < t; ++i) index /= n_states_;
    return static_cast<int>(index % n_states_);
}

PathLogTerms path_log_terms(const FiniteHmm& m, std::span<const int> xs, std::span<const int> ys)
{
    PathLogTerms terms{0.0, std::log(m.p0[xs[0]])};
    for (std::size_t t = 0; t < xs.size(); ++t) {
        terms.log_likelihood += std::log(m.emit(xs[t], ys[t]));
        if (t > 0) terms.log_prior += std::log(m.trans(xs[t - 1], xs[t]));
    }
    return terms;
}

std::vector<double> tempered_posterior(const FiniteHmm& m, const TemperingParams& lambda,
                                       std::span<const int> ys)
{
    const TrajectorySpace space(m.n_states, ys.size());
    const double e_lik = lambda.lambda_L * lambda.lambda_P;
    std::vector<double> logw(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto xs = space.decode(i);
        double w = tempered_log(m.p0[xs[0]], lambda.lambda_P);
        for (std::size_t t = 0; t < xs.size(); ++t) {
            w += tempered_log(m.emit(xs[t], ys[t]), e_lik);
            if (t > 0) w += tempered_log(m.trans(xs[t - 1], xs[t]), lambda.lambda_P);
        }
        logw[i] = w;
    }
    return softmax(logw);
}

Belief brute_force_belief(const FiniteHmm& m, const TemperingParams& lambda,
                          std::span<const int> ys, std::size_t k)
{
    if (k >= ys.size()) throw std::out_of_range("brute_force_belief: k beyond observations");
    const std::size_t n = m.n_states;
    const TrajectorySpace space(n, k + 1);
    const double e_lik = lambda.lambda_L * lambda.lambda_P;

    std::vector<std::vector<double>> per_final(n);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto xs = space.decode(i);
        double w = tempered_log(m.p0[xs[0]], lambda.lambda_P);
        for (std::size_t t = 0; t <= k; ++t) {
            w += tempered_log(m.emit(xs[t], ys[t]), e_lik);
            if (t > 0) w += tempered_log(m.trans(xs[t - 1], xs[t]), lambda.lambda_P);
        }
        per_final[xs[k]].push_back(w);
    }
    std::vector<double> outer(n);
    for (std::size_t x = 0; x < n; ++x) {
        const double inner = logsumexp(per_final[x]);
        outer[x] = std::isfinite(inner) ? lambda.lambda_B * inner : kNegInf;
    }
    if (logsumexp(outer) == kNegInf) throw FilterCollapsed(k);
    return softmax(outer);
}

// ---------------------------------------------------------------------------------------------

MapFilterResult map_filter(const FiniteHmm& m, double lambda_L, std::span<const int> ys)
{
    const std::size_t n = m.n_states;
    MapFilterResult r;
    r.log_max_weight.assign(n, kNegInf);
    if (ys.empty()) return r;

    for (std::size_t x = 0; x < n; ++x)
        r.log_max_weight[x] = tempered_log(m.emit(x, ys[0]), lambda_L) + tempered_log(m.p0[x], 1.0);
    if (logsumexp(r.log_max_weight) == kNegInf) throw FilterCollapsed(0);

    for (std::size_t k = 1; k < ys.size(); ++k) {
        std::vector<double> next(n, kNegInf);
        std::vector<int> bp(n, 0);
        for (std::size_t xn = 0; xn < n; ++xn) {
            double best = kNegInf;
            int arg = 0;
            for (std::size_t x = 0; x < n; ++x) {
                const double v = tempered_log(m.trans(x, xn), 1.0) + r.log_max_weight[x];
                if (v > best) {
                    best = v;
                    arg = static_cast<int>(x);
                }
            }
            next[xn] = tempered_log(m.emit(xn, ys[k]), lambda_L) + best;
            bp[xn] = arg;
        }
        if (logsumexp(next) == kNegInf) throw FilterCollapsed(k);
        r.log_max_weight = std::move(next);
        r.backpointer.push_back(std::move(bp));
    }
    r.belief = softmax(r.log_max_weight);
    return r;
}

std::vector<int> map_path(const MapFilterResult& r, int final_state)
{
    std::vector<int> path(r.backpointer.size() + 1);
    path.back() = final_state;
    for (std::size_t t = r.backpointer.size(); t > 0; --t) path[t - 1] = r.backpointer[t - 1][path[t]];
    return path;
}

double map_limit_check(const FiniteHmm& m, std::span<const int> ys, double pbar)
{
    const FilterOutput tempered = run_filter(m, {1.0, pbar, 1.0 / pbar}, ys);
    if (tempered.collapsed_at) throw FilterCollapsed(*tempered.collapsed_at);
    const MapFilterResult map = map_filter(m, 1.0, ys);
    const Belief& b = tempered.beliefs.back();
    double dist = 0.0;
    for (std::size_t x = 0; x < b.size(); ++x) dist = std::max(dist, std::abs(b[x] - map.belief[x]));
    return dist;
}

double elbo_objective(std::span<const double> q, const FiniteHmm& m, std::span<const int> ys,
                      const TemperingParams& lambda)
{
    const TrajectorySpace space(m.n_states, ys.size());
    if (q.size() != space.size()) throw std::invalid_argument("elbo_objective: q has wrong size");
    double expected_loglik = 0.0;
    double kl = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (q[i] <= 0.0) continue;  // 0 log 0 = 0
        const auto xs = space.decode(i);
        const PathLogTerms terms = path_log_terms(m, xs, ys);
        if (terms.log_likelihood == kNegInf || terms.log_prior == kNegInf) return kNegInf;
        const double lq = std::log(q[i]);
        expected_loglik += q[i] * terms.log_likelihood;
        kl += q[i] * (lq - terms.log_prior);
        h -= q[i] * lq;
    }
    const double inv_l = 1.0 / lambda.lambda_L;
    return expected_loglik - inv_l * kl + inv_l * (1.0 / lambda.lambda_P - 1.0) * h;
}

}  // namespace temperfilt
