#include "temperfilt/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "temperfilt/log_math.hpp"

namespace temperfilt {

namespace {

void check_distribution(std::span<const double> p, const std::string& label,
                        std::vector<std::string>& issues)
{
    double sum = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double v = p[j];
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream os;
            os << label << " entry " << j << " = " << v << " outside [0,1]";
            issues.push_back(os.str());
        }
        sum += v;
    }
    if (!(std::abs(sum - 1.0) <= kStochasticTolerance)) {
        std::ostringstream os;
        os.precision(17);
        os << label << " sums to " << sum << ", expected 1";
        issues.push_back(os.str());
    }
}

}  // namespace

ValidationReport validate_model(const FiniteHmm& m)
{
    ValidationReport report;
    auto& issues = report.issues;
    if (m.n_states < 1) issues.push_back("n_states must be >= 1");
    if (m.n_outputs < 1) issues.push_back("n_outputs must be >= 1");
    if (m.p0.size() != m.n_states) issues.push_back("p0 length does not match n_states");
    if (m.trans.rows() != m.n_states || m.trans.cols() != m.n_states)
        issues.push_back("trans is not n_states x n_states");
    if (m.emit.rows() != m.n_states || m.emit.cols() != m.n_outputs)
        issues.push_back("emit is not n_states x n_outputs");
    if (!issues.empty()) return report;

    check_distribution(m.p0, "p0", issues);
    for (std::size_t i = 0; i < m.n_states; ++i)
        check_distribution(m.trans.row(i), "trans row " + std::to_string(i), issues);
    for (std::size_t i = 0; i < m.n_states; ++i)
        check_distribution(m.emit.row(i), "emit row " + std::to_string(i), issues);
    return report;
}

ValidationReport validate_dataset(const Dataset& data, std::size_t n_states, std::size_t n_outputs)
{
    ValidationReport report;
    for (std::size_t t = 0; t < data.trajectories.size(); ++t) {
        const auto& tr = data.trajectories[t];
        const std::string where = "trajectory " + std::to_string(t);
        if (tr.observations.size() != data.horizon + 1)
            report.issues.push_back(where + ": length " + std::to_string(tr.observations.size()) +
                                    " does not match horizon " + std::to_string(data.horizon));
        if (tr.labeled() && tr.states.size() != tr.observations.size())
            report.issues.push_back(where + ": states and observations differ in length");
        for (int x : tr.states)
            if (x < 0 || static_cast<std::size_t>(x) >= n_states) {
                report.issues.push_back(where + ": state index " + std::to_string(x) + " out of range");
                break;
            }
        for (int y : tr.observations)
            if (y < 0 || static_cast<std::size_t>(y) >= n_outputs) {
                report.issues.push_back(where + ": output index " + std::to_string(y) + " out of range");
                break;
            }
    }
    return report;
}

double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t Rng::below(std::size_t n)
{
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    // rejection sampling keeps the draw exactly uniform
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
        r = engine_();
    } while (r >= limit);
    return static_cast<std::size_t>(r % bound);
}

std::size_t Rng::categorical(std::span<const double> weights)
{
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw std::invalid_argument("Rng::categorical: no positive weight");
    const double u = uniform() * total;
    double cum = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        cum += weights[i];
        last_positive = i;
        if (u < cum) return i;
    }
    return last_positive;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index)
{
    // SplitMix64 finalizer over a combination of both inputs
    std::uint64_t z = base * 0x9E3779B97F4A7C15ULL + index + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Trajectory sample_trajectory(const FiniteHmm& m, std::size_t horizon, std::uint64_t seed)
{
    Rng rng(seed);
    Trajectory tr;
    tr.seed = seed;
    tr.states.reserve(horizon + 1);
    tr.observations.reserve(horizon + 1);
    std::size_t x = rng.categorical(m.p0);
    for (std::size_t k = 0; k <= horizon; ++k) {
        if (k > 0) x = rng.categorical(m.trans.row(x));
        tr.states.push_back(static_cast<int>(x));
        tr.observations.push_back(static_cast<int>(rng.categorical(m.emit.row(x))));
    }
    return tr;
}

TemperedModel temper_model(const FiniteHmm& m, const TemperingParams& lambda)
{
    if (!lambda.nonnegative()) throw std::invalid_argument("temper_model: lambda must be nonnegative");
    const std::size_t n = m.n_states;
    const std::size_t ny = m.n_outputs;
    const double emit_filter_exp = lambda.lambda_L * lambda.lambda_P;
    const double emit_display_exp = emit_filter_exp * lambda.lambda_B;

    TemperedModel tm;
    tm.lambda = lambda;
    tm.trans_t = Table(n, n);
    tm.log_trans = Table(n, n);
    tm.emit_t = Table(n, ny);
    tm.log_emit = Table(n, ny);
    tm.p0_t.resize(n);
    tm.log_p0.resize(n);

    // std::pow(0, 0) == 1 and std::pow(0, a > 0) == 0 already encode the conventions
    for (std::size_t i = 0; i < n; ++i) {
        tm.p0_t[i] = std::pow(m.p0[i], lambda.lambda_P);
        tm.log_p0[i] = tempered_log(m.p0[i], lambda.lambda_P);
        for (std::size_t j = 0; j < n; ++j) {
            tm.trans_t(i, j) = std::pow(m.trans(i, j), lambda.lambda_P);
            tm.log_trans(i, j) = tempered_log(m.trans(i, j), lambda.lambda_P);
        }
        for (std::size_t y = 0; y < ny; ++y) {
            tm.emit_t(i, y) = std::pow(m.emit(i, y), emit_display_exp);
            tm.log_emit(i, y) = tempered_log(m.emit(i, y), emit_filter_exp);
        }
    }
    tm.pred_weight = Table(n, n, 0.0);
    tm.pred_log_scale.assign(n, kNegInf);
    for (std::size_t xn = 0; xn < n; ++xn) {
        for (std::size_t x = 0; x < n; ++x) tm.pred_log_scale[xn] = std::max(tm.pred_log_scale[xn], tm.log_trans(x, xn));
        if (tm.pred_log_scale[xn] == kNegInf) continue;
        for (std::size_t x = 0; x < n; ++x) tm.pred_weight(xn, x) = std::exp(tm.log_trans(x, xn) - tm.pred_log_scale[xn]);
    }
    return tm;
}

std::vector<double> temper_distribution(std::span<const double> p, double alpha)
{
    if (alpha < 0.0) throw std::invalid_argument("temper_distribution: alpha must be >= 0");
    std::vector<double> logs(p.size(), kNegInf);
    bool any = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            any = true;
            logs[i] = alpha * std::log(p[i]);
        }
    }
    if (!any) throw std::invalid_argument("empty distribution");
    return softmax(logs);
}

double entropy(std::span<const double> p)
{
    double h = 0.0;
    for (double v : p)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

}  // namespace temperfilt
