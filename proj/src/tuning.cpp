#include "temperfilt/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace temperfilt {

std::string to_string(AblationMode mode)
{
    switch (mode) {
    case AblationMode::none: return "none";
    case AblationMode::fix_L: return "fix_L";
    case AblationMode::fix_P: return "fix_P";
    case AblationMode::fix_B: return "fix_B";
    }
    return "none";
}

AblationMode ablation_from_string(const std::string& s)
{
    if (s == "none") return AblationMode::none;
    if (s == "fix_L") return AblationMode::fix_L;
    if (s == "fix_P") return AblationMode::fix_P;
    if (s == "fix_B") return AblationMode::fix_B;
    throw std::invalid_argument("unknown ablation mode '" + s + "'");
}

FiniteHmm identify(const Dataset& data, const IdentConfig& cfg)
{
    if (!(cfg.pseudocount > 0.0)) throw std::invalid_argument("identify: pseudocount must be > 0");
    if (data.empty()) throw std::invalid_argument("identify: empty dataset");
    std::size_t n = cfg.n_states;
    std::size_t ny = cfg.n_outputs;
    if (n == 0 || ny == 0) {
        int max_x = 0, max_y = 0;
        for (const auto& tr : data.trajectories) {
            for (int x : tr.states) max_x = std::max(max_x, x);
            for (int y : tr.observations) max_y = std::max(max_y, y);
        }
        if (n == 0) n = static_cast<std::size_t>(max_x) + 1;
        if (ny == 0) ny = static_cast<std::size_t>(max_y) + 1;
    }

    FiniteHmm m;
    m.n_states = n;
    m.n_outputs = ny;
    m.p0.assign(n, cfg.pseudocount);
    m.trans = Table(n, n, cfg.pseudocount);
    m.emit = Table(n, ny, cfg.pseudocount);

    for (const auto& tr : data.trajectories) {
        if (!tr.labeled()) throw std::invalid_argument("identify: trajectory without true states");
        for (std::size_t k = 0; k < tr.states.size(); ++k) {
            const auto x = static_cast<std::size_t>(tr.states[k]);
            if (x >= n || static_cast<std::size_t>(tr.observations[k]) >= ny)
                throw std::out_of_range("identify: index outside configured alphabet");
            if (k == 0) m.p0[x] += 1.0;
            else m.trans(static_cast<std::size_t>(tr.states[k - 1]), x) += 1.0;
            m.emit(x, static_cast<std::size_t>(tr.observations[k])) += 1.0;
        }
    }

    auto normalize = [](std::span<double> row) {
        const double s = std::accumulate(row.begin(), row.end(), 0.0);
        for (double& v : row) v /= s;
    };
    normalize(m.p0);
    for (std::size_t i = 0; i < n; ++i) {
        normalize(m.trans.row(i));
        normalize(m.emit.row(i));
    }
    return m;
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    return idx;
}

Dataset subset(const Dataset& data, const std::vector<std::size_t>& idx)
{
    Dataset out;
    out.horizon = data.horizon;
    out.provenance = data.provenance;
    out.trajectories.reserve(idx.size());
    for (std::size_t i : idx) out.trajectories.push_back(data.trajectories[i]);
    return out;
}

bool is_pinned(AblationMode mode, int component)
{
    return (mode == AblationMode::fix_L && component == 0) ||
           (mode == AblationMode::fix_P && component == 1) ||
           (mode == AblationMode::fix_B && component == 2);
}

double score_or_inf(const FiniteHmm& model, const TemperingParams& lambda, const Dataset& val)
{
    try {
        return nll_score(model, lambda, val).mean_nll;
    } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace

std::vector<Fold> kfold_split(const Dataset& data, std::size_t k, std::uint64_t seed)
{
    if (k < 2) throw std::invalid_argument("kfold_split: need K >= 2");
    const std::size_t n = data.size();
    if (n < k) throw std::invalid_argument("kfold_split: fewer trajectories than folds");
    const auto order = shuffled_indices(n, seed);
    std::vector<Fold> folds(k);
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t begin = f * n / k;
        const std::size_t end = (f + 1) * n / k;
        std::vector<std::size_t> val(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        std::sort(val.begin(), val.end());
        std::vector<std::size_t> train;
        train.reserve(n - val.size());
        for (std::size_t i = 0; i < n; ++i)
            if (!std::binary_search(val.begin(), val.end(), i)) train.push_back(i);
        folds[f].train = subset(data, train);
        folds[f].val = subset(data, val);
        folds[f].val_indices = std::move(val);
    }
    return folds;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double train_ratio,
                                             std::uint64_t seed)
{
    if (!(train_ratio > 0.0 && train_ratio < 1.0))
        throw std::invalid_argument("train_test_split: ratio must lie in (0, 1)");
    const std::size_t n = data.size();
    const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(n)));
    if (n_train == 0 || n_train == n) throw std::invalid_argument("train_test_split: dataset too small");
    auto order = shuffled_indices(n, seed);
    std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {subset(data, train), subset(data, test)};
}

DescentResult descend(const FiniteHmm& model, const Dataset& val, const TuneConfig& cfg)
{
    if (!(cfg.step_size > 0.0)) throw std::invalid_argument("descend: step_size must be > 0");
    if (!cfg.init_lambda.positive()) throw std::invalid_argument("descend: init_lambda must be > 0");

    TemperingParams lambda = cfg.init_lambda;
    if (is_pinned(cfg.ablation, 0)) lambda.lambda_L = 1.0;
    if (is_pinned(cfg.ablation, 1)) lambda.lambda_P = 1.0;
    if (is_pinned(cfg.ablation, 2)) lambda.lambda_B = 1.0;
    double score = score_or_inf(model, lambda, val);
    DescentResult result{lambda, score, score, {}, false};
    result.trace.push_back({0, lambda, score, 0.0});
    if (!std::isfinite(score)) return result;

    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        NllGradient g;
        try {
            g = nll_gradient(model, lambda, val);
        } catch (const std::exception&) {
            break;
        }
        // chain rule onto theta = log(lambda)
        double theta_grad[3] = {lambda.lambda_L * g.d_lambda_L, lambda.lambda_P * g.d_lambda_P,
                                lambda.lambda_B * g.d_lambda_B};
        double norm2 = 0.0;
        for (int i = 0; i < 3; ++i) {
            if (is_pinned(cfg.ablation, i)) theta_grad[i] = 0.0;
            norm2 += theta_grad[i] * theta_grad[i];
        }
        const double norm = std::sqrt(norm2);
        result.trace.back().grad_norm = norm;
        if (!std::isfinite(norm)) break;
        if (norm < cfg.convergence_tol) {
            result.converged = true;
            break;
        }

        double step = cfg.step_size;
        bool accepted = false;
        for (std::size_t h = 0; h <= cfg.max_halvings; ++h, step *= 0.5) {
            const TemperingParams cand{lambda.lambda_L * std::exp(-step * theta_grad[0]),
                                       lambda.lambda_P * std::exp(-step * theta_grad[1]),
                                       lambda.lambda_B * std::exp(-step * theta_grad[2])};
            const double cand_score = score_or_inf(model, cand, val);
            if (cand_score < score) {
                lambda = cand;
                score = cand_score;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            result.converged = true;  // no descent direction left at machine resolution
            break;
        }
        result.trace.push_back({iter, lambda, score, 0.0});
    }
    result.lambda = lambda;
    result.final_score = score;
    return result;
}

TuneResult tune_lambda(const Dataset& data, const TuneConfig& cfg, const IdentConfig& ident)
{
    const auto folds = kfold_split(data, cfg.n_folds, derive_seed(cfg.seed, 0x6b666f6c64ULL));
    TuneResult result;
    double sum[3] = {0.0, 0.0, 0.0};
    for (const Fold& fold : folds) {
        const FiniteHmm model = identify(fold.train, ident);
        const DescentResult d = descend(model, fold.val, cfg);
        result.per_fold_lambdas.push_back(d.lambda);
        result.per_fold_val_nll.emplace_back(d.initial_score, d.final_score);
        result.trace.push_back(d.trace);
        sum[0] += d.lambda.lambda_L;
        sum[1] += d.lambda.lambda_P;
        sum[2] += d.lambda.lambda_B;
    }
    const double k = static_cast<double>(folds.size());
    result.lambda_star = {sum[0] / k, sum[1] / k, sum[2] / k};
    return result;
}

PipelineResult fit_pipeline(const Dataset& data, double split_ratio, const TuneConfig& tune,
                            const IdentConfig& ident)
{
    auto [train, test] = train_test_split(data, split_ratio, derive_seed(tune.seed, 0x73706c6974ULL));
    PipelineResult r;
    r.tuning = tune_lambda(train, tune, ident);
    r.lambda_star = r.tuning.lambda_star;
    r.model = identify(train, ident);
    r.untempered = nll_score(r.model, TemperingParams::neutral(), test);
    r.tempered = nll_score(r.model, r.lambda_star, test);
    return r;
}

}  // namespace temperfilt
