#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "temperfilt/tuning.hpp"
#include "test_support.hpp"

using namespace temperfilt;
using temperfilt::testing::identity_model;
using temperfilt::testing::random_model;

namespace {

Dataset sampled_dataset(const FiniteHmm& m, std::size_t n, std::size_t horizon, std::uint64_t seed)
{
    Dataset d;
    d.horizon = horizon;
    for (std::size_t i = 0; i < n; ++i) d.trajectories.push_back(sample_trajectory(m, horizon, derive_seed(seed, i)));
    return d;
}

double table_linf(const Table& a, const Table& b)
{
    double d = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
    return d;
}

/// Tagged dataset: trajectory i carries seed i so that subsets can be traced back.
Dataset tagged_dataset(std::size_t n)
{
    Dataset d;
    d.horizon = 0;
    for (std::size_t i = 0; i < n; ++i) d.trajectories.push_back({{0}, {0}, i});
    return d;
}

}  // namespace

TEST_CASE("identify: an unvisited row is uniform")
{
    Dataset d;
    d.horizon = 1;
    d.trajectories.push_back({{0, 0}, {1, 0}, 0});
    const FiniteHmm m = identify(d, {1.0, 3, 2});
    for (std::size_t j = 0; j < 3; ++j) CHECK(m.trans(2, j) == doctest::Approx(1.0 / 3.0));
    CHECK(m.emit(1, 0) == doctest::Approx(0.5));
    CHECK(validate_model(m).ok());
}

TEST_CASE("identify: one observed transition with pseudocount 1")
{
    Dataset d;
    d.horizon = 1;
    d.trajectories.push_back({{0, 0}, {0, 0}, 0});
    const FiniteHmm m = identify(d, {1.0, 2, 1});
    CHECK(m.trans(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(m.trans(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(m.p0[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("identify infers alphabet sizes when not configured")
{
    Dataset d;
    d.horizon = 1;
    d.trajectories.push_back({{0, 2}, {1, 3}, 0});
    const FiniteHmm m = identify(d, {});
    CHECK(m.n_states == 3);
    CHECK(m.n_outputs == 4);
}

TEST_CASE("identify rejects out-of-alphabet data and a zero pseudocount")
{
    Dataset d;
    d.horizon = 0;
    d.trajectories.push_back({{2}, {0}, 0});
    CHECK_THROWS_AS(identify(d, {1.0, 2, 1}), std::out_of_range);
    CHECK_THROWS_AS(identify(d, {0.0, 3, 1}), std::invalid_argument);
}

TEST_CASE("identify converges to the generating model")
{
    Rng rng(1);
    const FiniteHmm truth = random_model(rng, 3, 3, 0.05);
    // 1000 trajectories of 100 steps = 1e5 transitions
    const Dataset d = sampled_dataset(truth, 1000, 99, 2);
    const FiniteHmm m = identify(d, {1.0, 3, 3});
    CHECK(table_linf(m.trans, truth.trans) <= 0.01);
    CHECK(table_linf(m.emit, truth.emit) <= 0.01);
}

TEST_CASE("property: identified models are always valid")
{
    Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const FiniteHmm truth = random_model(rng, 2 + rng.below(4), 1 + rng.below(4));
        const Dataset d = sampled_dataset(truth, 1 + rng.below(5), rng.below(6), trial);
        const FiniteHmm m = identify(d, {0.1 + rng.uniform(), truth.n_states, truth.n_outputs});
        CHECK(validate_model(m).ok());
        for (double v : m.trans.data()) CHECK(v > 0.0);
    }
}

TEST_CASE("kfold_split exact division")
{
    const auto folds = kfold_split(tagged_dataset(10), 5, 3);
    REQUIRE(folds.size() == 5);
    for (const Fold& f : folds) {
        CHECK(f.val.size() == 2);
        CHECK(f.train.size() == 8);
    }
}

TEST_CASE("property: kfold_split is a deterministic partition")
{
    for (std::size_t n : {5u, 7u, 13u, 40u}) {
        for (std::size_t k : {2u, 3u, 5u}) {
            if (n < k) continue;
            const Dataset d = tagged_dataset(n);
            const auto folds = kfold_split(d, k, 42);
            std::multiset<std::uint64_t> seen;
            std::size_t min_size = n, max_size = 0;
            for (const Fold& f : folds) {
                std::set<std::uint64_t> val;
                for (const auto& tr : f.val.trajectories) {
                    seen.insert(tr.seed);
                    val.insert(tr.seed);
                }
                for (const auto& tr : f.train.trajectories) CHECK(val.count(tr.seed) == 0);
                CHECK(f.train.size() + f.val.size() == n);
                min_size = std::min(min_size, f.val.size());
                max_size = std::max(max_size, f.val.size());
            }
            CHECK(seen.size() == n);
            CHECK(std::set<std::uint64_t>(seen.begin(), seen.end()).size() == n);
            CHECK(max_size - min_size <= 1);

            const auto again = kfold_split(d, k, 42);
            for (std::size_t f = 0; f < k; ++f) CHECK(again[f].val_indices == folds[f].val_indices);
        }
    }
}

TEST_CASE("kfold_split rejects too few trajectories")
{
    CHECK_THROWS_AS(kfold_split(tagged_dataset(3), 5, 0), std::invalid_argument);
    CHECK_THROWS_AS(kfold_split(tagged_dataset(3), 1, 0), std::invalid_argument);
}

TEST_CASE("train_test_split sizes and disjointness")
{
    const auto [train, test] = train_test_split(tagged_dataset(195), 0.7, 9);
    CHECK(train.size() == 137);  // round(136.5)
    CHECK(test.size() == 58);
    std::set<std::uint64_t> a;
    for (const auto& tr : train.trajectories) a.insert(tr.seed);
    for (const auto& tr : test.trajectories) CHECK(a.count(tr.seed) == 0);
}

TEST_CASE("ablation mode strings")
{
    for (AblationMode m : {AblationMode::none, AblationMode::fix_L, AblationMode::fix_P, AblationMode::fix_B})
        CHECK(ablation_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(ablation_from_string("fix_Q"), std::invalid_argument);
}

TEST_CASE("descend: accepted iterates never increase the score and lambda stays positive")
{
    Rng rng(3);
    for (int trial = 0; trial < 4; ++trial) {
        const FiniteHmm truth = random_model(rng, 4, 3, 0.02);
        const Dataset train = sampled_dataset(truth, 8, 15, 10 + trial);
        const Dataset val = sampled_dataset(truth, 8, 15, 20 + trial);
        const FiniteHmm model = identify(train, {1.0, 4, 3});
        TuneConfig cfg;
        cfg.max_iters = 40;
        const DescentResult r = descend(model, val, cfg);
        REQUIRE(!r.trace.empty());
        CHECK(r.trace.front().lambda == TemperingParams::neutral());
        for (std::size_t i = 1; i < r.trace.size(); ++i) {
            CHECK(r.trace[i].score < r.trace[i - 1].score);
            CHECK(r.trace[i].lambda.positive());
        }
        CHECK(r.final_score <= r.initial_score);
        CHECK(r.final_score == doctest::Approx(nll_score(model, r.lambda, val).mean_nll).epsilon(1e-14));
    }
}

TEST_CASE("descend: pinned components stay at one")
{
    Rng rng(4);
    const FiniteHmm truth = random_model(rng, 3, 3, 0.02);
    const Dataset train = sampled_dataset(truth, 6, 10, 1);
    const Dataset val = sampled_dataset(truth, 6, 10, 2);
    const FiniteHmm model = identify(train, {1.0, 3, 3});
    TuneConfig cfg;
    cfg.max_iters = 20;
    cfg.init_lambda = {1.5, 1.5, 1.5};
    cfg.ablation = AblationMode::fix_B;
    for (const TraceEntry& e : descend(model, val, cfg).trace) CHECK(e.lambda.lambda_B == 1.0);
    cfg.ablation = AblationMode::fix_L;
    for (const TraceEntry& e : descend(model, val, cfg).trace) CHECK(e.lambda.lambda_L == 1.0);
    cfg.ablation = AblationMode::fix_P;
    for (const TraceEntry& e : descend(model, val, cfg).trace) CHECK(e.lambda.lambda_P == 1.0);
}

TEST_CASE("descend on a deterministic system stays at the neutral point")
{
    const FiniteHmm m = identity_model(3);
    const Dataset val = sampled_dataset(m, 5, 5, 1);
    const DescentResult r = descend(m, val, TuneConfig{});
    CHECK(r.lambda == TemperingParams::neutral());
    CHECK(r.final_score == 0.0);
    CHECK(r.converged);
}

TEST_CASE("tune_lambda: a near-perfect model stays near the neutral point")
{
    Rng rng(5);
    const FiniteHmm truth = random_model(rng, 3, 2, 0.05);
    const Dataset d = sampled_dataset(truth, 2000, 20, 6);
    TuneConfig cfg;
    cfg.n_folds = 2;
    const TuneResult r = tune_lambda(d, cfg, {1.0, 3, 2});
    const TemperingParams& l = r.lambda_star;
    CHECK(std::abs(l.lambda_L - 1.0) <= 0.05);
    CHECK(std::abs(l.lambda_P - 1.0) <= 0.05);
    CHECK(std::abs(l.lambda_B - 1.0) <= 0.05);
}

TEST_CASE("tune_lambda: lambda_star is the fold mean and no fold gets worse")
{
    Rng rng(6);
    const FiniteHmm truth = random_model(rng, 4, 3, 0.02);
    const Dataset d = sampled_dataset(truth, 15, 12, 7);
    TuneConfig cfg;
    cfg.n_folds = 3;
    cfg.max_iters = 30;
    const TuneResult r = tune_lambda(d, cfg, {1.0, 4, 3});
    REQUIRE(r.per_fold_lambdas.size() == 3);
    double sum[3] = {0, 0, 0};
    for (const auto& l : r.per_fold_lambdas) {
        sum[0] += l.lambda_L;
        sum[1] += l.lambda_P;
        sum[2] += l.lambda_B;
    }
    CHECK(r.lambda_star.lambda_L == doctest::Approx(sum[0] / 3));
    CHECK(r.lambda_star.lambda_P == doctest::Approx(sum[1] / 3));
    CHECK(r.lambda_star.lambda_B == doctest::Approx(sum[2] / 3));
    for (const auto& [before, after] : r.per_fold_val_nll) CHECK(after <= before);
}

TEST_CASE("fit_pipeline on a deterministic system only sharpens the smoothed model")
{
    // The pseudocount blurs the identified model; the only useful tempering is sharpening.
    FiniteHmm m = identity_model(3);
    const Dataset d = sampled_dataset(m, 20, 5, 3);
    const PipelineResult r = fit_pipeline(d, 0.7, TuneConfig{}, {1.0, 3, 3});
    CHECK(r.tempered.mean_nll <= r.untempered.mean_nll);
    CHECK(r.lambda_star.lambda_P * r.lambda_star.lambda_B > 1.0);
    CHECK(r.untempered.mean_nll < 0.05);
}
