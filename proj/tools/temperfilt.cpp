// Command-line front end: model and data generation, filtering, scoring, tuning and the
// grid-world experiments. Data goes to files or stdout, diagnostics to stderr.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "temperfilt/gridworld.hpp"
#include "temperfilt/io.hpp"
#include "temperfilt/nll_gradient.hpp"
#include "temperfilt/tempered_filter.hpp"
#include "temperfilt/tempered_kalman.hpp"
#include "temperfilt/tuning.hpp"

using nlohmann::json;
using namespace temperfilt;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Output sink: a file when a path is given, stdout otherwise.
class Sink {
public:
    explicit Sink(const std::string& path)
    {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw IoError("cannot open " + path + " for writing");
        }
        out().precision(17);
    }
    std::ostream& out() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

/// Resolved option values of a subcommand (flags, config file, defaults), for provenance.
json resolved_config(const CLI::App* sub)
{
    json cfg{{"command", sub->get_name()}};
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string& name = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
        if (name == "help" || name == "config" || name.empty()) continue;
        const auto& res = opt->results();
        if (!res.empty()) {
            std::string joined;
            for (std::size_t i = 0; i < res.size(); ++i) joined += (i ? "," : "") + res[i];
            cfg[name] = joined;
        } else if (!opt->get_default_str().empty()) {
            cfg[name] = opt->get_default_str();
        }
    }
    return cfg;
}

void write_csv_preamble(std::ostream& out, const json& cfg)
{
    out << "# config_hash=" << config_hash(cfg) << " config=" << cfg.dump() << '\n';
}

TemperingParams lambda_arg(const std::string& text)
{
    try {
        return parse_lambda(text);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::vector<std::uint64_t> parse_seeds(const std::string& text)
{
    // "a:b" is the half-open range [a, b); otherwise a comma-separated list
    std::vector<std::uint64_t> out;
    try {
        const auto colon = text.find(':');
        if (colon != std::string::npos) {
            const auto lo = std::stoull(text.substr(0, colon));
            const auto hi = std::stoull(text.substr(colon + 1));
            for (auto s = lo; s < hi; ++s) out.push_back(s);
        } else {
            std::stringstream ss(text);
            std::string part;
            while (std::getline(ss, part, ',')) out.push_back(std::stoull(part));
        }
    } catch (const std::exception&) {
        throw UsageError("seeds: expected a list like 0,1,2 or a range like 0:20, got '" + text + "'");
    }
    if (out.empty()) throw UsageError("seeds: empty selection");
    return out;
}

struct GridArg {
    double lo = 0.25;
    double hi = 4.0;
    std::size_t steps = 9;
};

GridArg parse_grid(const std::string& text)
{
    GridArg g;
    if (std::sscanf(text.c_str(), "%lf:%lf:%zu", &g.lo, &g.hi, &g.steps) != 3 || !(g.lo > 0.0) ||
        g.hi < g.lo || g.steps == 0)
        throw UsageError("grid: expected lo:hi:steps with 0 < lo <= hi, got '" + text + "'");
    return g;
}

/// The full-scale grid: 100 distinct sizes spread evenly between n_x and 1000.
std::vector<std::size_t> full_sizes(std::size_t n_x)
{
    std::vector<std::size_t> sizes;
    for (int i = 0; i < 100; ++i) {
        const double t = static_cast<double>(i) / 99.0;
        sizes.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(n_x) + t * (1000.0 - static_cast<double>(n_x)))));
    }
    sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
    return sizes;
}

struct WorldFlags {
    std::size_t n_x = 39;
    std::size_t x_home = 20;
    double obs_std = 0.0;  // 0 means n_x / 8
    std::size_t horizon = 40;

    void add(CLI::App* app)
    {
        app->add_option("--n-x", n_x, "number of grid states")->capture_default_str();
        app->add_option("--home", x_home, "absorbing home state (1-based)")->capture_default_str();
        app->add_option("--obs-std", obs_std, "observation noise std (0: n_x/8)")->capture_default_str();
        app->add_option("--horizon", horizon, "steps per trajectory")->capture_default_str();
    }
    GridworldSpec spec() const
    {
        GridworldSpec s = GridworldSpec::with_states(n_x, x_home);
        if (obs_std > 0.0) s.obs_std = obs_std;
        s.horizon = horizon;
        return s;
    }
};

struct TuneFlags {
    TuneConfig cfg;
    double pseudocount = 1.0;
    std::string init = "1,1,1";
    std::string ablation = "none";

    void add(CLI::App* app, bool with_ablation)
    {
        app->add_option("--folds", cfg.n_folds, "cross-validation folds")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--max-iters", cfg.max_iters, "descent iterations per fold")->capture_default_str();
        app->add_option("--step-size", cfg.step_size, "initial descent step in log-lambda")->capture_default_str()->check(CLI::PositiveNumber);
        app->add_option("--tol", cfg.convergence_tol, "gradient-norm stopping tolerance")->capture_default_str();
        app->add_option("--init", init, "initial lambda L,P,B")->capture_default_str();
        app->add_option("--pseudocount", pseudocount, "identification pseudocount")->capture_default_str()->check(CLI::PositiveNumber);
        if (with_ablation)
            app->add_option("--ablation", ablation, "none|fix_L|fix_P|fix_B")->capture_default_str();
    }
    TuneConfig resolve(std::uint64_t seed) const
    {
        TuneConfig c = cfg;
        c.seed = seed;
        c.init_lambda = lambda_arg(init);
        if (!c.init_lambda.positive()) throw UsageError("--init: components must be > 0");
        if (c.n_folds < 2) throw UsageError("--folds: need at least 2");
        try {
            c.ablation = ablation_from_string(ablation);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

json trace_to_json(const std::vector<TraceEntry>& trace)
{
    json out = json::array();
    for (const auto& e : trace)
        out.push_back({{"iter", e.iter}, {"lambda", to_json(e.lambda)}, {"score", e.score}, {"grad_norm", e.grad_norm}});
    return out;
}

json tune_result_to_json(const TuneResult& r)
{
    json folds = json::array();
    for (std::size_t f = 0; f < r.per_fold_lambdas.size(); ++f)
        folds.push_back({{"lambda", to_json(r.per_fold_lambdas[f])},
                         {"val_nll_before", r.per_fold_val_nll[f].first},
                         {"val_nll_after", r.per_fold_val_nll[f].second},
                         {"trace", trace_to_json(r.trace[f])}});
    return {{"lambda_star", to_json(r.lambda_star)}, {"folds", folds}};
}

std::string csv_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Tempered Bayes filtering toolkit"};
    app.set_config("--config", "", "read option values from a TOML/INI file");
    app.require_subcommand(1);
    app.fallthrough();

    // validate
    std::string v_model, v_data, v_system;
    auto* validate = app.add_subcommand("validate", "check a model, dataset or linear-Gaussian system file");
    validate->add_option("--model", v_model, "model JSON");
    validate->add_option("--data", v_data, "dataset JSON Lines (checked against --model if given)");
    validate->add_option("--system", v_system, "linear-Gaussian system JSON");

    // gen-world
    WorldFlags gw_world;
    std::string gw_out;
    auto* gen_world = app.add_subcommand("gen-world", "write the grid-world model");
    gw_world.add(gen_world);
    gen_world->add_option("--out", gw_out, "model JSON (default: stdout)");

    // gen-data
    WorldFlags gd_world;
    std::size_t gd_n = 100;
    std::uint64_t gd_seed = 0;
    std::string gd_model, gd_out;
    auto* gen_data = app.add_subcommand("gen-data", "sample labeled trajectories");
    gd_world.add(gen_data);
    gen_data->add_option("--n", gd_n, "number of trajectories")->capture_default_str();
    gen_data->add_option("--seed", gd_seed, "base seed")->capture_default_str();
    gen_data->add_option("--model", gd_model, "sample from this model instead of the grid-world");
    gen_data->add_option("--out", gd_out, "dataset JSON Lines (default: stdout)");

    // identify
    std::string id_data, id_out;
    IdentConfig id_cfg;
    auto* identify_cmd = app.add_subcommand("identify", "estimate a model from labeled data");
    identify_cmd->add_option("--data", id_data, "dataset JSON Lines")->required();
    identify_cmd->add_option("--pseudocount", id_cfg.pseudocount, "count added to every cell")->capture_default_str()->check(CLI::PositiveNumber);
    identify_cmd->add_option("--n-states", id_cfg.n_states, "state alphabet size (0: infer)")->capture_default_str();
    identify_cmd->add_option("--n-outputs", id_cfg.n_outputs, "output alphabet size (0: infer)")->capture_default_str();
    identify_cmd->add_option("--out", id_out, "model JSON (default: stdout)");

    // filter
    std::string f_model, f_data, f_lambda = "1,1,1", f_out;
    bool f_map = false;
    auto* filter = app.add_subcommand("filter", "run the tempered filter over every trajectory");
    filter->add_option("--model", f_model, "model JSON")->required();
    filter->add_option("--data", f_data, "dataset JSON Lines")->required();
    filter->add_option("--lambda", f_lambda, "tempering parameters L,P,B")->capture_default_str();
    filter->add_flag("--map", f_map, "run the max-product (MAP) filter with lambda_L instead");
    filter->add_option("--out", f_out, "beliefs as JSON Lines (default: stdout)");

    // kalman
    std::string k_system, k_data, k_lambda = "1,1,1", k_out;
    auto* kalman = app.add_subcommand("kalman", "run the tempered Kalman filter");
    kalman->add_option("--system", k_system, "linear-Gaussian system JSON")->required();
    kalman->add_option("--data", k_data, "observations, one JSON array per line")->required();
    kalman->add_option("--lambda", k_lambda, "tempering parameters L,P,B")->capture_default_str();
    kalman->add_option("--out", k_out, "beliefs as JSON Lines (default: stdout)");

    // eval
    std::string e_model, e_data, e_lambda = "1,1,1", e_out;
    auto* eval = app.add_subcommand("eval", "NLL score of the tempered filter on labeled data");
    eval->add_option("--model", e_model, "model JSON")->required();
    eval->add_option("--data", e_data, "dataset JSON Lines")->required();
    eval->add_option("--lambda", e_lambda, "tempering parameters L,P,B")->capture_default_str();
    eval->add_option("--out", e_out, "score JSON (default: stdout)");

    // grad
    std::string g_model, g_data, g_lambda = "1,1,1", g_out;
    double g_fd = 0.0;
    auto* grad = app.add_subcommand("grad", "gradient of the NLL score with respect to lambda");
    grad->add_option("--model", g_model, "model JSON")->required();
    grad->add_option("--data", g_data, "dataset JSON Lines")->required();
    grad->add_option("--lambda", g_lambda, "tempering parameters L,P,B")->capture_default_str();
    grad->add_option("--fd", g_fd, "also report central differences with this step")->check(CLI::PositiveNumber);
    grad->add_option("--out", g_out, "gradient JSON (default: stdout)");

    // tune
    std::string t_data, t_out, t_model_out, t_test_out;
    double t_split = 0.7;
    std::uint64_t t_seed = 0;
    TuneFlags t_flags;
    auto* tune = app.add_subcommand("tune", "split, tune lambda by cross-validation, score on the test split");
    tune->add_option("--data", t_data, "labeled dataset JSON Lines")->required();
    tune->add_option("--split", t_split, "training fraction")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    tune->add_option("--seed", t_seed, "seed for the splits")->capture_default_str();
    std::size_t t_n_states = 0, t_n_outputs = 0;
    t_flags.add(tune, true);
    tune->add_option("--n-states", t_n_states, "state alphabet size (0: infer)")->capture_default_str();
    tune->add_option("--n-outputs", t_n_outputs, "output alphabet size (0: infer)")->capture_default_str();
    tune->add_option("--out", t_out, "result JSON (default: stdout)");
    tune->add_option("--model-out", t_model_out, "write the model identified on the training split");
    tune->add_option("--test-out", t_test_out, "write the held-out test split");

    // sweep
    WorldFlags s_world;
    TuneFlags s_flags;
    std::vector<std::size_t> s_sizes{39, 60, 100, 150, 195, 300, 500, 1000};
    std::string s_seeds = "0:5", s_ablation = "none", s_out;
    double s_split = 0.7;
    bool s_full = false;
    std::size_t s_jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sweep = app.add_subcommand("sweep", "grid-world data-size sweep");
    s_world.add(sweep);
    s_flags.add(sweep, false);
    sweep->add_option("--sizes", s_sizes, "dataset sizes")->delimiter(',')->capture_default_str();
    sweep->add_option("--seeds", s_seeds, "seed list 0,1,2 or range a:b")->capture_default_str();
    sweep->add_option("--ablation", s_ablation, "comma-separated modes among none,fix_L,fix_P,fix_B")->capture_default_str();
    sweep->add_option("--split", s_split, "training fraction")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sweep->add_flag("--full-grid", s_full, "100 sizes between n_x and 1000 with 20 seeds");
    auto* jobs_opt = sweep->add_option("--jobs", s_jobs, "worker threads (default: $TEMPERFILT_JOBS or the core count)")
                        ->capture_default_str()
                        ->check(CLI::PositiveNumber);
    sweep->add_option("--out", s_out, "CSV (default: stdout)");

    // landscape
    std::string l_model, l_data, l_axes = "PB", l_grid = "0.25:4:9", l_fixed = "1,1,1", l_out;
    double l_pseudocount = 1.0;
    auto* landscape = app.add_subcommand("landscape", "NLL over a two-parameter lambda grid");
    landscape->add_option("--data", l_data, "labeled dataset JSON Lines")->required();
    landscape->add_option("--model", l_model, "model JSON (default: identified from --data)");
    landscape->add_option("--pseudocount", l_pseudocount, "pseudocount when identifying")->capture_default_str();
    landscape->add_option("--axes", l_axes, "PB, LP or LB")->capture_default_str();
    landscape->add_option("--grid", l_grid, "geometric grid lo:hi:steps for both axes")->capture_default_str();
    landscape->add_option("--fixed", l_fixed, "lambda supplying the third component")->capture_default_str();
    landscape->add_option("--out", l_out, "CSV (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*validate) {
            if (v_model.empty() && v_data.empty() && v_system.empty())
                throw UsageError("validate: give --model, --data or --system");
            std::vector<std::string> issues;
            std::optional<FiniteHmm> model;
            if (!v_model.empty()) {
                model = read_model(v_model);
                for (auto& s : validate_model(*model).issues) issues.push_back(v_model + ": " + s);
            }
            if (!v_data.empty()) {
                const Dataset d = read_dataset(v_data);
                const ValidationReport r = model ? validate_dataset(d, model->n_states, model->n_outputs)
                                                 : validate_dataset(d, SIZE_MAX, SIZE_MAX);
                for (auto& s : r.issues) issues.push_back(v_data + ": " + s);
            }
            if (!v_system.empty()) {
                try {
                    validate_system(read_system(v_system));
                } catch (const std::exception& e) {
                    issues.push_back(v_system + ": " + e.what());
                }
            }
            for (const auto& s : issues) std::cerr << s << '\n';
            if (!issues.empty()) return 2;
            std::cout << "ok\n";
            return 0;
        }

        if (*gen_world) {
            const GridworldSpec spec = gw_world.spec();
            const FiniteHmm m = build_gridworld(spec);
            json j = model_to_json(m);
            j["config"] = resolved_config(gen_world);
            j["config"]["system_id"] = spec.system_id();
            Sink sink(gw_out);
            sink.out() << j.dump(2) << '\n';
            return 0;
        }

        if (*gen_data) {
            Dataset d;
            if (gd_model.empty()) {
                d = generate_dataset(gd_world.spec(), gd_n, gd_seed);
            } else {
                const FiniteHmm m = read_model(gd_model);
                d.horizon = gd_world.horizon;
                d.provenance = {gd_seed, "model:" + gd_model};
                for (std::size_t i = 0; i < gd_n; ++i)
                    d.trajectories.push_back(sample_trajectory(m, gd_world.horizon, derive_seed(gd_seed, i)));
            }
            json header = resolved_config(gen_data);
            if (gd_out.empty()) {
                header["seed"] = d.provenance.seed;
                header["system_id"] = d.provenance.system_id;
                header["horizon"] = d.horizon;
                header["n_trajectories"] = d.size();
                std::cout << json{{"header", header}}.dump() << '\n';
                for (const auto& tr : d.trajectories) std::cout << trajectory_to_json(tr).dump() << '\n';
            } else {
                write_dataset(gd_out, d, header);
            }
            return 0;
        }

        if (*identify_cmd) {
            const FiniteHmm m = identify(read_dataset(id_data), id_cfg);
            json j = model_to_json(m);
            j["config"] = resolved_config(identify_cmd);
            Sink sink(id_out);
            sink.out() << j.dump(2) << '\n';
            return 0;
        }

        if (*filter) {
            const TemperingParams lambda = lambda_arg(f_lambda);
            const FiniteHmm m = read_model(f_model);
            const Dataset d = read_dataset(f_data);
            Sink sink(f_out);
            sink.out() << json{{"header", resolved_config(filter)}}.dump() << '\n';
            int status = 0;
            for (std::size_t t = 0; t < d.size(); ++t) {
                const auto& ys = d.trajectories[t].observations;
                json line{{"trajectory", t}};
                if (f_map) {
                    const MapFilterResult r = map_filter(m, lambda.lambda_L, ys);
                    line["belief"] = r.belief;
                    line["map_path"] = map_path(r, static_cast<int>(std::max_element(r.belief.begin(), r.belief.end()) - r.belief.begin()));
                } else {
                    const FilterOutput out = run_filter(m, lambda, ys);
                    line["beliefs"] = out.beliefs;
                    line["collapsed_at"] = out.collapsed_at ? json(*out.collapsed_at) : json(nullptr);
                    if (out.collapsed_at) {
                        std::cerr << "trajectory " << t << ": belief collapsed at k=" << *out.collapsed_at << '\n';
                        status = 2;
                    }
                }
                sink.out() << line.dump() << '\n';
            }
            return status;
        }

        if (*kalman) {
            const TemperingParams lambda = lambda_arg(k_lambda);
            if (!lambda.positive()) throw UsageError("--lambda: the Kalman filter needs every component > 0");
            const LinearGaussianModel sys = read_system(k_system);
            const auto ys = read_vector_sequence(k_data);
            const auto beliefs = tk_run(sys, lambda, ys);
            Sink sink(k_out);
            sink.out() << json{{"header", resolved_config(kalman)}}.dump() << '\n';
            for (std::size_t k = 0; k < beliefs.size(); ++k) {
                const auto& b = beliefs[k];
                json cov = json::array();
                for (Eigen::Index i = 0; i < b.cov.rows(); ++i) {
                    json row = json::array();
                    for (Eigen::Index c = 0; c < b.cov.cols(); ++c) row.push_back(b.cov(i, c));
                    cov.push_back(row);
                }
                sink.out() << json{{"k", k}, {"mean", std::vector<double>(b.mean.data(), b.mean.data() + b.mean.size())}, {"cov", cov}}.dump() << '\n';
            }
            return 0;
        }

        if (*eval) {
            const TemperingParams lambda = lambda_arg(e_lambda);
            const ScoreReport r = nll_score(read_model(e_model), lambda, read_dataset(e_data));
            json j = to_json(r);
            j["lambda"] = to_json(lambda);
            j["config"] = resolved_config(eval);
            Sink sink(e_out);
            sink.out() << j.dump(2) << '\n';
            for (const auto& d : r.diagnostics)
                std::cerr << "trajectory " << d.trajectory << ", k=" << d.step << ": " << d.reason << '\n';
            return 0;
        }

        if (*grad) {
            const TemperingParams lambda = lambda_arg(g_lambda);
            if (!lambda.positive()) throw UsageError("--lambda: the gradient needs every component > 0");
            const FiniteHmm m = read_model(g_model);
            const Dataset d = read_dataset(g_data);
            json j{{"lambda", to_json(lambda)}, {"analytic", to_json(nll_gradient(m, lambda, d))}};
            if (g_fd > 0.0) j["finite_difference"] = to_json(fd_gradient(m, lambda, d, g_fd));
            j["config"] = resolved_config(grad);
            Sink sink(g_out);
            sink.out() << j.dump(2) << '\n';
            return 0;
        }

        if (*tune) {
            const TuneConfig cfg = t_flags.resolve(t_seed);
            if (!(t_split > 0.0 && t_split < 1.0)) throw UsageError("--split must lie strictly between 0 and 1");
            const Dataset data = read_dataset(t_data);
            IdentConfig ident{t_flags.pseudocount, t_n_states, t_n_outputs};
            if (ident.n_states == 0 || ident.n_outputs == 0) {
                // inferred from the whole dataset so that every split agrees on the alphabets
                const FiniteHmm whole = identify(data, ident);
                ident.n_states = whole.n_states;
                ident.n_outputs = whole.n_outputs;
            }
            const PipelineResult r = fit_pipeline(data, t_split, cfg, ident);
            json j = tune_result_to_json(r.tuning);
            j["test_nll_untempered"] = to_json(r.untempered).at("mean_nll");
            j["test_nll_tempered"] = to_json(r.tempered).at("mean_nll");
            j["config"] = resolved_config(tune);
            if (!t_model_out.empty()) {
                write_model(t_model_out, r.model, j["config"]);
                j["model_file"] = t_model_out;
            }
            if (!t_test_out.empty()) {
                const auto split = train_test_split(data, t_split, derive_seed(cfg.seed, 0x73706c6974ULL));
                write_dataset(t_test_out, split.second, j["config"]);
                j["test_file"] = t_test_out;
            }
            Sink sink(t_out);
            sink.out() << j.dump(2) << '\n';
            return 0;
        }

        if (*sweep) {
            SweepConfig cfg;
            cfg.world = s_world.spec();
            cfg.world.validate();
            cfg.tune = s_flags.resolve(0);
            cfg.pseudocount = s_flags.pseudocount;
            cfg.split_ratio = s_split;
            if (const char* env = std::getenv("TEMPERFILT_JOBS"); env && jobs_opt->count() == 0) {
                std::size_t used = 0;
                long long v = 0;
                try {
                    v = std::stoll(env, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used == 0 || env[used] != '\0' || v < 1)
                    throw UsageError(std::string("TEMPERFILT_JOBS: expected a positive integer, got '") + env + "'");
                s_jobs = static_cast<std::size_t>(v);
            }
            cfg.jobs = s_jobs;
            cfg.ablations.clear();
            {
                std::stringstream ss(s_ablation);
                std::string part;
                try {
                    while (std::getline(ss, part, ',')) cfg.ablations.push_back(ablation_from_string(part));
                } catch (const std::invalid_argument& e) {
                    throw UsageError(e.what());
                }
            }
            std::vector<std::size_t> sizes = s_sizes;
            std::vector<std::uint64_t> seeds = parse_seeds(s_seeds);
            if (s_full) {
                sizes = full_sizes(cfg.world.n_x);
                seeds = parse_seeds("0:20");
            }
            const ExperimentResult res = sweep_experiment(sizes, seeds, cfg);
            json config = resolved_config(sweep);
            config.erase("jobs");  // worker count does not change results
            config["system_id"] = cfg.world.system_id();
            Sink sink(s_out);
            write_csv_preamble(sink.out(), config);
            sink.out() << "N,seed,ablation,nll_untempered,nll_tempered,lambda_L,lambda_P,lambda_B,error\n";
            int status = 0;
            for (const auto& row : res.rows) {
                sink.out() << row.dataset_size << ',' << row.seed << ',' << to_string(row.ablation) << ','
                           << csv_number(row.nll_untempered) << ',' << csv_number(row.nll_tempered) << ','
                           << csv_number(row.lambda_star.lambda_L) << ',' << csv_number(row.lambda_star.lambda_P) << ','
                           << csv_number(row.lambda_star.lambda_B) << ',' << csv_field(row.error.value_or("")) << '\n';
                std::cerr << "N=" << row.dataset_size << " seed=" << row.seed << " " << to_string(row.ablation)
                          << (row.error ? " failed: " + *row.error : " done") << '\n';
                if (row.error) status = 2;
            }
            return status;
        }

        if (*landscape) {
            LandscapeAxes axes;
            try {
                axes = landscape_axes_from_string(l_axes);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            const GridArg g = parse_grid(l_grid);
            const TemperingParams fixed = lambda_arg(l_fixed);
            const Dataset data = read_dataset(l_data);
            const FiniteHmm model = l_model.empty() ? identify(data, {l_pseudocount, 0, 0}) : read_model(l_model);
            const auto values = geometric_grid(g.lo, g.hi, g.steps);
            const LandscapeTable t = cost_landscape(model, data, axes, values, values, fixed);
            const std::string name = to_string(axes);
            Sink sink(l_out);
            write_csv_preamble(sink.out(), resolved_config(landscape));
            sink.out() << "lambda_" << name[0] << ",lambda_" << name[1] << ",nll\n";
            for (std::size_t i = 0; i < values.size(); ++i)
                for (std::size_t j = 0; j < values.size(); ++j)
                    sink.out() << csv_number(values[i]) << ',' << csv_number(values[j]) << ',' << csv_number(t.nll[i][j]) << '\n';
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
