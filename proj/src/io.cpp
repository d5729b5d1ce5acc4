#include "temperfilt/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace temperfilt {

using nlohmann::json;

namespace {

json table_to_json(const Table& t)
{
    json rows = json::array();
    for (std::size_t i = 0; i < t.rows(); ++i) {
        auto r = t.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

Table table_from_json(const json& j, std::size_t rows, std::size_t cols, const char* name)
{
    if (!j.is_array() || j.size() != rows)
        throw IoError(std::string(name) + ": expected " + std::to_string(rows) + " rows");
    Table t(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const json& r = j[i];
        if (!r.is_array() || r.size() != cols)
            throw IoError(std::string(name) + " row " + std::to_string(i) + ": expected " +
                          std::to_string(cols) + " entries");
        for (std::size_t c = 0; c < cols; ++c) t(i, c) = r[c].get<double>();
    }
    return t;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* name)
{
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw IoError(std::string(name) + ": expected array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& r = j[static_cast<std::size_t>(i)];
        if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols)
            throw IoError(std::string(name) + ": ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = r[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

json matrix_to_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) r.push_back(m(i, c));
        rows.push_back(r);
    }
    return rows;
}

Eigen::VectorXd vector_from_json(const json& j, const char* name)
{
    if (!j.is_array()) throw IoError(std::string(name) + ": expected array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    return v;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::ifstream open_in(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return in;
}

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.precision(17);
    return out;
}

}  // namespace

json model_to_json(const FiniteHmm& m)
{
    return {{"n_states", m.n_states},
            {"n_outputs", m.n_outputs},
            {"p0", m.p0},
            {"trans", table_to_json(m.trans)},
            {"emit", table_to_json(m.emit)}};
}

FiniteHmm model_from_json(const json& j)
{
    try {
        FiniteHmm m;
        m.n_states = j.at("n_states").get<std::size_t>();
        m.n_outputs = j.at("n_outputs").get<std::size_t>();
        m.p0 = j.at("p0").get<std::vector<double>>();
        if (m.p0.size() != m.n_states) throw IoError("p0: expected " + std::to_string(m.n_states) + " entries");
        m.trans = table_from_json(j.at("trans"), m.n_states, m.n_states, "trans");
        m.emit = table_from_json(j.at("emit"), m.n_states, m.n_outputs, "emit");
        return m;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed model: ") + e.what());
    }
}

FiniteHmm read_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

void write_model(const std::filesystem::path& path, const FiniteHmm& m, const json& header)
{
    json j = model_to_json(m);
    if (!header.is_null()) j["config"] = header;
    write_json(path, j);
}

json trajectory_to_json(const Trajectory& tr)
{
    json j{{"seed", tr.seed}};
    if (tr.labeled()) j["states"] = tr.states;
    j["observations"] = tr.observations;
    return j;
}

Trajectory trajectory_from_json(const json& j)
{
    try {
        Trajectory tr;
        tr.seed = j.value("seed", std::uint64_t{0});
        if (j.contains("states")) tr.states = j.at("states").get<std::vector<int>>();
        tr.observations = j.at("observations").get<std::vector<int>>();
        if (tr.labeled() && tr.states.size() != tr.observations.size())
            throw IoError("states and observations differ in length");
        return tr;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed trajectory: ") + e.what());
    }
}

Dataset read_dataset(const std::filesystem::path& path)
{
    auto in = open_in(path);
    Dataset data;
    std::string line;
    std::size_t lineno = 0;
    bool horizon_set = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (j.contains("header")) {
            const json& h = j["header"];
            data.provenance.seed = h.value("seed", std::uint64_t{0});
            data.provenance.system_id = h.value("system_id", std::string{});
            continue;
        }
        Trajectory tr = trajectory_from_json(j);
        if (!horizon_set) {
            data.horizon = tr.horizon();
            horizon_set = true;
        } else if (tr.horizon() != data.horizon) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": trajectory horizon differs");
        }
        data.trajectories.push_back(std::move(tr));
    }
    return data;
}

void write_dataset(const std::filesystem::path& path, const Dataset& data, const json& header)
{
    auto out = open_out(path);
    json h = header.is_null() ? json::object() : header;
    h["seed"] = data.provenance.seed;
    h["system_id"] = data.provenance.system_id;
    h["horizon"] = data.horizon;
    h["n_trajectories"] = data.size();
    out << json{{"header", h}}.dump() << '\n';
    for (const auto& tr : data.trajectories) out << trajectory_to_json(tr).dump() << '\n';
}

LinearGaussianModel system_from_json(const json& j)
{
    try {
        LinearGaussianModel m;
        m.A = matrix_from_json(j.at("A"), "A");
        m.C = matrix_from_json(j.at("C"), "C");
        m.sigma_w = matrix_from_json(j.at("sigma_w"), "sigma_w");
        m.sigma_v = matrix_from_json(j.at("sigma_v"), "sigma_v");
        m.x0_mean = vector_from_json(j.at("x0_mean"), "x0_mean");
        m.sigma_x0 = matrix_from_json(j.at("sigma_x0"), "sigma_x0");
        return m;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed system: ") + e.what());
    }
}

json system_to_json(const LinearGaussianModel& m)
{
    return {{"A", matrix_to_json(m.A)},
            {"C", matrix_to_json(m.C)},
            {"sigma_w", matrix_to_json(m.sigma_w)},
            {"sigma_v", matrix_to_json(m.sigma_v)},
            {"x0_mean", std::vector<double>(m.x0_mean.data(), m.x0_mean.data() + m.x0_mean.size())},
            {"sigma_x0", matrix_to_json(m.sigma_x0)}};
}

LinearGaussianModel read_system(const std::filesystem::path& path) { return system_from_json(read_json(path)); }

std::vector<Eigen::VectorXd> read_vector_sequence(const std::filesystem::path& path)
{
    auto in = open_in(path);
    std::vector<Eigen::VectorXd> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            if (j.is_object() && j.contains("header")) continue;
            out.push_back(vector_from_json(j.is_object() ? j.at("y") : j, "y"));
        } catch (const json::exception& e) {
            throw IoError(path.string() + ": " + e.what());
        }
    }
    return out;
}

json to_json(const TemperingParams& l)
{
    return {{"lambda_L", l.lambda_L}, {"lambda_P", l.lambda_P}, {"lambda_B", l.lambda_B}};
}

json to_json(const ScoreReport& r)
{
    json per_step = json::array();
    for (double v : r.per_step_nll) per_step.push_back(finite_or_null(v));
    json diags = json::array();
    for (const auto& d : r.diagnostics)
        diags.push_back({{"trajectory", d.trajectory}, {"step", d.step}, {"reason", d.reason}});
    // +inf is not representable in JSON; it is written as the string "inf"
    return {{"mean_nll", std::isfinite(r.mean_nll) ? json(r.mean_nll) : json("inf")},
            {"per_step_nll", per_step},
            {"n_samples", r.n_samples},
            {"diagnostics", diags}};
}

json to_json(const NllGradient& g)
{
    return {{"d_lambda_L", finite_or_null(g.d_lambda_L)},
            {"d_lambda_P", finite_or_null(g.d_lambda_P)},
            {"d_lambda_B", finite_or_null(g.d_lambda_B)}};
}

TemperingParams parse_lambda(const std::string& text)
{
    std::stringstream ss(text);
    std::string part;
    std::vector<double> vals;
    while (std::getline(ss, part, ',')) {
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(part, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("lambda: '" + part + "' is not a number");
        }
        if (part.find_first_not_of(" \t", used) != std::string::npos)
            throw std::invalid_argument("lambda: '" + part + "' is not a number");
        vals.push_back(v);
    }
    if (vals.size() != 3) throw std::invalid_argument("lambda: expected three comma-separated values L,P,B");
    const TemperingParams l{vals[0], vals[1], vals[2]};
    if (!l.nonnegative()) throw std::invalid_argument("lambda: components must be >= 0");
    return l;
}

std::string config_hash(const json& j)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json read_json(const std::filesystem::path& path)
{
    auto in = open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const json& j)
{
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace temperfilt
