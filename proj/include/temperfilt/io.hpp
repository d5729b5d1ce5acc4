#ifndef TEMPERFILT_IO_HPP
#define TEMPERFILT_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "temperfilt/hmm.hpp"
#include "temperfilt/nll_gradient.hpp"
#include "temperfilt/tempered_kalman.hpp"

namespace temperfilt {

/// Malformed input file or unreadable path.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Model file: {n_states, n_outputs, p0: [..], trans: [[..]], emit: [[..]]}, rows indexed by the
// conditioning state.
nlohmann::json model_to_json(const FiniteHmm& m);
FiniteHmm model_from_json(const nlohmann::json& j);
FiniteHmm read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const FiniteHmm& m,
                 const nlohmann::json& header = nullptr);

// Dataset file: JSON Lines, one {seed, states: [..], observations: [..]} per line. Lines carrying
// a "header" key hold provenance and are skipped by the reader. An unlabeled trajectory omits
// "states".
nlohmann::json trajectory_to_json(const Trajectory& tr);
Trajectory trajectory_from_json(const nlohmann::json& j);
Dataset read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const Dataset& data,
                   const nlohmann::json& header = nullptr);

// Linear-Gaussian system file: {A, C, sigma_w, sigma_v, x0_mean, sigma_x0}, matrices as arrays of rows.
LinearGaussianModel system_from_json(const nlohmann::json& j);
nlohmann::json system_to_json(const LinearGaussianModel& m);
LinearGaussianModel read_system(const std::filesystem::path& path);

/// Kalman observation file: JSON Lines, each line either [y_1, ..., y_m] or {"y": [...]}.
std::vector<Eigen::VectorXd> read_vector_sequence(const std::filesystem::path& path);

nlohmann::json to_json(const TemperingParams& l);
nlohmann::json to_json(const ScoreReport& r);
nlohmann::json to_json(const NllGradient& g);

/// "L,P,B" with three comma-separated decimals.
TemperingParams parse_lambda(const std::string& text);

/// FNV-1a over the compact dump of j, as 16 hex digits.
std::string config_hash(const nlohmann::json& j);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace temperfilt

#endif  // TEMPERFILT_IO_HPP
