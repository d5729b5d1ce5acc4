#ifndef TEMPERFILT_TEMPERED_KALMAN_HPP
#define TEMPERFILT_TEMPERED_KALMAN_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "temperfilt/hmm.hpp"

namespace temperfilt {

/// x_{k+1} = A x_k + w_k, y_k = C x_k + v_k, w ~ N(0, sigma_w), v ~ N(0, sigma_v),
/// x_0 ~ N(x0_mean, sigma_x0).
struct LinearGaussianModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd C;
    Eigen::MatrixXd sigma_w;
    Eigen::MatrixXd sigma_v;
    Eigen::VectorXd x0_mean;
    Eigen::MatrixXd sigma_x0;

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index output_dim() const { return C.rows(); }
};

struct GaussianBelief {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

/// Raised when a matrix that must be SPD fails its Cholesky factorization.
class NotPositiveDefinite : public std::runtime_error {
public:
    explicit NotPositiveDefinite(const std::string& which)
        : std::runtime_error(which + " is not symmetric positive definite"), which_(which) {}
    const std::string& which() const { return which_; }

private:
    std::string which_;
};

/// Throws std::invalid_argument on inconsistent dimensions and NotPositiveDefinite for the
/// covariances. sigma_w may be positive semidefinite (zero process noise is allowed).
void validate_system(const LinearGaussianModel& m);

GaussianBelief tk_init(const LinearGaussianModel& m, const TemperingParams& lambda,
                       const Eigen::VectorXd& y0);

struct KalmanStep {
    GaussianBelief belief;
    Eigen::MatrixXd predicted_cov;
};

KalmanStep tk_step(const GaussianBelief& b, const LinearGaussianModel& m,
                   const TemperingParams& lambda, const Eigen::VectorXd& y);

std::vector<GaussianBelief> tk_run(const LinearGaussianModel& m, const TemperingParams& lambda,
                                   const std::vector<Eigen::VectorXd>& ys);

/// Draws a state/output sequence from the model.
struct LinearGaussianSample {
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> outputs;
};
LinearGaussianSample sample_linear_gaussian(const LinearGaussianModel& m, std::size_t horizon,
                                            std::uint64_t seed);

}  // namespace temperfilt

#endif  // TEMPERFILT_TEMPERED_KALMAN_HPP
