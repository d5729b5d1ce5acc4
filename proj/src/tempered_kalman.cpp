#include "temperfilt/tempered_kalman.hpp"

#include <cmath>
#include <numbers>

namespace temperfilt {

namespace {

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const std::string& which)
{
    Eigen::LLT<Eigen::MatrixXd> llt(symmetrized(m));
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite(which);
    return symmetrized(llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols())));
}

void require_positive(const TemperingParams& lambda)
{
    if (!lambda.positive()) throw std::invalid_argument("tempered Kalman filter requires lambda > 0");
}

void require_square(const Eigen::MatrixXd& m, Eigen::Index n, const char* name)
{
    if (m.rows() != n || m.cols() != n)
        throw std::invalid_argument(std::string(name) + " has wrong dimensions");
}

}  // namespace

void validate_system(const LinearGaussianModel& m)
{
    const Eigen::Index n = m.A.rows();
    const Eigen::Index p = m.C.rows();
    require_square(m.A, n, "A");
    if (m.C.cols() != n) throw std::invalid_argument("C has wrong dimensions");
    require_square(m.sigma_w, n, "sigma_w");
    require_square(m.sigma_v, p, "sigma_v");
    require_square(m.sigma_x0, n, "sigma_x0");
    if (m.x0_mean.size() != n) throw std::invalid_argument("x0_mean has wrong dimensions");
    spd_inverse(m.sigma_v, "sigma_v");
    spd_inverse(m.sigma_x0, "sigma_x0");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(m.sigma_w));
    if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff()))
        throw NotPositiveDefinite("sigma_w");
}

GaussianBelief tk_init(const LinearGaussianModel& m, const TemperingParams& lambda,
                       const Eigen::VectorXd& y0)
{
    require_positive(lambda);
    const double s = lambda.lambda_P * lambda.lambda_B;
    const Eigen::MatrixXd sx0_inv = spd_inverse(m.sigma_x0, "sigma_x0");
    const Eigen::MatrixXd sv_inv = spd_inverse(m.sigma_v, "sigma_v");
    const Eigen::MatrixXd info = sx0_inv + lambda.lambda_L * m.C.transpose() * sv_inv * m.C;

    GaussianBelief b;
    b.cov = spd_inverse(info, "initial information matrix") / s;
    b.mean = b.cov * (s * sx0_inv * m.x0_mean +
                      lambda.lambda_L * s * m.C.transpose() * sv_inv * y0);
    return b;
}

KalmanStep tk_step(const GaussianBelief& b, const LinearGaussianModel& m,
                   const TemperingParams& lambda, const Eigen::VectorXd& y)
{
    require_positive(lambda);
    const double s = lambda.lambda_P * lambda.lambda_B;
    const Eigen::MatrixXd sv_inv = spd_inverse(m.sigma_v, "sigma_v");

    KalmanStep out;
    out.predicted_cov = symmetrized(m.A * b.cov * m.A.transpose() + m.sigma_w / s);
    const Eigen::MatrixXd pred_inv = spd_inverse(out.predicted_cov, "predicted covariance");
    const Eigen::MatrixXd info =
        spd_inverse(s * out.predicted_cov, "scaled predicted covariance") +
        lambda.lambda_L * m.C.transpose() * sv_inv * m.C;

    out.belief.cov = spd_inverse(info, "posterior information matrix") / s;
    out.belief.mean = out.belief.cov * (pred_inv * m.A * b.mean +
                                        lambda.lambda_L * s * m.C.transpose() * sv_inv * y);
    return out;
}

std::vector<GaussianBelief> tk_run(const LinearGaussianModel& m, const TemperingParams& lambda,
                                   const std::vector<Eigen::VectorXd>& ys)
{
    std::vector<GaussianBelief> out;
    out.reserve(ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) {
        if (k == 0)
            out.push_back(tk_init(m, lambda, ys[0]));
        else
            out.push_back(tk_step(out.back(), m, lambda, ys[k]).belief);
    }
    return out;
}

LinearGaussianSample sample_linear_gaussian(const LinearGaussianModel& m, std::size_t horizon,
                                            std::uint64_t seed)
{
    Rng rng(seed);
    auto standard_normal = [&rng](Eigen::Index n) {
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            // Box-Muller; 1 - u keeps the log argument in (0, 1]
            const double u1 = 1.0 - rng.uniform();
            const double u2 = rng.uniform();
            z(i) = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
        return z;
    };
    auto factor = [](const Eigen::MatrixXd& cov) -> Eigen::MatrixXd {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(cov));
        return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    };
    const Eigen::MatrixXd lw = factor(m.sigma_w);
    const Eigen::MatrixXd lv = factor(m.sigma_v);
    const Eigen::MatrixXd l0 = factor(m.sigma_x0);

    LinearGaussianSample out;
    Eigen::VectorXd x = m.x0_mean + l0 * standard_normal(m.state_dim());
    for (std::size_t k = 0; k <= horizon; ++k) {
        if (k > 0) x = m.A * x + lw * standard_normal(m.state_dim());
        out.states.push_back(x);
        out.outputs.push_back(m.C * x + lv * standard_normal(m.output_dim()));
    }
    return out;
}

}  // namespace temperfilt
