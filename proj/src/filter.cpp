#include "rsf/filter.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "rsf/errors.hpp"
#include "rsf/linalg.hpp"

namespace rsf {

std::string to_string(FilterVariant v) {
    switch (v) {
        case FilterVariant::RsdKf: return "RSD-KF";
        case FilterVariant::Rskf: return "RSKF";
        case FilterVariant::KfRd: return "KF-RD";
        case FilterVariant::Kf: return "KF";
    }
    return "?";
}

GaussianBelief time_update(const GaussianBelief& posterior, const Eigen::MatrixXd& A,
                           const Eigen::MatrixXd& Q, double mu1) {
    if (mu1 < 0.0) throw RiskBoundViolated("time_update: mu1 must be nonnegative");
    GaussianBelief pred;
    pred.mean = A * posterior.mean;
    Eigen::MatrixXd inflated;
    if (mu1 == 0.0) {
        inflated = posterior.cov;
    } else {
        if (2.0 * mu1 * max_eigenvalue(posterior.cov) >= 1.0)
            throw RiskBoundViolated("time_update: 2 mu1 Sigma >= I, inflation undefined");
        Eigen::MatrixXd m =
            pd_inverse(posterior.cov, "posterior covariance") -
            2.0 * mu1 * Eigen::MatrixXd::Identity(posterior.cov.rows(), posterior.cov.cols());
        inflated = pd_inverse(m, "risk-inflated information matrix");
    }
    pred.cov = symmetrize(A * inflated * A.transpose() + Q);
    if (!is_pd(pred.cov))
        throw NonPdCovariance("time_update: predicted covariance is not positive definite");
    return pred;
}

Eigen::MatrixXd backward_measurement_map(const Eigen::MatrixXd& C_prev,
                                         const Eigen::MatrixXd& A_prev) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A_prev.transpose());
    if (condition_number(A_prev) > 1e12)
        throw SingularTransition("backward_measurement_map: A_prev is numerically singular");
    // theta = C A^{-1}  <=>  A^T theta^T = C^T
    return lu.solve(C_prev.transpose()).transpose();
}

MeasurementMoments measurement_moments(const GaussianBelief& predicted,
                                       const Eigen::VectorXd& prev_posterior_mean, double alpha,
                                       const Eigen::MatrixXd& C_k, const Eigen::MatrixXd& C_prev,
                                       const Eigen::MatrixXd& theta, const Eigen::MatrixXd& R_k,
                                       const Eigen::MatrixXd& R_prev,
                                       const Eigen::MatrixXd& Q_prev) {
    MeasurementMoments m;
    m.y_pred =
        (1.0 - alpha) * C_k * predicted.mean + alpha * C_prev * prev_posterior_mean;

    const Eigen::MatrixXd& P = predicted.cov;
    Eigen::MatrixXd diff = theta - C_k;
    m.s_yy = (1.0 - alpha) * C_k * P * C_k.transpose() +
             alpha * theta * P * theta.transpose() + alpha * R_prev + (1.0 - alpha) * R_k -
             alpha * theta * Q_prev * theta.transpose() +
             alpha * (1.0 - alpha) * diff * predicted.mean * predicted.mean.transpose() *
                 diff.transpose();
    m.s_yy = symmetrize(m.s_yy);
    if (!is_pd(m.s_yy))
        throw NonPdInnovationCov("measurement_moments: S_yy is not positive definite");
    return m;
}

Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& predicted_cov, double alpha,
                                 const Eigen::MatrixXd& C_k, const Eigen::MatrixXd& theta,
                                 const Eigen::MatrixXd& Q_prev) {
    return predicted_cov * ((1.0 - alpha) * C_k + alpha * theta).transpose() -
           alpha * Q_prev * theta.transpose();
}

StepOutput measurement_update(const GaussianBelief& predicted, const Eigen::VectorXd& y_k,
                              const MeasurementMoments& moments, const Eigen::MatrixXd& s_xy) {
    if (y_k.size() != moments.y_pred.size())
        throw DimensionMismatch("measurement_update: measurement dimension mismatch");
    StepOutput out;
    out.predicted = predicted;
    out.y_pred = moments.y_pred;
    out.s_yy = moments.s_yy;
    out.s_xy = s_xy;

    Eigen::LLT<Eigen::MatrixXd> llt(moments.s_yy);
    if (llt.info() != Eigen::Success)
        throw NonPdInnovationCov("measurement_update: S_yy factorization failed");
    out.gain = llt.solve(s_xy.transpose()).transpose();  // K = S_xy S_yy^{-1}

    out.innovation = y_k - moments.y_pred;
    out.posterior.mean = predicted.mean + out.gain * out.innovation;
    out.posterior.cov = symmetrize(predicted.cov - out.gain * s_xy.transpose());
    if (!is_pd(out.posterior.cov))
        throw NonPdPosterior("measurement_update: posterior covariance lost definiteness");
    return out;
}

double select_mu1(const Eigen::MatrixXd& posterior_cov, double rho) {
    if (rho < 0.0 || rho >= 1.0)
        throw FilterError("select_mu1: rho must lie in [0,1)");
    if (rho == 0.0) return 0.0;  // risk-neutral limit
    return rho / (2.0 * max_eigenvalue(posterior_cov));
}

DelayedRiskFilter::DelayedRiskFilter(LinearModel model, FilterVariant variant, double alpha_hat,
                                     RiskParams risk)
    : model_(std::move(model)), variant_(variant), alpha_hat_(alpha_hat), risk_(risk) {
    if (alpha_hat_ < 0.0 || alpha_hat_ > 1.0)
        throw FilterError("DelayedRiskFilter: alpha_hat outside [0,1]");
    // Variant constraints (reduction chain).
    if (variant_ == FilterVariant::Rskf || variant_ == FilterVariant::Kf) alpha_hat_ = 0.0;
    if (variant_ == FilterVariant::Kf || variant_ == FilterVariant::KfRd) risk_.mu1 = 0.0;
    belief_.mean = model_.x0_mean;
    belief_.cov = model_.sigma0;
}

StepOutput DelayedRiskFilter::step(const Eigen::VectorXd& y_k) {
    ++k_;
    const int k = k_;
    bool risk_sensitive =
        variant_ == FilterVariant::RsdKf || variant_ == FilterVariant::Rskf;
    if (risk_sensitive) risk_.mu1 = select_mu1(belief_.cov, risk_.rho);

    Eigen::MatrixXd A = model_.A(k - 1);
    Eigen::MatrixXd Q = model_.Q(k - 1);
    GaussianBelief predicted = time_update(belief_, A, Q, risk_.mu1);

    // First received measurement is non-delayed by convention.
    double alpha = (k == 1) ? 0.0 : alpha_hat_;
    Eigen::MatrixXd theta = backward_measurement_map(model_.C(k - 1), A);
    MeasurementMoments moments =
        measurement_moments(predicted, belief_.mean, alpha, model_.C(k), model_.C(k - 1), theta,
                            model_.R(k), model_.R(k - 1), Q);
    Eigen::MatrixXd s_xy = cross_covariance(predicted.cov, alpha, model_.C(k), theta, Q);
    StepOutput out = measurement_update(predicted, y_k, moments, s_xy);
    belief_ = out.posterior;
    return out;
}

}  // namespace rsf
