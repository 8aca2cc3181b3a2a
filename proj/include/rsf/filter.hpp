#pragma once

#include <Eigen/Core>
#include <string>

#include "rsf/model.hpp"

namespace rsf {

struct GaussianBelief {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;  // symmetric PD
};

// mu1 weights the accumulated past errors; mu2 weights the present error but
// never enters the recursions (carried for completeness). rho in (0,1) sets
// the safety margin below the admissibility limit mu1 < 1/(2 lambda_max).
struct RiskParams {
    double mu1 = 0.0;
    double mu2 = 1.0;
    double rho = 0.5;
};

enum class FilterVariant {
    RsdKf,  // risk-sensitive, delay-aware (the proposed filter)
    Rskf,   // risk-sensitive, assumes no delay
    KfRd,   // risk-neutral, delay-aware
    Kf,     // plain Kalman filter
};

std::string to_string(FilterVariant v);

struct MeasurementMoments {
    Eigen::VectorXd y_pred;
    Eigen::MatrixXd s_yy;  // innovation covariance, symmetric PD
};

struct StepOutput {
    GaussianBelief predicted;
    GaussianBelief posterior;
    Eigen::VectorXd innovation;
    Eigen::VectorXd y_pred;
    Eigen::MatrixXd s_yy;
    Eigen::MatrixXd s_xy;
    Eigen::MatrixXd gain;
};

// Prediction with risk-inflated covariance:
//   mean = A x,  cov = A (Sigma^{-1} - 2 mu1 I)^{-1} A^T + Q.
// Throws RiskBoundViolated if 2 mu1 Sigma >= I.
GaussianBelief time_update(const GaussianBelief& posterior, const Eigen::MatrixXd& A,
                           const Eigen::MatrixXd& Q, double mu1);

// theta = C_prev A_prev^{-1}, computed by linear solve.
Eigen::MatrixXd backward_measurement_map(const Eigen::MatrixXd& C_prev,
                                         const Eigen::MatrixXd& A_prev);

// Predicted measurement and its covariance for the delayed stream:
//   y_pred = (1-a) C x_pred + a C_prev x_prev_post
//   S_yy   = (1-a) C P C^T + a th P th^T + a R_prev + (1-a) R - a th Q th^T
//            + a(1-a) (th - C) x_pred x_pred^T (th - C)^T
// with P the predicted covariance and th = C_prev A_prev^{-1}.
MeasurementMoments measurement_moments(const GaussianBelief& predicted,
                                       const Eigen::VectorXd& prev_posterior_mean, double alpha,
                                       const Eigen::MatrixXd& C_k, const Eigen::MatrixXd& C_prev,
                                       const Eigen::MatrixXd& theta, const Eigen::MatrixXd& R_k,
                                       const Eigen::MatrixXd& R_prev,
                                       const Eigen::MatrixXd& Q_prev);

// S_xy = P [(1-a) C + a th]^T - a Q th^T.
Eigen::MatrixXd cross_covariance(const Eigen::MatrixXd& predicted_cov, double alpha,
                                 const Eigen::MatrixXd& C_k, const Eigen::MatrixXd& theta,
                                 const Eigen::MatrixXd& Q_prev);

// Gaussian-conditioning update; posterior covariance is symmetrized and must
// stay PD (NonPdPosterior otherwise).
StepOutput measurement_update(const GaussianBelief& predicted, const Eigen::VectorXd& y_k,
                              const MeasurementMoments& moments, const Eigen::MatrixXd& s_xy);

// Largest admissible mu1 is 1/(2 lambda_max(cov)); returns rho times that.
double select_mu1(const Eigen::MatrixXd& posterior_cov, double rho);

// One filter per run; steps are strictly sequential. The filter only ever
// sees the received stream y_k and the nominal model.
class DelayedRiskFilter {
  public:
    DelayedRiskFilter(LinearModel model, FilterVariant variant, double alpha_hat,
                      RiskParams risk = {});

    // Processes y_k for the next step k = 1, 2, ...
    StepOutput step(const Eigen::VectorXd& y_k);

    const GaussianBelief& belief() const { return belief_; }
    double mu1() const { return risk_.mu1; }
    double alpha_hat() const { return alpha_hat_; }
    FilterVariant variant() const { return variant_; }
    int current_step() const { return k_; }

  private:
    LinearModel model_;
    FilterVariant variant_;
    double alpha_hat_;
    RiskParams risk_;
    GaussianBelief belief_;  // posterior at k-1
    int k_ = 0;
};

}  // namespace rsf
