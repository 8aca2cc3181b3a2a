#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "rsf/filter.hpp"
#include "rsf/model.hpp"

namespace rsf {

// Windowed observability/controllability Gramians over [k-l, k].
struct GramianWindow {
    int l = 0;
    int k = 0;
    Eigen::MatrixXd O;         // nominal observability Gramian
    Eigen::MatrixXd O_actual;  // with the transition perturbation
    Eigen::MatrixXd C_gram;    // controllability Gramian (actual transitions)
    Eigen::MatrixXd Delta_O;   // sum A_{i,k}^T C^T R^{-1} C dA_{i,k}
};

struct UniformConditions {
    bool uco = false;
    bool ucc = false;
    double kappa3 = 0.0, kappa4 = 0.0;  // eigenvalue extremes of O_actual
    double kappa5 = 0.0, kappa6 = 0.0;  // eigenvalue extremes of C_gram
};

struct CovarianceBoundResult {
    bool condition_ok = false;  // spectral norm of O^{-1} Delta_O < 1
    double gain_norm = 0.0;
    double p_bound = std::numeric_limits<double>::infinity();
};

struct AugmentedObservability {
    Eigen::MatrixXd O11;
    Eigen::MatrixXd O_prime;  // Gramian under the mixed covariance R'
    double eps = 0.0;         // 1 - max alpha_i
    bool bounds_ok = false;   // eps O' <= O11 <= O' eigenvalue-wise
};

struct StabilityReport {
    UniformConditions uniform;
    bool bound_condition = false;
    double p_bound = std::numeric_limits<double>::infinity();
    std::optional<double> observed_p_norm;  // max ||Sigma_{k|k}|| over the trace
    bool bound_respected = false;           // observed <= bound at every k >= l
    bool flagged = false;                   // empty trace or bound inapplicable
};

// Builds the window Gramians by explicit transition-chain products.
GramianWindow gramians(const LinearModel& model, const UncertaintySpec& unc, int k, int l);

UniformConditions check_uniform_conditions(const GramianWindow& window, double tol = 1e-10);

// Uncertainty condition ||O^{-1} Delta_O|| < 1 and the covariance bound
//   || O^{-1} dO xhat xhat^T dO^T O^{-T}
//      + (I + O^{-1} dO) Cgram (I + O^{-1} dO)^T + O^{-1} || / (1 - ||O^{-1} dO||^2).
// When the condition fails the bound is undefined (infinite) and
// condition_ok is false.
CovarianceBoundResult covariance_bound(const GramianWindow& window, const Eigen::VectorXd& xhat);

// Augmented-state observability block under delays: R'_i = (1-a_i) R_i + a_i R_{i-1},
// O11 = sum (1-a_i) (A_{i,k}+dA_{i,k})^T C_i^T R'^{-1} C_i (A_{i,k}+dA_{i,k}).
// alpha(i) is evaluated at absolute indices i in [k-l, k].
AugmentedObservability augmented_observability(const LinearModel& model,
                                               const UncertaintySpec& unc,
                                               const std::function<double(int)>& alpha, int k,
                                               int l);

// Joins the Gramian checks with an observed covariance trace from a filter
// run. `posterior_covs[t]` and `posterior_means[t]` hold step t+1.
StabilityReport monitor_covariance(const std::vector<Eigen::MatrixXd>& posterior_covs,
                                   const std::vector<Eigen::VectorXd>& posterior_means,
                                   const LinearModel& model, const UncertaintySpec& unc, int l);

}  // namespace rsf
