#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "rsf/rng.hpp"

namespace rsf {

using MatrixFn = std::function<Eigen::MatrixXd(int)>;

// Linear Gaussian system x_k = A x_{k-1} + w_{k-1}, z_k = C x_k + v_k.
// Q is the effective process-noise covariance (already mapped through any
// noise gain), R the measurement-noise covariance. Matrices are functions of
// the time index k; use `stationary` for time-invariant systems.
// Immutable after construction; safe to share across Monte Carlo workers.
struct LinearModel {
    int dim_x = 0;
    int dim_z = 0;
    MatrixFn A;  // dim_x x dim_x, invertible
    MatrixFn C;  // dim_z x dim_x
    MatrixFn Q;  // dim_x x dim_x, PSD
    MatrixFn R;  // dim_z x dim_z, PD
    Eigen::VectorXd x0_mean;
    Eigen::MatrixXd sigma0;  // PD

    static LinearModel stationary(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                  const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                  const Eigen::VectorXd& x0_mean, const Eigen::MatrixXd& sigma0);
};

// Deterministic perturbation of the transition matrix, unknown to the filter.
struct UncertaintySpec {
    MatrixFn delta_a;

    static UncertaintySpec none(int dim_x);
    static UncertaintySpec stationary(const Eigen::MatrixXd& delta_a);
};

struct Trajectory {
    std::vector<Eigen::VectorXd> states;        // x_0 .. x_K
    std::vector<Eigen::VectorXd> measurements;  // z_1 .. z_K (index 0 holds z_1)
};

struct ValidationReport {
    bool ok = false;
    double max_cond_nominal = 0.0;   // worst condition number of A(k)
    double max_cond_actual = 0.0;    // worst condition number of A(k)+dA(k)
    double max_sq_norm_actual = 0.0; // sup_k ||(A+dA)^T (A+dA)||_2  (kappa_1 estimate)
    double max_sq_norm_c = 0.0;      // sup_k ||C^T C||_2            (kappa_2 estimate)
    std::vector<std::string> notes;
};

// Checks invertibility (condition number below `cond_threshold`), boundedness
// and PSD/PD-ness over the horizon. Throws SingularTransition or
// NonPdCovariance on violation.
ValidationReport validate(const LinearModel& model, const UncertaintySpec& unc, int horizon,
                          double cond_threshold = 1e12);

// One truth step: (A(k-1)+dA(k-1)) x_prev + w, with w ~ N(0, Q(k-1)).
Eigen::VectorXd step_truth(const LinearModel& model, const UncertaintySpec& unc,
                           const Eigen::VectorXd& x_prev, int k, RngStream& process_noise);

// Pre-channel measurement: C(k) x + v, with v ~ N(0, R(k)).
Eigen::VectorXd measure(const LinearModel& model, const Eigen::VectorXd& x, int k,
                        RngStream& measurement_noise);

// Generates x_0..x_K (x_0 ~ N(x0_mean, sigma0)) and z_1..z_K.
Trajectory simulate_truth(const LinearModel& model, const UncertaintySpec& unc, int horizon,
                          RngStream& init, RngStream& process_noise, RngStream& measurement_noise);

}  // namespace rsf
