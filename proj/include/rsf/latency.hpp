#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "rsf/filter.hpp"
#include "rsf/model.hpp"

namespace rsf {

struct SmcConfig {
    int n_particles = 500;
    double grid_step = 0.05;      // grid alpha = 0, l, 2l, ..., 1
    int n_measurements = 0;       // 0 = use the whole stream
    std::uint64_t seed = 0;
    bool parallel = true;
};

struct LatencyEstimate {
    double alpha_hat = 0.0;
    // (alpha, log-likelihood) over the grid; alpha_hat attains the maximum,
    // ties broken toward smaller alpha.
    std::vector<std::pair<double, double>> curve;
    std::vector<int> flagged;  // grid indices where the likelihood degenerated
};

// Mixture likelihood of y_k under the one-step-delay channel, averaged over
// the particle pair sets:
//   (1/N) sum_i [ (1-a) N(y_k - C_k x_k^i; 0, R_k)
//               +   a   N(y_k - C_prev x_{k-1}^i; 0, R_prev) ].
// Particle sets are stored column-wise (dim_x x N).
double state_likelihood(const Eigen::VectorXd& y_k, const Eigen::MatrixXd& particles_k,
                        const Eigen::MatrixXd& particles_prev, double alpha,
                        const Eigen::MatrixXd& C_k, const Eigen::MatrixXd& C_prev,
                        const Eigen::MatrixXd& R_k, const Eigen::MatrixXd& R_prev);

// Sequential Monte Carlo log likelihood L_a = sum_{k=2}^m log p_a(y_k |
// y_{1:k-1}); y_1 is non-delayed by convention and is excluded. Particles are
// delay histories carrying exact conditional Kalman statistics, resampled
// systematically each step with one uniform draw so the random streams stay
// aligned across candidate alphas. `flagged` is set when any summand hit the
// log floor.
double log_likelihood(double alpha, const std::vector<Eigen::VectorXd>& ys,
                      const LinearModel& model, const SmcConfig& cfg, bool* flagged = nullptr);

// Grid-search ML over alpha with common random numbers across grid points.
LatencyEstimate estimate_latency(const std::vector<Eigen::VectorXd>& ys, const LinearModel& model,
                                 const SmcConfig& cfg);

}  // namespace rsf
