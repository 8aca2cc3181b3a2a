#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "rsf/rng.hpp"

namespace rsf {

// Bernoulli one-step delay channel: y_k = (1-b_k) z_k + b_k z_{k-1} with
// b_k ~ Bernoulli(alpha(k)). The first received measurement is never delayed
// (b_1 = 0). One instance per Monte Carlo run.
class DelayChannel {
  public:
    struct Output {
        Eigen::VectorXd y;
        int beta;  // for test instrumentation only; filters must not see it
    };

    DelayChannel(std::function<double(int)> alpha, RngStream rng)
        : alpha_(std::move(alpha)), rng_(std::move(rng)) {}

    static DelayChannel stationary(double alpha, RngStream rng) {
        return DelayChannel([alpha](int) { return alpha; }, std::move(rng));
    }

    // Transmits z_k for the next time step; call with k = 1, 2, ... in order.
    Output transmit(const Eigen::VectorXd& z_k);

    int current_step() const { return k_; }

  private:
    std::function<double(int)> alpha_;
    RngStream rng_;
    Eigen::VectorXd prev_z_;
    int k_ = 0;
};

// I.i.d. Bernoulli(alpha) delay indicators b_1..b_K with b_1 forced to 0.
std::vector<int> delay_sequence(double alpha, int K, RngStream rng);

// Applies a pre-drawn delay sequence to the measurement stream z_1..z_K.
std::vector<Eigen::VectorXd> apply_delays(const std::vector<Eigen::VectorXd>& z,
                                          const std::vector<int>& betas);

}  // namespace rsf
