#include "rsf/channel.hpp"

#include "rsf/errors.hpp"

namespace rsf {

DelayChannel::Output DelayChannel::transmit(const Eigen::VectorXd& z_k) {
    ++k_;
    if (k_ == 1) {
        prev_z_ = z_k;
    } else if (z_k.size() != prev_z_.size()) {
        throw DimensionMismatch("DelayChannel::transmit: measurement dimension changed");
    }
    double a = alpha_(k_);
    if (a < 0.0 || a > 1.0)
        throw FilterError("DelayChannel::transmit: alpha(k) outside [0,1]");
    // Draw even at k=1 so downstream draws do not depend on the start index.
    int beta = rng_.bernoulli(a) ? 1 : 0;
    if (k_ == 1) beta = 0;
    Output out;
    out.beta = beta;
    out.y = beta ? prev_z_ : z_k;
    prev_z_ = z_k;
    return out;
}

std::vector<int> delay_sequence(double alpha, int K, RngStream rng) {
    if (K < 1) throw FilterError("delay_sequence: K must be >= 1");
    std::vector<int> betas(K);
    for (int k = 0; k < K; ++k) betas[k] = rng.bernoulli(alpha) ? 1 : 0;
    betas[0] = 0;
    return betas;
}

std::vector<Eigen::VectorXd> apply_delays(const std::vector<Eigen::VectorXd>& z,
                                          const std::vector<int>& betas) {
    if (z.size() != betas.size())
        throw DimensionMismatch("apply_delays: sequence length mismatch");
    std::vector<Eigen::VectorXd> y(z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        y[i] = (betas[i] && i > 0) ? z[i - 1] : z[i];
    return y;
}

}  // namespace rsf
