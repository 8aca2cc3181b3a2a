#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace rsf {

// Named substream purposes. One master seed spawns an independent stream per
// (run, purpose), so enabling or disabling a consumer never perturbs another
// consumer's draws.
enum class StreamPurpose : std::uint64_t {
    Init = 1,
    Process = 2,
    Measurement = 3,
    Channel = 4,
    Smc = 5,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace detail

class RngStream {
  public:
    RngStream(std::uint64_t master, std::uint64_t run, StreamPurpose purpose)
        : RngStream(master, run, static_cast<std::uint64_t>(purpose)) {}

    RngStream(std::uint64_t master, std::uint64_t run, std::uint64_t purpose) {
        std::uint64_t s = detail::splitmix64(master);
        s = detail::splitmix64(s ^ detail::splitmix64(run + 0x51ed2701ULL));
        s = detail::splitmix64(s ^ detail::splitmix64(purpose + 0xabcf937bULL));
        gen_.seed(s);
    }

    double gaussian() { return normal_(gen_); }
    double uniform() { return uniform_(gen_); }
    bool bernoulli(double p) { return uniform_(gen_) < p; }

    Eigen::VectorXd gaussian_vector(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v[i] = normal_(gen_);
        return v;
    }

  private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace rsf
