#include "rsf/latency.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <future>

#include "rsf/errors.hpp"
#include "rsf/linalg.hpp"
#include "rsf/rng.hpp"

namespace rsf {

namespace {

constexpr double kLogFloor = -700.0;

// Per-column Gaussian density N(residual_col; 0, R), evaluated through the
// Cholesky factor of R.
struct GaussianDensity {
    Eigen::LLT<Eigen::MatrixXd> llt;
    double log_norm;

    explicit GaussianDensity(const Eigen::MatrixXd& R) : llt(R) {
        if (llt.info() != Eigen::Success)
            throw NonPdCovariance("GaussianDensity: R is not positive definite");
        double log_det = 0.0;
        for (int i = 0; i < R.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
        log_norm = -0.5 * (R.rows() * std::log(2.0 * M_PI) + log_det);
    }

    double operator()(const Eigen::VectorXd& r) const {
        double q = r.dot(llt.solve(r));
        double lp = log_norm - 0.5 * q;
        return lp < kLogFloor ? 0.0 : std::exp(lp);
    }
};

}  // namespace

double state_likelihood(const Eigen::VectorXd& y_k, const Eigen::MatrixXd& particles_k,
                        const Eigen::MatrixXd& particles_prev, double alpha,
                        const Eigen::MatrixXd& C_k, const Eigen::MatrixXd& C_prev,
                        const Eigen::MatrixXd& R_k, const Eigen::MatrixXd& R_prev) {
    const int n = static_cast<int>(particles_k.cols());
    if (particles_prev.cols() != n)
        throw DimensionMismatch("state_likelihood: particle sets differ in size");
    GaussianDensity dens_k(R_k);
    GaussianDensity dens_prev(R_prev);
    Eigen::MatrixXd res_k = (-C_k * particles_k).colwise() + y_k;
    Eigen::MatrixXd res_prev = (-C_prev * particles_prev).colwise() + y_k;
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        sum += (1.0 - alpha) * dens_k(res_k.col(i)) + alpha * dens_prev(res_prev.col(i));
    double value = sum / n;
    if (value <= 0.0)
        throw DegenerateLikelihood("state_likelihood: all mixture densities underflowed");
    return value;
}

namespace {

// log N(r; 0, S) through the Cholesky factor of S.
double log_gaussian(const Eigen::VectorXd& r, const Eigen::MatrixXd& S) {
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw NonPdCovariance("log_likelihood: hypothesis covariance is not positive definite");
    double log_det = 0.0;
    for (int i = 0; i < S.rows(); ++i) log_det += 2.0 * std::log(llt.matrixL()(i, i));
    return -0.5 * (S.rows() * std::log(2.0 * M_PI) + log_det + r.dot(llt.solve(r)));
}

}  // namespace

double log_likelihood(double alpha, const std::vector<Eigen::VectorXd>& ys,
                      const LinearModel& model, const SmcConfig& cfg, bool* flagged) {
    const int m = cfg.n_measurements > 0
                      ? std::min<int>(cfg.n_measurements, static_cast<int>(ys.size()))
                      : static_cast<int>(ys.size());
    if (m < 2) throw FilterError("log_likelihood: need at least two measurements");
    const int n = cfg.n_particles;
    if (n < 1) throw FilterError("log_likelihood: need at least one particle");
    if (flagged) *flagged = false;

    // Particles are delay histories; each carries the exact Kalman mean and
    // covariance conditioned on its history, so the continuous state is fully
    // marginalized and only the discrete indicators are sampled. Each step
    // consumes exactly one uniform regardless of alpha, which keeps the
    // random streams aligned across grid points.
    RngStream rng(cfg.seed, 0, StreamPurpose::Smc);
    std::vector<Eigen::VectorXd> mean(n, model.x0_mean);
    std::vector<Eigen::MatrixXd> cov(n, model.sigma0);

    double L = 0.0;
    for (int k = 1; k <= m; ++k) {
        // First received measurement is non-delayed by convention; it is
        // conditioned on but excluded from the likelihood sum.
        const double a = (k == 1) ? 0.0 : alpha;
        const Eigen::MatrixXd A = model.A(k - 1);
        const Eigen::MatrixXd Q = model.Q(k - 1);
        const Eigen::MatrixXd C_k = model.C(k);
        const Eigen::MatrixXd R_k = model.R(k);
        const Eigen::MatrixXd C_prev = model.C(k - 1);
        const Eigen::MatrixXd R_prev = model.R(k - 1);
        const Eigen::VectorXd& y = ys[k - 1];
        const double log_a = a > 0.0 ? std::log(a) : -std::numeric_limits<double>::infinity();
        const double log_1ma =
            a < 1.0 ? std::log(1.0 - a) : -std::numeric_limits<double>::infinity();

        // Per particle, two hypotheses: the measurement is current (y = C_k
        // x_k + v_k) or one step delayed (y = C_{k-1} x_{k-1} + v_{k-1}).
        std::vector<Eigen::VectorXd> mean_cur(n), mean_del(n);
        std::vector<Eigen::MatrixXd> cov_cur(n), cov_del(n);
        Eigen::VectorXd log_w(2 * n);
        double log_max = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd x_pred = A * mean[i];
            Eigen::MatrixXd p_pred = symmetrize(A * cov[i] * A.transpose() + Q);

            Eigen::MatrixXd s_cur = symmetrize(C_k * p_pred * C_k.transpose() + R_k);
            Eigen::VectorXd r_cur = y - C_k * x_pred;
            log_w[i] = log_1ma + log_gaussian(r_cur, s_cur);
            Eigen::MatrixXd gain_cur =
                p_pred * C_k.transpose() * s_cur.llt().solve(
                             Eigen::MatrixXd::Identity(s_cur.rows(), s_cur.cols()));
            mean_cur[i] = x_pred + gain_cur * r_cur;
            cov_cur[i] = symmetrize(p_pred - gain_cur * C_k * p_pred);

            // Delayed: y updates the state at k-1, which is then propagated.
            Eigen::MatrixXd s_del = symmetrize(C_prev * cov[i] * C_prev.transpose() + R_prev);
            Eigen::VectorXd r_del = y - C_prev * mean[i];
            log_w[n + i] = log_a + log_gaussian(r_del, s_del);
            Eigen::MatrixXd gain_del =
                cov[i] * C_prev.transpose() * s_del.llt().solve(
                             Eigen::MatrixXd::Identity(s_del.rows(), s_del.cols()));
            mean_del[i] = A * (mean[i] + gain_del * r_del);
            cov_del[i] =
                symmetrize(A * (cov[i] - gain_del * C_prev * cov[i]) * A.transpose() + Q);

            log_max = std::max({log_max, log_w[i], log_w[n + i]});
        }

        Eigen::VectorXd w(2 * n);
        for (int j = 0; j < 2 * n; ++j)
            w[j] = std::isfinite(log_w[j]) ? std::exp(log_w[j] - log_max) : 0.0;
        double w_sum = w.sum();
        double u = rng.uniform();  // drawn unconditionally to keep streams aligned

        if (!std::isfinite(log_max) || w_sum <= 0.0) {
            // All hypothesis densities underflowed: floor the summand and
            // coast on the prediction so the pass can continue.
            if (k >= 2) L += kLogFloor;
            if (flagged) *flagged = true;
            for (int i = 0; i < n; ++i) {
                mean[i] = A * mean[i];
                cov[i] = symmetrize(A * cov[i] * A.transpose() + Q);
            }
            continue;
        }
        if (k >= 2)
            L += std::max(log_max + std::log(w_sum / n), kLogFloor);

        // Systematic resampling over the 2n (particle, hypothesis) pairs.
        double step = w_sum / n;
        double pos = u * step;
        double cum = w[0];
        int j = 0;
        std::vector<Eigen::VectorXd> next_mean(n);
        std::vector<Eigen::MatrixXd> next_cov(n);
        for (int i = 0; i < n; ++i) {
            while (cum < pos && j + 1 < 2 * n) cum += w[++j];
            int p = j % n;
            if (j < n) {
                next_mean[i] = mean_cur[p];
                next_cov[i] = cov_cur[p];
            } else {
                next_mean[i] = mean_del[p];
                next_cov[i] = cov_del[p];
            }
            pos += step;
        }
        mean = std::move(next_mean);
        cov = std::move(next_cov);
    }
    return L;
}

LatencyEstimate estimate_latency(const std::vector<Eigen::VectorXd>& ys, const LinearModel& model,
                                 const SmcConfig& cfg) {
    if (cfg.grid_step <= 0.0 || cfg.grid_step >= 1.0)
        throw FilterError("estimate_latency: grid_step must lie in (0,1)");
    std::vector<double> alphas;
    for (double a = 0.0; a < 1.0 - 1e-12; a += cfg.grid_step) alphas.push_back(a);
    alphas.push_back(1.0);

    const int n_grid = static_cast<int>(alphas.size());
    std::vector<double> lls(n_grid);
    std::vector<char> flags(n_grid, 0);

    auto eval = [&](int i) {
        bool f = false;
        double ll;
        try {
            ll = log_likelihood(alphas[i], ys, model, cfg, &f);
        } catch (const FilterError&) {
            ll = -std::numeric_limits<double>::infinity();
            f = true;
        }
        lls[i] = ll;
        flags[i] = f ? 1 : 0;
    };

    if (cfg.parallel) {
        std::vector<std::future<void>> futs;
        futs.reserve(n_grid);
        for (int i = 0; i < n_grid; ++i)
            futs.push_back(std::async(std::launch::async, eval, i));
        for (auto& f : futs) f.get();
    } else {
        for (int i = 0; i < n_grid; ++i) eval(i);
    }

    LatencyEstimate est;
    int best = 0;
    for (int i = 0; i < n_grid; ++i) {
        est.curve.emplace_back(alphas[i], lls[i]);
        if (flags[i]) est.flagged.push_back(i);
        if (lls[i] > lls[best]) best = i;  // ties break toward smaller alpha
    }
    est.alpha_hat = alphas[best];
    return est;
}

}  // namespace rsf
