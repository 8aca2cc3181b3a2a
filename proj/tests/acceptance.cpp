// Acceptance suite: one pass/fail line per criterion. Tolerances are pinned
// here, next to the checks that use them.

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numeric>

#include "moment_oracle.hpp"
#include "reference_kf.hpp"
#include "rsf/channel.hpp"
#include "rsf/filter.hpp"
#include "rsf/harness.hpp"
#include "rsf/latency.hpp"
#include "rsf/linalg.hpp"
#include "rsf/stability.hpp"

using namespace rsf;

namespace {

void report(int criterion, bool pass, const char* what) {
    std::printf("[criterion %d] %s: %s\n", criterion, pass ? "PASS" : "FAIL", what);
    std::fflush(stdout);
}

std::vector<Eigen::VectorXd> delayed_stream(const ProblemSetup& s, double alpha, int K,
                                            std::uint64_t seed, int run = 0) {
    RngStream init(seed, run, StreamPurpose::Init);
    RngStream proc(seed, run, StreamPurpose::Process);
    RngStream meas(seed, run, StreamPurpose::Measurement);
    Trajectory truth = simulate_truth(s.model, s.unc, K, init, proc, meas);
    auto betas = delay_sequence(alpha, K, RngStream(seed, run, StreamPurpose::Channel));
    return apply_delays(truth.measurements, betas);
}

}  // namespace

TEST_CASE("criterion 1: reduction equivalences over 100 steps") {
    const double tol = 1e-10;
    ProblemSetup s = make_problem1(0.0);
    auto ys = delayed_stream(s, 0.0, 100, 1);

    DelayedRiskFilter rsd(s.model, FilterVariant::RsdKf, 0.0, RiskParams{0, 1, 0.5});
    DelayedRiskFilter rskf(s.model, FilterVariant::Rskf, 0.0, RiskParams{0, 1, 0.5});
    DelayedRiskFilter rsd0(s.model, FilterVariant::RsdKf, 0.0, RiskParams{0, 1, 0.0});
    ReferenceKf ref{s.model.x0_mean, s.model.sigma0};

    double worst_rskf = 0.0, worst_kf = 0.0;
    for (const auto& y : ys) {
        StepOutput a = rsd.step(y);
        StepOutput b = rskf.step(y);
        StepOutput c = rsd0.step(y);
        ref.step(s.model.A(0), s.model.C(0), s.model.Q(0), s.model.R(0), y);
        worst_rskf = std::max({worst_rskf,
                               (a.posterior.mean - b.posterior.mean).cwiseAbs().maxCoeff(),
                               (a.posterior.cov - b.posterior.cov).cwiseAbs().maxCoeff()});
        worst_kf = std::max({worst_kf, (c.posterior.mean - ref.x).cwiseAbs().maxCoeff(),
                             (c.posterior.cov - ref.P).cwiseAbs().maxCoeff()});
    }
    bool pass = worst_rskf <= tol && worst_kf <= tol;
    report(1, pass, "reduction equivalences (alpha=0 -> RSKF; alpha=0, mu1=0 -> KF)");
    CHECK(worst_rskf <= tol);
    CHECK(worst_kf <= tol);
}

TEST_CASE("criterion 2: delayed-measurement moments vs 1e6-draw sampling") {
    const long n_draws = 1000000;
    const double rel_tol = 0.02;
    ProblemSetup s = make_problem1(0.0);
    GaussianBelief prev{Eigen::Vector2d(1.0, -2.0),
                        Eigen::MatrixXd(Eigen::Vector2d(2.0, 3.0).asDiagonal())};
    const double mu1 = 0.05;
    GaussianBelief pred = time_update(prev, s.model.A(0), s.model.Q(0), mu1);
    Eigen::MatrixXd theta = backward_measurement_map(s.model.C(0), s.model.A(0));

    bool pass = true;
    for (double alpha : {0.25, 0.5, 0.75}) {
        auto m = measurement_moments(pred, prev.mean, alpha, s.model.C(0), s.model.C(0),
                                     theta, s.model.R(0), s.model.R(0), s.model.Q(0));
        Eigen::MatrixXd sxy =
            cross_covariance(pred.cov, alpha, s.model.C(0), theta, s.model.Q(0));
        SampledMoments mc = sample_delayed_moments(s.model, alpha, mu1, prev.mean, prev.cov,
                                                   n_draws, 1000 + int(alpha * 100));
        double scale_yy = m.s_yy.cwiseAbs().maxCoeff();
        double scale_xy = sxy.cwiseAbs().maxCoeff();
        double err_yy = (mc.s_yy - m.s_yy).cwiseAbs().maxCoeff() / scale_yy;
        double err_xy = (mc.s_xy - sxy).cwiseAbs().maxCoeff() / scale_xy;
        pass = pass && err_yy <= rel_tol && err_xy <= rel_tol;
        CHECK(err_yy <= rel_tol);
        CHECK(err_xy <= rel_tol);
    }
    report(2, pass, "S_yy / S_xy vs Monte Carlo sampling at alpha in {0.25, 0.5, 0.75}");
}

TEST_CASE("criterion 3: problem-1 parametric table at M=500") {
    ExperimentConfig base;
    base.problem = "P1";
    base.n_runs = 500;
    base.horizon = 100;
    base.seed = 1;
    base.rho = problem1_default_rho();

    SweepResult sw = sweep(base, {0.0, 0.15, 0.25, 0.35}, {0.0, 0.2, 0.4, 0.6, 0.8});
    REQUIRE_FALSE(sw.any_failed());
    auto cell = [&](double d, double a) -> const McResult& {
        for (const auto& c : sw.cells)
            if (c.delta == d && c.alpha == a) return c.result;
        throw std::runtime_error("missing sweep cell");
    };
    auto avg = [&](const McResult& r, const char* filter) {
        for (std::size_t f = 0; f < r.filter_names.size(); ++f)
            if (r.filter_names[f] == filter) return r.avg_mse[f][0];  // state-1 group
        throw std::runtime_error("missing filter");
    };

    double nominal = avg(cell(0.0, 0.0), "RSD-KF");
    bool pass_nominal = nominal >= 0.05 && nominal <= 0.10;
    CHECK(pass_nominal);

    double stressed = avg(cell(0.35, 0.0), "RSD-KF");
    bool pass_stressed = std::abs(stressed - 13.802) <= 0.30 * 13.802;
    CHECK(pass_stressed);

    bool pass_order = true;
    for (double d : {0.15, 0.25, 0.35}) {
        for (double a : {0.2, 0.4, 0.6, 0.8}) {
            const McResult& r = cell(d, a);
            double prop = avg(r, "RSD-KF"), kfrd = avg(r, "KF-RD"), rskf = avg(r, "RSKF");
            bool ok = prop <= kfrd && kfrd <= rskf;
            if (!ok)
                std::printf("  ordering violated at delta=%.2f alpha=%.1f: %g %g %g\n", d, a,
                            prop, kfrd, rskf);
            pass_order = pass_order && ok;
        }
    }
    CHECK(pass_order);
    report(3, pass_nominal && pass_stressed && pass_order,
           "problem-1 table: nominal cell, stressed cell, ordering proposed<=KF-RD<=RSKF");
}

TEST_CASE("criterion 4: problem-2 parametric table at M=500") {
    ExperimentConfig base;
    base.problem = "P2";
    base.n_runs = 500;
    base.horizon = 100;
    base.seed = 2;
    base.rho = problem2_default_rho();

    base.delta = 0.0;
    base.alpha_true = 0.0;
    McResult nom = run_experiment(base);
    REQUIRE_FALSE(nom.failed);
    auto avg = [](const McResult& r, const char* filter, int group) {
        for (std::size_t f = 0; f < r.filter_names.size(); ++f)
            if (r.filter_names[f] == filter) return r.avg_mse[f][group];
        throw std::runtime_error("missing filter");
    };
    double prop0 = avg(nom, "RSD-KF", 0);
    double rskf0 = avg(nom, "RSKF", 0);
    bool pass_reduction = std::abs(prop0 - rskf0) <= 1e-9;
    bool pass_value = std::abs(prop0 - 3.60) <= 0.50 * 3.60;
    CHECK(pass_reduction);
    CHECK(pass_value);

    base.delta = 2.0 * problem2_omega() / 3.0;
    base.alpha_true = 0.8;
    McResult stressed = run_experiment(base);
    REQUIRE_FALSE(stressed.failed);
    double p = avg(stressed, "RSD-KF", 0);
    double k = avg(stressed, "KF-RD", 0);
    double r = avg(stressed, "RSKF", 0);
    bool pass_order = p < k && k < r;
    if (!pass_order) std::printf("  P2 ordering: proposed=%g KF-RD=%g RSKF=%g\n", p, k, r);
    CHECK(pass_order);
    report(4, pass_reduction && pass_value && pass_order,
           "problem-2 table: alpha=0 reduction and value, stressed ordering");
}

TEST_CASE("criterion 5: latency estimation over 50 ensembles") {
    auto mean_alpha_hat = [](const std::string& problem, double alpha_true, double rho,
                             std::uint64_t seed) {
        ExperimentConfig cfg;
        cfg.problem = problem;
        cfg.delta = 0.0;
        cfg.alpha_true = alpha_true;
        cfg.estimate_alpha = true;
        cfg.n_runs = 50;
        cfg.horizon = 300;
        cfg.seed = seed;
        cfg.rho = rho;
        cfg.filters = {FilterVariant::RsdKf};
        cfg.smc.n_particles = 300;
        cfg.smc.grid_step = 0.05;
        McResult r = run_experiment(cfg);
        REQUIRE(r.alpha_estimates.size() >= 49);
        return std::accumulate(r.alpha_estimates.begin(), r.alpha_estimates.end(), 0.0) /
               r.alpha_estimates.size();
    };

    double m1 = mean_alpha_hat("P1", 0.3, problem1_default_rho(), 101);
    bool pass1 = m1 >= 0.24 && m1 <= 0.36;
    std::printf("  P1 ensemble-mean alpha_hat = %.4f (true 0.3)\n", m1);
    CHECK(pass1);

    double m2 = mean_alpha_hat("P2", 0.5, problem2_default_rho(), 202);
    bool pass2 = m2 >= 0.43 && m2 <= 0.55;
    std::printf("  P2 ensemble-mean alpha_hat = %.4f (true 0.5)\n", m2);
    CHECK(pass2);
    report(5, pass1 && pass2, "ensemble-mean latency estimates near the true probabilities");
}

TEST_CASE("criterion 6: unbiasedness of the proposed filter") {
    const int M = 500, K = 100;
    ProblemSetup s = make_problem1(0.0);
    // per-step sums of error and squared error for state 1 and 2
    std::vector<Eigen::Vector2d> sum(K, Eigen::Vector2d::Zero());
    std::vector<Eigen::Vector2d> sumsq(K, Eigen::Vector2d::Zero());
    for (int run = 0; run < M; ++run) {
        RngStream init(6, run, StreamPurpose::Init);
        RngStream proc(6, run, StreamPurpose::Process);
        RngStream meas(6, run, StreamPurpose::Measurement);
        Trajectory truth = simulate_truth(s.model, s.unc, K, init, proc, meas);
        auto betas = delay_sequence(0.5, K, RngStream(6, run, StreamPurpose::Channel));
        auto ys = apply_delays(truth.measurements, betas);
        DelayedRiskFilter f(s.model, FilterVariant::RsdKf, 0.5, RiskParams{0, 1, 0.5});
        for (int k = 1; k <= K; ++k) {
            Eigen::Vector2d e = truth.states[k] - f.step(ys[k - 1]).posterior.mean;
            sum[k - 1] += e;
            sumsq[k - 1] += e.cwiseProduct(e);
        }
    }
    bool pass = true;
    double worst = 0.0;
    for (int k = 0; k < K; ++k) {
        for (int d = 0; d < 2; ++d) {
            double mean = sum[k][d] / M;
            double var = sumsq[k][d] / M - mean * mean;
            double se = std::sqrt(var / M);
            double z = std::abs(mean) / se;
            worst = std::max(worst, z);
            pass = pass && z <= 4.0;
        }
    }
    std::printf("  worst per-step |mean error| / s.e. = %.2f (limit 4)\n", worst);
    CHECK(pass);
    report(6, pass, "per-step ensemble-mean error within 4 standard errors of zero");
}

TEST_CASE("criterion 7: stability suite") {
    // (a) no model error -> exactly zero Gramian perturbation
    ProblemSetup nom = make_problem1(0.0);
    GramianWindow w0 = gramians(nom.model, nom.unc, 10, 4);
    bool pass_a = w0.Delta_O.cwiseAbs().maxCoeff() == 0.0;
    CHECK(pass_a);

    // (b) all-delayed channel degenerates the augmented observability block
    auto all_delay = [](int) { return 1.0; };
    AugmentedObservability aug =
        augmented_observability(nom.model, nom.unc, all_delay, 10, 4);
    bool pass_b = std::abs(min_eigenvalue(aug.O11)) <= 1e-12;
    CHECK(pass_b);

    // (c) covariance bound dominates the observed RSKF covariance norm,
    // problem 1 with delta = 0.15, 500 runs
    // Window length 2: longer windows push ||O^-1 dO|| past one for this
    // system because the backward transition chains grow geometrically.
    ProblemSetup s = make_problem1(0.15);
    const int M = 500, K = 60, l = 2;
    bool pass_c = true;
    for (int run = 0; run < M && pass_c; ++run) {
        RngStream init(7, run, StreamPurpose::Init);
        RngStream proc(7, run, StreamPurpose::Process);
        RngStream meas(7, run, StreamPurpose::Measurement);
        Trajectory truth = simulate_truth(s.model, s.unc, K, init, proc, meas);
        DelayedRiskFilter f(s.model, FilterVariant::Rskf, 0.0,
                            RiskParams{0, 1, problem1_default_rho()});
        std::vector<Eigen::MatrixXd> covs;
        std::vector<Eigen::VectorXd> means;
        for (const auto& z : truth.measurements) {
            StepOutput o = f.step(z);
            covs.push_back(o.posterior.cov);
            means.push_back(o.posterior.mean);
        }
        StabilityReport rep = monitor_covariance(covs, means, s.model, s.unc, l);
        pass_c = !rep.flagged && rep.bound_condition && rep.bound_respected;
    }
    CHECK(pass_c);
    report(7, pass_a && pass_b && pass_c,
           "Gramian reduction, full-delay degeneracy, covariance bound over 500 runs");
}

TEST_CASE("criterion 8: invariant suite") {
    ProblemSetup s = make_problem1(0.25);
    auto ys = delayed_stream(s, 0.6, 100, 8);

    // PSD posteriors and PSD-decrease at the update
    bool pass_psd = true;
    DelayedRiskFilter f(s.model, FilterVariant::RsdKf, 0.6, RiskParams{0, 1, 0.5});
    for (const auto& y : ys) {
        StepOutput o = f.step(y);
        pass_psd = pass_psd && is_pd(o.posterior.cov) &&
                   min_eigenvalue(o.predicted.cov - o.posterior.cov) >= -1e-9;
    }
    CHECK(pass_psd);

    // Risk monotonicity of the prediction
    GaussianBelief b{Eigen::Vector2d::Zero(),
                     Eigen::MatrixXd(Eigen::Vector2d(1.0, 5.0).asDiagonal())};
    Eigen::MatrixXd lo = time_update(b, s.model.A(0), s.model.Q(0), 0.02).cov;
    Eigen::MatrixXd hi = time_update(b, s.model.A(0), s.model.Q(0), 0.08).cov;
    bool pass_mono = min_eigenvalue(hi - lo) >= -1e-12;
    CHECK(pass_mono);

    // Determinism: byte-identical repeated experiment
    ExperimentConfig cfg;
    cfg.problem = "P1";
    cfg.delta = 0.15;
    cfg.alpha_true = 0.4;
    cfg.n_runs = 25;
    cfg.horizon = 50;
    cfg.seed = 33;
    bool pass_det = run_experiment(cfg).to_csv() == run_experiment(cfg).to_csv();
    CHECK(pass_det);
    report(8, pass_psd && pass_mono && pass_det,
           "PSD posteriors, update contraction, risk monotonicity, determinism");
}
