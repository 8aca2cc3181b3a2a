#include "rsf/harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "rsf/errors.hpp"
#include "rsf/linalg.hpp"

namespace rsf {

namespace {

constexpr double kPi = 3.14159265358979323846;

FilterVariant parse_filter(const std::string& s) {
    if (s == "RSD-KF") return FilterVariant::RsdKf;
    if (s == "RSKF") return FilterVariant::Rskf;
    if (s == "KF-RD") return FilterVariant::KfRd;
    if (s == "KF") return FilterVariant::Kf;
    throw FilterError("unknown filter name: " + s);
}

Eigen::MatrixXd parse_matrix(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw FilterError("config: expected a matrix (list of rows)");
    int rows = static_cast<int>(j.size());
    int cols = static_cast<int>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (static_cast<int>(j[r].size()) != cols)
            throw FilterError("config: ragged matrix rows");
        for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

Eigen::VectorXd parse_vector(const nlohmann::json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
    return v;
}

Eigen::MatrixXd turn_rate_transition(double omega, double T) {
    double wt = omega * T;
    double s = std::sin(wt), c = std::cos(wt);
    Eigen::MatrixXd A(4, 4);
    A << 1, 0, s / omega, (c - 1) / omega,
         0, 1, (1 - c) / omega, s / omega,
         0, 0, c, -s,
         0, 0, s, c;
    return A;
}

}  // namespace

double problem2_omega() { return 3.0 * kPi / 180.0; }

double problem1_default_rho() { return 0.03; }

double problem2_default_rho() { return 0.0035; }

ProblemSetup make_problem1(double delta) {
    Eigen::MatrixXd A(2, 2);
    A << 0, -0.5, 1, 1;
    Eigen::MatrixXd C(1, 2);
    C << -10, 1;
    // Effective process noise: gain [-6, 1]^T with unit-variance scalar noise.
    Eigen::Vector2d B(-6.0, 1.0);
    Eigen::MatrixXd Q = B * B.transpose();
    Eigen::MatrixXd R(1, 1);
    R << 3.6;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd S0 = Eigen::Vector2d(1.0, 5.0).asDiagonal();

    ProblemSetup s;
    s.model = LinearModel::stationary(A, C, Q, R, x0, S0);
    Eigen::MatrixXd dA = Eigen::MatrixXd::Zero(2, 2);
    dA(1, 1) = delta;
    s.unc = UncertaintySpec::stationary(dA);
    s.groups = {{"state1", {0}}, {"state2", {1}}};
    return s;
}

ProblemSetup make_problem2(double delta_omega) {
    const double T = 0.2;
    const double omega = problem2_omega();
    Eigen::MatrixXd A = turn_rate_transition(omega, T);
    Eigen::MatrixXd C(2, 4);
    C << 1, 0, 0, 0, 0, 1, 0, 0;
    // Process noise injected directly per state: std 0.3 on positions and
    // 0.05 on velocities.
    Eigen::MatrixXd Q = Eigen::Vector4d(0.09, 0.09, 0.0025, 0.0025).asDiagonal();
    Eigen::MatrixXd R = Eigen::Vector2d(12.0, 12.0).asDiagonal();
    Eigen::VectorXd x0(4);
    x0 << 200, 200, 15, 15;
    Eigen::MatrixXd S0 = Eigen::Vector4d(100.0, 100.0, 16.0, 16.0).asDiagonal();

    ProblemSetup s;
    s.model = LinearModel::stationary(A, C, Q, R, x0, S0);
    Eigen::MatrixXd dA = turn_rate_transition(omega + delta_omega, T) - A;
    s.unc = UncertaintySpec::stationary(dA);
    s.groups = {{"position", {0, 1}}, {"velocity", {2, 3}}};
    return s;
}

ProblemSetup make_setup(const ExperimentConfig& cfg) {
    if (cfg.problem == "P1") return make_problem1(cfg.delta);
    if (cfg.problem == "P2") return make_problem2(cfg.delta);
    if (cfg.problem == "custom") {
        if (!cfg.custom_model) throw FilterError("custom problem requires a model");
        ProblemSetup s;
        s.model = *cfg.custom_model;
        s.unc = cfg.custom_delta_a ? UncertaintySpec::stationary(*cfg.custom_delta_a)
                                   : UncertaintySpec::none(s.model.dim_x);
        if (!cfg.custom_groups.empty()) {
            s.groups = cfg.custom_groups;
        } else {
            for (int d = 0; d < s.model.dim_x; ++d)
                s.groups.push_back({"state" + std::to_string(d + 1), {d}});
        }
        return s;
    }
    throw FilterError("unknown problem: " + cfg.problem);
}

Metrics rmse_metrics(const std::vector<std::vector<Eigen::VectorXd>>& errors,
                     const std::vector<MetricGroup>& groups) {
    Metrics m;
    if (errors.empty()) throw FilterError("rmse_metrics: need at least one run");
    const int M = static_cast<int>(errors.size());
    const int K = static_cast<int>(errors[0].size());
    m.rmse_series.assign(groups.size(), std::vector<double>(K, 0.0));
    m.avg_mse.assign(groups.size(), 0.0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int k = 0; k < K; ++k) {
            double sum = 0.0;
            for (int run = 0; run < M; ++run) {
                const Eigen::VectorXd& e = errors[run][k];
                for (int d : groups[g].dims) sum += e[d] * e[d];
            }
            double mse = sum / M;
            m.rmse_series[g][k] = std::sqrt(mse);
            m.avg_mse[g] += mse;
        }
        if (K > 0) m.avg_mse[g] /= K;
    }
    return m;
}

namespace {

struct RunOutcome {
    bool excluded = false;
    double alpha_estimate = -1.0;
    // errors[filter][step]
    std::vector<std::vector<Eigen::VectorXd>> errors;
};

double resolve_rho(const ExperimentConfig& cfg) {
    if (cfg.rho >= 0.0) return cfg.rho;
    return cfg.problem == "P2" ? problem2_default_rho() : problem1_default_rho();
}

RunOutcome execute_run(const ExperimentConfig& cfg, const ProblemSetup& setup, int run) {
    RunOutcome out;
    const int K = cfg.horizon;
    RngStream init(cfg.seed, run, StreamPurpose::Init);
    RngStream proc(cfg.seed, run, StreamPurpose::Process);
    RngStream meas(cfg.seed, run, StreamPurpose::Measurement);
    RngStream chan(cfg.seed, run, StreamPurpose::Channel);

    Trajectory truth = simulate_truth(setup.model, setup.unc, K, init, proc, meas);
    std::vector<int> betas = delay_sequence(cfg.alpha_true, K, std::move(chan));
    std::vector<Eigen::VectorXd> ys = apply_delays(truth.measurements, betas);

    double alpha_used = cfg.alpha_assumed >= 0.0 ? cfg.alpha_assumed : cfg.alpha_true;
    if (cfg.estimate_alpha) {
        SmcConfig smc = cfg.smc;
        smc.seed = detail::splitmix64(cfg.seed ^ detail::splitmix64(run + 0x5151ULL));
        smc.parallel = false;  // runs are already parallel
        LatencyEstimate est = estimate_latency(ys, setup.model, smc);
        alpha_used = est.alpha_hat;
        out.alpha_estimate = est.alpha_hat;
    }

    out.errors.assign(cfg.filters.size(), {});
    for (std::size_t f = 0; f < cfg.filters.size(); ++f) {
        FilterVariant v = cfg.filters[f];
        bool delay_aware = v == FilterVariant::RsdKf || v == FilterVariant::KfRd;
        DelayedRiskFilter filter(setup.model, v, delay_aware ? alpha_used : 0.0,
                                 RiskParams{0.0, 1.0, resolve_rho(cfg)});
        auto& errs = out.errors[f];
        errs.reserve(K);
        try {
            for (int k = 1; k <= K; ++k) {
                StepOutput so = filter.step(ys[k - 1]);
                errs.push_back(truth.states[k] - so.posterior.mean);
            }
        } catch (const FilterError&) {
            out.excluded = true;
            return out;
        }
    }
    return out;
}

}  // namespace

McResult run_experiment(const ExperimentConfig& cfg) {
    if (cfg.n_runs < 1 || cfg.horizon < 2)
        throw FilterError("run_experiment: need n_runs >= 1 and horizon >= 2");
    ProblemSetup setup = make_setup(cfg);
    validate(setup.model, setup.unc, cfg.horizon);

    const int M = cfg.n_runs;
    std::vector<RunOutcome> outcomes(M);
    int n_threads = cfg.max_threads > 0
                        ? cfg.max_threads
                        : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min(n_threads, M);
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int run = next.fetch_add(1); run < M; run = next.fetch_add(1))
            outcomes[run] = execute_run(cfg, setup, run);
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    McResult res;
    for (FilterVariant v : cfg.filters) res.filter_names.push_back(to_string(v));
    for (const auto& g : setup.groups) res.group_names.push_back(g.name);

    // Reduce in run order so the result is independent of scheduling.
    std::vector<std::vector<std::vector<Eigen::VectorXd>>> errors(cfg.filters.size());
    for (int run = 0; run < M; ++run) {
        const RunOutcome& o = outcomes[run];
        if (o.excluded) {
            ++res.excluded_runs;
            continue;
        }
        if (cfg.estimate_alpha) res.alpha_estimates.push_back(o.alpha_estimate);
        for (std::size_t f = 0; f < cfg.filters.size(); ++f)
            errors[f].push_back(o.errors[f]);
    }
    res.failed = res.excluded_runs > M / 100;
    if (errors[0].empty()) {
        res.failed = true;
        return res;
    }
    for (std::size_t f = 0; f < cfg.filters.size(); ++f) {
        Metrics m = rmse_metrics(errors[f], setup.groups);
        res.rmse.push_back(std::move(m.rmse_series));
        res.avg_mse.push_back(std::move(m.avg_mse));
    }
    return res;
}

std::string McResult::to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "filter,group,step,rmse\n";
    for (std::size_t f = 0; f < filter_names.size(); ++f)
        for (std::size_t g = 0; g < group_names.size(); ++g)
            for (std::size_t k = 0; k < rmse[f][g].size(); ++k)
                os << filter_names[f] << ',' << group_names[g] << ',' << (k + 1) << ','
                   << rmse[f][g][k] << '\n';
    os << "filter,group,avg_mse\n";
    for (std::size_t f = 0; f < filter_names.size(); ++f)
        for (std::size_t g = 0; g < group_names.size(); ++g)
            os << filter_names[f] << ',' << group_names[g] << ',' << avg_mse[f][g] << '\n';
    os << "excluded_runs," << excluded_runs << "\nfailed," << (failed ? 1 : 0) << '\n';
    return os.str();
}

bool SweepResult::any_failed() const {
    for (const auto& c : cells)
        if (c.error || c.result.failed) return true;
    return false;
}

std::string SweepResult::to_csv() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "delta,alpha,filter,group,avg_mse,excluded_runs\n";
    for (const auto& c : cells) {
        if (c.error) {
            os << c.delta << ',' << c.alpha << ",ERROR,,,\n";
            continue;
        }
        for (std::size_t f = 0; f < c.result.filter_names.size(); ++f)
            for (std::size_t g = 0; g < c.result.group_names.size(); ++g)
                os << c.delta << ',' << c.alpha << ',' << c.result.filter_names[f] << ','
                   << c.result.group_names[g] << ',' << c.result.avg_mse[f][g] << ','
                   << c.result.excluded_runs << '\n';
    }
    return os.str();
}

SweepResult sweep(const ExperimentConfig& base, const std::vector<double>& deltas,
                  const std::vector<double>& alphas) {
    SweepResult out;
    for (double d : deltas) {
        for (double a : alphas) {
            SweepCell cell;
            cell.delta = d;
            cell.alpha = a;
            ExperimentConfig cfg = base;
            cfg.delta = d;
            cfg.alpha_true = a;
            try {
                cell.result = run_experiment(cfg);
            } catch (const std::exception& e) {
                cell.error = true;
                cell.message = e.what();
            }
            out.cells.push_back(std::move(cell));
        }
    }
    return out;
}

BenchConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FilterError("cannot open config file: " + path);
    nlohmann::json j;
    in >> j;

    BenchConfig bc;
    ExperimentConfig& cfg = bc.base;
    cfg.problem = j.value("problem", std::string("P1"));
    cfg.delta = j.value("delta", 0.0);
    cfg.alpha_true = j.value("alpha", 0.0);
    cfg.alpha_assumed = j.value("alpha_assumed", -1.0);
    cfg.estimate_alpha = j.value("estimate_alpha", false);
    cfg.n_runs = j.value("runs", 500);
    cfg.horizon = j.value("horizon", 100);
    cfg.seed = j.value("seed", std::uint64_t{1});
    cfg.rho = j.value("rho", -1.0);  // <0 resolves to the per-problem default
    if (j.contains("filters")) {
        cfg.filters.clear();
        for (const auto& f : j["filters"]) cfg.filters.push_back(parse_filter(f.get<std::string>()));
    }
    if (j.contains("smc")) {
        const auto& s = j["smc"];
        cfg.smc.n_particles = s.value("particles", 500);
        cfg.smc.grid_step = s.value("grid_step", 0.05);
        cfg.smc.n_measurements = s.value("measurements", 0);
    }
    if (j.contains("sweep")) {
        for (const auto& d : j["sweep"].value("deltas", std::vector<double>{}))
            bc.deltas.push_back(d);
        for (const auto& a : j["sweep"].value("alphas", std::vector<double>{}))
            bc.alphas.push_back(a);
    }
    if (bc.deltas.empty()) bc.deltas = {cfg.delta};
    if (bc.alphas.empty()) bc.alphas = {cfg.alpha_true};

    if (j.contains("model")) {
        const auto& m = j["model"];
        Eigen::MatrixXd A = parse_matrix(m.at("A"));
        Eigen::MatrixXd C = parse_matrix(m.at("C"));
        Eigen::MatrixXd Q = parse_matrix(m.at("Q"));
        Eigen::MatrixXd R = parse_matrix(m.at("R"));
        Eigen::VectorXd x0 = parse_vector(m.at("x0_mean"));
        Eigen::MatrixXd S0 = parse_matrix(m.at("sigma0"));
        cfg.custom_model = LinearModel::stationary(A, C, Q, R, x0, S0);
        if (m.contains("delta_a")) cfg.custom_delta_a = parse_matrix(m["delta_a"]);
        cfg.problem = "custom";
    }
    return bc;
}

}  // namespace rsf
