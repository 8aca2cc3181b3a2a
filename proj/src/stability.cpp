#include "rsf/stability.hpp"

#include <Eigen/LU>

#include "rsf/errors.hpp"
#include "rsf/linalg.hpp"

namespace rsf {

namespace {

// Forward transition products A_{k,i} = A_{k-1} ... A_i over the window,
// indexed by i in [k-l, k]; the backward matrices A_{i,k} are their inverses.
struct TransitionChains {
    // chains[j] corresponds to i = k-l+j
    std::vector<Eigen::MatrixXd> fwd_nominal, fwd_actual;
    std::vector<Eigen::MatrixXd> bwd_nominal, bwd_actual;
};

TransitionChains build_chains(const LinearModel& model, const UncertaintySpec& unc, int k,
                              int l) {
    if (k < l || l <= 0) throw FilterError("gramians: require k >= l and l > 0");
    const int n = model.dim_x;
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    TransitionChains ch;
    ch.fwd_nominal.assign(l + 1, id);
    ch.fwd_actual.assign(l + 1, id);
    // A_{k,k} = I; A_{k,i} = A_{k,i+1} * A_i going down from i = k-1.
    for (int i = k - 1; i >= k - l; --i) {
        int j = i - (k - l);
        Eigen::MatrixXd A = model.A(i);
        Eigen::MatrixXd Aa = A + unc.delta_a(i);
        ch.fwd_nominal[j] = ch.fwd_nominal[j + 1] * A;
        ch.fwd_actual[j] = ch.fwd_actual[j + 1] * Aa;
    }
    ch.bwd_nominal.resize(l + 1);
    ch.bwd_actual.resize(l + 1);
    for (int j = 0; j <= l; ++j) {
        if (condition_number(ch.fwd_nominal[j]) > 1e12 ||
            condition_number(ch.fwd_actual[j]) > 1e12)
            throw SingularTransition("gramians: transition product is numerically singular");
        ch.bwd_nominal[j] = ch.fwd_nominal[j].partialPivLu().solve(id);
        ch.bwd_actual[j] = ch.fwd_actual[j].partialPivLu().solve(id);
    }
    return ch;
}

}  // namespace

GramianWindow gramians(const LinearModel& model, const UncertaintySpec& unc, int k, int l) {
    TransitionChains ch = build_chains(model, unc, k, l);
    const int n = model.dim_x;
    GramianWindow w;
    w.k = k;
    w.l = l;
    w.O = Eigen::MatrixXd::Zero(n, n);
    w.O_actual = Eigen::MatrixXd::Zero(n, n);
    w.Delta_O = Eigen::MatrixXd::Zero(n, n);
    w.C_gram = Eigen::MatrixXd::Zero(n, n);

    for (int i = k - l; i <= k; ++i) {
        int j = i - (k - l);
        Eigen::MatrixXd C = model.C(i);
        Eigen::MatrixXd Rinv = pd_inverse(model.R(i), "R(i)");
        Eigen::MatrixXd W = C.transpose() * Rinv * C;
        const Eigen::MatrixXd& Bn = ch.bwd_nominal[j];
        const Eigen::MatrixXd& Ba = ch.bwd_actual[j];
        w.O += Bn.transpose() * W * Bn;
        w.O_actual += Ba.transpose() * W * Ba;
        w.Delta_O += Bn.transpose() * W * (Ba - Bn);
    }
    for (int i = k - l; i <= k - 1; ++i) {
        // forward chain from i+1 to k
        int j = (i + 1) - (k - l);
        const Eigen::MatrixXd& Fa = ch.fwd_actual[j];
        w.C_gram += Fa * model.Q(i) * Fa.transpose();
    }
    w.O = symmetrize(w.O);
    w.O_actual = symmetrize(w.O_actual);
    w.C_gram = symmetrize(w.C_gram);
    return w;
}

UniformConditions check_uniform_conditions(const GramianWindow& window, double tol) {
    UniformConditions c;
    c.kappa3 = min_eigenvalue(window.O_actual);
    c.kappa4 = max_eigenvalue(window.O_actual);
    c.kappa5 = min_eigenvalue(window.C_gram);
    c.kappa6 = max_eigenvalue(window.C_gram);
    c.uco = c.kappa3 > tol && std::isfinite(c.kappa4);
    c.ucc = c.kappa5 > tol && std::isfinite(c.kappa6);
    return c;
}

CovarianceBoundResult covariance_bound(const GramianWindow& window, const Eigen::VectorXd& xhat) {
    CovarianceBoundResult r;
    Eigen::MatrixXd Oinv = pd_inverse(window.O, "observability Gramian");
    Eigen::MatrixXd G = Oinv * window.Delta_O;
    r.gain_norm = spectral_norm(G);
    r.condition_ok = r.gain_norm < 1.0;
    if (!r.condition_ok) return r;  // bound undefined when the perturbation dominates the Gramian

    const int n = static_cast<int>(window.O.rows());
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd num = G * xhat * xhat.transpose() * G.transpose() +
                          (id + G) * window.C_gram * (id + G).transpose() + Oinv;
    r.p_bound = spectral_norm(num) / (1.0 - r.gain_norm * r.gain_norm);
    return r;
}

AugmentedObservability augmented_observability(const LinearModel& model,
                                               const UncertaintySpec& unc,
                                               const std::function<double(int)>& alpha, int k,
                                               int l) {
    TransitionChains ch = build_chains(model, unc, k, l);
    const int n = model.dim_x;
    AugmentedObservability out;
    out.O11 = Eigen::MatrixXd::Zero(n, n);
    out.O_prime = Eigen::MatrixXd::Zero(n, n);
    double max_alpha = 0.0;

    for (int i = k - l; i <= k; ++i) {
        int j = i - (k - l);
        double a = alpha(i);
        if (a < 0.0 || a > 1.0)
            throw FilterError("augmented_observability: alpha(i) outside [0,1]");
        max_alpha = std::max(max_alpha, a);
        Eigen::MatrixXd R_mix = (1.0 - a) * model.R(i) + a * model.R(i - 1);
        Eigen::MatrixXd C = model.C(i);
        Eigen::MatrixXd W = C.transpose() * pd_inverse(R_mix, "R'(i)") * C;
        const Eigen::MatrixXd& Ba = ch.bwd_actual[j];
        Eigen::MatrixXd term = Ba.transpose() * W * Ba;
        out.O_prime += term;
        out.O11 += (1.0 - a) * term;
    }
    out.O11 = symmetrize(out.O11);
    out.O_prime = symmetrize(out.O_prime);
    out.eps = 1.0 - max_alpha;

    double scale = std::max(1.0, spectral_norm(out.O_prime));
    bool lower = min_eigenvalue(out.O11 - out.eps * out.O_prime) >= -1e-10 * scale;
    bool upper = min_eigenvalue(out.O_prime - out.O11) >= -1e-10 * scale;
    out.bounds_ok = lower && upper;
    return out;
}

StabilityReport monitor_covariance(const std::vector<Eigen::MatrixXd>& posterior_covs,
                                   const std::vector<Eigen::VectorXd>& posterior_means,
                                   const LinearModel& model, const UncertaintySpec& unc, int l) {
    StabilityReport rep;
    if (posterior_covs.empty() || posterior_covs.size() != posterior_means.size()) {
        rep.flagged = true;
        return rep;
    }
    const int K = static_cast<int>(posterior_covs.size());
    double observed = 0.0;
    bool respected = true;
    double worst_bound = 0.0;
    for (int t = 0; t < K; ++t) {
        double norm = spectral_norm(posterior_covs[t]);
        observed = std::max(observed, norm);
        int k = t + 1;
        if (k < l) continue;
        GramianWindow w = gramians(model, unc, k, l);
        CovarianceBoundResult t3 = covariance_bound(w, posterior_means[t]);
        rep.bound_condition = t3.condition_ok;
        rep.uniform = check_uniform_conditions(w);
        if (!t3.condition_ok) {
            rep.flagged = true;
            respected = false;
            continue;
        }
        worst_bound = std::max(worst_bound, t3.p_bound);
        if (norm > t3.p_bound) respected = false;
    }
    rep.observed_p_norm = observed;
    rep.p_bound = worst_bound;
    rep.bound_respected = respected;
    return rep;
}

}  // namespace rsf
