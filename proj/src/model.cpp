#include "rsf/model.hpp"

#include <sstream>

#include "rsf/errors.hpp"
#include "rsf/linalg.hpp"

namespace rsf {

LinearModel LinearModel::stationary(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C,
                                    const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                                    const Eigen::VectorXd& x0_mean,
                                    const Eigen::MatrixXd& sigma0) {
    LinearModel m;
    m.dim_x = static_cast<int>(A.rows());
    m.dim_z = static_cast<int>(C.rows());
    if (A.cols() != m.dim_x || C.cols() != m.dim_x || Q.rows() != m.dim_x ||
        Q.cols() != m.dim_x || R.rows() != m.dim_z || R.cols() != m.dim_z ||
        x0_mean.size() != m.dim_x || sigma0.rows() != m.dim_x || sigma0.cols() != m.dim_x)
        throw DimensionMismatch("LinearModel::stationary: inconsistent matrix dimensions");
    m.A = [A](int) { return A; };
    m.C = [C](int) { return C; };
    m.Q = [Q](int) { return Q; };
    m.R = [R](int) { return R; };
    m.x0_mean = x0_mean;
    m.sigma0 = sigma0;
    return m;
}

UncertaintySpec UncertaintySpec::none(int dim_x) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(dim_x, dim_x);
    return stationary(z);
}

UncertaintySpec UncertaintySpec::stationary(const Eigen::MatrixXd& delta_a) {
    UncertaintySpec u;
    u.delta_a = [delta_a](int) { return delta_a; };
    return u;
}

ValidationReport validate(const LinearModel& model, const UncertaintySpec& unc, int horizon,
                          double cond_threshold) {
    ValidationReport rep;
    if (!is_pd(model.sigma0)) throw NonPdCovariance("validate: sigma0 is not positive definite");

    for (int k = 0; k <= horizon; ++k) {
        Eigen::MatrixXd A = model.A(k);
        Eigen::MatrixXd dA = unc.delta_a(k);
        Eigen::MatrixXd C = model.C(k);

        double cond_n = condition_number(A);
        double cond_a = condition_number(A + dA);
        if (cond_n > cond_threshold) {
            std::ostringstream os;
            os << "validate: nominal A(" << k << ") is numerically singular (cond " << cond_n << ")";
            throw SingularTransition(os.str());
        }
        if (cond_a > cond_threshold) {
            std::ostringstream os;
            os << "validate: A(" << k << ")+dA(" << k << ") is numerically singular (cond "
               << cond_a << ")";
            throw SingularTransition(os.str());
        }
        rep.max_cond_nominal = std::max(rep.max_cond_nominal, cond_n);
        rep.max_cond_actual = std::max(rep.max_cond_actual, cond_a);

        Eigen::MatrixXd Aa = A + dA;
        rep.max_sq_norm_actual =
            std::max(rep.max_sq_norm_actual, spectral_norm(Aa.transpose() * Aa));
        rep.max_sq_norm_c = std::max(rep.max_sq_norm_c, spectral_norm(C.transpose() * C));

        if (!is_psd(model.Q(k)))
            throw NonPdCovariance("validate: Q(k) is not positive semidefinite");
        if (!is_pd(model.R(k))) throw NonPdCovariance("validate: R(k) is not positive definite");
    }
    rep.ok = true;
    return rep;
}

Eigen::VectorXd step_truth(const LinearModel& model, const UncertaintySpec& unc,
                           const Eigen::VectorXd& x_prev, int k, RngStream& process_noise) {
    if (x_prev.size() != model.dim_x)
        throw DimensionMismatch("step_truth: state dimension mismatch");
    Eigen::MatrixXd Q = model.Q(k - 1);
    Eigen::VectorXd w = psd_sqrt(Q) * process_noise.gaussian_vector(model.dim_x);
    return (model.A(k - 1) + unc.delta_a(k - 1)) * x_prev + w;
}

Eigen::VectorXd measure(const LinearModel& model, const Eigen::VectorXd& x, int k,
                        RngStream& measurement_noise) {
    if (x.size() != model.dim_x) throw DimensionMismatch("measure: state dimension mismatch");
    Eigen::VectorXd v = psd_sqrt(model.R(k)) * measurement_noise.gaussian_vector(model.dim_z);
    return model.C(k) * x + v;
}

Trajectory simulate_truth(const LinearModel& model, const UncertaintySpec& unc, int horizon,
                          RngStream& init, RngStream& process_noise,
                          RngStream& measurement_noise) {
    Trajectory traj;
    traj.states.reserve(horizon + 1);
    traj.measurements.reserve(horizon);
    Eigen::VectorXd x0 =
        model.x0_mean + psd_sqrt(model.sigma0) * init.gaussian_vector(model.dim_x);
    traj.states.push_back(x0);
    for (int k = 1; k <= horizon; ++k) {
        traj.states.push_back(step_truth(model, unc, traj.states.back(), k, process_noise));
        traj.measurements.push_back(measure(model, traj.states.back(), k, measurement_noise));
    }
    return traj;
}

}  // namespace rsf
