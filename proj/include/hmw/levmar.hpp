#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>

namespace hmw {

struct LevMarOptions {
    int max_iterations = 300;
    double gradient_tol_rel = 1e-8;  // stop when |grad| < rel * |initial grad|
    double gradient_tol_abs = 1e-14;
    double step_tol = 1e-14;
    double lambda0 = 1e-3;
};

struct LevMarResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;  // (J^T J)^-1 of the weighted problem
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Weighted-residual callback: fills r and (when J != nullptr) the Jacobian dr/dp.
using ResidualFn =
    std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd* J)>;

inline LevMarResult levmar(const ResidualFn& fn, Eigen::VectorXd p0,
                           const LevMarOptions& opt = {}) {
    LevMarResult out;
    const int np = static_cast<int>(p0.size());
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    fn(p0, r, &J);
    double chi2 = r.squaredNorm();
    Eigen::VectorXd g = J.transpose() * r;
    const double g0 = std::max(g.cwiseAbs().maxCoeff(), 1e-300);

    double lambda = opt.lambda0;
    Eigen::VectorXd p = p0;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        if (g.cwiseAbs().maxCoeff() < std::max(opt.gradient_tol_rel * g0, opt.gradient_tol_abs)) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd jtj = J.transpose() * J;
        Eigen::MatrixXd a = jtj;
        for (int k = 0; k < np; ++k) {
            a(k, k) += lambda * std::max(jtj(k, k), 1e-30);
        }
        const Eigen::VectorXd step = a.ldlt().solve(-g);
        if (!step.allFinite()) {
            lambda *= 10.0;
            continue;
        }
        const Eigen::VectorXd p_try = p + step;
        Eigen::VectorXd r_try;
        fn(p_try, r_try, nullptr);
        const double chi2_try = r_try.squaredNorm();
        if (chi2_try < chi2) {
            const double rel_step = step.cwiseAbs().maxCoeff() /
                                    std::max(1.0, p.cwiseAbs().maxCoeff());
            p = p_try;
            fn(p, r, &J);
            chi2 = r.squaredNorm();
            g = J.transpose() * r;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (rel_step < opt.step_tol) {
                out.converged = true;
                break;
            }
        } else {
            // stationarity: the predicted reduction of this step is below double
            // precision of the objective, nothing left to gain
            const double predicted = -g.dot(step);
            if (lambda > 1e6 && std::fabs(predicted) < 1e-10 * std::max(chi2, 1e-300)) {
                out.converged = true;
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }

    out.params = p;
    out.chi2 = chi2;
    out.iterations = it;
    // covariance of the weighted problem; column scaling keeps the inversion
    // well conditioned when parameter magnitudes differ by orders of magnitude
    Eigen::MatrixXd jtj = J.transpose() * J;
    Eigen::VectorXd scale(np);
    for (int k = 0; k < np; ++k) scale[k] = 1.0 / std::sqrt(std::max(jtj(k, k), 1e-300));
    const Eigen::MatrixXd balanced =
        scale.asDiagonal() * jtj * scale.asDiagonal();
    const Eigen::MatrixXd inv_balanced =
        balanced.completeOrthogonalDecomposition().pseudoInverse();
    out.covariance = scale.asDiagonal() * inv_balanced * scale.asDiagonal();
    return out;
}

} // namespace hmw
