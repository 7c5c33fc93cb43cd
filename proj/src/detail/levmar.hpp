#pragma once

#include <Eigen/Dense>

#include <functional>

#include "gazekit/error.hpp"

// Small dense Levenberg-Marquardt driver. Problems in this toolkit have at
// most a few dozen parameters, so normal equations with a diagonal damping
// term are adequate.

namespace gazekit::detail {

struct LevMarOptions {
    int max_iterations = 30;
    double initial_lambda = 1e-3;
    double step_tol = 1e-12;      // stop when the accepted step norm falls below
    double residual_tol = 1e-14;  // stop when |cost_prev - cost| falls below
};

struct LevMarResult {
    Eigen::VectorXd params;
    double cost = 0.0;  // 0.5 * ||r||^2
    int iterations = 0;
    bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& x,
                                        double h = 1e-7) {
    const Eigen::VectorXd r0 = f(x);
    Eigen::MatrixXd jac(r0.size(), x.size());
    Eigen::VectorXd xp = x;
    for (int j = 0; j < x.size(); ++j) {
        const double step = h * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + step;
        const Eigen::VectorXd rp = f(xp);
        xp[j] = x[j] - step;
        const Eigen::VectorXd rm = f(xp);
        xp[j] = x[j];
        jac.col(j) = (rp - rm) / (2.0 * step);
    }
    return jac;
}

// Minimises 0.5*||residuals(x)||^2. `jacobian` may be empty, in which case a
// central-difference Jacobian is used. `retract` maps (x, dx) onto the
// parameter manifold; the default is plain addition.
inline LevMarResult levenberg_marquardt(
    const ResidualFn& residuals, Eigen::VectorXd x0, const LevMarOptions& opts = {},
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian = nullptr,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>& retract =
        nullptr) {
    LevMarResult res;
    res.params = std::move(x0);

    Eigen::VectorXd r = residuals(res.params);
    double cost = 0.5 * r.squaredNorm();
    double lambda = opts.initial_lambda;

    for (int it = 0; it < opts.max_iterations; ++it) {
        res.iterations = it + 1;
        const Eigen::MatrixXd jac = jacobian ? jacobian(res.params) : numeric_jacobian(residuals, res.params);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;

        bool stepped = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd a = jtj;
            a.diagonal().array() += lambda * (jtj.diagonal().array().max(1e-12));
            const Eigen::VectorXd dx = a.ldlt().solve(-jtr);
            if (!dx.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd x_new = retract ? retract(res.params, dx) : (res.params + dx).eval();
            const Eigen::VectorXd r_new = residuals(x_new);
            const double cost_new = 0.5 * r_new.squaredNorm();
            if (cost_new < cost) {
                const double decrease = cost - cost_new;
                res.params = x_new;
                r = r_new;
                cost = cost_new;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
                if (dx.norm() < opts.step_tol || decrease < opts.residual_tol) {
                    res.converged = true;
                    res.cost = cost;
                    return res;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!stepped) {
            // No downhill step found at any damping: local minimum.
            res.converged = true;
            break;
        }
    }
    res.cost = cost;
    return res;
}

}  // namespace gazekit::detail
