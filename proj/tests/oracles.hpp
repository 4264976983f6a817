#pragma once

// Independent numerical oracles used by the test suites: central finite
// differences and brute-force summations. These must stay independent of the
// implementation paths they are checking.

#include <Eigen/Core>
#include <cmath>
#include <functional>

namespace oracles {

/// Central finite-difference gradient of a scalar function.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step = 1e-5) {
    Eigen::VectorXd g(x.size());
    Eigen::VectorXd p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + step;
        const double fp = f(p);
        p[i] = orig - step;
        const double fm = f(p);
        p[i] = orig;
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

/// Central finite-difference Jacobian of a vector function.
inline Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
    double step = 1e-5) {
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd j(f0.size(), x.size());
    Eigen::VectorXd p = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = p[i];
        p[i] = orig + step;
        const Eigen::VectorXd fp = f(p);
        p[i] = orig - step;
        const Eigen::VectorXd fm = f(p);
        p[i] = orig;
        j.col(i) = (fp - fm) / (2.0 * step);
    }
    return j;
}

/// Relative error with an absolute floor for near-zero references.
inline double rel_error(double got, double expected, double floor = 1e-10) {
    return std::abs(got - expected) / std::max(std::abs(expected), floor);
}

inline double max_rel_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& expected,
                            double floor = 1e-10) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < got.rows(); ++i)
        for (Eigen::Index j = 0; j < got.cols(); ++j)
            worst = std::max(worst, rel_error(got(i, j), expected(i, j), floor));
    return worst;
}

}  // namespace oracles
