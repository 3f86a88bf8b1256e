#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>

namespace snfit::optim {

/// Objective to be maximized. May return -inf (or NaN) for invalid points.
using Objective = std::function<double(const Eigen::VectorXd&)>;
using VectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Result {
    Eigen::VectorXd x;
    double f = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

struct SimplexOptions {
    double initial_step = 0.5;
    std::size_t max_evaluations = 0;  // 0 means 500 * dimension
    double x_tolerance = 1e-10;
    int restarts = 2;  // fresh simplex around the best point after convergence
};

/// Derivative-free Nelder-Mead simplex search (maximizes).
Result nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const SimplexOptions& options = {});

struct QuasiNewtonOptions {
    std::size_t max_iterations = 200;
    double gradient_tolerance = 1e-8;  // on the 2-norm
};

/// BFGS with central-difference gradients and backtracking line search (maximizes).
Result quasi_newton(const Objective& f, const Eigen::VectorXd& x0, const QuasiNewtonOptions& options = {});

/// Per-coordinate step cbrt(eps) * max(|x_i|, 1).
double gradient_step(double x);

Eigen::VectorXd gradient(const Objective& f, const Eigen::VectorXd& x);

/// Nested central differences with steps sqrt(gradient_step(x_i)).
Eigen::MatrixXd hessian(const Objective& f, const Eigen::VectorXd& x);

/// Central-difference Jacobian of a vector map; rows are outputs.
Eigen::MatrixXd jacobian(const VectorMap& g, const Eigen::VectorXd& x);

}  // namespace snfit::optim
