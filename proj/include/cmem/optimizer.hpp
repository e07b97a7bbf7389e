#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace cmem {

struct OptimizerOptions {
    int max_iter = 10000;
    double param_tol = 1e-8;  ///< max abs change of the natural parameters
    double grad_tol = 1e-6;   ///< max abs gradient entry in the working space
    double max_step = 5.0;    ///< cap on the max-norm of a single step
};

struct OptimizerResult {
    Eigen::VectorXd x;
    double f = 0.0;
    Eigen::VectorXd grad;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

/// Returns f(x) and writes the gradient into *grad when non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;
/// Maps working coordinates to the parameters the convergence test is stated in.
using NaturalMap = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;

/**
 * @brief BFGS with backtracking Armijo line search.
 *
 * h0_inv seeds the inverse Hessian (identity when absent). Non-finite trial
 * values are treated as failed steps.
 */
OptimizerResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const OptimizerOptions& opt,
                              const std::optional<Eigen::MatrixXd>& h0_inv = std::nullopt,
                              const NaturalMap& natural = nullptr);

/**
 * @brief Reparametrization of (a0, c_1..c_k) with a0 > 0, c_i > 0 and
 * sum c_i < 1 - margin onto R^{k+1}.
 *
 * a0 = exp(z0); c_i = (1 - margin) exp(z_i) / (1 + sum_j exp(z_j)).
 */
class SimplexTransform {
public:
    explicit SimplexTransform(std::size_t k, double margin = 1e-3) : k_(k), margin_(margin) {}

    Eigen::VectorXd to_theta(const Eigen::VectorXd& z) const;
    /// Coefficients are floored at 1e-8 and pulled inside the simplex if needed.
    Eigen::VectorXd to_z(const Eigen::VectorXd& theta) const;
    /// d theta / d z
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const;

    std::size_t coefficients() const noexcept { return k_; }
    double margin() const noexcept { return margin_; }

private:
    std::size_t k_;
    double margin_;
};

}  // namespace cmem
