#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmem/model.hpp"
#include "cmem/operators.hpp"

namespace cmem {

enum class EstimatorKind { PQ, NQ, EQ, W1, W2 };

struct Estimator {
    EstimatorKind kind = EstimatorKind::PQ;
    double nq_r = 1.0;  ///< NQ tuning constant r > 0

    static Estimator pq() { return {EstimatorKind::PQ, 1.0}; }
    static Estimator nq(double r = 1.0);
    static Estimator eq() { return {EstimatorKind::EQ, 1.0}; }
    static Estimator w1() { return {EstimatorKind::W1, 1.0}; }
    static Estimator w2() { return {EstimatorKind::W2, 1.0}; }

    bool is_qmle() const noexcept { return kind == EstimatorKind::PQ || kind == EstimatorKind::NQ || kind == EstimatorKind::EQ; }
};

std::string to_string(EstimatorKind kind);

struct Order {
    std::size_t p = 1;
    std::size_t q = 1;
    bool operator==(const Order&) const = default;
};

/// theta = (a0, a_1..a_p, b_1..b_q)
struct ParamVector {
    double a0 = 1.0;
    std::vector<double> a;
    std::vector<double> b;

    Order order() const noexcept { return {a.size(), b.size()}; }
    std::size_t size() const noexcept { return 1 + a.size() + b.size(); }
    Eigen::VectorXd flat() const;
    static ParamVector from_flat(const Eigen::VectorXd& v, Order order);
    static ParamVector from_mean(const MeanSpec& m) { return {m.a0, m.a, m.b}; }
    MeanSpec mean() const { return {a0, a, b, Response::linear()}; }
    /// "a0", "a1", ..., "b1", ...
    std::vector<std::string> names() const;
};

struct FitOptions {
    std::optional<ParamVector> init;   ///< QMLE start / WLSE weighting point theta*
    std::optional<double> init_sigma2; ///< WLSE weighting point sigma2*
    int max_iter = 10000;
    double param_tol = 1e-8;
    double grad_tol = 1e-6;
    bool stage1_only = false;          ///< fit_wlse returns the stage-1 estimate
};

struct FitResult {
    Estimator estimator;
    OperatorSpec op = OperatorSpec::poisson();
    ParamVector theta_hat;
    double sigma2_hat = 0.0;
    std::vector<double> ase;           ///< theta entries followed by sigma2
    std::vector<double> fitted_means;
    double objective_value = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<std::string> warnings;
    ParamVector init;                  ///< starting point (QMLE) or weighting point (WLSE)
    double init_sigma2 = 0.0;          ///< WLSE weighting sigma2
};

/**
 * @brief Sum of the quasi log-likelihood terms, higher is better.
 *
 * Uses conditional_mean_path with sample-mean initialization.
 * @throws UnsupportedError for W1/W2
 */
double qmle_objective(const Estimator& est, const ParamVector& theta, std::span<const Count> series);

/// Rows d M_t / d theta, t = 1..n, for explicit initial values.
Eigen::MatrixXd mean_gradient_path(const MeanSpec& mean, std::span<const Count> series,
                                   std::span<const double> m_init, std::span<const double> x_init);

/// Sample-mean initialization, matching conditional_mean_path(mean, series).
Eigen::MatrixXd mean_gradient_path(const MeanSpec& mean, std::span<const Count> series);

/// nu(m) + sigma2 m^2
double conditional_variance(const OperatorSpec& op, double m, double sigma2);

struct Sigma2Estimate {
    double sigma2 = 0.0;
    double lambda_ase = 0.0;
    bool negative = false;
};

/**
 * @brief Least-squares estimate of the innovation variance from fitted means.
 * @throws UnsupportedError for the ZIP operator
 */
Sigma2Estimate estimate_sigma2(const OperatorSpec& op, std::span<const Count> series,
                               std::span<const double> fitted_means);

/**
 * @brief Approximate standard errors of theta.
 *
 * QMLE: sqrt(diag(G^-1 G1 G^-1)/n). W2: sqrt(diag(J^-1)/n) with v_t at
 * (theta, sigma2). W1 additionally needs the frozen weights of stage 1.
 * @throws NumericalError naming G or J when singular
 */
std::vector<double> sandwich_se(const Estimator& est, const ParamVector& theta, double sigma2,
                                std::span<const Count> series, const OperatorSpec& op,
                                std::span<const double> stage1_weights = {});

/**
 * @brief Poisson, negative-binomial or exponential QMLE.
 *
 * The default start is moment_estimate_11 for order (1,1), a flat interior
 * point otherwise.
 */
FitResult fit_qmle(const Estimator& est, std::span<const Count> series, Order order, const OperatorSpec& op,
                   const FitOptions& options = {});

/**
 * @brief Two-stage weighted least squares.
 *
 * The weighting point defaults to the moment estimate and the sigma2
 * estimate at its fitted means.
 */
FitResult fit_wlse(std::span<const Count> series, Order order, const OperatorSpec& op,
                   const FitOptions& options = {});

/// Dispatch on est.kind.
FitResult fit(const Estimator& est, std::span<const Count> series, Order order, const OperatorSpec& op,
              const FitOptions& options = {});

}  // namespace cmem
