#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cmem/operators.hpp"
#include "cmem/random.hpp"

namespace cmem {

/// Mean response applied to the affine INGARCH combination.
struct Response {
    enum class Kind { Linear, Softplus };
    Kind kind = Kind::Linear;
    double c = 1.0;

    static Response linear() { return {}; }
    /// s_c(x) = c log(1 + exp(x / c)). Data generation only.
    static Response softplus(double c);

    double apply(double x) const;
    bool operator==(const Response&) const = default;
};

/// INGARCH(p,q) conditional-mean specification.
struct MeanSpec {
    double a0 = 1.0;
    std::vector<double> a;
    std::vector<double> b;
    Response response;

    std::size_t p() const noexcept { return a.size(); }
    std::size_t q() const noexcept { return b.size(); }
    /// sum(a) + sum(b)
    double persistence() const noexcept;
    /// @throws DomainError unless a0 > 0 and all coefficients are non-negative and finite
    void validate() const;
};

struct ModelSpec {
    MeanSpec mean;
    OperatorSpec op = OperatorSpec::poisson();
    InnovationSpec innovation = InnovationSpec::poisson_unit();
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    static Interval point(double v) { return {v, v}; }
    bool is_point() const noexcept { return lo == hi; }
    double mid() const noexcept { return 0.5 * (lo + hi); }
};

/**
 * @brief Unconditional moments of a stationary CMEM.
 *
 * gamma_x and gamma_m hold lags 0..K. For the binomial operator the
 * second-order quantities are intervals; the autocorrelations coincide at
 * both endpoints because the autocovariance system is homogeneous apart
 * from the variance identity.
 */
struct MomentSummary {
    double mu = 0.0;
    Interval var_x;
    Interval var_m;
    std::vector<Interval> gamma_x;
    std::vector<Interval> gamma_m;
    std::vector<double> rho;  ///< lags 1..K
};

bool check_first_order_stationarity(const MeanSpec& mean);

/// (a1+b1)^2 + v1 a1^2 < 1. @throws DomainError unless p = q = 1
bool check_second_order_stationarity_11(const MeanSpec& mean, double v1);

/**
 * @brief Slope v1 of V[X_t | F] = v0 M_t + v1 M_t^2.
 * @throws UnsupportedError for the binomial operator
 */
double variance_mean_slope(const OperatorSpec& op, double sigma2);

/**
 * @brief M_1..M_n from the recursion.
 *
 * x_init[i-1] stands for X_{1-i} (i = 1..p) and m_init[j-1] for M_{1-j}
 * (j = 1..q).
 */
std::vector<double> conditional_mean_path(const MeanSpec& mean, std::span<const Count> series,
                                          std::span<const double> m_init, std::span<const double> x_init);

/// Same recursion with every initial value set to the sample mean of the series.
std::vector<double> conditional_mean_path(const MeanSpec& mean, std::span<const Count> series);

struct SimulatedPath {
    CountSeries counts;
    std::vector<double> means;
};

/// @throws DomainError if the coefficients violate first-order stationarity
SimulatedPath simulate(const ModelSpec& model, std::size_t n, Rng& rng, std::size_t burn_in = 500);

/// a0 / (1 - sum a - sum b). @throws DomainError when not first-order stationary
double unconditional_mean(const MeanSpec& mean);

/**
 * @brief Mean, variance and autocovariances up to lag max_lag.
 *
 * Solves the joint linear system for gamma_X, gamma_M and the variance
 * identity of the operator.
 * @throws DomainError if not stationary, NumericalError if the system is singular
 */
MomentSummary moment_summary(const ModelSpec& model, std::size_t max_lag);

/// Same, with the innovation described by its variance only.
MomentSummary moment_summary(const MeanSpec& mean, const OperatorSpec& op, double sigma2, std::size_t max_lag);

/// Closed-form variances and ACF of the INGARCH(1,1) case (compounding operators).
struct ClosedForm11 {
    double var_x;
    double var_m;
    std::vector<double> rho;
};
ClosedForm11 closed_form_11(const ModelSpec& model, std::size_t max_lag);

struct MomentEstimate {
    MeanSpec mean;
    double rho1 = 0.0;
    double rho2 = 0.0;
    bool fallback = false;
    std::string warning;
};

/**
 * @brief Method-of-moments INGARCH(1,1) fit from the first two sample autocorrelations.
 *
 * The result is clamped to a1 >= 1e-4, b1 >= 0, a1 + b1 <= 1 - 1e-3, a0 >= 1e-4.
 * @throws DomainError for fewer than 3 observations
 */
MomentEstimate moment_estimate_11(std::span<const Count> series);

}  // namespace cmem
