#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cmem/estimation.hpp"
#include "cmem/model.hpp"

namespace cmem {

struct DiagnosticsReport {
    double mar = 0.0;
    double mspr = 0.0;
    double msr = 0.0;
    double vsr = 0.0;
    std::vector<double> pearson;
    std::vector<double> scaled;
    std::vector<double> residual_acf;     ///< of the Pearson residuals, lags 1..K
    std::optional<Interval> predicted_vsr;
};

/// (X_t - M_t) / sqrt(nu(M_t) + sigma2 M_t^2). @throws NumericalError at a non-positive denominator
std::vector<double> pearson_residuals(std::span<const Count> series, std::span<const double> fitted_means,
                                      const OperatorSpec& op, double sigma2);

struct ScaledStats {
    double msr = 0.0;
    double vsr = 0.0;
};

/// Sample mean and variance (denominator n - 1) of X_t / M_t.
ScaledStats scaled_residual_stats(std::span<const Count> series, std::span<const double> fitted_means);

double mar(std::span<const Count> series, std::span<const double> fitted_means);

/// Which variance enters the second-order Taylor term of E[nu(M)/M^2].
enum class TaylorVariance {
    Latent,    ///< V[M_t], the variance of the variable being expanded
    Marginal,  ///< V[X_t]
};

/**
 * @brief Model-implied variance of the scaled residuals, sigma2 + E[nu(M)/M^2].
 *
 * The expectation uses a second-order Taylor expansion around mu. For the
 * binomial operator the result is the interval [sigma2, sigma2 + 0.25 E[1/M^2]]
 * with E[1/M^2] ~ 1/mu^2 + 3 V/mu^4 at the upper variance endpoint.
 * @throws DomainError if mu <= 0
 */
Interval predicted_scaled_variance(const OperatorSpec& op, double sigma2, const MomentSummary& moments,
                                   TaylorVariance which = TaylorVariance::Latent);

struct NbScreen {
    double vsr = 0.0;
    bool nb_plausible = false;
};

/// VSR under the INGARCH(1,1) moment fit; an NB counting series needs VSR > 1.
NbScreen nb_suitability_screen(std::span<const Count> series);

/// Recursion state at the end of a fitted training series.
struct FilterState {
    std::vector<double> x_lags;  ///< X_n, X_{n-1}, ... (p values)
    std::vector<double> m_lags;  ///< M_n, M_{n-1}, ... (q values)
};

FilterState training_tail_state(std::span<const Count> series, std::span<const double> fitted_means, Order order);

/// Residual diagnostics for given means; residual ACF up to max_lag.
DiagnosticsReport diagnose(std::span<const Count> series, std::span<const double> fitted_means,
                           const OperatorSpec& op, double sigma2, std::size_t max_lag = 10);

DiagnosticsReport diagnose(const FitResult& fit, std::span<const Count> series, std::size_t max_lag = 10);

/// One-step-ahead means on the holdout, continuing the fitted recursion.
std::vector<double> holdout_means(const ParamVector& theta, const FilterState& tail, std::span<const Count> holdout);

DiagnosticsReport holdout_evaluate(const FitResult& fit, const FilterState& tail, std::span<const Count> holdout,
                                   const OperatorSpec& op, std::size_t max_lag = 10);

struct MomentRow {
    double mean = 0.0;
    Interval var;
    std::vector<double> rho;  ///< lags 1..5
};

struct MomentComparison {
    MomentRow sample;
    MomentRow model;
};

MomentComparison model_vs_sample_report(std::span<const Count> series, const ModelSpec& model, std::size_t lags = 5);

/// Fitted-model variant: the innovation enters through sigma2 only.
MomentComparison model_vs_sample_report(std::span<const Count> series, const MeanSpec& mean, const OperatorSpec& op,
                                        double sigma2, std::size_t lags = 5);

}  // namespace cmem
