#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cmem/random.hpp"

namespace cmem {

using Count = std::int64_t;
using CountSeries = std::vector<Count>;

enum class OperatorKind { CompoundingPoisson, CompoundingNB, BinomialMult, CompoundingZIP };

/**
 * @brief Integer-valued multiplicative operator α⊙ε with E[α⊙ε | ε] = αε
 * and V[α⊙ε | ε] = ν(α)ε.
 */
class OperatorSpec {
public:
    static OperatorSpec poisson() { return OperatorSpec(OperatorKind::CompoundingPoisson, 0.0); }
    static OperatorSpec negative_binomial() { return OperatorSpec(OperatorKind::CompoundingNB, 0.0); }
    static OperatorSpec binomial() { return OperatorSpec(OperatorKind::BinomialMult, 0.0); }
    /// @throws DomainError unless kappa > 1
    static OperatorSpec zip(double kappa);

    OperatorKind kind() const noexcept { return kind_; }
    /// Only meaningful for CompoundingZIP.
    double zip_kappa() const noexcept { return kappa_; }

    bool operator==(const OperatorSpec&) const = default;

private:
    OperatorSpec(OperatorKind k, double kappa) : kind_(k), kappa_(kappa) {}
    OperatorKind kind_;
    double kappa_;
};

enum class InnovationKind { Degenerate, PoissonUnit, ThreePoint, ZIPUnit, EmpiricalPmf };

/// Count innovation with mean exactly 1.
class InnovationSpec {
public:
    static InnovationSpec degenerate();
    static InnovationSpec poisson_unit();
    /// p0 = p2, p1 = 1 - 2 p2. @throws DomainError unless 0 < p2 < 0.5
    static InnovationSpec three_point(double p2);
    /// ZIP(1/(1-omega), omega). @throws DomainError unless 0 < omega < 1
    static InnovationSpec zip_unit(double omega);
    /// @throws DomainError if pmf is not a mean-1 distribution with p1 > 0
    static InnovationSpec empirical(std::vector<double> pmf);

    InnovationKind kind() const noexcept { return kind_; }
    double three_point_p2() const noexcept { return param_; }
    double zip_omega() const noexcept { return param_; }
    const std::vector<double>& pmf() const noexcept { return pmf_; }

private:
    InnovationSpec(InnovationKind k, double param, std::vector<double> pmf = {})
        : kind_(k), param_(param), pmf_(std::move(pmf)) {}
    InnovationKind kind_;
    double param_;
    std::vector<double> pmf_;
};

double innovation_variance(const InnovationSpec& innov);

/// @throws DomainError unless 0 < sigma2 < 1
InnovationSpec three_point_from_sigma2(double sigma2);

double innovation_pmf(const InnovationSpec& innov, Count l);

/// P(ε = 0), P(ε = 1), ... up to the truncation point.
std::vector<double> innovation_pmf_table(const InnovationSpec& innov);

double innovation_pgf(const InnovationSpec& innov, double v);

Count sample_innovation(const InnovationSpec& innov, Rng& rng);

/// Variance of the counting series; ν(α) for BinomialMult.
double nu(const OperatorSpec& op, double alpha);

/// First and second derivative of ν, used by Taylor approximations.
/// @throws UnsupportedError for BinomialMult (ν is not differentiable)
double nu_prime(const OperatorSpec& op, double alpha);
double nu_second(const OperatorSpec& op, double alpha);

Count sample_operator(const OperatorSpec& op, double alpha, Count eps, Rng& rng);

double conditional_pmf(const OperatorSpec& op, double alpha, Count eps, Count k);

/**
 * @brief P(α⊙eps = k) for k = 0, 1, ... until the remaining tail is negligible.
 *
 * Infinite-support laws are cut once past the mean the cumulative mass exceeds
 * 1 - 1e-12 and the current term weighted by (1 + (k - mean)^2) is below 1e-20,
 * so that truncated first and second moments are accurate. At most 10^6 terms.
 */
std::vector<double> conditional_pmf_table(const OperatorSpec& op, double alpha, Count eps);

/// pgf of α⊙ε with ε ~ innov, for u in [0, 1].
double operator_pgf(const OperatorSpec& op, double alpha, const InnovationSpec& innov, double u);

std::string to_string(OperatorKind kind);
std::string to_string(InnovationKind kind);

}  // namespace cmem
