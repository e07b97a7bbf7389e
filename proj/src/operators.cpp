#include "cmem/operators.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cmem/error.hpp"

namespace cmem {

namespace {

constexpr double kTailMass = 1e-12;
constexpr double kTailTerm = 1e-20;
constexpr std::size_t kMaxTerms = 1000000;
constexpr double kZipLambdaCap = 1e9;

double poisson_logpmf(double lambda, Count k) {
    if (lambda == 0.0) return k == 0 ? 0.0 : -INFINITY;
    return static_cast<double>(k) * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0);
}

double nb_logpmf(double size, double p, Count k) {
    if (size == 0.0) return k == 0 ? 0.0 : -INFINITY;
    const double kd = static_cast<double>(k);
    return std::lgamma(kd + size) - std::lgamma(size) - std::lgamma(kd + 1.0) + size * std::log(p) +
           kd * std::log1p(-p);
}

double binom_pmf(Count trials, double prob, Count k) {
    if (k < 0 || k > trials) return 0.0;
    if (prob == 0.0) return k == 0 ? 1.0 : 0.0;
    if (prob == 1.0) return k == trials ? 1.0 : 0.0;
    const double n = static_cast<double>(trials), kd = static_cast<double>(k);
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(n - kd + 1.0) +
                    kd * std::log(prob) + (n - kd) * std::log1p(-prob));
}

// Table of an infinite-support pmf on {0,1,...} with the truncation rule
// documented in the header.
std::vector<double> truncated_table(const std::function<double(Count)>& pmf, double mean) {
    std::vector<double> out;
    double cum = 0.0;
    for (std::size_t k = 0; k < kMaxTerms; ++k) {
        const double pk = pmf(static_cast<Count>(k));
        out.push_back(pk);
        cum += pk;
        const double d = static_cast<double>(k) - mean;
        if (static_cast<double>(k) > mean && cum > 1.0 - kTailMass && pk * (1.0 + d * d) < kTailTerm) break;
    }
    return out;
}

struct ZipLaw {
    double lambda;
    double omega;
};

ZipLaw zip_law(double kappa, double alpha, Count eps) {
    const double lambda = alpha * static_cast<double>(eps) + kappa - 1.0;
    if (lambda > kZipLambdaCap) throw DomainError("ZIP operator: lambda exceeds 1e9");
    return {lambda, (kappa - 1.0) / lambda};
}

double zip_pmf(double lambda, double omega, Count k) {
    const double pois = std::exp(poisson_logpmf(lambda, k));
    return (k == 0 ? omega : 0.0) + (1.0 - omega) * pois;
}

void require_alpha(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("operator: alpha must be positive");
}

void require_eps(Count eps) {
    if (eps < 0) throw DomainError("operator: eps must be non-negative");
}

}  // namespace

OperatorSpec OperatorSpec::zip(double kappa) {
    if (!(kappa > 1.0) || !std::isfinite(kappa)) throw DomainError("ZIP operator requires kappa > 1");
    return OperatorSpec(OperatorKind::CompoundingZIP, kappa);
}

InnovationSpec InnovationSpec::degenerate() { return InnovationSpec(InnovationKind::Degenerate, 0.0); }

InnovationSpec InnovationSpec::poisson_unit() { return InnovationSpec(InnovationKind::PoissonUnit, 0.0); }

InnovationSpec InnovationSpec::three_point(double p2) {
    if (!(p2 > 0.0 && p2 < 0.5)) throw DomainError("three-point innovation requires 0 < p2 < 0.5");
    return InnovationSpec(InnovationKind::ThreePoint, p2);
}

InnovationSpec InnovationSpec::zip_unit(double omega) {
    if (!(omega > 0.0 && omega < 1.0)) throw DomainError("ZIP innovation requires 0 < omega < 1");
    return InnovationSpec(InnovationKind::ZIPUnit, omega);
}

InnovationSpec InnovationSpec::empirical(std::vector<double> pmf) {
    constexpr double tol = 1e-12;
    if (pmf.empty()) throw DomainError("empirical innovation: empty pmf");
    double total = 0.0, mean = 0.0, upper = 0.0, excess = 0.0;
    for (std::size_t l = 0; l < pmf.size(); ++l) {
        const double p = pmf[l];
        if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("empirical innovation: invalid probability");
        total += p;
        mean += static_cast<double>(l) * p;
        if (l >= 2) {
            upper += static_cast<double>(l) * p;
            excess += static_cast<double>(l - 1) * p;
        }
    }
    if (std::abs(total - 1.0) > tol) throw DomainError("empirical innovation: probabilities must sum to 1");
    if (std::abs(mean - 1.0) > tol) throw DomainError("empirical innovation: mean must equal 1");
    if (std::abs(pmf[0] - excess) > tol) throw DomainError("empirical innovation: p0 must equal sum (l-1) p_l");
    if (!(upper < 1.0)) throw DomainError("empirical innovation: sum_{l>=2} l p_l must be below 1");
    return InnovationSpec(InnovationKind::EmpiricalPmf, 0.0, std::move(pmf));
}

double innovation_variance(const InnovationSpec& innov) {
    switch (innov.kind()) {
        case InnovationKind::Degenerate: return 0.0;
        case InnovationKind::PoissonUnit: return 1.0;
        case InnovationKind::ThreePoint: return 2.0 * innov.three_point_p2();
        case InnovationKind::ZIPUnit: {
            // ZIP(lambda, omega) with mean mu has variance mu (lambda - mu + 1); here mu = 1.
            const double lambda = 1.0 / (1.0 - innov.zip_omega());
            return lambda;
        }
        case InnovationKind::EmpiricalPmf: {
            double m2 = 0.0;
            const auto& p = innov.pmf();
            for (std::size_t l = 0; l < p.size(); ++l) m2 += static_cast<double>(l * l) * p[l];
            return m2 - 1.0;
        }
    }
    return 0.0;
}

InnovationSpec three_point_from_sigma2(double sigma2) {
    if (!(sigma2 > 0.0 && sigma2 < 1.0)) throw DomainError("three-point innovation needs 0 < sigma2 < 1");
    return InnovationSpec::three_point(sigma2 / 2.0);
}

double innovation_pmf(const InnovationSpec& innov, Count l) {
    if (l < 0) return 0.0;
    switch (innov.kind()) {
        case InnovationKind::Degenerate: return l == 1 ? 1.0 : 0.0;
        case InnovationKind::PoissonUnit: return std::exp(poisson_logpmf(1.0, l));
        case InnovationKind::ThreePoint: {
            const double p2 = innov.three_point_p2();
            if (l == 0 || l == 2) return p2;
            return l == 1 ? 1.0 - 2.0 * p2 : 0.0;
        }
        case InnovationKind::ZIPUnit: {
            const double w = innov.zip_omega();
            return zip_pmf(1.0 / (1.0 - w), w, l);
        }
        case InnovationKind::EmpiricalPmf: {
            const auto& p = innov.pmf();
            return static_cast<std::size_t>(l) < p.size() ? p[static_cast<std::size_t>(l)] : 0.0;
        }
    }
    return 0.0;
}

std::vector<double> innovation_pmf_table(const InnovationSpec& innov) {
    switch (innov.kind()) {
        case InnovationKind::Degenerate: return {0.0, 1.0};
        case InnovationKind::ThreePoint: {
            const double p2 = innov.three_point_p2();
            return {p2, 1.0 - 2.0 * p2, p2};
        }
        case InnovationKind::EmpiricalPmf: return innov.pmf();
        case InnovationKind::PoissonUnit:
        case InnovationKind::ZIPUnit:
            return truncated_table([&](Count l) { return innovation_pmf(innov, l); }, 1.0);
    }
    return {};
}

double innovation_pgf(const InnovationSpec& innov, double v) {
    switch (innov.kind()) {
        case InnovationKind::Degenerate: return v;
        case InnovationKind::PoissonUnit: return std::exp(v - 1.0);
        case InnovationKind::ThreePoint: {
            const double p2 = innov.three_point_p2();
            return p2 + (1.0 - 2.0 * p2) * v + p2 * v * v;
        }
        case InnovationKind::ZIPUnit: {
            const double w = innov.zip_omega();
            return w + (1.0 - w) * std::exp((v - 1.0) / (1.0 - w));
        }
        case InnovationKind::EmpiricalPmf: {
            const auto& p = innov.pmf();
            double acc = 0.0;
            for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * v + *it;
            return acc;
        }
    }
    return 0.0;
}

Count sample_innovation(const InnovationSpec& innov, Rng& rng) {
    switch (innov.kind()) {
        case InnovationKind::Degenerate: return 1;
        case InnovationKind::PoissonUnit: return std::poisson_distribution<Count>(1.0)(rng);
        case InnovationKind::ThreePoint: {
            const double p2 = innov.three_point_p2();
            const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            if (u < p2) return 0;
            return u < 1.0 - p2 ? 1 : 2;
        }
        case InnovationKind::ZIPUnit: {
            const double w = innov.zip_omega();
            if (std::bernoulli_distribution(w)(rng)) return 0;
            return std::poisson_distribution<Count>(1.0 / (1.0 - w))(rng);
        }
        case InnovationKind::EmpiricalPmf: {
            const auto& p = innov.pmf();
            return std::discrete_distribution<Count>(p.begin(), p.end())(rng);
        }
    }
    return 0;
}

double nu(const OperatorSpec& op, double alpha) {
    require_alpha(alpha);
    switch (op.kind()) {
        case OperatorKind::CompoundingPoisson: return alpha;
        case OperatorKind::CompoundingNB: return alpha * (1.0 + alpha);
        case OperatorKind::BinomialMult: {
            const double f = alpha - std::floor(alpha);
            return f * (1.0 - f);
        }
        case OperatorKind::CompoundingZIP: return op.zip_kappa() * alpha;
    }
    return 0.0;
}

double nu_prime(const OperatorSpec& op, double alpha) {
    require_alpha(alpha);
    switch (op.kind()) {
        case OperatorKind::CompoundingPoisson: return 1.0;
        case OperatorKind::CompoundingNB: return 1.0 + 2.0 * alpha;
        case OperatorKind::CompoundingZIP: return op.zip_kappa();
        case OperatorKind::BinomialMult: break;
    }
    throw UnsupportedError("nu is not differentiable for the binomial operator");
}

double nu_second(const OperatorSpec& op, double alpha) {
    require_alpha(alpha);
    switch (op.kind()) {
        case OperatorKind::CompoundingPoisson: return 0.0;
        case OperatorKind::CompoundingNB: return 2.0;
        case OperatorKind::CompoundingZIP: return 0.0;
        case OperatorKind::BinomialMult: break;
    }
    throw UnsupportedError("nu is not differentiable for the binomial operator");
}

Count sample_operator(const OperatorSpec& op, double alpha, Count eps, Rng& rng) {
    require_alpha(alpha);
    require_eps(eps);
    if (eps == 0) return 0;
    switch (op.kind()) {
        case OperatorKind::CompoundingPoisson:
            return std::poisson_distribution<Count>(alpha * static_cast<double>(eps))(rng);
        case OperatorKind::CompoundingNB:
            return std::negative_binomial_distribution<Count>(eps, 1.0 / (1.0 + alpha))(rng);
        case OperatorKind::BinomialMult: {
            const double fl = std::floor(alpha);
            const double f = alpha - fl;
            Count out = static_cast<Count>(fl) * eps;
            if (f > 0.0) out += std::binomial_distribution<Count>(eps, f)(rng);
            return out;
        }
        case OperatorKind::CompoundingZIP: {
            const ZipLaw z = zip_law(op.zip_kappa(), alpha, eps);
            if (std::bernoulli_distribution(z.omega)(rng)) return 0;
            return std::poisson_distribution<Count>(z.lambda)(rng);
        }
    }
    return 0;
}

double conditional_pmf(const OperatorSpec& op, double alpha, Count eps, Count k) {
    require_alpha(alpha);
    require_eps(eps);
    if (k < 0) return 0.0;
    if (eps == 0) return k == 0 ? 1.0 : 0.0;
    switch (op.kind()) {
        case OperatorKind::CompoundingPoisson:
            return std::exp(poisson_logpmf(alpha * static_cast<double>(eps), k));
        case OperatorKind::CompoundingNB:
            return std::exp(nb_logpmf(static_cast<double>(eps), 1.0 / (1.0 + alpha), k));
        case OperatorKind::BinomialMult: {
            const double fl = std::floor(alpha);
            const Count base = static_cast<Count>(fl) * eps;
            return binom_pmf(eps, alpha - fl, k - base);
        }
        case OperatorKind::CompoundingZIP: {
            const ZipLaw z = zip_law(op.zip_kappa(), alpha, eps);
            return zip_pmf(z.lambda, z.omega, k);
        }
    }
    return 0.0;
}

std::vector<double> conditional_pmf_table(const OperatorSpec& op, double alpha, Count eps) {
    require_alpha(alpha);
    require_eps(eps);
    if (eps == 0) return {1.0};
    if (op.kind() == OperatorKind::BinomialMult) {
        const double fl = std::floor(alpha);
        const Count top = (static_cast<Count>(fl) + 1) * eps;
        std::vector<double> out(static_cast<std::size_t>(top) + 1);
        for (Count k = 0; k <= top; ++k) out[static_cast<std::size_t>(k)] = conditional_pmf(op, alpha, eps, k);
        return out;
    }
    if (op.kind() == OperatorKind::CompoundingZIP) zip_law(op.zip_kappa(), alpha, eps);
    return truncated_table([&](Count k) { return conditional_pmf(op, alpha, eps, k); },
                           alpha * static_cast<double>(eps));
}

double operator_pgf(const OperatorSpec& op, double alpha, const InnovationSpec& innov, double u) {
    require_alpha(alpha);
    if (!(u >= 0.0 && u <= 1.0)) throw DomainError("pgf argument must lie in [0, 1]");
    switch (op.kind()) {
        case OperatorKind::CompoundingPoisson: return innovation_pgf(innov, std::exp(alpha * (u - 1.0)));
        case OperatorKind::CompoundingNB: return innovation_pgf(innov, 1.0 / (1.0 + alpha * (1.0 - u)));
        case OperatorKind::BinomialMult: {
            const double fl = std::floor(alpha);
            const double f = alpha - fl;
            return innovation_pgf(innov, std::pow(u, fl) * (1.0 - f + f * u));
        }
        case OperatorKind::CompoundingZIP: {
            // Not a compounding law: mix the conditional ZIP pgfs over the innovation.
            const auto table = innovation_pmf_table(innov);
            double acc = table.empty() ? 0.0 : table[0];
            for (std::size_t l = 1; l < table.size(); ++l) {
                const ZipLaw z = zip_law(op.zip_kappa(), alpha, static_cast<Count>(l));
                acc += table[l] * (z.omega + (1.0 - z.omega) * std::exp(z.lambda * (u - 1.0)));
            }
            return acc;
        }
    }
    return 0.0;
}

std::string to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::CompoundingPoisson: return "poi";
        case OperatorKind::CompoundingNB: return "nb";
        case OperatorKind::BinomialMult: return "bin";
        case OperatorKind::CompoundingZIP: return "zip";
    }
    return "?";
}

std::string to_string(InnovationKind kind) {
    switch (kind) {
        case InnovationKind::Degenerate: return "degenerate";
        case InnovationKind::PoissonUnit: return "poisson";
        case InnovationKind::ThreePoint: return "three_point";
        case InnovationKind::ZIPUnit: return "zip";
        case InnovationKind::EmpiricalPmf: return "empirical";
    }
    return "?";
}

}  // namespace cmem
