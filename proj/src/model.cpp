#include "cmem/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "cmem/error.hpp"
#include "cmem/stats.hpp"

namespace cmem {

Response Response::softplus(double c) {
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("softplus response requires c > 0");
    return {Kind::Softplus, c};
}

double Response::apply(double x) const {
    if (kind == Kind::Linear) return x;
    const double z = x / c;
    // log1p(exp(z)) without overflow
    return c * (z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
}

double MeanSpec::persistence() const noexcept {
    return std::accumulate(a.begin(), a.end(), 0.0) + std::accumulate(b.begin(), b.end(), 0.0);
}

void MeanSpec::validate() const {
    if (!(a0 > 0.0) || !std::isfinite(a0)) throw DomainError("mean spec: a0 must be positive");
    for (double v : a)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("mean spec: a_i must be non-negative");
    for (double v : b)
        if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("mean spec: b_j must be non-negative");
}

bool check_first_order_stationarity(const MeanSpec& mean) { return mean.persistence() < 1.0; }

bool check_second_order_stationarity_11(const MeanSpec& mean, double v1) {
    if (mean.p() != 1 || mean.q() != 1) throw DomainError("second-order criterion needs p = q = 1");
    if (!(v1 >= 0.0)) throw DomainError("v1 must be non-negative");
    const double s = mean.a[0] + mean.b[0];
    return s * s + v1 * mean.a[0] * mean.a[0] < 1.0;
}

double variance_mean_slope(const OperatorSpec& op, double sigma2) {
    switch (op.kind()) {
        case OperatorKind::CompoundingPoisson: return sigma2;
        case OperatorKind::CompoundingNB: return 1.0 + sigma2;
        case OperatorKind::CompoundingZIP: return sigma2;
        case OperatorKind::BinomialMult: break;
    }
    throw UnsupportedError("no variance-mean relation v0 M + v1 M^2 for the binomial operator");
}

std::vector<double> conditional_mean_path(const MeanSpec& mean, std::span<const Count> series,
                                          std::span<const double> m_init, std::span<const double> x_init) {
    const std::size_t p = mean.p(), q = mean.q(), n = series.size();
    if (x_init.size() < p || m_init.size() < q) throw DomainError("conditional mean path: too few initial values");
    std::vector<double> out(n);
    auto x_at = [&](std::ptrdiff_t t) {  // t is 0-based time; negative means initial value
        return t >= 0 ? static_cast<double>(series[static_cast<std::size_t>(t)]) : x_init[static_cast<std::size_t>(-t - 1)];
    };
    auto m_at = [&](std::ptrdiff_t t) {
        return t >= 0 ? out[static_cast<std::size_t>(t)] : m_init[static_cast<std::size_t>(-t - 1)];
    };
    for (std::size_t t = 0; t < n; ++t) {
        const auto ti = static_cast<std::ptrdiff_t>(t);
        double m = mean.a0;
        for (std::size_t i = 1; i <= p; ++i) m += mean.a[i - 1] * x_at(ti - static_cast<std::ptrdiff_t>(i));
        for (std::size_t j = 1; j <= q; ++j) m += mean.b[j - 1] * m_at(ti - static_cast<std::ptrdiff_t>(j));
        m = mean.response.apply(m);
        if (!(m > 0.0) || !std::isfinite(m))
            throw NumericalError("conditional mean path: non-positive mean at t = " + std::to_string(t + 1));
        out[t] = m;
    }
    return out;
}

std::vector<double> conditional_mean_path(const MeanSpec& mean, std::span<const Count> series) {
    const double xbar = sample_mean(series);
    const std::vector<double> xi(mean.p(), xbar), mi(mean.q(), xbar);
    return conditional_mean_path(mean, series, mi, xi);
}

double unconditional_mean(const MeanSpec& mean) {
    mean.validate();
    if (!check_first_order_stationarity(mean)) throw DomainError("unconditional mean: sum a + sum b must be < 1");
    return mean.a0 / (1.0 - mean.persistence());
}

SimulatedPath simulate(const ModelSpec& model, std::size_t n, Rng& rng, std::size_t burn_in) {
    const MeanSpec& ms = model.mean;
    ms.validate();
    if (!check_first_order_stationarity(ms)) throw DomainError("simulate: model is not stationary");
    SimulatedPath out;
    if (n == 0) return out;
    const double mu = ms.a0 / (1.0 - ms.persistence());
    const std::size_t p = ms.p(), q = ms.q();
    // Most recent value first.
    std::vector<double> xh(p, mu), mh(q, mu);
    out.counts.reserve(n);
    out.means.reserve(n);
    for (std::size_t t = 0; t < burn_in + n; ++t) {
        double m = ms.a0;
        for (std::size_t i = 0; i < p; ++i) m += ms.a[i] * xh[i];
        for (std::size_t j = 0; j < q; ++j) m += ms.b[j] * mh[j];
        m = ms.response.apply(m);
        const Count eps = sample_innovation(model.innovation, rng);
        const Count x = sample_operator(model.op, m, eps, rng);
        if (p) {
            std::copy_backward(xh.begin(), xh.end() - 1, xh.end());
            xh[0] = static_cast<double>(x);
        }
        if (q) {
            std::copy_backward(mh.begin(), mh.end() - 1, mh.end());
            mh[0] = m;
        }
        if (t >= burn_in) {
            out.counts.push_back(x);
            out.means.push_back(m);
        }
    }
    return out;
}

namespace {

struct GammaSolution {
    std::vector<double> gx;  // 0..K
    std::vector<double> gm;  // 0..K
};

// Solve the autocovariance system with V[X] - cm * V[M] = rhs.
GammaSolution solve_gamma(const MeanSpec& ms, std::size_t K, double cm, double rhs) {
    const std::size_t p = ms.p(), q = ms.q();
    const std::size_t N = 2 * K + 2;
    auto ix = [&](std::size_t k) { return static_cast<Eigen::Index>(k); };
    auto im = [&](std::size_t k) { return static_cast<Eigen::Index>(K + 1 + k); };
    auto dist = [](std::size_t u, std::size_t v) { return u > v ? u - v : v - u; };
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
    Eigen::Index row = 0;
    for (std::size_t k = 1; k <= K; ++k, ++row) {
        A(row, ix(k)) += 1.0;
        for (std::size_t i = 1; i <= p; ++i) A(row, ix(dist(k, i))) -= ms.a[i - 1];
        for (std::size_t j = 1; j <= std::min(k - 1, q); ++j) A(row, ix(k - j)) -= ms.b[j - 1];
        for (std::size_t j = k; j <= q; ++j) A(row, im(j - k)) -= ms.b[j - 1];
    }
    for (std::size_t k = 0; k <= K; ++k, ++row) {
        A(row, im(k)) += 1.0;
        for (std::size_t i = 1; i <= std::min(k, p); ++i) A(row, im(k - i)) -= ms.a[i - 1];
        for (std::size_t i = k + 1; i <= p; ++i) A(row, ix(i - k)) -= ms.a[i - 1];
        for (std::size_t j = 1; j <= q; ++j) A(row, im(dist(k, j))) -= ms.b[j - 1];
    }
    A(row, ix(0)) = 1.0;
    A(row, im(0)) = -cm;
    r(row) = rhs;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw NumericalError("autocovariance system is singular");
    const Eigen::VectorXd sol = lu.solve(r);
    GammaSolution g;
    g.gx.resize(K + 1);
    g.gm.resize(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        g.gx[k] = sol(ix(k));
        g.gm[k] = sol(im(k));
    }
    if (!(g.gx[0] > 0.0) || !(g.gm[0] >= 0.0) || !std::isfinite(g.gx[0]))
        throw DomainError("moment summary: model is not second-order stationary");
    return g;
}

}  // namespace

MomentSummary moment_summary(const ModelSpec& model, std::size_t max_lag) {
    return moment_summary(model.mean, model.op, innovation_variance(model.innovation), max_lag);
}

MomentSummary moment_summary(const MeanSpec& ms, const OperatorSpec& op, double s2, std::size_t max_lag) {
    if (ms.response.kind != Response::Kind::Linear) throw UnsupportedError("moment summary needs a linear response");
    if (!(s2 >= 0.0)) throw DomainError("moment summary: sigma2 must be non-negative");
    const double mu = unconditional_mean(ms);
    const OperatorKind kind = op.kind();
    if (kind != OperatorKind::BinomialMult && ms.p() == 1 && ms.q() == 1 &&
        !check_second_order_stationarity_11(ms, variance_mean_slope(op, s2)))
        throw DomainError("moment summary: model is not second-order stationary");

    const std::size_t K = std::max({max_lag, ms.p(), ms.q()});
    double cm = s2 + 1.0;
    double rhs_lo = mu * mu * s2, rhs_hi = rhs_lo;
    switch (kind) {
        case OperatorKind::CompoundingPoisson: rhs_lo = rhs_hi = mu + mu * mu * s2; break;
        case OperatorKind::CompoundingNB:
            cm = s2 + 2.0;
            rhs_lo = rhs_hi = mu + mu * mu * (s2 + 1.0);
            break;
        case OperatorKind::CompoundingZIP: rhs_lo = rhs_hi = op.zip_kappa() * mu + mu * mu * s2; break;
        case OperatorKind::BinomialMult: rhs_hi = 0.25 + mu * mu * s2; break;
    }
    const GammaSolution lo = solve_gamma(ms, K, cm, rhs_lo);
    const GammaSolution hi = rhs_hi == rhs_lo ? lo : solve_gamma(ms, K, cm, rhs_hi);

    MomentSummary out;
    out.mu = mu;
    out.var_x = {lo.gx[0], hi.gx[0]};
    out.var_m = {lo.gm[0], hi.gm[0]};
    for (std::size_t k = 0; k <= max_lag; ++k) {
        out.gamma_x.push_back({lo.gx[k], hi.gx[k]});
        out.gamma_m.push_back({lo.gm[k], hi.gm[k]});
    }
    for (std::size_t k = 1; k <= max_lag; ++k) out.rho.push_back(lo.gx[k] / lo.gx[0]);
    return out;
}

ClosedForm11 closed_form_11(const ModelSpec& model, std::size_t max_lag) {
    const MeanSpec& ms = model.mean;
    if (ms.p() != 1 || ms.q() != 1) throw DomainError("closed form needs p = q = 1");
    const double mu = unconditional_mean(ms);
    const double s2 = innovation_variance(model.innovation);
    const double a1 = ms.a[0], b1 = ms.b[0], s = a1 + b1;
    const double denom = 1.0 - s * s + a1 * a1;
    const double c = a1 * a1 / denom;  // V[M] = c V[X]
    double vx = 0.0;
    switch (model.op.kind()) {
        case OperatorKind::CompoundingPoisson: vx = (mu + mu * mu * s2) / (1.0 - (s2 + 1.0) * c); break;
        case OperatorKind::CompoundingNB: vx = (mu + mu * mu * (s2 + 1.0)) / (1.0 - (s2 + 2.0) * c); break;
        case OperatorKind::CompoundingZIP:
            vx = (model.op.zip_kappa() * mu + mu * mu * s2) / (1.0 - (s2 + 1.0) * c);
            break;
        case OperatorKind::BinomialMult: throw UnsupportedError("closed form variance needs a compounding operator");
    }
    ClosedForm11 out{vx, c * vx, {}};
    const double rho1 = a1 * (1.0 - b1 * s) / denom;
    for (std::size_t k = 1; k <= max_lag; ++k) out.rho.push_back(std::pow(s, static_cast<double>(k - 1)) * rho1);
    return out;
}

namespace {

void clamp_11(double& a1, double& b1) {
    constexpr double amin = 1e-4, lim = 1.0 - 1e-3;
    a1 = std::max(a1, amin);
    b1 = std::max(b1, 0.0);
    const double excess = a1 + b1 - lim;
    if (excess > 0.0) {
        a1 -= excess / 2.0;
        b1 -= excess / 2.0;
        if (b1 < 0.0) {
            a1 += b1;
            b1 = 0.0;
        }
        if (a1 < amin) {
            b1 -= amin - a1;
            a1 = amin;
        }
    }
}

}  // namespace

MomentEstimate moment_estimate_11(std::span<const Count> series) {
    if (series.size() < 3) throw DomainError("moment estimate needs at least 3 observations");
    const double xbar = sample_mean(series);
    const auto acf = sample_acf(series, 2);
    MomentEstimate out;
    out.rho1 = acf[0];
    out.rho2 = acf[1];
    const double r1 = acf[0], r2 = acf[1];

    double a1 = 0.0, b1 = 0.0;
    bool ok = false;
    if (r1 > 0.0 && r2 > 0.0 && r2 < r1) {
        const double s = r2 / r1;
        const double qa = r1 - s, qb = -(1.0 - s * s), qc = r1 * (1.0 - s * s);
        std::vector<double> roots;
        if (std::abs(qa) < 1e-14) {
            roots.push_back(-qc / qb);
        } else {
            const double disc = qb * qb - 4.0 * qa * qc;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                roots.push_back((-qb - sq) / (2.0 * qa));
                roots.push_back((-qb + sq) / (2.0 * qa));
            }
        }
        double best = INFINITY;
        for (double r : roots)
            if (r > 0.0 && r <= s && r < best) best = r;
        if (std::isfinite(best)) {
            a1 = best;
            b1 = s - best;
            ok = true;
        }
    }
    if (!ok) {
        const double s = (r1 > 0.0 && r2 > 0.0) ? std::min(r2 / r1, 1.0 - 1e-3) : std::max(r1, 0.0);
        a1 = r1 * (1.0 - s);
        b1 = s - a1;
        out.fallback = true;
        out.warning = "moment estimate: no admissible root or autocorrelation ordering violated; heuristic used";
    }
    clamp_11(a1, b1);
    out.mean.a = {a1};
    out.mean.b = {b1};
    out.mean.a0 = std::max(xbar * (1.0 - a1 - b1), 1e-4);
    return out;
}

}  // namespace cmem
