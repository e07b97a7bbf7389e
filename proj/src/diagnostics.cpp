#include "cmem/diagnostics.hpp"

#include <cmath>

#include "cmem/error.hpp"
#include "cmem/stats.hpp"

namespace cmem {

namespace {

void check_lengths(std::span<const Count> series, std::span<const double> means) {
    if (series.size() != means.size()) throw DomainError("series and fitted means differ in length");
}

}  // namespace

std::vector<double> pearson_residuals(std::span<const Count> series, std::span<const double> fitted_means,
                                      const OperatorSpec& op, double sigma2) {
    check_lengths(series, fitted_means);
    std::vector<double> out(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        const double m = fitted_means[t];
        if (!(m > 0.0)) throw DomainError("pearson residuals: non-positive mean at index " + std::to_string(t));
        const double v = nu(op, m) + sigma2 * m * m;
        if (!(v > 0.0)) throw NumericalError("pearson residuals: non-positive variance at index " + std::to_string(t));
        out[t] = (static_cast<double>(series[t]) - m) / std::sqrt(v);
    }
    return out;
}

ScaledStats scaled_residual_stats(std::span<const Count> series, std::span<const double> fitted_means) {
    check_lengths(series, fitted_means);
    std::vector<double> s(series.size());
    for (std::size_t t = 0; t < s.size(); ++t) s[t] = static_cast<double>(series[t]) / fitted_means[t];
    return {sample_mean<double>(s), sample_variance<double>(s)};
}

double mar(std::span<const Count> series, std::span<const double> fitted_means) {
    check_lengths(series, fitted_means);
    if (series.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) acc += std::abs(static_cast<double>(series[t]) - fitted_means[t]);
    return acc / static_cast<double>(series.size());
}

Interval predicted_scaled_variance(const OperatorSpec& op, double sigma2, const MomentSummary& moments,
                                   TaylorVariance which) {
    const double mu = moments.mu;
    if (!(mu > 0.0)) throw DomainError("predicted scaled variance: mu must be positive");
    const Interval v = which == TaylorVariance::Latent ? moments.var_m : moments.var_x;
    if (op.kind() == OperatorKind::BinomialMult) {
        const double inv_m2 = 1.0 / (mu * mu) + 3.0 * v.hi / (mu * mu * mu * mu);
        return {sigma2, sigma2 + 0.25 * inv_m2};
    }
    const double n0 = nu(op, mu), n1 = nu_prime(op, mu), n2 = nu_second(op, mu);
    const double mu2 = mu * mu;
    const double e = n0 / mu2 + (mu2 * n2 - 4.0 * mu * n1 + 6.0 * n0) / (2.0 * mu2 * mu2) * v.hi;
    return Interval::point(sigma2 + e);
}

NbScreen nb_suitability_screen(std::span<const Count> series) {
    const MomentEstimate me = moment_estimate_11(series);
    const std::vector<double> m = conditional_mean_path(me.mean, series);
    NbScreen out;
    out.vsr = scaled_residual_stats(series, m).vsr;
    out.nb_plausible = out.vsr > 1.0;
    return out;
}

FilterState training_tail_state(std::span<const Count> series, std::span<const double> fitted_means, Order order) {
    check_lengths(series, fitted_means);
    if (series.size() < order.p || series.size() < order.q) throw DomainError("training series shorter than the order");
    FilterState st;
    const std::size_t n = series.size();
    for (std::size_t i = 0; i < order.p; ++i) st.x_lags.push_back(static_cast<double>(series[n - 1 - i]));
    for (std::size_t j = 0; j < order.q; ++j) st.m_lags.push_back(fitted_means[n - 1 - j]);
    return st;
}

DiagnosticsReport diagnose(std::span<const Count> series, std::span<const double> fitted_means,
                           const OperatorSpec& op, double sigma2, std::size_t max_lag) {
    DiagnosticsReport r;
    r.pearson = pearson_residuals(series, fitted_means, op, sigma2);
    double ss = 0.0;
    for (double v : r.pearson) ss += v * v;
    r.mspr = r.pearson.empty() ? 0.0 : ss / static_cast<double>(r.pearson.size());
    r.scaled.resize(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) r.scaled[t] = static_cast<double>(series[t]) / fitted_means[t];
    r.msr = sample_mean<double>(r.scaled);
    r.vsr = sample_variance<double>(r.scaled);
    r.mar = mar(series, fitted_means);
    r.residual_acf = sample_acf<double>(r.pearson, max_lag);
    return r;
}

DiagnosticsReport diagnose(const FitResult& fit, std::span<const Count> series, std::size_t max_lag) {
    DiagnosticsReport r = diagnose(series, fit.fitted_means, fit.op, fit.sigma2_hat, max_lag);
    try {
        const MomentSummary ms = moment_summary(fit.theta_hat.mean(), fit.op, std::max(fit.sigma2_hat, 0.0), 1);
        r.predicted_vsr = predicted_scaled_variance(fit.op, std::max(fit.sigma2_hat, 0.0), ms);
    } catch (const std::exception&) {
        // fitted model outside the stationary region: no prediction
    }
    return r;
}

std::vector<double> holdout_means(const ParamVector& theta, const FilterState& tail, std::span<const Count> holdout) {
    const std::size_t p = theta.a.size(), q = theta.b.size();
    if (tail.x_lags.size() < p || tail.m_lags.size() < q) throw DomainError("holdout: tail state too short");
    std::vector<double> xh(tail.x_lags.begin(), tail.x_lags.begin() + static_cast<std::ptrdiff_t>(p));
    std::vector<double> mh(tail.m_lags.begin(), tail.m_lags.begin() + static_cast<std::ptrdiff_t>(q));
    std::vector<double> out;
    out.reserve(holdout.size());
    for (Count x : holdout) {
        double m = theta.a0;
        for (std::size_t i = 0; i < p; ++i) m += theta.a[i] * xh[i];
        for (std::size_t j = 0; j < q; ++j) m += theta.b[j] * mh[j];
        out.push_back(m);
        if (p) {
            std::copy_backward(xh.begin(), xh.end() - 1, xh.end());
            xh[0] = static_cast<double>(x);
        }
        if (q) {
            std::copy_backward(mh.begin(), mh.end() - 1, mh.end());
            mh[0] = m;
        }
    }
    return out;
}

DiagnosticsReport holdout_evaluate(const FitResult& fit, const FilterState& tail, std::span<const Count> holdout,
                                   const OperatorSpec& op, std::size_t max_lag) {
    if (holdout.empty()) throw DomainError("holdout is empty");
    const std::vector<double> m = holdout_means(fit.theta_hat, tail, holdout);
    return diagnose(holdout, m, op, fit.sigma2_hat, max_lag);
}

namespace {

MomentRow sample_row(std::span<const Count> series, std::size_t lags) {
    MomentRow row;
    row.mean = sample_mean(series);
    row.var = Interval::point(sample_variance(series));
    row.rho = sample_acf(series, lags);
    return row;
}

MomentRow model_row(const MomentSummary& ms) {
    return {ms.mu, ms.var_x, ms.rho};
}

}  // namespace

MomentComparison model_vs_sample_report(std::span<const Count> series, const ModelSpec& model, std::size_t lags) {
    return {sample_row(series, lags), model_row(moment_summary(model, lags))};
}

MomentComparison model_vs_sample_report(std::span<const Count> series, const MeanSpec& mean, const OperatorSpec& op,
                                        double sigma2, std::size_t lags) {
    return {sample_row(series, lags), model_row(moment_summary(mean, op, sigma2, lags))};
}

}  // namespace cmem
