#include "cmem/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cmem/error.hpp"
#include "cmem/optimizer.hpp"
#include "cmem/stats.hpp"

namespace cmem {

namespace {

constexpr double kWeightFloor = 1e-8;

// Runs the mean recursion together with the gradient recursion
//   row_t = (1, X_{t-1..t-p}, M_{t-1..t-q}) + sum_j b_j row_{t-j}
// and calls cb(t, M_t, row_t) for every t.
template <class Callback>
void filter_with_gradient(const MeanSpec& ms, std::span<const Count> series, std::span<const double> m_init,
                          std::span<const double> x_init, Callback&& cb) {
    const std::size_t p = ms.p(), q = ms.q(), n = series.size();
    const Eigen::Index k = static_cast<Eigen::Index>(1 + p + q);
    if (x_init.size() < p || m_init.size() < q) throw DomainError("gradient path: too few initial values");
    std::vector<double> m(n);
    // ring[j] holds row_{t-1-j} (zero before the sample starts)
    std::vector<Eigen::VectorXd> ring(q, Eigen::VectorXd::Zero(k));
    std::size_t head = 0;  // ring index of row_{t-1}
    Eigen::VectorXd row(k);
    for (std::size_t t = 0; t < n; ++t) {
        double mt = ms.a0;
        row(0) = 1.0;
        for (std::size_t i = 1; i <= p; ++i) {
            const double x = t >= i ? static_cast<double>(series[t - i]) : x_init[i - 1 - t];
            mt += ms.a[i - 1] * x;
            row(static_cast<Eigen::Index>(i)) = x;
        }
        for (std::size_t j = 1; j <= q; ++j) {
            const double mj = t >= j ? m[t - j] : m_init[j - 1 - t];
            mt += ms.b[j - 1] * mj;
            row(static_cast<Eigen::Index>(p + j)) = mj;
        }
        for (std::size_t j = 1; j <= q; ++j) row += ms.b[j - 1] * ring[(head + j - 1) % q];
        m[t] = mt;
        cb(t, mt, static_cast<const Eigen::VectorXd&>(row));
        if (q) {
            head = (head + q - 1) % q;
            ring[head] = row;
        }
    }
}

struct Init {
    std::vector<double> m;
    std::vector<double> x;
};

Init sample_mean_init(const MeanSpec& ms, std::span<const Count> series) {
    const double xbar = sample_mean(series);
    return {std::vector<double>(ms.q(), xbar), std::vector<double>(ms.p(), xbar)};
}

void check_linear(const MeanSpec& ms) {
    if (ms.response.kind != Response::Kind::Linear)
        throw UnsupportedError("estimation assumes a linear mean response");
}

// Per-observation loss to be minimized, and curvature weight for the
// starting inverse Hessian.
struct Loss {
    EstimatorKind kind;
    double r = 1.0;
    std::span<const double> weights;  // WLS only

    // returns (loss, d loss / d M)
    std::pair<double, double> eval(double x, double m, std::size_t t) const {
        switch (kind) {
            case EstimatorKind::PQ: return {-(xlogy(x, m) - m), -(x / m - 1.0)};
            case EstimatorKind::NQ:
                return {-(xlogy(x, m) - (r + x) * std::log(r + m)), -(x / m - (r + x) / (r + m))};
            case EstimatorKind::EQ: return {std::log(m) + x / m, 1.0 / m - x / (m * m)};
            case EstimatorKind::W1:
            case EstimatorKind::W2: {
                const double e = x - m;
                return {e * e / weights[t], -2.0 * e / weights[t]};
            }
        }
        return {0.0, 0.0};
    }

    double curvature(double m, std::size_t t) const {
        switch (kind) {
            case EstimatorKind::PQ: return 1.0 / m;
            case EstimatorKind::NQ: return r / (m * (r + m));
            case EstimatorKind::EQ: return 1.0 / (m * m);
            default: return 2.0 / weights[t];
        }
    }

    static double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }
};

struct CoreFit {
    ParamVector theta;
    int iterations = 0;
    bool converged = false;
    std::string message;
};

void check_init(const ParamVector& th, Order order) {
    if (th.order() != order) throw DomainError("initial value has the wrong order");
    if (!(th.a0 > 0.0)) throw DomainError("infeasible initial value: a0 must be positive");
    double s = 0.0;
    for (double v : th.a) {
        if (!(v >= 0.0)) throw DomainError("infeasible initial value: negative coefficient");
        s += v;
    }
    for (double v : th.b) {
        if (!(v >= 0.0)) throw DomainError("infeasible initial value: negative coefficient");
        s += v;
    }
    if (!(s < 1.0)) throw DomainError("infeasible initial value: coefficients must sum below 1");
}

CoreFit optimize(const Loss& loss, std::span<const Count> series, Order order, const ParamVector& start,
                 const FitOptions& options) {
    const std::size_t k = 1 + order.p + order.q;
    const SimplexTransform T(order.p + order.q);
    const double n = static_cast<double>(series.size());
    const double xbar = sample_mean(series);
    const std::vector<double> xi(order.p, xbar), mi(order.q, xbar);

    auto objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd* grad) -> double {
        const Eigen::VectorXd th = T.to_theta(z);
        const MeanSpec ms = ParamVector::from_flat(th, order).mean();
        double f = 0.0;
        Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
        bool bad = false;
        filter_with_gradient(ms, series, mi, xi, [&](std::size_t t, double m, const Eigen::VectorXd& row) {
            if (!(m > 0.0) || !std::isfinite(m)) {
                bad = true;
                return;
            }
            const auto [l, dl] = loss.eval(static_cast<double>(series[t]), m, t);
            f += l;
            g += dl * row;
        });
        if (bad || !std::isfinite(f)) return INFINITY;
        if (grad) *grad = T.jacobian(z).transpose() * (g / n);
        return f / n;
    };

    const Eigen::VectorXd z0 = T.to_z(start.flat());
    // Curvature-based starting inverse Hessian in the working coordinates.
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    filter_with_gradient(ParamVector::from_flat(T.to_theta(z0), order).mean(), series, mi, xi,
                         [&](std::size_t t, double m, const Eigen::VectorXd& row) {
                             info += loss.curvature(m, t) * row * row.transpose();
                         });
    info /= n;
    const Eigen::MatrixXd J = T.jacobian(z0);
    Eigen::MatrixXd Hz = J.transpose() * info * J;
    const double ridge = 1e-6 * std::max(Hz.diagonal().maxCoeff(), 1e-12);
    Hz.diagonal().array() += ridge;
    std::optional<Eigen::MatrixXd> h0;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Hz);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive())
        h0 = ldlt.solve(Eigen::MatrixXd::Identity(Hz.rows(), Hz.cols()));

    OptimizerOptions oo;
    oo.max_iter = options.max_iter;
    oo.param_tol = options.param_tol;
    oo.grad_tol = options.grad_tol;
    const OptimizerResult r =
        minimize_bfgs(objective, z0, oo, h0, [&](const Eigen::VectorXd& z) { return T.to_theta(z); });
    CoreFit out;
    out.theta = ParamVector::from_flat(T.to_theta(r.x), order);
    out.iterations = r.iterations;
    out.converged = r.converged;
    out.message = r.message;
    return out;
}

void check_series(std::span<const Count> series, Order order) {
    const std::size_t k = 1 + order.p + order.q;
    if (series.size() <= 10 * k) throw DomainError("fit: series too short for the requested order");
    if (std::all_of(series.begin(), series.end(), [&](Count v) { return v == series[0]; }))
        throw DomainError("fit: series is constant");
    for (Count v : series)
        if (v < 0) throw DomainError("fit: negative count");
}

ParamVector default_start(std::span<const Count> series, Order order, std::vector<std::string>& warnings) {
    if (order.p == 1 && order.q == 1) {
        const MomentEstimate me = moment_estimate_11(series);
        if (me.fallback) warnings.push_back(me.warning);
        return ParamVector::from_mean(me.mean);
    }
    ParamVector th;
    const double share_a = order.p ? (order.q ? 0.2 : 0.5) : 0.0;
    const double share_b = order.q ? (order.p ? 0.3 : 0.5) : 0.0;
    th.a.assign(order.p, order.p ? share_a / static_cast<double>(order.p) : 0.0);
    th.b.assign(order.q, order.q ? share_b / static_cast<double>(order.q) : 0.0);
    th.a0 = std::max(sample_mean(series) * (1.0 - share_a - share_b), 1e-4);
    return th;
}

std::vector<double> floored_variances(const OperatorSpec& op, std::span<const double> means, double sigma2) {
    std::vector<double> v(means.size());
    for (std::size_t t = 0; t < means.size(); ++t)
        v[t] = std::max(conditional_variance(op, means[t], sigma2), kWeightFloor);
    return v;
}

Eigen::MatrixXd inverse_checked(const Eigen::MatrixXd& A, const char* name) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    // rcond() alone misses exact zero pivots, which LDLT treats as a pseudo-inverse
    const Eigen::VectorXd d = ldlt.vectorD();
    const double pivots = d.size() ? d.cwiseAbs().minCoeff() / d.cwiseAbs().maxCoeff() : 0.0;
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(pivots > 1e-14) || !(ldlt.rcond() > 1e-14))
        throw NumericalError(std::string("matrix ") + name + " is singular");
    return ldlt.solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
}

}  // namespace

Estimator Estimator::nq(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("NQ requires r > 0");
    return {EstimatorKind::NQ, r};
}

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::PQ: return "pq";
        case EstimatorKind::NQ: return "nq";
        case EstimatorKind::EQ: return "eq";
        case EstimatorKind::W1: return "1w";
        case EstimatorKind::W2: return "2w";
    }
    return "?";
}

Eigen::VectorXd ParamVector::flat() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(size()));
    v(0) = a0;
    Eigen::Index i = 1;
    for (double x : a) v(i++) = x;
    for (double x : b) v(i++) = x;
    return v;
}

ParamVector ParamVector::from_flat(const Eigen::VectorXd& v, Order order) {
    if (static_cast<std::size_t>(v.size()) != 1 + order.p + order.q) throw DomainError("parameter vector size mismatch");
    ParamVector th;
    th.a0 = v(0);
    for (std::size_t i = 0; i < order.p; ++i) th.a.push_back(v(static_cast<Eigen::Index>(1 + i)));
    for (std::size_t j = 0; j < order.q; ++j) th.b.push_back(v(static_cast<Eigen::Index>(1 + order.p + j)));
    return th;
}

std::vector<std::string> ParamVector::names() const {
    std::vector<std::string> out{"a0"};
    for (std::size_t i = 1; i <= a.size(); ++i) out.push_back("a" + std::to_string(i));
    for (std::size_t j = 1; j <= b.size(); ++j) out.push_back("b" + std::to_string(j));
    return out;
}

double qmle_objective(const Estimator& est, const ParamVector& theta, std::span<const Count> series) {
    if (!est.is_qmle()) throw UnsupportedError("weighted least squares estimators have no QMLE objective");
    const auto m = conditional_mean_path(theta.mean(), series);
    const Loss loss{est.kind, est.nq_r, {}};
    double total = 0.0;
    for (std::size_t t = 0; t < m.size(); ++t) total -= loss.eval(static_cast<double>(series[t]), m[t], t).first;
    return total;
}

Eigen::MatrixXd mean_gradient_path(const MeanSpec& mean, std::span<const Count> series,
                                   std::span<const double> m_init, std::span<const double> x_init) {
    check_linear(mean);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(series.size()), static_cast<Eigen::Index>(1 + mean.p() + mean.q()));
    filter_with_gradient(mean, series, m_init, x_init, [&](std::size_t t, double, const Eigen::VectorXd& row) {
        out.row(static_cast<Eigen::Index>(t)) = row.transpose();
    });
    return out;
}

Eigen::MatrixXd mean_gradient_path(const MeanSpec& mean, std::span<const Count> series) {
    const Init init = sample_mean_init(mean, series);
    return mean_gradient_path(mean, series, init.m, init.x);
}

double conditional_variance(const OperatorSpec& op, double m, double sigma2) {
    return nu(op, m) + sigma2 * m * m;
}

Sigma2Estimate estimate_sigma2(const OperatorSpec& op, std::span<const Count> series,
                               std::span<const double> fitted_means) {
    if (series.size() != fitted_means.size() || series.empty())
        throw DomainError("estimate_sigma2: series and fitted means must have equal non-zero length");
    if (op.kind() == OperatorKind::CompoundingZIP)
        throw UnsupportedError("no sigma2 estimator for the ZIP operator");
    const OperatorSpec base = op.kind() == OperatorKind::BinomialMult ? op : OperatorSpec::poisson();
    const std::size_t n = series.size();
    std::vector<double> s(n);
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double m = fitted_means[t];
        if (!(m > 0.0)) throw DomainError("estimate_sigma2: fitted means must be positive");
        const double e = static_cast<double>(series[t]) - m;
        s[t] = (e * e - nu(base, m)) / (m * m);
        total += s[t];
    }
    const double poi = total / static_cast<double>(n);
    double lam = 0.0;
    for (double v : s) lam += (v - poi) * (v - poi);
    lam /= static_cast<double>(n);
    Sigma2Estimate out;
    out.sigma2 = op.kind() == OperatorKind::CompoundingNB ? poi - 1.0 : poi;
    out.lambda_ase = std::sqrt(lam / static_cast<double>(n));
    out.negative = out.sigma2 < 0.0;
    return out;
}

std::vector<double> sandwich_se(const Estimator& est, const ParamVector& theta, double sigma2,
                                std::span<const Count> series, const OperatorSpec& op,
                                std::span<const double> stage1_weights) {
    const MeanSpec ms = theta.mean();
    const Init init = sample_mean_init(ms, series);
    const Eigen::Index k = static_cast<Eigen::Index>(theta.size());
    const std::size_t n = series.size();
    if (est.kind == EstimatorKind::W1 && stage1_weights.size() != n)
        throw DomainError("sandwich_se: stage-1 weights required for 1W");
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k), B = Eigen::MatrixXd::Zero(k, k);
    const double r = est.nq_r;
    filter_with_gradient(ms, series, init.m, init.x, [&](std::size_t t, double m, const Eigen::VectorXd& row) {
        const double v = std::max(conditional_variance(op, m, sigma2), kWeightFloor);
        const Eigen::MatrixXd outer = row * row.transpose();
        switch (est.kind) {
            case EstimatorKind::PQ:
                A += outer / m;
                B += (v / (m * m)) * outer;
                break;
            case EstimatorKind::NQ: {
                const double d = m * (r + m);
                A += outer / d;
                B += (v / (d * d)) * outer;
                break;
            }
            case EstimatorKind::EQ: {
                const double m2 = m * m;
                A += outer / m2;
                B += (v / (m2 * m2)) * outer;
                break;
            }
            case EstimatorKind::W1: {
                const double w = stage1_weights[t];
                A += outer / w;
                B += (v / (w * w)) * outer;
                break;
            }
            case EstimatorKind::W2: A += outer / v; break;
        }
    });
    A /= static_cast<double>(n);
    B /= static_cast<double>(n);
    Eigen::MatrixXd cov;
    if (est.kind == EstimatorKind::W2) {
        cov = inverse_checked(A, "J");
    } else {
        const Eigen::MatrixXd Ai = inverse_checked(A, est.kind == EstimatorKind::W1 ? "A" : "G");
        cov = Ai * B * Ai;
    }
    std::vector<double> out(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i)
        out[static_cast<std::size_t>(i)] = std::sqrt(std::max(cov(i, i), 0.0) / static_cast<double>(n));
    return out;
}

namespace {

void finish(FitResult& res, std::span<const Count> series, std::span<const double> stage1_weights = {}) {
    res.fitted_means = conditional_mean_path(res.theta_hat.mean(), series);
    const Sigma2Estimate s2 = estimate_sigma2(res.op, series, res.fitted_means);
    res.sigma2_hat = s2.sigma2;
    if (s2.negative) res.warnings.push_back("negative sigma2 estimate");
    res.ase = sandwich_se(res.estimator, res.theta_hat, res.sigma2_hat, series, res.op, stage1_weights);
    res.ase.push_back(s2.lambda_ase);
}

}  // namespace

FitResult fit_qmle(const Estimator& est, std::span<const Count> series, Order order, const OperatorSpec& op,
                   const FitOptions& options) {
    if (!est.is_qmle()) throw UnsupportedError("fit_qmle: estimator must be PQ, NQ or EQ");
    check_series(series, order);
    FitResult res;
    res.estimator = est;
    res.op = op;
    res.init = options.init ? *options.init : default_start(series, order, res.warnings);
    check_init(res.init, order);
    const CoreFit core = optimize(Loss{est.kind, est.nq_r, {}}, series, order, res.init, options);
    res.theta_hat = core.theta;
    res.converged = core.converged;
    res.iterations = core.iterations;
    if (!core.converged) res.warnings.push_back("optimizer: " + core.message);
    res.objective_value = qmle_objective(est, res.theta_hat, series);
    finish(res, series);
    return res;
}

FitResult fit_wlse(std::span<const Count> series, Order order, const OperatorSpec& op, const FitOptions& options) {
    check_series(series, order);
    std::vector<std::string> warnings;
    ParamVector star;
    if (options.init) {
        star = *options.init;
    } else {
        const MomentEstimate me = moment_estimate_11(series);
        if (me.fallback) warnings.push_back(me.warning);
        star = ParamVector::from_mean(me.mean);
    }
    star.mean().validate();
    const std::vector<double> m_star = conditional_mean_path(star.mean(), series);
    const double s2_star = options.init_sigma2 ? *options.init_sigma2 : estimate_sigma2(op, series, m_star).sigma2;
    const std::vector<double> w1 = floored_variances(op, m_star, s2_star);

    ParamVector start = star.order() == order ? star : default_start(series, order, warnings);
    check_init(start, order);
    const CoreFit st1 = optimize(Loss{EstimatorKind::W1, 1.0, w1}, series, order, start, options);

    auto wls_value = [&](const ParamVector& th, std::span<const double> w) {
        const auto m = conditional_mean_path(th.mean(), series);
        double s = 0.0;
        for (std::size_t t = 0; t < m.size(); ++t) {
            const double e = static_cast<double>(series[t]) - m[t];
            s += e * e / w[t];
        }
        return s;
    };

    FitResult res;
    res.op = op;
    res.init = star;
    res.init_sigma2 = s2_star;
    res.warnings = warnings;
    if (options.stage1_only) {
        res.estimator = Estimator::w1();
        res.theta_hat = st1.theta;
        res.converged = st1.converged;
        res.iterations = st1.iterations;
        if (!st1.converged) res.warnings.push_back("optimizer (stage 1): " + st1.message);
        res.objective_value = wls_value(res.theta_hat, w1);
        finish(res, series, w1);
        return res;
    }

    const std::vector<double> m1 = conditional_mean_path(st1.theta.mean(), series);
    const double s2_1 = estimate_sigma2(op, series, m1).sigma2;
    const std::vector<double> w2 = floored_variances(op, m1, s2_1);
    const CoreFit st2 = optimize(Loss{EstimatorKind::W2, 1.0, w2}, series, order, st1.theta, options);
    res.estimator = Estimator::w2();
    res.theta_hat = st2.theta;
    res.converged = st1.converged && st2.converged;
    res.iterations = st1.iterations + st2.iterations;
    if (!st1.converged) res.warnings.push_back("optimizer (stage 1): " + st1.message);
    if (!st2.converged) res.warnings.push_back("optimizer (stage 2): " + st2.message);
    res.objective_value = wls_value(res.theta_hat, w2);
    finish(res, series);
    return res;
}

FitResult fit(const Estimator& est, std::span<const Count> series, Order order, const OperatorSpec& op,
              const FitOptions& options) {
    if (est.is_qmle()) return fit_qmle(est, series, order, op, options);
    FitOptions o = options;
    o.stage1_only = est.kind == EstimatorKind::W1;
    return fit_wlse(series, order, op, o);
}

}  // namespace cmem
