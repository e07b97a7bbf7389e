#include "cmem/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cmem {

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

OptimizerResult minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const OptimizerOptions& opt,
                              const std::optional<Eigen::MatrixXd>& h0_inv, const NaturalMap& natural) {
    const Eigen::Index d = x0.size();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(d, d);
    auto nat = [&](const Eigen::VectorXd& x) { return natural ? natural(x) : x; };

    OptimizerResult res;
    res.x = x0;
    res.grad = Eigen::VectorXd::Zero(d);
    res.f = f(res.x, &res.grad);
    if (!std::isfinite(res.f)) {
        res.message = "objective not finite at the starting point";
        return res;
    }
    Eigen::MatrixXd H = h0_inv ? *h0_inv : I;
    bool identity = !h0_inv;
    bool scaled = false;
    Eigen::VectorXd xn(d), gn(d);

    for (res.iterations = 1; res.iterations <= opt.max_iter; ++res.iterations) {
        Eigen::VectorXd dir = -H * res.grad;
        double slope = res.grad.dot(dir);
        if (!(slope < 0.0)) {
            H = I;
            identity = true;
            scaled = false;
            dir = -res.grad;
            slope = res.grad.dot(dir);
        }
        const double dn = max_abs(dir);
        if (dn > opt.max_step) {
            dir *= opt.max_step / dn;
            slope *= opt.max_step / dn;
        }
        double step = 1.0, fn = 0.0;
        bool accepted = false;
        const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::abs(res.f);
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            xn = res.x + step * dir;
            fn = f(xn, &gn);
            if (std::isfinite(fn) && fn <= res.f + 1e-4 * step * slope + slack && gn.allFinite()) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!identity) {
                H = I;
                identity = true;
                scaled = false;
                continue;
            }
            res.converged = max_abs(res.grad) < opt.grad_tol;
            res.message = res.converged ? "converged (no further descent possible)" : "line search failed";
            return res;
        }
        const Eigen::VectorXd s = xn - res.x;
        const Eigen::VectorXd y = gn - res.grad;
        const double change = max_abs(nat(xn) - nat(res.x));
        res.x = xn;
        res.f = fn;
        res.grad = gn;
        if (change < opt.param_tol && max_abs(res.grad) < opt.grad_tol) {
            res.converged = true;
            res.message = "converged";
            return res;
        }
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (identity && !scaled) {
                H = I * (sy / y.dot(y));
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd V = I - rho * y * s.transpose();
            H = V.transpose() * H * V + rho * s * s.transpose();
            identity = false;
        }
    }
    res.iterations = opt.max_iter;
    res.message = "iteration cap reached";
    return res;
}

Eigen::VectorXd SimplexTransform::to_theta(const Eigen::VectorXd& z) const {
    Eigen::VectorXd th(z.size());
    th(0) = std::exp(z(0));
    if (k_ == 0) return th;
    const Eigen::VectorXd zc = z.tail(static_cast<Eigen::Index>(k_));
    const double m = std::max(0.0, zc.maxCoeff());
    const Eigen::VectorXd e = (zc.array() - m).exp();
    const double denom = std::exp(-m) + e.sum();
    th.tail(static_cast<Eigen::Index>(k_)) = (1.0 - margin_) * e / denom;
    return th;
}

Eigen::VectorXd SimplexTransform::to_z(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd z(theta.size());
    z(0) = std::log(theta(0));
    if (k_ == 0) return z;
    const double lim = 1.0 - margin_;
    Eigen::VectorXd c = theta.tail(static_cast<Eigen::Index>(k_)).cwiseMax(1e-8);
    const double total = c.sum();
    if (total > lim * (1.0 - 1e-6)) c *= lim * (1.0 - 1e-6) / total;
    const double slack = 1.0 - c.sum() / lim;
    for (Eigen::Index i = 0; i < c.size(); ++i) z(1 + i) = std::log(c(i) / lim) - std::log(slack);
    return z;
}

Eigen::MatrixXd SimplexTransform::jacobian(const Eigen::VectorXd& z) const {
    const Eigen::Index d = z.size();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(d, d);
    J(0, 0) = std::exp(z(0));
    if (k_ == 0) return J;
    const Eigen::VectorXd th = to_theta(z);
    const Eigen::VectorXd pi = th.tail(static_cast<Eigen::Index>(k_)) / (1.0 - margin_);
    const Eigen::Index k = static_cast<Eigen::Index>(k_);
    J.bottomRightCorner(k, k) = (1.0 - margin_) * (Eigen::MatrixXd(pi.asDiagonal()) - pi * pi.transpose());
    return J;
}

}  // namespace cmem
