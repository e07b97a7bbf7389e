// Acceptance run: one PASS/FAIL/SKIP line per criterion, exit 1 if any criterion fails.
// Usage: cmem_acceptance [criterion numbers...]   (default: all)
// Criterion 9 reads ecoli.csv, ecoli_holdout.csv and wpp.csv from $CMEM_DATA_DIR, else the source data/ directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "cmem/diagnostics.hpp"
#include "cmem/error.hpp"
#include "cmem/estimation.hpp"
#include "cmem/io.hpp"
#include "cmem/model.hpp"
#include "cmem/operators.hpp"
#include "cmem/simstudy.hpp"
#include "cmem/stats.hpp"

using namespace cmem;

namespace {

// Pinned tolerances.
constexpr double kMomentLawTol = 1e-9;
constexpr double kPgfTol = 1e-8;
constexpr double kClosedFormTol = 1e-10;
constexpr double kMcSigmas = 3.0;
constexpr double kGradRelTol = 1e-5;
constexpr double kTableMeanTol = 0.02;
constexpr double kTableSseRel = 0.20;
constexpr double kAseSseRel = 0.20;
constexpr double kMispGapLo = 0.005, kMispGapHi = 0.025, kMispNullTol = 0.005;
constexpr double kSoftplusGapLo = 0.2, kSoftplusGapHi = 0.3;
constexpr double kRealFitTol = 1e-2, kRealDiagTol = 5e-3, kHoldoutTol = 1e-2;
constexpr double kMsprLo = 0.97, kMsprHi = 1.03, kMsrLo = 0.99, kMsrHi = 1.01;

enum class Status { Pass, Fail, Skip };

struct Outcome {
    Status status = Status::Pass;
    std::vector<std::string> notes;
    std::vector<std::string> failures;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            status = Status::Fail;
            failures.push_back(what);
        }
    }
    void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

MeanSpec spec11(double a0, double a1, double b1, Response r = Response::linear()) { return {a0, {a1}, {b1}, r}; }

const MeanSpec kDgp1 = spec11(2.8, 0.4, 0.2);

std::vector<OperatorSpec> all_ops() {
    return {OperatorSpec::poisson(), OperatorSpec::negative_binomial(), OperatorSpec::binomial(), OperatorSpec::zip(1.7)};
}

// 1 ---------------------------------------------------------------------------------------------
Outcome operator_laws() {
    Outcome o;
    Rng rng(101);
    std::uniform_real_distribution<double> ua(0.05, 5.0);
    std::uniform_int_distribution<Count> ue(0, 25);
    double worst_mean = 0.0, worst_var = 0.0;
    for (const auto& op : all_ops()) {
        for (int i = 0; i < 50; ++i) {
            const double alpha = ua(rng);
            const Count eps = ue(rng);
            const auto tab = conditional_pmf_table(op, alpha, eps);
            const double target = alpha * static_cast<double>(eps);
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t k = 0; k < tab.size(); ++k) m1 += static_cast<double>(k) * tab[k];
            for (std::size_t k = 0; k < tab.size(); ++k) {
                const double d = static_cast<double>(k) - target;
                m2 += d * d * tab[k];
            }
            worst_mean = std::max(worst_mean, std::abs(m1 - target));
            worst_var = std::max(worst_var, std::abs(m2 - nu(op, alpha) * static_cast<double>(eps)));
        }
    }
    o.check(worst_mean < kMomentLawTol, fmt("max mean error %.2e", worst_mean));
    o.check(worst_var < kMomentLawTol, fmt("max variance error %.2e", worst_var));

    const std::vector<InnovationSpec> innovations{InnovationSpec::poisson_unit(), InnovationSpec::three_point(0.2),
                                                  InnovationSpec::zip_unit(0.3), InnovationSpec::degenerate()};
    double worst_pgf = 0.0;
    for (const auto& op : all_ops()) {
        for (const auto& innov : innovations) {
            const auto itab = innovation_pmf_table(innov);
            for (double alpha : {0.35, 1.6, 3.0}) {
                std::vector<std::vector<double>> cond;
                for (std::size_t l = 0; l < itab.size(); ++l) cond.push_back(conditional_pmf_table(op, alpha, Count(l)));
                for (double u : {0.0, 0.3, 0.7, 1.0}) {
                    double acc = 0.0;
                    for (std::size_t l = 0; l < itab.size(); ++l) {
                        double inner = 0.0, pw = 1.0;
                        for (double pk : cond[l]) {
                            inner += pk * pw;
                            pw *= u;
                        }
                        acc += itab[l] * inner;
                    }
                    worst_pgf = std::max(worst_pgf, std::abs(operator_pgf(op, alpha, innov, u) - acc));
                }
            }
        }
    }
    o.check(worst_pgf < kPgfTol, fmt("max pgf error %.2e", worst_pgf));
    o.note(fmt("mean err %.1e, var err %.1e, pgf err %.1e", worst_mean, worst_var, worst_pgf));
    return o;
}

// 2 ---------------------------------------------------------------------------------------------
Outcome binomial_range() {
    Outcome o;
    const OperatorSpec bin = OperatorSpec::binomial();
    Rng rng(202);
    std::uniform_real_distribution<double> ua(0.01, 6.0);
    std::uniform_int_distribution<Count> ue(1, 20);
    for (int i = 0; i < 200; ++i) {
        double alpha = ua(rng);
        if (i % 10 == 0) alpha = std::floor(alpha) + 1.0;  // integer alpha
        const Count eps = ue(rng);
        const double fl = std::floor(alpha);
        const Count lo = static_cast<Count>(fl) * eps, hi = lo + eps;
        const bool integer = alpha == fl;
        const auto tab = conditional_pmf_table(bin, alpha, eps);
        for (std::size_t k = 0; k < tab.size(); ++k) {
            const auto kk = static_cast<Count>(k);
            const bool in_range = integer ? kk == lo : (kk >= lo && kk <= hi);
            if (in_range != (tab[k] > 0.0)) {
                o.check(false, fmt("alpha=%.4f eps=%lld: support mismatch at k=%zu", alpha, (long long)eps, k));
                break;
            }
        }
        if (!integer) o.check(static_cast<Count>(tab.size()) - 1 >= hi, fmt("alpha=%.4f: support truncated", alpha));
        const double v = nu(bin, alpha);
        o.check(v >= 0.0 && v <= 0.25, fmt("nu(%.4f) = %.4f outside [0, 0.25]", alpha, v));
        if (integer) {
            o.check(v == 0.0, fmt("nu(%g) = %g for integer alpha", alpha, v));
            for (int s = 0; s < 20; ++s)
                o.check(sample_operator(bin, alpha, eps, rng) == lo, fmt("integer alpha %g not deterministic", alpha));
        }
        const Count draw = sample_operator(bin, alpha, eps, rng);
        o.check(draw >= lo && draw <= hi, fmt("sample %lld outside range", (long long)draw));
    }
    o.note("200 (alpha, eps) draws, 20 with integer alpha");
    return o;
}

// 3 ---------------------------------------------------------------------------------------------
Outcome moment_engine() {
    Outcome o;
    const ModelSpec model{kDgp1, OperatorSpec::poisson(), InnovationSpec::poisson_unit()};
    const std::size_t K = 10;
    const MomentSummary s = moment_summary(model, K);
    const ClosedForm11 cf = closed_form_11(model, K);
    // 2.8 / (1 - 0.6) = 7 up to floating-point rounding of the coefficients
    o.check(std::abs(s.mu - 7.0) <= 8 * std::numeric_limits<double>::epsilon() * 7.0, fmt("mu = %.17g", s.mu));
    o.check(std::abs(unconditional_mean(kDgp1) - 7.0) <= 8 * std::numeric_limits<double>::epsilon() * 7.0,
            "unconditional_mean != 7");
    double worst_cf = 0.0, worst_solver = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
        const double expect = 0.44 * std::pow(0.6, double(k - 1));
        worst_cf = std::max(worst_cf, std::abs(cf.rho[k - 1] - expect));
        worst_solver = std::max(worst_solver, std::abs(s.rho[k - 1] - cf.rho[k - 1]));
    }
    o.check(worst_cf < kClosedFormTol, fmt("closed-form rho off by %.2e", worst_cf));
    o.check(worst_solver < kClosedFormTol, fmt("solver vs closed form %.2e", worst_solver));

    // sample ACF of one 1e6-step path; Monte-Carlo SE by batch means over 20 blocks
    Rng rng = derive_stream(303, {});
    const std::size_t n = 1000000, blocks = 20, len = n / blocks, lags = 5;
    const CountSeries x = simulate(model, n, rng).counts;
    const auto full = sample_acf(std::span<const Count>(x), lags);
    std::vector<std::vector<double>> per_lag(lags);
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto r = sample_acf(std::span<const Count>(x.data() + b * len, len), lags);
        for (std::size_t k = 0; k < lags; ++k) per_lag[k].push_back(r[k]);
    }
    double worst_z = 0.0;
    for (std::size_t k = 0; k < lags; ++k) {
        const double se = std::sqrt(sample_variance(std::span<const double>(per_lag[k])) / double(blocks));
        const double z = std::abs(full[k] - s.rho[k]) / se;
        worst_z = std::max(worst_z, z);
        o.check(z < kMcSigmas, fmt("lag %zu: sample %.4f vs %.4f (%.1f SE)", k + 1, full[k], s.rho[k], z));
    }
    o.note(fmt("mu=%.15g, rho(1)=%.12f, solver diff %.1e, worst |z|=%.2f", s.mu, s.rho[0], worst_solver, worst_z));
    return o;
}

// 4 ---------------------------------------------------------------------------------------------
Outcome estimator_identities() {
    Outcome o;
    Rng rng(404);
    std::uniform_real_distribution<double> um(0.5, 30.0);
    std::poisson_distribution<Count> pd(10.0);
    for (int draw = 0; draw < 50; ++draw) {
        CountSeries x(200);
        std::vector<double> m(200);
        for (std::size_t t = 0; t < x.size(); ++t) {
            x[t] = pd(rng);
            m[t] = um(rng);
        }
        const auto poi = estimate_sigma2(OperatorSpec::poisson(), x, m);
        const auto nb = estimate_sigma2(OperatorSpec::negative_binomial(), x, m);
        o.check(nb.sigma2 == poi.sigma2 - 1.0, fmt("draw %d: NB %.17g vs Poi-1 %.17g", draw, nb.sigma2, poi.sigma2 - 1));
    }
    const ModelSpec model{kDgp1, OperatorSpec::poisson(), InnovationSpec::poisson_unit()};
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
        Rng r = derive_stream(404, {rep});
        const CountSeries x = simulate(model, 400, r).counts;
        for (const auto& est : {Estimator::pq(), Estimator::nq(), Estimator::eq()}) {
            const auto ref = fit(est, x, {1, 1}, OperatorSpec::poisson()).theta_hat.flat();
            for (const auto& op : {OperatorSpec::negative_binomial(), OperatorSpec::binomial()}) {
                const auto th = fit(est, x, {1, 1}, op).theta_hat.flat();
                o.check(th == ref, fmt("%s theta differs between operators", to_string(est.kind).c_str()));
            }
        }
    }
    o.note("50 random sigma2 inputs, 3 series x {pq, nq, eq} x {poi, nb, bin}");
    return o;
}

// 5 ---------------------------------------------------------------------------------------------
Outcome gradient_check() {
    Outcome o;
    Rng rng(505);
    std::uniform_int_distribution<int> ord(1, 2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const std::size_t p = std::size_t(ord(rng)), q = std::size_t(ord(rng));
        ParamVector th;
        th.a0 = 0.5 + 3.0 * u(rng);
        for (std::size_t i = 0; i < p; ++i) th.a.push_back(0.9 * u(rng) / double(p + q));
        for (std::size_t j = 0; j < q; ++j) th.b.push_back(0.9 * u(rng) / double(p + q));
        const ModelSpec model{th.mean(), OperatorSpec::poisson(), InnovationSpec::poisson_unit()};
        const CountSeries x = simulate(model, 200, rng).counts;
        const double xbar = sample_mean(std::span<const Count>(x));
        const std::vector<double> mi(q, xbar), xi(p, xbar);
        const Eigen::MatrixXd G = mean_gradient_path(th.mean(), x, mi, xi);
        const Eigen::VectorXd base = th.flat();
        for (Eigen::Index k = 0; k < base.size(); ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(base(k)));
            Eigen::VectorXd vp = base, vm = base;
            vp(k) += h;
            vm(k) -= h;
            const auto mp = conditional_mean_path(ParamVector::from_flat(vp, th.order()).mean(), x, mi, xi);
            const auto mm = conditional_mean_path(ParamVector::from_flat(vm, th.order()).mean(), x, mi, xi);
            for (std::size_t t = 0; t < x.size(); ++t) {
                const double fd = (mp[t] - mm[t]) / (2.0 * h);
                const double an = G(Eigen::Index(t), k);
                worst = std::max(worst, std::abs(an - fd) / std::max(1.0, std::abs(fd)));
            }
        }
    }
    o.check(worst < kGradRelTol, fmt("max relative error %.2e", worst));
    o.note(fmt("100 draws, orders (1..2, 1..2), max relative error %.2e", worst));
    return o;
}

// 6 ---------------------------------------------------------------------------------------------
struct TableRow {
    const char* param;
    double mean[4];
    double sse[4];
};

Outcome table_reproduction() {
    Outcome o;
    // n = 1000 row of the Poi-counting-series table, sigma2 = 1 block; columns PQ, NQ, EQ, 2W
    const TableRow rows[] = {
        {"a0", {2.871, 2.839, 2.837, 2.843}, {0.406, 0.375, 0.376, 0.378}},
        {"a1", {0.395, 0.399, 0.399, 0.398}, {0.045, 0.041, 0.041, 0.041}},
        {"b1", {0.192, 0.194, 0.195, 0.194}, {0.068, 0.064, 0.064, 0.064}},
        {"sigma2", {1.000, 0.999, 0.999, 0.999}, {0.061, 0.061, 0.061, 0.062}},
    };
    SimStudyConfig c;
    c.dgps = {{"poi", {kDgp1, OperatorSpec::poisson(), InnovationSpec::poisson_unit()}}};
    c.fits = {{Estimator::pq(), OperatorSpec::poisson(), {1, 1}, ""},
              {Estimator::nq(), OperatorSpec::poisson(), {1, 1}, ""},
              {Estimator::eq(), OperatorSpec::poisson(), {1, 1}, ""},
              {Estimator::w2(), OperatorSpec::poisson(), {1, 1}, ""}};
    c.sample_sizes = {1000};
    // At 500 replications the Monte-Carlo SE of the a0 mean (about 0.018) is as large as the
    // 0.02 tolerance, so the comparison runs at the table's own 10,000 replications.
    c.replications = 10000;
    c.seed = 606;
    const SimStudyTable t = run_sim_study(c);
    o.note(fmt("n=1000, %zu replications, mean/SSE/ASE per parameter", c.replications));
    for (std::size_t f = 0; f < 4; ++f) {
        const auto& m = t.method(0, 1000, f);
        o.check(!m.flagged, t.fit_labels[f] + ": more than 5% failed fits");
        std::string line = t.fit_labels[f] + ":";
        for (const auto& row : rows) {
            const ParamCell& cell = t.param(0, 1000, f, row.param);
            const std::string tag = t.fit_labels[f] + " " + row.param;
            o.check(std::abs(cell.mean - row.mean[f]) <= kTableMeanTol,
                    fmt("%s mean %.4f vs %.3f", tag.c_str(), cell.mean, row.mean[f]));
            o.check(std::abs(cell.sse / row.sse[f] - 1.0) <= kTableSseRel,
                    fmt("%s SSE %.4f vs %.3f", tag.c_str(), cell.sse, row.sse[f]));
            o.check(std::abs(cell.ase_mean / cell.sse - 1.0) <= kAseSseRel,
                    fmt("%s ASE %.4f vs SSE %.4f", tag.c_str(), cell.ase_mean, cell.sse));
            line += fmt(" %s=%.3f/%.3f/%.3f", row.param, cell.mean, cell.sse, cell.ase_mean);
        }
        line += fmt(" (fail %zu)", m.failures);
        o.note(line);
    }
    return o;
}

// 7 ---------------------------------------------------------------------------------------------
std::vector<FitSpec> four_methods(const OperatorSpec& op) {
    return {{Estimator::pq(), op, {1, 1}, ""},
            {Estimator::nq(), op, {1, 1}, ""},
            {Estimator::eq(), op, {1, 1}, ""},
            {Estimator::w2(), op, {1, 1}, ""}};
}

Outcome misspecification_direction() {
    Outcome o;
    SimStudyConfig c;
    const InnovationSpec tp = three_point_from_sigma2(0.4);
    c.dgps = {{"bin", {kDgp1, OperatorSpec::binomial(), tp}}, {"poi", {kDgp1, OperatorSpec::poisson(), tp}}};
    c.fits = four_methods(OperatorSpec::binomial());
    const auto poi_fits = four_methods(OperatorSpec::poisson());
    c.fits.insert(c.fits.end(), poi_fits.begin(), poi_fits.end());  // 0..3 assume Bin, 4..7 assume Poi
    c.sample_sizes = {1000};
    c.replications = 200;
    c.seed = 707;
    const SimStudyTable t = run_sim_study(c);
    for (std::size_t f = 0; f < 4; ++f) {
        const double bin_corr = t.method(0, 1000, f).mean_mspr, bin_misp = t.method(0, 1000, f + 4).mean_mspr;
        const double poi_corr = t.method(1, 1000, f + 4).mean_mspr, poi_misp = t.method(1, 1000, f).mean_mspr;
        const double gap = bin_misp - bin_corr, null_gap = poi_misp - poi_corr;
        const std::string m = to_string(c.fits[f].estimator.kind);
        o.check(gap >= kMispGapLo && gap <= kMispGapHi, fmt("%s: Bin DGP gap %.4f", m.c_str(), gap));
        o.check(std::abs(null_gap) < kMispNullTol, fmt("%s: Poi DGP gap %.4f", m.c_str(), null_gap));
        o.note(fmt("%s bin %.4f->%.4f (gap %.4f), poi %.4f->%.4f (gap %.4f)", m.c_str(), bin_corr, bin_misp, gap, poi_corr,
                   poi_misp, null_gap));
    }
    return o;
}

// 8 ---------------------------------------------------------------------------------------------
Outcome softplus_misspecification() {
    Outcome o;
    SimStudyConfig c;
    c.dgps = {{"lin", {kDgp1, OperatorSpec::poisson(), InnovationSpec::poisson_unit()}},
              {"soft", {spec11(2.8, 0.4, 0.2, Response::softplus(2.0)), OperatorSpec::poisson(),
                        InnovationSpec::poisson_unit()}}};
    c.fits = four_methods(OperatorSpec::poisson());
    c.sample_sizes = {1000};
    c.replications = 200;
    c.seed = 808;
    const SimStudyTable t = run_sim_study(c);
    for (std::size_t f = 0; f < 4; ++f) {
        const double lin = t.method(0, 1000, f).mean_mar, soft = t.method(1, 1000, f).mean_mar;
        const std::string m = to_string(c.fits[f].estimator.kind);
        o.check(soft - lin >= kSoftplusGapLo && soft - lin <= kSoftplusGapHi,
                fmt("%s: MAR %.3f vs %.3f (gap %.3f)", m.c_str(), soft, lin, soft - lin));
        o.note(fmt("%s MAR lin %.3f soft %.3f gap %.3f", m.c_str(), lin, soft, soft - lin));
    }
    return o;
}

// 9 ---------------------------------------------------------------------------------------------
Outcome real_data() {
    Outcome o;
    namespace fs = std::filesystem;
    const char* env = std::getenv("CMEM_DATA_DIR");
    const fs::path dir = env ? fs::path(env) : fs::path(CMEM_DEFAULT_DATA_DIR);
    const fs::path ecoli = dir / "ecoli.csv", ecoli_hold = dir / "ecoli_holdout.csv", wpp = dir / "wpp.csv";
    if (!fs::exists(ecoli) || !fs::exists(ecoli_hold) || !fs::exists(wpp)) {
        o.status = Status::Skip;
        o.note("data files not found in " + dir.string() + " (see data/README.md)");
        return o;
    }
    const std::vector<Estimator> methods{Estimator::pq(), Estimator::nq(), Estimator::eq(), Estimator::w2()};
    const auto close = [&](double got, double want, double tol, const std::string& what) {
        o.check(std::abs(got - want) <= tol, fmt("%s: %.4f vs %.3f", what.c_str(), got, want));
    };

    const CountSeries ex = read_count_series(ecoli.string());
    const CountSeries eh = read_count_series(ecoli_hold.string());
    const FitResult pq = fit(Estimator::pq(), ex, {1, 1}, OperatorSpec::poisson());
    close(pq.theta_hat.a0, 2.887, kRealFitTol, "ecoli a0");
    close(pq.theta_hat.a[0], 0.378, kRealFitTol, "ecoli a1");
    close(pq.theta_hat.b[0], 0.481, kRealFitTol, "ecoli b1");
    close(pq.sigma2_hat, 0.063, kRealFitTol, "ecoli sigma2 (Poi)");
    close(diagnose(pq, ex).mar, 5.154, kRealDiagTol, "ecoli MAR");
    const FitResult pq_bin = fit(Estimator::pq(), ex, {1, 1}, OperatorSpec::binomial());
    close(diagnose(pq_bin, ex).mspr, 1.000, kRealDiagTol, "ecoli MSPR (Bin)");
    const double ecoli_hold_mar[] = {6.249, 6.323, 6.329, 6.278};
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const FitResult f = i == 0 ? pq : fit(methods[i], ex, {1, 1}, OperatorSpec::poisson());
        const FilterState tail = training_tail_state(ex, f.fitted_means, {1, 1});
        close(holdout_evaluate(f, tail, eh, OperatorSpec::poisson()).mar, ecoli_hold_mar[i], kHoldoutTol,
              "ecoli holdout MAR " + to_string(methods[i].kind));
    }
    o.note(fmt("ecoli n=%zu: (%.3f, %.3f, %.3f) sigma2=%.3f", ex.size(), pq.theta_hat.a0, pq.theta_hat.a[0],
               pq.theta_hat.b[0], pq.sigma2_hat));

    const CountSeries wall = read_count_series(wpp.string());
    if (wall.size() <= 100) {
        o.check(false, "wpp.csv has fewer than 101 counts");
        return o;
    }
    const std::span<const Count> wtrain(wall.data(), wall.size() - 100), whold(wall.data() + wall.size() - 100, 100);
    const FitResult wpq = fit(Estimator::pq(), wtrain, {1, 1}, OperatorSpec::poisson());
    close(wpq.theta_hat.a0, 0.792, kRealFitTol, "wpp a0");
    close(wpq.theta_hat.a[0], 0.268, kRealFitTol, "wpp a1");
    close(wpq.theta_hat.b[0], 0.634, kRealFitTol, "wpp b1");
    const double wpp_hold_mar[] = {3.613, 3.616, 3.616, 3.616};
    for (std::size_t i = 0; i < methods.size(); ++i) {
        const FitResult f = i == 0 ? wpq : fit(methods[i], wtrain, {1, 1}, OperatorSpec::poisson());
        const FilterState tail = training_tail_state(wtrain, f.fitted_means, {1, 1});
        close(holdout_evaluate(f, tail, whold, OperatorSpec::poisson()).mar, wpp_hold_mar[i], kHoldoutTol,
              "wpp holdout MAR " + to_string(methods[i].kind));
    }
    o.note(fmt("wpp n=%zu: (%.3f, %.3f, %.3f)", wtrain.size(), wpq.theta_hat.a0, wpq.theta_hat.a[0], wpq.theta_hat.b[0]));
    return o;
}

// 10 --------------------------------------------------------------------------------------------
Outcome self_consistency() {
    Outcome o;
    const std::vector<std::pair<std::string, ModelSpec>> models{
        {"poi", {kDgp1, OperatorSpec::poisson(), InnovationSpec::poisson_unit()}},
        {"bin", {kDgp1, OperatorSpec::binomial(), three_point_from_sigma2(0.4)}},
    };
    std::uint64_t key = 0;
    for (const auto& [name, model] : models) {
        Rng rng = derive_stream(1010, {key++});
        const CountSeries x = simulate(model, 100000, rng).counts;
        const FitResult f = fit(Estimator::pq(), x, {1, 1}, model.op);
        const DiagnosticsReport r = diagnose(f, x);
        o.check(r.mspr >= kMsprLo && r.mspr <= kMsprHi, fmt("%s MSPR %.4f", name.c_str(), r.mspr));
        o.check(r.msr >= kMsrLo && r.msr <= kMsrHi, fmt("%s MSR %.4f", name.c_str(), r.msr));
        o.note(fmt("%s MSPR %.4f MSR %.4f", name.c_str(), r.mspr, r.msr));
    }
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "operator laws", operator_laws},
        {2, "binomial operator range", binomial_range},
        {3, "moment engine", moment_engine},
        {4, "estimator identities", estimator_identities},
        {5, "gradient check", gradient_check},
        {6, "simulation table reproduction", table_reproduction},
        {7, "operator misspecification direction", misspecification_direction},
        {8, "softplus misspecification", softplus_misspecification},
        {9, "real-data reproduction", real_data},
        {10, "self-consistency MSPR", self_consistency},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Skip ? "SKIP" : "FAIL";
        std::cout << "criterion " << c.id << ": " << tag << "  " << c.name << fmt("  (%.1f s)", secs) << '\n';
        for (const auto& n : o.notes) std::cout << "    " << n << '\n';
        for (const auto& f : o.failures) std::cout << "    failed: " << f << '\n';
        std::cout.flush();
        if (o.status == Status::Fail) ++failed;
    }
    return failed ? 1 : 0;
}
