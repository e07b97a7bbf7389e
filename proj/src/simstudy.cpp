#include "cmem/simstudy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include "cmem/diagnostics.hpp"
#include "cmem/error.hpp"
#include "cmem/random.hpp"

namespace cmem {

namespace {

struct FitRecord {
    std::vector<double> values;  // theta..., sigma2
    std::vector<double> ase;
    double mar = 0.0;
    double mspr = 0.0;
};

using Replication = std::vector<std::optional<FitRecord>>;

std::string default_label(const FitSpec& f) {
    return f.label.empty() ? to_string(f.estimator.kind) + "-" + to_string(f.op.kind()) : f.label;
}

Replication run_replication(const SimStudyConfig& cfg, std::size_t d, std::size_t n, std::size_t r) {
    Rng rng = derive_stream(cfg.seed, {d, n, r});
    const SimulatedPath path = simulate(cfg.dgps[d].model, n, rng, cfg.burn_in);
    Replication out(cfg.fits.size());
    for (std::size_t f = 0; f < cfg.fits.size(); ++f) {
        const FitSpec& fs = cfg.fits[f];
        try {
            const FitResult res = fit(fs.estimator, path.counts, fs.order, fs.op, cfg.fit_options);
            if (!res.converged) continue;
            FitRecord rec;
            const Eigen::VectorXd theta = res.theta_hat.flat();
            rec.values.assign(theta.data(), theta.data() + theta.size());
            rec.values.push_back(res.sigma2_hat);
            rec.ase = res.ase;
            rec.mar = mar(path.counts, res.fitted_means);
            const auto pr = pearson_residuals(path.counts, res.fitted_means, fs.op, res.sigma2_hat);
            double ss = 0.0;
            for (double v : pr) ss += v * v;
            rec.mspr = ss / static_cast<double>(pr.size());
            bool finite = std::isfinite(rec.mar) && std::isfinite(rec.mspr);
            for (double v : rec.values) finite = finite && std::isfinite(v);
            for (double v : rec.ase) finite = finite && std::isfinite(v);
            if (finite) out[f] = std::move(rec);
        } catch (const std::exception&) {
            // counted as a failed fit
        }
    }
    return out;
}

// Summary used by the table builder: trimmed when enough values survive,
// otherwise plain mean and sd (sd 0 for a single value).
TrimmedStats cell_stats(const std::vector<double>& v, double trim) {
    const std::size_t n = v.size();
    const std::size_t drop = static_cast<std::size_t>(std::ceil(trim * static_cast<double>(n) - 1e-9));
    if (n >= 2 * drop + 3) return trimmed_stats(v, trim);
    TrimmedStats s;
    s.count = n;
    if (n == 0) return {NAN, NAN, 0};
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    s.mean = m;
    s.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    return s;
}

}  // namespace

void SimStudyConfig::validate() const {
    if (dgps.empty() || fits.empty() || sample_sizes.empty()) throw DomainError("simstudy: empty design grid");
    if (replications < 1) throw DomainError("simstudy: replications must be at least 1");
    if (!(trim_fraction >= 0.0 && trim_fraction <= 0.05)) throw DomainError("simstudy: trim fraction must lie in [0, 0.05]");
    for (const auto& d : dgps) {
        d.model.mean.validate();
        if (!check_first_order_stationarity(d.model.mean)) throw DomainError("simstudy: DGP '" + d.name + "' is not stationary");
    }
}

const ParamCell& SimStudyTable::param(std::size_t dgp, std::size_t n, std::size_t fit, const std::string& name) const {
    for (const auto& c : params)
        if (c.dgp == dgp && c.n == n && c.fit == fit && c.param == name) return c;
    throw DomainError("simstudy table: no such parameter cell");
}

const MethodCell& SimStudyTable::method(std::size_t dgp, std::size_t n, std::size_t fit) const {
    for (const auto& c : methods)
        if (c.dgp == dgp && c.n == n && c.fit == fit) return c;
    throw DomainError("simstudy table: no such method cell");
}

TrimmedStats trimmed_stats(std::vector<double> values, double trim_fraction) {
    if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) throw DomainError("trim fraction must lie in [0, 0.5)");
    const std::size_t n = values.size();
    const std::size_t drop = static_cast<std::size_t>(std::ceil(trim_fraction * static_cast<double>(n) - 1e-9));
    if (n < 2 * drop + 3) throw DomainError("trimmed stats: fewer than 3 values after trimming");
    std::sort(values.begin(), values.end());
    const auto first = values.begin() + static_cast<std::ptrdiff_t>(drop);
    const auto last = values.end() - static_cast<std::ptrdiff_t>(drop);
    const std::size_t k = n - 2 * drop;
    double m = 0.0;
    for (auto it = first; it != last; ++it) m += *it;
    m /= static_cast<double>(k);
    double ss = 0.0;
    for (auto it = first; it != last; ++it) ss += (*it - m) * (*it - m);
    return {m, std::sqrt(ss / static_cast<double>(k - 1)), k};
}

SimStudyTable run_sim_study(const SimStudyConfig& cfg) {
    cfg.validate();
    SimStudyTable table;
    for (const auto& d : cfg.dgps) table.dgp_names.push_back(d.name);
    for (const auto& f : cfg.fits) table.fit_labels.push_back(default_label(f));
    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.replications));

    for (std::size_t d = 0; d < cfg.dgps.size(); ++d) {
        for (std::size_t n : cfg.sample_sizes) {
            std::vector<Replication> reps(cfg.replications);
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                for (std::size_t r = next++; r < cfg.replications; r = next++) reps[r] = run_replication(cfg, d, n, r);
            };
            if (threads <= 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
                for (auto& t : pool) t.join();
            }

            for (std::size_t f = 0; f < cfg.fits.size(); ++f) {
                const FitSpec& fs = cfg.fits[f];
                std::vector<const FitRecord*> ok;
                for (const auto& rep : reps)
                    if (rep[f]) ok.push_back(&*rep[f]);
                MethodCell mc;
                mc.dgp = d;
                mc.n = n;
                mc.fit = f;
                mc.successes = ok.size();
                mc.failures = cfg.replications - ok.size();
                mc.flagged = static_cast<double>(mc.failures) > 0.05 * static_cast<double>(cfg.replications);
                if (!ok.empty()) {
                    std::vector<double> mars, msprs;
                    for (const auto* rec : ok) {
                        mars.push_back(rec->mar);
                        msprs.push_back(rec->mspr);
                    }
                    if (cfg.record.mar) mc.mean_mar = cell_stats(mars, cfg.trim_fraction).mean;
                    if (cfg.record.mspr) mc.mean_mspr = cell_stats(msprs, cfg.trim_fraction).mean;
                }
                if (!cfg.record.mar) mc.mean_mar = NAN;
                if (!cfg.record.mspr) mc.mean_mspr = NAN;
                table.methods.push_back(mc);

                ParamVector proto;
                proto.a.resize(fs.order.p);
                proto.b.resize(fs.order.q);
                std::vector<std::string> names = proto.names();
                names.push_back("sigma2");
                const MeanSpec& truth = cfg.dgps[d].model.mean;
                for (std::size_t i = 0; i < names.size(); ++i) {
                    ParamCell pc;
                    pc.dgp = d;
                    pc.n = n;
                    pc.fit = f;
                    pc.param = names[i];
                    if (i == 0) pc.true_value = truth.a0;
                    else if (i <= fs.order.p) pc.true_value = i - 1 < truth.p() ? truth.a[i - 1] : 0.0;
                    else if (i < names.size() - 1) pc.true_value = i - 1 - fs.order.p < truth.q() ? truth.b[i - 1 - fs.order.p] : 0.0;
                    else pc.true_value = innovation_variance(cfg.dgps[d].model.innovation);
                    std::vector<double> vals, ases;
                    for (const auto* rec : ok) {
                        vals.push_back(rec->values[i]);
                        ases.push_back(rec->ase[i]);
                    }
                    if (!ok.empty()) {
                        const TrimmedStats s = cell_stats(vals, cfg.trim_fraction);
                        pc.mean = cfg.record.estimates ? s.mean : NAN;
                        pc.sse = cfg.record.estimates ? s.sd : NAN;
                        pc.count = s.count;
                        pc.ase_mean = cfg.record.ases ? cell_stats(ases, cfg.trim_fraction).mean : NAN;
                    } else {
                        pc.mean = pc.sse = pc.ase_mean = NAN;
                    }
                    table.params.push_back(pc);
                }
            }
        }
    }
    return table;
}

std::vector<PairedRow> paired_rows(const SimStudyTable& table, const std::vector<PairSpec>& pairs) {
    std::vector<std::size_t> ns;
    for (const auto& m : table.methods)
        if (std::find(ns.begin(), ns.end(), m.n) == ns.end()) ns.push_back(m.n);
    std::vector<PairedRow> out;
    for (const auto& pr : pairs) {
        for (std::size_t n : ns) {
            const MethodCell& a = table.method(pr.dgp_a, n, pr.fit_a);
            const MethodCell& b = table.method(pr.dgp_b, n, pr.fit_b);
            PairedRow row;
            row.label = pr.label;
            row.n = n;
            row.method_a = table.dgp_names[pr.dgp_a] + "/" + table.fit_labels[pr.fit_a];
            row.method_b = table.dgp_names[pr.dgp_b] + "/" + table.fit_labels[pr.fit_b];
            row.mar_a = a.mean_mar;
            row.mar_b = b.mean_mar;
            row.mspr_a = a.mean_mspr;
            row.mspr_b = b.mean_mspr;
            out.push_back(row);
        }
    }
    return out;
}

std::vector<PairedRow> misspecification_report(const SimStudyConfig& config, const std::vector<PairSpec>& pairs) {
    for (const auto& p : pairs)
        if (p.dgp_a >= config.dgps.size() || p.dgp_b >= config.dgps.size() || p.fit_a >= config.fits.size() ||
            p.fit_b >= config.fits.size())
            throw DomainError("misspecification report: pair index out of range");
    return paired_rows(run_sim_study(config), pairs);
}

namespace {

std::string num(double v, int prec = 6) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

}  // namespace

std::string format_csv(const SimStudyTable& table) {
    std::ostringstream os;
    os << "dgp,n,method,param,true,mean,sse,ase,count\n";
    for (const auto& c : table.params)
        os << table.dgp_names[c.dgp] << ',' << c.n << ',' << table.fit_labels[c.fit] << ',' << c.param << ','
           << num(c.true_value, 10) << ',' << num(c.mean, 10) << ',' << num(c.sse, 10) << ',' << num(c.ase_mean, 10)
           << ',' << c.count << '\n';
    os << "\ndgp,n,method,mean_mar,mean_mspr,successes,failures,flagged\n";
    for (const auto& m : table.methods)
        os << table.dgp_names[m.dgp] << ',' << m.n << ',' << table.fit_labels[m.fit] << ',' << num(m.mean_mar, 10)
           << ',' << num(m.mean_mspr, 10) << ',' << m.successes << ',' << m.failures << ','
           << (m.flagged ? "true" : "false") << '\n';
    return os.str();
}

std::string format_text(const SimStudyTable& table) {
    std::ostringstream os;
    os << std::fixed;
    std::vector<std::size_t> ns;
    for (const auto& m : table.methods)
        if (std::find(ns.begin(), ns.end(), m.n) == ns.end()) ns.push_back(m.n);
    for (std::size_t d = 0; d < table.dgp_names.size(); ++d) {
        os << "DGP " << table.dgp_names[d] << '\n';
        os << std::left << std::setw(8) << "Param" << std::setw(7) << "n" << std::setw(6) << "";
        for (const auto& l : table.fit_labels) os << std::right << std::setw(10) << l;
        os << '\n';
        std::vector<std::string> names;
        for (const auto& c : table.params)
            if (c.dgp == d && std::find(names.begin(), names.end(), c.param) == names.end()) names.push_back(c.param);
        for (const auto& name : names) {
            for (std::size_t n : ns) {
                for (int row = 0; row < 3; ++row) {
                    static const char* tags[] = {"Mean", "SSE", "ASE"};
                    os << std::left << std::setw(8) << (row == 0 ? name : "") << std::setw(7)
                       << (row == 0 ? std::to_string(n) : "") << std::setw(6) << tags[row] << std::right;
                    for (std::size_t f = 0; f < table.fit_labels.size(); ++f) {
                        const ParamCell* cell = nullptr;
                        for (const auto& c : table.params)
                            if (c.dgp == d && c.n == n && c.fit == f && c.param == name) cell = &c;
                        const double v = !cell ? NAN : row == 0 ? cell->mean : row == 1 ? cell->sse : cell->ase_mean;
                        os << std::setw(10) << std::setprecision(3) << v;
                    }
                    os << '\n';
                }
            }
        }
        for (std::size_t n : ns) {
            os << std::left << std::setw(8) << "MAR" << std::setw(7) << n << std::setw(6) << "" << std::right;
            for (std::size_t f = 0; f < table.fit_labels.size(); ++f)
                os << std::setw(10) << std::setprecision(3) << table.method(d, n, f).mean_mar;
            os << '\n' << std::left << std::setw(8) << "MSPR" << std::setw(7) << n << std::setw(6) << "" << std::right;
            for (std::size_t f = 0; f < table.fit_labels.size(); ++f)
                os << std::setw(10) << std::setprecision(3) << table.method(d, n, f).mean_mspr;
            os << '\n';
        }
        os << '\n';
    }
    return os.str();
}

std::string format_paired_csv(const std::vector<PairedRow>& rows) {
    std::ostringstream os;
    os << "label,n,a,b,mar_a,mar_b,mspr_a,mspr_b\n";
    for (const auto& r : rows)
        os << r.label << ',' << r.n << ',' << r.method_a << ',' << r.method_b << ',' << num(r.mar_a, 10) << ','
           << num(r.mar_b, 10) << ',' << num(r.mspr_a, 10) << ',' << num(r.mspr_b, 10) << '\n';
    return os.str();
}

}  // namespace cmem
