#include "cmem/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "cmem/error.hpp"

namespace cmem {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

Count parse_count(const std::string& tok, std::size_t line) {
    if (tok.empty()) throw ParseError("empty value", line);
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (*first == '+') ++first;
    Count v = 0;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec == std::errc::result_out_of_range) throw ParseError("count overflows: '" + tok + "'", line);
    if (ec != std::errc() || ptr != last) throw ParseError("not an integer count: '" + tok + "'", line);
    if (v < 0) throw ParseError("negative count: '" + tok + "'", line);
    return v;
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& ctx) {
    if (!j.is_object()) throw ParseError(ctx + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ParseError(ctx + ": unknown key '" + k + "'");
}

template <class F>
auto guarded(const std::string& ctx, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError&) {
        throw;
    } catch (const Json::exception& e) {
        throw ParseError(ctx + ": " + e.what());
    } catch (const DomainError& e) {
        throw ParseError(ctx + ": " + e.what());
    }
}

std::vector<double> doubles(const Json& j) { return j.get<std::vector<double>>(); }

}  // namespace

CountSeries parse_count_series(std::istream& in) {
    CountSeries out;
    std::string raw;
    std::size_t line = 0;
    bool first = true;
    long col = -1;  // -1: whole line
    std::size_t ncols = 1;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty()) continue;
        const auto fields = split_csv(s);
        if (first) {
            first = false;
            const bool header = !std::all_of(fields.begin(), fields.end(), looks_numeric);
            if (header) {
                ncols = fields.size();
                for (std::size_t i = 0; i < fields.size(); ++i)
                    if (fields[i] == "count") col = static_cast<long>(i);
                if (col < 0) {
                    if (fields.size() != 1) throw ParseError("header has no 'count' column", line);
                    col = 0;
                }
                continue;
            }
            if (fields.size() != 1) throw ParseError("multi-column data needs a header with a 'count' column", line);
        }
        if (col < 0) {
            out.push_back(parse_count(s, line));
        } else {
            if (fields.size() != ncols) throw ParseError("expected " + std::to_string(ncols) + " columns", line);
            out.push_back(parse_count(fields[static_cast<std::size_t>(col)], line));
        }
    }
    if (out.empty()) throw ParseError("no counts found");
    return out;
}

CountSeries read_count_series(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return parse_count_series(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_count_csv(std::ostream& out, const CountSeries& counts, const std::vector<double>* means) {
    out << (means ? "t,count,mean\n" : "t,count\n");
    out << std::setprecision(17);
    for (std::size_t t = 0; t < counts.size(); ++t) {
        out << t + 1 << ',' << counts[t];
        if (means) out << ',' << (*means)[t];
        out << '\n';
    }
}

OperatorSpec operator_from_name(const std::string& name, double zip_kappa) {
    if (name == "poi" || name == "poisson") return OperatorSpec::poisson();
    if (name == "nb") return OperatorSpec::negative_binomial();
    if (name == "bin" || name == "binomial") return OperatorSpec::binomial();
    if (name == "zip") {
        if (!(zip_kappa > 1.0)) throw ParseError("operator zip needs zip_kappa > 1");
        return OperatorSpec::zip(zip_kappa);
    }
    throw ParseError("unknown operator '" + name + "'");
}

Estimator estimator_from_name(const std::string& method, double nq_r) {
    if (method == "pq") return Estimator::pq();
    if (method == "nq") {
        if (!(nq_r > 0.0)) throw ParseError("nq_r must be positive");
        return Estimator::nq(nq_r);
    }
    if (method == "eq") return Estimator::eq();
    if (method == "2w") return Estimator::w2();
    if (method == "1w") return Estimator::w1();
    throw ParseError("unknown method '" + method + "'");
}

Order order_from_string(const std::string& s) {
    const auto parts = split_csv(s);
    if (parts.size() != 2) throw ParseError("order must be 'p,q'");
    Order o;
    o.p = static_cast<std::size_t>(parse_count(parts[0], 0));
    o.q = static_cast<std::size_t>(parse_count(parts[1], 0));
    return o;
}

OperatorSpec operator_from_json(const Json& j) {
    return guarded("operator", [&] {
        if (j.is_string()) return operator_from_name(j.get<std::string>());
        check_keys(j, {"kind", "zip_kappa"}, "operator");
        return operator_from_name(j.at("kind").get<std::string>(), j.value("zip_kappa", 0.0));
    });
}

Json operator_to_json(const OperatorSpec& op) {
    Json j{{"kind", to_string(op.kind())}};
    if (op.kind() == OperatorKind::CompoundingZIP) j["zip_kappa"] = op.zip_kappa();
    return j;
}

InnovationSpec innovation_from_json(const Json& j) {
    return guarded("innovation", [&] {
        if (j.is_string()) {
            const auto k = j.get<std::string>();
            if (k == "poisson") return InnovationSpec::poisson_unit();
            if (k == "degenerate") return InnovationSpec::degenerate();
            throw ParseError("innovation: '" + k + "' needs parameters");
        }
        check_keys(j, {"kind", "three_point_p2", "sigma2", "zip_omega", "pmf"}, "innovation");
        const auto k = j.at("kind").get<std::string>();
        if (k == "poisson") return InnovationSpec::poisson_unit();
        if (k == "degenerate") return InnovationSpec::degenerate();
        if (k == "three_point") {
            if (j.contains("sigma2")) return three_point_from_sigma2(j.at("sigma2").get<double>());
            return InnovationSpec::three_point(j.at("three_point_p2").get<double>());
        }
        if (k == "zip") return InnovationSpec::zip_unit(j.at("zip_omega").get<double>());
        if (k == "empirical") return InnovationSpec::empirical(doubles(j.at("pmf")));
        throw ParseError("innovation: unknown kind '" + k + "'");
    });
}

Json innovation_to_json(const InnovationSpec& innov) {
    Json j{{"kind", to_string(innov.kind())}};
    switch (innov.kind()) {
        case InnovationKind::ThreePoint: j["three_point_p2"] = innov.three_point_p2(); break;
        case InnovationKind::ZIPUnit: j["zip_omega"] = innov.zip_omega(); break;
        case InnovationKind::EmpiricalPmf: j["pmf"] = innov.pmf(); break;
        default: break;
    }
    return j;
}

ModelSpec model_from_json(const Json& j) {
    return guarded("model", [&] {
        check_keys(j, {"a0", "a", "b", "response", "operator", "innovation"}, "model");
        ModelSpec m;
        m.mean.a0 = j.at("a0").get<double>();
        m.mean.a = j.contains("a") ? doubles(j.at("a")) : std::vector<double>{};
        m.mean.b = j.contains("b") ? doubles(j.at("b")) : std::vector<double>{};
        if (j.contains("response")) {
            const Json& r = j.at("response");
            if (r.is_string()) {
                if (r.get<std::string>() != "linear") throw ParseError("model: response string must be 'linear'");
            } else {
                check_keys(r, {"kind", "c"}, "response");
                const auto k = r.at("kind").get<std::string>();
                if (k == "softplus") m.mean.response = Response::softplus(r.at("c").get<double>());
                else if (k != "linear") throw ParseError("response: unknown kind '" + k + "'");
            }
        }
        if (j.contains("operator")) m.op = operator_from_json(j.at("operator"));
        if (j.contains("innovation")) m.innovation = innovation_from_json(j.at("innovation"));
        m.mean.validate();
        return m;
    });
}

Json model_to_json(const ModelSpec& m) {
    Json j{{"a0", m.mean.a0}, {"a", m.mean.a}, {"b", m.mean.b}, {"operator", operator_to_json(m.op)},
           {"innovation", innovation_to_json(m.innovation)}};
    if (m.mean.response.kind == Response::Kind::Linear) j["response"] = "linear";
    else j["response"] = Json{{"kind", "softplus"}, {"c", m.mean.response.c}};
    return j;
}

ParamVector params_from_json(const Json& j) {
    return guarded("init", [&] {
        check_keys(j, {"a0", "a", "b"}, "init");
        ParamVector th;
        th.a0 = j.at("a0").get<double>();
        th.a = j.contains("a") ? doubles(j.at("a")) : std::vector<double>{};
        th.b = j.contains("b") ? doubles(j.at("b")) : std::vector<double>{};
        return th;
    });
}

Json params_to_json(const ParamVector& th) { return Json{{"a0", th.a0}, {"a", th.a}, {"b", th.b}}; }

EstimationConfig estimation_from_json(const Json& j) {
    return guarded("estimation", [&] {
        check_keys(j, {"method", "nq_r", "operator", "order", "max_iter", "param_tol", "grad_tol", "init", "init_sigma2"},
                   "estimation");
        EstimationConfig c;
        const double r = j.value("nq_r", 1.0);
        c.estimator = estimator_from_name(j.value("method", std::string("pq")), r);
        if (j.contains("operator")) c.op = operator_from_json(j.at("operator"));
        if (j.contains("order")) {
            const auto o = j.at("order").get<std::vector<std::size_t>>();
            if (o.size() != 2) throw ParseError("estimation: order must be [p, q]");
            c.order = {o[0], o[1]};
        }
        c.options.max_iter = j.value("max_iter", c.options.max_iter);
        c.options.param_tol = j.value("param_tol", c.options.param_tol);
        c.options.grad_tol = j.value("grad_tol", c.options.grad_tol);
        if (j.contains("init")) c.options.init = params_from_json(j.at("init"));
        if (j.contains("init_sigma2")) c.options.init_sigma2 = j.at("init_sigma2").get<double>();
        return c;
    });
}

Json estimation_to_json(const EstimationConfig& c) {
    Json j{{"method", to_string(c.estimator.kind)},
           {"nq_r", c.estimator.nq_r},
           {"operator", operator_to_json(c.op)},
           {"order", {c.order.p, c.order.q}},
           {"max_iter", c.options.max_iter},
           {"param_tol", c.options.param_tol},
           {"grad_tol", c.options.grad_tol}};
    j["init"] = c.options.init ? params_to_json(*c.options.init) : Json(nullptr);
    j["init_sigma2"] = c.options.init_sigma2 ? Json(*c.options.init_sigma2) : Json(nullptr);
    return j;
}

SimStudyDocument simstudy_from_json(const Json& j) {
    return guarded("simstudy", [&] {
        check_keys(j, {"dgps", "fits", "sample_sizes", "replications", "trim_fraction", "seed", "burn_in", "threads",
                       "record", "pairs", "fit_options"},
                   "simstudy");
        SimStudyDocument d;
        SimStudyConfig& c = d.config;
        for (const auto& dj : j.at("dgps")) {
            check_keys(dj, {"name", "model"}, "dgp");
            c.dgps.push_back({dj.at("name").get<std::string>(), model_from_json(dj.at("model"))});
        }
        for (const auto& fj : j.at("fits")) {
            check_keys(fj, {"method", "nq_r", "operator", "order", "label"}, "fit");
            FitSpec f;
            f.estimator = estimator_from_name(fj.at("method").get<std::string>(), fj.value("nq_r", 1.0));
            if (fj.contains("operator")) f.op = operator_from_json(fj.at("operator"));
            if (fj.contains("order")) {
                const auto o = fj.at("order").get<std::vector<std::size_t>>();
                if (o.size() != 2) throw ParseError("fit: order must be [p, q]");
                f.order = {o[0], o[1]};
            }
            f.label = fj.value("label", std::string());
            c.fits.push_back(f);
        }
        c.sample_sizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
        c.replications = j.value("replications", c.replications);
        c.trim_fraction = j.value("trim_fraction", c.trim_fraction);
        c.seed = j.value("seed", c.seed);
        c.burn_in = j.value("burn_in", c.burn_in);
        c.threads = j.value("threads", c.threads);
        if (j.contains("record")) {
            const Json& r = j.at("record");
            check_keys(r, {"estimates", "ases", "mar", "mspr"}, "record");
            c.record.estimates = r.value("estimates", true);
            c.record.ases = r.value("ases", true);
            c.record.mar = r.value("mar", true);
            c.record.mspr = r.value("mspr", true);
        }
        if (j.contains("fit_options")) {
            const Json& o = j.at("fit_options");
            check_keys(o, {"max_iter", "param_tol", "grad_tol"}, "fit_options");
            c.fit_options.max_iter = o.value("max_iter", c.fit_options.max_iter);
            c.fit_options.param_tol = o.value("param_tol", c.fit_options.param_tol);
            c.fit_options.grad_tol = o.value("grad_tol", c.fit_options.grad_tol);
        }
        if (j.contains("pairs")) {
            for (const auto& pj : j.at("pairs")) {
                check_keys(pj, {"dgp_a", "fit_a", "dgp_b", "fit_b", "label"}, "pair");
                d.pairs.push_back({pj.at("dgp_a").get<std::size_t>(), pj.at("fit_a").get<std::size_t>(),
                                   pj.at("dgp_b").get<std::size_t>(), pj.at("fit_b").get<std::size_t>(),
                                   pj.value("label", std::string())});
            }
        }
        c.validate();
        return d;
    });
}

Json simstudy_to_json(const SimStudyDocument& d) {
    const SimStudyConfig& c = d.config;
    Json dgps = Json::array(), fits = Json::array(), pairs = Json::array();
    for (const auto& g : c.dgps) dgps.push_back({{"name", g.name}, {"model", model_to_json(g.model)}});
    for (const auto& f : c.fits)
        fits.push_back({{"method", to_string(f.estimator.kind)},
                        {"nq_r", f.estimator.nq_r},
                        {"operator", operator_to_json(f.op)},
                        {"order", {f.order.p, f.order.q}},
                        {"label", f.label}});
    for (const auto& p : d.pairs)
        pairs.push_back({{"dgp_a", p.dgp_a}, {"fit_a", p.fit_a}, {"dgp_b", p.dgp_b}, {"fit_b", p.fit_b}, {"label", p.label}});
    return Json{{"dgps", dgps},
                {"fits", fits},
                {"sample_sizes", c.sample_sizes},
                {"replications", c.replications},
                {"trim_fraction", c.trim_fraction},
                {"seed", c.seed},
                {"burn_in", c.burn_in},
                {"threads", c.threads},
                {"record", {{"estimates", c.record.estimates}, {"ases", c.record.ases}, {"mar", c.record.mar}, {"mspr", c.record.mspr}}},
                {"fit_options", {{"max_iter", c.fit_options.max_iter}, {"param_tol", c.fit_options.param_tol}, {"grad_tol", c.fit_options.grad_tol}}},
                {"pairs", pairs}};
}

Json fit_to_json(const FitResult& fit) {
    const auto names = fit.theta_hat.names();
    const Eigen::VectorXd th = fit.theta_hat.flat();
    Json est = Json::object(), ase = Json::object();
    for (std::size_t i = 0; i < names.size(); ++i) {
        est[names[i]] = th(static_cast<Eigen::Index>(i));
        if (i < fit.ase.size()) ase[names[i]] = fit.ase[i];
    }
    if (fit.ase.size() == names.size() + 1) ase["sigma2"] = fit.ase.back();
    return Json{{"method", to_string(fit.estimator.kind)},
                {"operator", operator_to_json(fit.op)},
                {"order", {fit.theta_hat.a.size(), fit.theta_hat.b.size()}},
                {"estimates", est},
                {"sigma2", fit.sigma2_hat},
                {"ase", ase},
                {"objective", fit.objective_value},
                {"convergence", {{"converged", fit.converged}, {"iterations", fit.iterations}, {"warnings", fit.warnings}}},
                {"init", params_to_json(fit.init)},
                {"init_sigma2", fit.init_sigma2}};
}

Json report_to_json(const DiagnosticsReport& r, bool include_residuals) {
    Json j{{"mar", r.mar}, {"mspr", r.mspr}, {"msr", r.msr}, {"vsr", r.vsr}, {"residual_acf", r.residual_acf}};
    if (r.predicted_vsr) j["predicted_vsr"] = {r.predicted_vsr->lo, r.predicted_vsr->hi};
    else j["predicted_vsr"] = nullptr;
    if (include_residuals) {
        j["pearson"] = r.pearson;
        j["scaled"] = r.scaled;
    }
    return j;
}

Json comparison_to_json(const MomentComparison& c) {
    auto row = [](const MomentRow& r) {
        return Json{{"mean", r.mean}, {"var", {r.var.lo, r.var.hi}}, {"rho", r.rho}};
    };
    return Json{{"sample", row(c.sample)}, {"model", row(c.model)}};
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

}  // namespace cmem
