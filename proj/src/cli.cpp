#include "cmem/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "cmem/diagnostics.hpp"
#include "cmem/error.hpp"
#include "cmem/io.hpp"
#include "cmem/random.hpp"
#include "cmem/simstudy.hpp"

namespace cmem {

namespace {

Json load_config(const RunConfig& rc) {
    if (rc.config_path.empty()) return Json::object();
    Json j = read_json_file(rc.config_path);
    if (!j.is_object()) throw ParseError("config: top level must be an object");
    for (const auto& [k, v] : j.items())
        if (k != "model" && k != "estimation" && k != "simstudy") throw ParseError("config: unknown section '" + k + "'");
    return j;
}

EstimationConfig resolve_estimation(const RunConfig& rc, const Json& cfg) {
    EstimationConfig ec = cfg.contains("estimation") ? estimation_from_json(cfg.at("estimation")) : EstimationConfig{};
    if (rc.method || rc.nq_r) {
        const std::string m = rc.method ? *rc.method : to_string(ec.estimator.kind);
        ec.estimator = estimator_from_name(m, rc.nq_r ? *rc.nq_r : ec.estimator.nq_r);
    }
    if (rc.op) ec.op = operator_from_name(*rc.op);
    if (rc.order) ec.order = order_from_string(*rc.order);
    return ec;
}

void emit(const RunConfig& rc, std::ostream& out, const std::string& text) {
    if (rc.output_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(rc.output_path);
    if (!f) throw ParseError("cannot write '" + rc.output_path + "'");
    f << text;
}

Json input_block(const RunConfig& rc, std::size_t n) { return Json{{"path", rc.input_path}, {"n", n}}; }

CountSeries load_input(const RunConfig& rc) {
    if (rc.input_path.empty()) throw ParseError("--input is required");
    return read_count_series(rc.input_path);
}

int cmd_simulate(const RunConfig& rc, const Json& cfg, std::ostream& out) {
    if (!cfg.contains("model")) throw ParseError("simulate needs a config with a 'model' section");
    const ModelSpec model = model_from_json(cfg.at("model"));
    const std::uint64_t seed = rc.seed.value_or(kDefaultSeed);
    Rng rng = derive_stream(seed, {});
    const SimulatedPath path = simulate(model, rc.n, rng, rc.burn_in);
    std::ostringstream os;
    write_count_csv(os, path.counts, rc.with_means ? &path.means : nullptr);
    emit(rc, out, os.str());
    return kExitOk;
}

Json resolved(const RunConfig& rc, const EstimationConfig& ec) {
    Json j{{"command", rc.command}, {"estimation", estimation_to_json(ec)}};
    if (rc.holdout_length) j["holdout_length"] = *rc.holdout_length;
    return j;
}

int cmd_fit(const RunConfig& rc, const Json& cfg, std::ostream& out, bool full) {
    const EstimationConfig ec = resolve_estimation(rc, cfg);
    const CountSeries x = load_input(rc);
    const FitResult res = fit(ec.estimator, x, ec.order, ec.op, ec.options);
    Json doc = fit_to_json(res);
    doc["config"] = resolved(rc, ec);
    doc["input"] = input_block(rc, x.size());
    const DiagnosticsReport rep = diagnose(res, x);
    doc["diagnostics"] = report_to_json(rep, full);
    if (full) {
        try {
            doc["moments"] = comparison_to_json(
                model_vs_sample_report(x, res.theta_hat.mean(), res.op, std::max(res.sigma2_hat, 0.0)));
        } catch (const std::exception& e) {
            doc["moments"] = Json{{"error", e.what()}};
        }
        if (ec.order == Order{1, 1}) {
            const NbScreen s = nb_suitability_screen(x);
            doc["nb_screen"] = Json{{"vsr", s.vsr}, {"nb_plausible", s.nb_plausible}};
        }
    }
    emit(rc, out, doc.dump(2) + "\n");
    return kExitOk;
}

int cmd_forecast(const RunConfig& rc, const Json& cfg, std::ostream& out) {
    const EstimationConfig ec = resolve_estimation(rc, cfg);
    const CountSeries x = load_input(rc);
    if (!rc.holdout_length || *rc.holdout_length == 0 || *rc.holdout_length >= x.size())
        throw ParseError("--holdout must be between 1 and n - 1");
    const std::size_t split = x.size() - *rc.holdout_length;
    const std::span<const Count> train(x.data(), split), test(x.data() + split, x.size() - split);
    const FitResult res = fit(ec.estimator, train, ec.order, ec.op, ec.options);
    const FilterState tail = training_tail_state(train, res.fitted_means, ec.order);
    Json doc = fit_to_json(res);
    doc["config"] = resolved(rc, ec);
    doc["input"] = input_block(rc, x.size());
    doc["training"] = report_to_json(diagnose(res, train), false);
    doc["holdout"] = report_to_json(holdout_evaluate(res, tail, test, ec.op), false);
    doc["holdout"]["n"] = test.size();
    emit(rc, out, doc.dump(2) + "\n");
    return kExitOk;
}

int cmd_simstudy(const RunConfig& rc, const Json& cfg, std::ostream& out) {
    if (!cfg.contains("simstudy")) throw ParseError("simstudy needs a config with a 'simstudy' section");
    SimStudyDocument doc = simstudy_from_json(cfg.at("simstudy"));
    if (rc.replications) doc.config.replications = *rc.replications;
    if (rc.trim) doc.config.trim_fraction = *rc.trim;
    if (rc.seed) doc.config.seed = *rc.seed;
    if (rc.threads) doc.config.threads = *rc.threads;
    try {
        doc.config.validate();
    } catch (const DomainError& e) {
        throw ParseError(e.what());
    }
    const SimStudyTable table = run_sim_study(doc.config);
    std::string text;
    if (rc.format == "text") {
        text = format_text(table);
    } else if (rc.format == "csv") {
        text = format_csv(table);
    } else {
        throw ParseError("unknown format '" + rc.format + "'");
    }
    if (!doc.pairs.empty()) text += "\n" + format_paired_csv(paired_rows(table, doc.pairs));
    emit(rc, out, text);
    return kExitOk;
}

int error_record(std::ostream& err, const char* kind, const std::string& msg, int code) {
    err << Json{{"error", {{"kind", kind}, {"message", msg}, {"exit_code", code}}}}.dump() << '\n';
    return code;
}

}  // namespace

int run(const RunConfig& rc, std::ostream& out, std::ostream& err) {
    try {
        const Json cfg = load_config(rc);
        if (rc.command == "simulate") return cmd_simulate(rc, cfg, out);
        if (rc.command == "fit") return cmd_fit(rc, cfg, out, false);
        if (rc.command == "diagnose") return cmd_fit(rc, cfg, out, true);
        if (rc.command == "forecast-eval") return cmd_forecast(rc, cfg, out);
        if (rc.command == "simstudy") return cmd_simstudy(rc, cfg, out);
        throw ParseError("unknown command '" + rc.command + "'");
    } catch (const ParseError& e) {
        return error_record(err, "config", e.what(), kExitConfig);
    } catch (const DomainError& e) {
        return error_record(err, "domain", e.what(), kExitNumerical);
    } catch (const UnsupportedError& e) {
        return error_record(err, "unsupported", e.what(), kExitNumerical);
    } catch (const NumericalError& e) {
        return error_record(err, "numerical", e.what(), kExitNumerical);
    } catch (const std::exception& e) {
        return error_record(err, "internal", e.what(), kExitNumerical);
    }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Count multiplicative error models: simulation, estimation, diagnostics"};
    app.require_subcommand(1);
    RunConfig rc;
    std::uint64_t seed = 0;
    std::size_t holdout = 0, reps = 0;
    std::string method, op, order;
    double nq_r = 0.0, trim = 0.0;
    unsigned threads = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", rc.config_path, "JSON config with model/estimation/simstudy sections");
        sub->add_option("--output", rc.output_path, "output file (default: stdout)");
        sub->add_option("--seed", seed, "random seed");
    };
    auto add_estimation = [&](CLI::App* sub) {
        sub->add_option("--input", rc.input_path, "count series file")->required();
        sub->add_option("--method", method, "pq, nq, eq or 2w")->check(CLI::IsMember({"pq", "nq", "eq", "1w", "2w"}));
        sub->add_option("--operator", op, "poi, nb, bin or zip")->check(CLI::IsMember({"poi", "nb", "bin", "zip"}));
        sub->add_option("--order", order, "p,q");
        sub->add_option("--nq-r", nq_r, "NQ tuning constant r");
    };

    auto* sim = app.add_subcommand("simulate", "simulate a series from the config model");
    add_common(sim);
    sim->add_option("--n", rc.n, "series length");
    sim->add_option("--burn-in", rc.burn_in, "burn-in steps");
    sim->add_flag("--with-means", rc.with_means, "also write the latent means");

    auto* fitc = app.add_subcommand("fit", "fit a model to a count series");
    add_common(fitc);
    add_estimation(fitc);
    auto* diag = app.add_subcommand("diagnose", "fit and report residual diagnostics");
    add_common(diag);
    add_estimation(diag);
    auto* fc = app.add_subcommand("forecast-eval", "fit on a prefix and evaluate on the held-out suffix");
    add_common(fc);
    add_estimation(fc);
    fc->add_option("--holdout", holdout, "number of held-out observations")->required();

    auto* ss = app.add_subcommand("simstudy", "run a Monte-Carlo study from the config");
    add_common(ss);
    ss->add_option("--replications", reps, "replications per cell");
    ss->add_option("--trim", trim, "trim fraction per tail");
    ss->add_option("--threads", threads, "worker threads (0 = all cores)");
    ss->add_option("--format", rc.format, "csv or text")->check(CLI::IsMember({"csv", "text"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return error_record(err, "usage", e.what(), kExitConfig);
    }
    for (auto* sub : app.get_subcommands()) {
        rc.command = sub->get_name();
        if (sub->count("--seed")) rc.seed = seed;
        if (sub->get_option_no_throw("--holdout") && sub->count("--holdout")) rc.holdout_length = holdout;
        if (sub->get_option_no_throw("--method") && sub->count("--method")) rc.method = method;
        if (sub->get_option_no_throw("--operator") && sub->count("--operator")) rc.op = op;
        if (sub->get_option_no_throw("--order") && sub->count("--order")) rc.order = order;
        if (sub->get_option_no_throw("--nq-r") && sub->count("--nq-r")) rc.nq_r = nq_r;
        if (sub->get_option_no_throw("--replications") && sub->count("--replications")) rc.replications = reps;
        if (sub->get_option_no_throw("--trim") && sub->count("--trim")) rc.trim = trim;
        if (sub->get_option_no_throw("--threads") && sub->count("--threads")) rc.threads = threads;
    }
    return run(rc, out, err);
}

}  // namespace cmem
