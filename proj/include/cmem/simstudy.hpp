#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cmem/estimation.hpp"
#include "cmem/model.hpp"

namespace cmem {

struct DgpSpec {
    std::string name;
    ModelSpec model;
};

/// Estimator plus the operator it assumes (which may differ from the DGP's).
struct FitSpec {
    Estimator estimator;
    OperatorSpec op = OperatorSpec::poisson();
    Order order{1, 1};
    std::string label;  ///< defaults to "<method>-<operator>"
};

struct RecordFlags {
    bool estimates = true;
    bool ases = true;
    bool mar = true;
    bool mspr = true;
};

struct SimStudyConfig {
    std::vector<DgpSpec> dgps;
    std::vector<FitSpec> fits;
    std::vector<std::size_t> sample_sizes;
    std::size_t replications = 500;
    double trim_fraction = 0.001;
    std::uint64_t seed = 1;
    std::size_t burn_in = 500;
    unsigned threads = 0;  ///< 0 = hardware concurrency
    RecordFlags record;
    FitOptions fit_options;

    /// @throws DomainError for an empty grid, zero replications or trim outside [0, 0.05]
    void validate() const;
};

struct ParamCell {
    std::size_t dgp = 0;
    std::size_t n = 0;
    std::size_t fit = 0;
    std::string param;
    double true_value = 0.0;
    double mean = 0.0;
    double sse = 0.0;
    double ase_mean = 0.0;
    std::size_t count = 0;
};

struct MethodCell {
    std::size_t dgp = 0;
    std::size_t n = 0;
    std::size_t fit = 0;
    double mean_mar = 0.0;
    double mean_mspr = 0.0;
    std::size_t successes = 0;
    std::size_t failures = 0;
    bool flagged = false;  ///< more than 5% failed fits
};

struct SimStudyTable {
    std::vector<std::string> dgp_names;
    std::vector<std::string> fit_labels;
    std::vector<ParamCell> params;
    std::vector<MethodCell> methods;

    const ParamCell& param(std::size_t dgp, std::size_t n, std::size_t fit, const std::string& name) const;
    const MethodCell& method(std::size_t dgp, std::size_t n, std::size_t fit) const;
};

struct TrimmedStats {
    double mean = 0.0;
    double sd = 0.0;
    std::size_t count = 0;
};

/**
 * @brief Mean and sd (denominator n' - 1) after dropping ceil(f n) values from each tail.
 * @throws DomainError if fewer than 3 values remain
 */
TrimmedStats trimmed_stats(std::vector<double> values, double trim_fraction);

/// Replication r of cell (dgp, n) draws from derive_stream(seed, {dgp, n, r}).
SimStudyTable run_sim_study(const SimStudyConfig& config);

struct PairSpec {
    std::size_t dgp_a = 0;
    std::size_t fit_a = 0;
    std::size_t dgp_b = 0;
    std::size_t fit_b = 0;
    std::string label;
};

struct PairedRow {
    std::string label;
    std::size_t n = 0;
    std::string method_a;
    std::string method_b;
    double mar_a = 0.0;
    double mar_b = 0.0;
    double mspr_a = 0.0;
    double mspr_b = 0.0;
};

std::vector<PairedRow> paired_rows(const SimStudyTable& table, const std::vector<PairSpec>& pairs);

/// Runs the study once and reports each pair side by side for every sample size.
std::vector<PairedRow> misspecification_report(const SimStudyConfig& config, const std::vector<PairSpec>& pairs);

std::string format_csv(const SimStudyTable& table);
std::string format_text(const SimStudyTable& table);
std::string format_paired_csv(const std::vector<PairedRow>& rows);

}  // namespace cmem
