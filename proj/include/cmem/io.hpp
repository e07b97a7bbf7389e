#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "cmem/diagnostics.hpp"
#include "cmem/estimation.hpp"
#include "cmem/model.hpp"
#include "cmem/simstudy.hpp"

namespace cmem {

using Json = nlohmann::json;

/**
 * @brief Read counts: one integer per line, or CSV with a header naming a
 * "count" column (a single-column header also works). Blank lines are skipped.
 * @throws ParseError with the 1-based line number
 */
CountSeries read_count_series(const std::string& path);
CountSeries parse_count_series(std::istream& in);

/// "t,count" rows, plus a "mean" column when means is non-null.
void write_count_csv(std::ostream& out, const CountSeries& counts, const std::vector<double>* means = nullptr);

// Structured config sections. Unknown keys are rejected with ParseError.
ModelSpec model_from_json(const Json& j);
Json model_to_json(const ModelSpec& m);
OperatorSpec operator_from_json(const Json& j);
Json operator_to_json(const OperatorSpec& op);
InnovationSpec innovation_from_json(const Json& j);
Json innovation_to_json(const InnovationSpec& innov);
ParamVector params_from_json(const Json& j);
Json params_to_json(const ParamVector& th);
Estimator estimator_from_name(const std::string& method, double nq_r = 1.0);
OperatorSpec operator_from_name(const std::string& name, double zip_kappa = 0.0);
Order order_from_string(const std::string& s);

struct EstimationConfig {
    Estimator estimator = Estimator::pq();
    OperatorSpec op = OperatorSpec::poisson();
    Order order{1, 1};
    FitOptions options;
};

EstimationConfig estimation_from_json(const Json& j);
Json estimation_to_json(const EstimationConfig& c);

struct SimStudyDocument {
    SimStudyConfig config;
    std::vector<PairSpec> pairs;
};

SimStudyDocument simstudy_from_json(const Json& j);
Json simstudy_to_json(const SimStudyDocument& d);

Json fit_to_json(const FitResult& fit);
Json report_to_json(const DiagnosticsReport& r, bool include_residuals);
Json comparison_to_json(const MomentComparison& c);

/// Parse a JSON document from a file. @throws ParseError
Json read_json_file(const std::string& path);

}  // namespace cmem
