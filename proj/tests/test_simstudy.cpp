#include <cmath>

#include "doctest.h"

#include "cmem/error.hpp"
#include "cmem/simstudy.hpp"

using namespace cmem;

namespace {

MeanSpec spec11(double a0, double a1, double b1) { return {a0, {a1}, {b1}, Response::linear()}; }

SimStudyConfig small_config() {
    SimStudyConfig c;
    c.dgps = {{"poi", {spec11(2.8, 0.4, 0.2), OperatorSpec::poisson(), InnovationSpec::poisson_unit()}},
              {"bin", {spec11(2.8, 0.4, 0.2), OperatorSpec::binomial(), three_point_from_sigma2(0.4)}}};
    c.fits = {{Estimator::pq(), OperatorSpec::poisson(), {1, 1}, ""},
              {Estimator::pq(), OperatorSpec::binomial(), {1, 1}, ""},
              {Estimator::w2(), OperatorSpec::poisson(), {1, 1}, ""}};
    c.sample_sizes = {300};
    c.replications = 20;
    c.seed = 5;
    c.threads = 2;
    return c;
}

}  // namespace

TEST_CASE("trimmed stats") {
    auto t = trimmed_stats({1, 2, 3, 4, 100}, 0.2);
    CHECK(t.mean == doctest::Approx(3.0));
    CHECK(t.sd == doctest::Approx(1.0));
    CHECK(t.count == 3);
    t = trimmed_stats({1, 2, 3, 4}, 0.0);
    CHECK(t.mean == doctest::Approx(2.5));
    CHECK(t.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
    t = trimmed_stats({7, 7, 7, 7, 7}, 0.0);
    CHECK(t.sd == 0.0);
    // 0.1% of 500 rounds up to one value per tail
    std::vector<double> v(500);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = double(i);
    CHECK(trimmed_stats(v, 0.001).count == 498);
    CHECK_THROWS_AS(trimmed_stats({1, 2, 3, 4}, 0.2), DomainError);
    CHECK_THROWS_AS(trimmed_stats({1, 2}, 0.0), DomainError);
}

TEST_CASE("config validation") {
    SimStudyConfig c = small_config();
    c.replications = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = small_config();
    c.trim_fraction = 0.06;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = small_config();
    c.fits.clear();
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = small_config();
    c.dgps[0].model.mean = spec11(1, 0.5, 0.5);
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("determinism and thread independence") {
    SimStudyConfig c = small_config();
    const auto a = run_sim_study(c);
    const auto b = run_sim_study(c);
    c.threads = 1;
    const auto d = run_sim_study(c);
    CHECK(format_csv(a) == format_csv(b));
    CHECK(format_csv(a) == format_csv(d));
    c.seed = 6;
    CHECK(format_csv(run_sim_study(c)) != format_csv(a));
}

TEST_CASE("table layout and labels") {
    const auto t = run_sim_study(small_config());
    CHECK(t.fit_labels == std::vector<std::string>{"pq-poi", "pq-bin", "2w-poi"});
    CHECK(t.dgp_names == std::vector<std::string>{"poi", "bin"});
    // 2 dgps x 1 n x 3 fits x (a0, a1, b1, sigma2)
    CHECK(t.params.size() == 24);
    CHECK(t.methods.size() == 6);
    const auto& cell = t.param(0, 300, 0, "a1");
    CHECK(cell.true_value == 0.4);
    CHECK(cell.sse >= 0.0);
    CHECK(cell.ase_mean >= 0.0);
    CHECK(t.param(0, 300, 0, "sigma2").true_value == 1.0);
    CHECK(t.param(1, 300, 0, "sigma2").true_value == doctest::Approx(0.4));
    CHECK_THROWS_AS(t.param(0, 300, 0, "b2"), DomainError);
    const auto text = format_text(t);
    CHECK(text.find("Mean") != std::string::npos);
    CHECK(text.find("SSE") != std::string::npos);
    CHECK(text.find("ASE") != std::string::npos);
}

TEST_CASE("QMLE columns coincide between assumed Poi and Bin") {
    const auto t = run_sim_study(small_config());
    for (std::size_t d = 0; d < 2; ++d) {
        for (const char* p : {"a0", "a1", "b1"}) {
            CHECK(t.param(d, 300, 0, p).mean == t.param(d, 300, 1, p).mean);
            CHECK(t.param(d, 300, 0, p).sse == t.param(d, 300, 1, p).sse);
        }
        CHECK(t.method(d, 300, 0).mean_mar == t.method(d, 300, 1).mean_mar);
    }
}

TEST_CASE("one replication without trimming reproduces the single fit") {
    SimStudyConfig c = small_config();
    c.dgps.resize(1);
    c.fits.resize(1);
    c.replications = 1;
    c.trim_fraction = 0.0;
    const auto t = run_sim_study(c);
    Rng rng = derive_stream(c.seed, {0, 300, 0});
    const CountSeries x = simulate(c.dgps[0].model, 300, rng, c.burn_in).counts;
    const auto f = fit(Estimator::pq(), x, {1, 1}, OperatorSpec::poisson());
    CHECK(t.param(0, 300, 0, "a0").mean == f.theta_hat.a0);
    CHECK(t.param(0, 300, 0, "a1").mean == f.theta_hat.a[0]);
    CHECK(t.param(0, 300, 0, "b1").mean == f.theta_hat.b[0]);
    CHECK(t.param(0, 300, 0, "sigma2").mean == f.sigma2_hat);
    CHECK(t.param(0, 300, 0, "a1").ase_mean == f.ase[1]);
    CHECK(t.method(0, 300, 0).successes == 1);
}

TEST_CASE("failed fits are counted and flag the cell") {
    SimStudyConfig c = small_config();
    c.dgps.resize(1);
    // A near-zero intercept makes short series constant (all zeros), which fit rejects.
    c.dgps[0].model = {spec11(0.001, 0.05, 0.05), OperatorSpec::poisson(), InnovationSpec::degenerate()};
    c.fits.resize(1);
    c.sample_sizes = {40};
    const auto t = run_sim_study(c);
    const auto& m = t.method(0, 40, 0);
    CHECK(m.failures + m.successes == c.replications);
    CHECK(m.failures > 0);
    CHECK(m.flagged);
}

TEST_CASE("paired rows") {
    const auto t = run_sim_study(small_config());
    const std::vector<PairSpec> pairs{{1, 1, 1, 0, "bin corr vs misp"}};
    const auto rows = paired_rows(t, pairs);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].method_a == "bin/pq-bin");
    CHECK(rows[0].method_b == "bin/pq-poi");
    CHECK(rows[0].mspr_a == t.method(1, 300, 1).mean_mspr);
    CHECK(rows[0].mar_a == rows[0].mar_b);  // MAR depends on the means only
    CHECK(format_paired_csv(rows).find("bin corr vs misp") != std::string::npos);
    CHECK_THROWS_AS(paired_rows(t, {{5, 0, 0, 0, "bad"}}), DomainError);
}
