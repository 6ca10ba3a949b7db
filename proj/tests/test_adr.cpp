#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "helpers.hpp"
#include "mcastle/adr_sim.hpp"
#include "mcastle/graph_analysis.hpp"

using namespace mcastle;

namespace {

AdrSpec full_grid_spec() {
    AdrSpec spec;
    spec.interior_extent = spec.domain_size;  // return the whole field
    return spec;
}

double species_sum(const GridTensor& x, std::size_t v, std::size_t t) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.n_rows; ++i)
        for (std::size_t j = 0; j < x.n_cols; ++j) s += x.at(i, j, v, t);
    return s;
}

// Intensity-weighted mean position along one axis, in domain units.
double centroid(const GridTensor& x, std::size_t t, bool along_columns, double h) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.n_rows; ++i)
        for (std::size_t j = 0; j < x.n_cols; ++j) {
            const double u = x.at(i, j, 0, t);
            const double coord = (static_cast<double>(along_columns ? j : i) + 0.5) * h;
            num += u * coord;
            den += u;
        }
    return num / den;
}

}  // namespace

TEST_CASE("stability bound combines advective and diffusive limits") {
    AdrSpec spec;
    spec.nx = 50;
    spec.domain_size = 10.0;  // h = 0.2
    spec.speed = 2.0;
    spec.d1 = 0.005;
    spec.d2 = 0.4;
    // 0.5 * min(0.2 / 2, 0.04 / 1.6)
    CHECK(adr_max_dt(spec) == doctest::Approx(0.0125).epsilon(1e-12));

    spec.speed = 0.0;
    spec.d1 = spec.d2 = 0.0;
    CHECK(!std::isfinite(adr_max_dt(spec)));
}

TEST_CASE("explicit steps above the stable bound are refused") {
    AdrSpec spec = full_grid_spec();
    spec.speed = 1.0;
    spec.dt = 1.0;  // bound is 0.1
    CHECK(mctest::code_of([&] { (void)solve_adr(spec); }) == Errc::cfl_violation);

    spec.dt = adr_max_dt(spec);  // exactly at the bound is allowed
    spec.t_samples = 1;
    CHECK_NOTHROW((void)solve_adr(spec));
}

TEST_CASE("malformed problem setups are rejected") {
    AdrSpec spec;
    spec.d1 = -0.1;
    CHECK(mctest::code_of([&] { (void)solve_adr(spec); }) == Errc::validation);
    spec = AdrSpec{};
    spec.nx = 2;
    CHECK(mctest::code_of([&] { (void)solve_adr(spec); }) == Errc::grid_too_small);
    spec = AdrSpec{};
    spec.interior_extent = 0.0;
    CHECK(mctest::code_of([&] { (void)solve_adr(spec); }) == Errc::validation);
    spec = AdrSpec{};
    spec.t_samples = 0;
    CHECK(mctest::code_of([&] { (void)solve_adr(spec); }) == Errc::validation);
}

TEST_CASE("pure reaction conserves the converted total exactly") {
    AdrSpec spec = full_grid_spec();
    spec.speed = 0.0;
    spec.d1 = spec.d2 = 0.0;
    spec.alpha = 1.0;
    spec.beta = 2.0;
    spec.t_samples = 10;
    const GridTensor x = solve_adr(spec);

    // d(u1 + u2 / beta)/dt = 0 under the reaction alone; the discrete update
    // preserves it to rounding, cell by cell.
    const double expect = species_sum(x, 0, 0) + species_sum(x, 1, 0) / spec.beta;
    for (std::size_t t = 1; t < 10; ++t) {
        const double got = species_sum(x, 0, t) + species_sum(x, 1, t) / spec.beta;
        CHECK(got == doctest::Approx(expect).epsilon(1e-12));
    }
    // And species 1 decays exponentially with the exact per-step factor.
    for (std::size_t t = 1; t < 10; ++t)
        CHECK(species_sum(x, 0, t) / species_sum(x, 0, t - 1) ==
              doctest::Approx(std::exp(-spec.alpha * 0.01)).epsilon(1e-12));
}

TEST_CASE("pure diffusion conserves mass and spreads the peak") {
    AdrSpec spec = full_grid_spec();
    spec.speed = 0.0;
    spec.alpha = 0.0;
    spec.d1 = 0.1;
    spec.d2 = 0.0;
    spec.t_samples = 20;
    const GridTensor x = solve_adr(spec);

    const double m0 = species_sum(x, 0, 0);
    double peak_first = 0.0, peak_last = 0.0;
    for (std::size_t i = 0; i < x.n_rows; ++i)
        for (std::size_t j = 0; j < x.n_cols; ++j) {
            peak_first = std::max(peak_first, x.at(i, j, 0, 0));
            peak_last = std::max(peak_last, x.at(i, j, 0, 19));
        }
    for (std::size_t t = 1; t < 20; ++t)
        CHECK(species_sum(x, 0, t) == doctest::Approx(m0).epsilon(1e-6));
    CHECK(peak_last < 0.9 * peak_first);
}

TEST_CASE("the blob drifts at the prescribed speed and direction") {
    AdrSpec spec = full_grid_spec();
    spec.speed = 2.0;
    spec.theta_deg = 0.0;  // eastward: +x is the column axis
    spec.d1 = spec.d2 = 0.005;
    spec.alpha = 0.0;
    spec.dt = 0.02;
    spec.sample_stride = 5;  // 0.1 time units between samples
    spec.t_samples = 8;
    const double h = spec.domain_size / spec.nx;

    const GridTensor x = solve_adr(spec);
    const double elapsed = 7 * 5 * 0.02;
    const double drift = centroid(x, 7, true, h) - centroid(x, 0, true, h);
    CHECK(drift / elapsed == doctest::Approx(spec.speed).epsilon(0.05));
    // No sideways motion.
    CHECK(std::abs(centroid(x, 7, false, h) - centroid(x, 0, false, h)) < 0.02);

    spec.theta_deg = 90.0;  // northward: +y is the row axis
    const GridTensor y = solve_adr(spec);
    const double drift_north = centroid(y, 7, false, h) - centroid(y, 0, false, h);
    CHECK(drift_north / elapsed == doctest::Approx(spec.speed).epsilon(0.05));
    CHECK(std::abs(centroid(y, 7, true, h) - centroid(y, 0, true, h)) < 0.02);
}

TEST_CASE("rotating the flow by ninety degrees rotates the solution") {
    AdrSpec spec = full_grid_spec();
    spec.speed = 1.5;
    spec.d1 = 0.01;
    spec.d2 = 0.02;
    spec.alpha = 1.0;
    spec.beta = 1.0;
    spec.t_samples = 8;

    spec.theta_deg = 0.0;
    const GridTensor a = solve_adr(spec);
    spec.theta_deg = 90.0;
    const GridTensor b = solve_adr(spec);

    const std::size_t n = a.n_rows;
    REQUIRE(b.n_rows == n);
    double worst = 0.0;
    for (std::size_t t = 0; t < 8; ++t)
        for (std::size_t v = 0; v < 2; ++v)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    worst = std::max(worst,
                                     std::abs(b.at(j, n - 1 - i, v, t) - a.at(i, j, v, t)));
    CHECK(worst < 1e-8);
}

TEST_CASE("the crop returns the centered analysis region") {
    AdrSpec spec;  // default: domain 10, interior 6, nx 50 -> 30x30 crop
    spec.t_samples = 2;
    const GridTensor x = solve_adr(spec);
    CHECK(x.n_rows == 30);
    CHECK(x.n_cols == 30);
    CHECK(x.n_vars == 2);
    CHECK(x.n_time == 2);

    AdrSpec full = full_grid_spec();
    full.t_samples = 2;
    const GridTensor y = solve_adr(full);
    CHECK(y.n_rows == 50);
    // The crop is the exact sub-block of the full field.
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 30; ++j)
            for (std::size_t v = 0; v < 2; ++v)
                CHECK(x.at(i, j, v, 0) == y.at(i + 10, j + 10, v, 0));
}

TEST_CASE("ground truth carries the reaction arrow and normalized angle") {
    AdrSpec spec;
    spec.theta_deg = -30.0;
    const AdrTruth t = adr_ground_truth(spec);
    CHECK(t.theta_deg == doctest::Approx(330.0));
    CHECK(t.reaction.n_vars == 2);
    CHECK(t.reaction.has_edge(0, 1));
    CHECK(!t.reaction.has_edge(1, 0));
    REQUIRE(t.reaction.self_weight[0].has_value());
    REQUIRE(t.reaction.self_weight[1].has_value());

    spec.alpha = 0.0;
    CHECK(!adr_ground_truth(spec).reaction.has_edge(0, 1));
    spec.alpha = 1.0;
    spec.theta_deg = 370.5;
    CHECK(adr_ground_truth(spec).theta_deg == doctest::Approx(10.5));
}

TEST_CASE("a full experiment recovers the reaction graph and flow angle") {
    AdrSpec spec;
    spec.d1 = spec.d2 = 0.005;
    spec.speed = 2.0;
    spec.theta_deg = 30.0;

    PipConfig cfg;  // ci backend: correlation-scale weights for decomposition
    const AdrOutcome oc = run_adr_experiment(spec, cfg);

    CHECK(oc.metrics.reaction_f1.f1 == 1.0);
    REQUIRE(oc.metrics.theta_hat.has_value());
    REQUIRE(oc.metrics.delta_theta.has_value());
    CHECK(*oc.metrics.delta_theta <= 10.0);
    CHECK(oc.metrics.theta_true == 30.0);
    CHECK(!oc.stencil.edges.empty());
    CHECK(oc.reaction.has_edge(0, 1));
}

TEST_CASE("metrics rows match the csv header shape") {
    AdrMetrics m;
    m.experiment_id = "D0.005_v2_th30";
    m.reaction_f1 = f1_from_counts(3, 0, 0);
    m.theta_true = 30.0;

    const std::string no_angle = metrics_csv_row(m);
    CHECK(std::count(no_angle.begin(), no_angle.end(), ',') == 9);
    CHECK(no_angle.substr(no_angle.size() - 2) == ",,");  // both optionals empty

    m.theta_hat = 33.25;
    m.delta_theta = 3.25;
    const std::string full = metrics_csv_row(m);
    CHECK(std::count(full.begin(), full.end(), ',') == 9);
    CHECK(full.find("33.25") != std::string::npos);
    const std::string header(kMetricsCsvHeader);
    CHECK(header.find("delta_theta") != std::string::npos);
    CHECK(std::count(header.begin(), header.end(), ',') == 9);
}
