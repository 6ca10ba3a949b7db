#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <set>
#include <vector>

#include "helpers.hpp"
#include "mcastle/graph_analysis.hpp"
#include "mcastle/lens.hpp"
#include "mcastle/pip.hpp"
#include "mcastle/rng.hpp"
#include "mcastle/var_bench.hpp"

using namespace mcastle;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(Rng& rng, Eigen::Index n, Eigen::Index m) {
    MatrixXd x(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) x(i, j) = rng.normal();
    return x;
}

// Independent formulation of the same test: invert the correlation matrix of
// [a, y, Z] and read the partial correlation off the precision matrix.
CiTestResult precision_matrix_parcorr(const VectorXd& a, const VectorXd& y, const MatrixXd& z) {
    const Eigen::Index n = a.size();
    MatrixXd m(n, 2 + z.cols());
    m.col(0) = a;
    m.col(1) = y;
    if (z.cols() > 0) m.rightCols(z.cols()) = z;
    const MatrixXd centered = m.rowwise() - m.colwise().mean();
    MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
    VectorXd sd = cov.diagonal().cwiseSqrt();
    MatrixXd corr = sd.cwiseInverse().asDiagonal() * cov * sd.cwiseInverse().asDiagonal();
    const MatrixXd omega = corr.fullPivLu().inverse();
    const double r = -omega(0, 1) / std::sqrt(omega(0, 0) * omega(1, 1));

    CiTestResult res;
    res.statistic = r;
    res.dof = static_cast<std::size_t>(n - z.cols() - 2);
    const double dof = static_cast<double>(res.dof);
    const double denom = std::max(1.0 - r * r, 1e-15);
    const double t = r * std::sqrt(dof / denom);
    boost::math::students_t dist(dof);
    res.p_value = 2.0 * boost::math::cdf(dist, -std::abs(t));
    return res;
}

GridTensor simulate_ndm(const Ndm& ndm, int n_grid, int n_time, double sigma,
                        std::uint64_t seed) {
    GenSpec spec;
    spec.n_grid = n_grid;
    spec.n_vars = ndm.n_vars;
    spec.n_time = n_time;
    spec.noise_sigma = sigma;
    spec.seed = seed;
    return simulate(expand_to_global(ndm, n_grid), spec);
}

std::set<std::tuple<int, int, int, int>> edge_keys(const StencilGraph& g) {
    std::set<std::tuple<int, int, int, int>> s;
    for (const auto& e : g.edges) s.insert(e.key());
    return s;
}

}  // namespace

TEST_CASE("partial correlation test agrees with the precision-matrix formulation") {
    Rng rng(301);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 120;
        const Eigen::Index zc = static_cast<Eigen::Index>(rng.uniform_int(4));
        const MatrixXd z = random_matrix(rng, n, zc);
        VectorXd a = random_matrix(rng, n, 1).col(0);
        VectorXd y = random_matrix(rng, n, 1).col(0);
        // Correlate everything a little so the statistic is non-trivial.
        for (Eigen::Index k = 0; k < zc; ++k) {
            a += 0.5 * z.col(k);
            y += 0.3 * z.col(k);
        }
        y += 0.4 * a;

        const CiTestResult got = partial_correlation_test(a, y, z);
        const CiTestResult want = precision_matrix_parcorr(a, y, z);
        CHECK(got.dof == want.dof);
        CHECK(got.statistic == doctest::Approx(want.statistic).epsilon(1e-10));
        if (want.p_value > 1e-12)
            CHECK(got.p_value == doctest::Approx(want.p_value).epsilon(1e-8));
        else
            CHECK(got.p_value <= 1e-12);
    }
}

TEST_CASE("conditioning on a common driver removes the dependence") {
    Rng rng(302);
    const Eigen::Index n = 600;
    MatrixXd z = random_matrix(rng, n, 1);
    VectorXd a = z.col(0) + 0.2 * random_matrix(rng, n, 1).col(0);
    VectorXd y = z.col(0) + 0.2 * random_matrix(rng, n, 1).col(0);

    const CiTestResult marginal = partial_correlation_test(a, y, MatrixXd(n, 0));
    CHECK(marginal.statistic > 0.8);
    CHECK(marginal.p_value < 1e-10);

    const CiTestResult conditional = partial_correlation_test(a, y, z);
    CHECK(std::abs(conditional.statistic) < 0.1);
    CHECK(conditional.p_value > 0.01);
    CHECK(conditional.dof == static_cast<std::size_t>(n - 3));
}

TEST_CASE("partial correlation test raises on degenerate inputs") {
    Rng rng(303);
    const Eigen::Index n = 40;
    const VectorXd a = random_matrix(rng, n, 1).col(0);
    const VectorXd y = random_matrix(rng, n, 1).col(0);

    MatrixXd dup(n, 2);
    dup.col(0) = a;
    dup.col(1) = a;  // rank-deficient conditioning set
    CHECK(mctest::code_of([&] { (void)partial_correlation_test(a, y, dup); }) ==
          Errc::singular_design);

    MatrixXd z = random_matrix(rng, n, 1);
    const VectorXd exact = 2.0 * z.col(0);  // residual identically zero
    CHECK(mctest::code_of([&] { (void)partial_correlation_test(exact, y, z); }) ==
          Errc::singular_design);

    VectorXd short_a = a.head(3), short_y = y.head(3);
    MatrixXd short_z = z.topRows(3);
    CHECK(mctest::code_of([&] {
              (void)partial_correlation_test(short_a, short_y, short_z);
          }) == Errc::insufficient_samples);

    VectorXd bad = a.head(n - 1);
    CHECK(mctest::code_of([&] { (void)partial_correlation_test(bad, y, z); }) ==
          Errc::validation);
}

TEST_CASE("benjamini-hochberg keeps exactly the step-up prefix") {
    const auto keep = benjamini_hochberg({0.001, 0.011, 0.02, 0.8}, 0.05);
    REQUIRE(keep.size() == 4);
    CHECK(keep[0]);
    CHECK(keep[1]);
    CHECK(keep[2]);
    CHECK(!keep[3]);

    // Shuffled input: decisions follow the values, not the positions.
    const auto shuffled = benjamini_hochberg({0.8, 0.02, 0.001, 0.011}, 0.05);
    CHECK(!shuffled[0]);
    CHECK(shuffled[1]);
    CHECK(shuffled[2]);
    CHECK(shuffled[3]);

    const auto none = benjamini_hochberg({0.3, 0.4, 0.9}, 0.05);
    CHECK(std::count(none.begin(), none.end(), 1) == 0);

    const auto boundary = benjamini_hochberg({0.05}, 0.05);
    CHECK(boundary[0]);

    // A small straggler is rescued by the step-up rule.
    const auto rescue = benjamini_hochberg({0.01, 0.02}, 0.05);
    CHECK(rescue[0]);
    CHECK(rescue[1]);

    CHECK(benjamini_hochberg({}, 0.05).empty());
}

TEST_CASE("config json round-trips and rejects unknown keys") {
    PipConfig cfg;
    cfg.backend = PipBackend::lasso;
    cfg.alpha = 0.05;
    cfg.graph_alpha = 0.02;
    cfg.max_cond_size = 2;
    cfg.lambda_w = 0.125;
    cfg.w_threshold = 0.0625;
    cfg.coeff_threshold = 0.03125;
    cfg.assumptions.forbidden_sources.insert(1);
    cfg.assumptions.forbidden_links.insert({0, 2});

    const PipConfig back = pip_config_from_json(pip_config_to_json(cfg));
    CHECK(back.backend == PipBackend::lasso);
    CHECK(back.alpha == cfg.alpha);
    CHECK(back.graph_alpha == cfg.graph_alpha);
    CHECK(back.max_cond_size == cfg.max_cond_size);
    CHECK(back.lambda_w == cfg.lambda_w);
    CHECK(back.w_threshold == cfg.w_threshold);
    CHECK(back.coeff_threshold == cfg.coeff_threshold);
    CHECK(back.assumptions == cfg.assumptions);

    CHECK(pip_config_from_json("{}").backend == PipBackend::ci);
    CHECK(pip_config_from_json("{\"backend\":\"ci_pc_stable\"}").backend == PipBackend::ci);
    CHECK(pip_config_from_json("{\"backend\":\"ci\"}").backend == PipBackend::ci);

    CHECK(mctest::code_of([] { (void)pip_config_from_json("{\"alpa\":0.1}"); }) == Errc::usage);
    CHECK(mctest::code_of([] { (void)pip_config_from_json("[1,2]"); }) == Errc::usage);
    CHECK(mctest::code_of([] { (void)pip_config_from_json("{\"alpha\":1.5}"); }) == Errc::usage);
    CHECK(mctest::code_of([] { (void)pip_config_from_json("{\"backend\":\"pc\"}"); }) ==
          Errc::usage);
    CHECK(mctest::code_of([] { (void)pip_config_from_json("{\"lambda_w\":-1}"); }) ==
          Errc::usage);
}

TEST_CASE("a pure autoregressive field yields exactly the center self edge") {
    Ndm ndm(1);
    ndm.at(0, 0, 0, 0) = 0.5;
    const GridTensor x = simulate_ndm(ndm, 4, 800, 0.1, 401);

    PipConfig cfg;  // ci backend defaults
    const StencilGraph g = discover(x, cfg);
    REQUIRE(g.edges.size() == 1);
    CHECK(g.edges[0].pos.is_center());
    CHECK(g.edges[0].src_var == 0);
    CHECK(g.edges[0].dst_var == 0);
    CHECK(g.edges[0].weight > 0.3);
    REQUIRE(g.edges[0].p_value.has_value());
    CHECK(*g.edges[0].p_value < 1e-6);
    CHECK(g.scale == WeightScale::correlation);
}

TEST_CASE("white noise produces no stable false positives") {
    const Ndm ndm(1);  // all-zero dynamics
    const GridTensor x = simulate_ndm(ndm, 4, 800, 0.1, 402);
    const StencilGraph g = discover(x, PipConfig{});
    CHECK(g.edges.size() <= 1);
}

TEST_CASE("a planted cross-variable link is recovered exactly") {
    Ndm ndm(2);
    ndm.at(0, 0, 0, 0) = 0.5;
    ndm.at(1, 1, 0, 0) = 0.4;
    ndm.at(1, 0, 1, 0) = 0.45;  // var 0 at the northern cell drives var 1
    const GridTensor x = simulate_ndm(ndm, 5, 1200, 0.1, 403);

    const StencilGraph g = discover(x, PipConfig{});
    const auto keys = edge_keys(g);
    CHECK(keys.count({0, 0, 0, 0}) == 1);
    CHECK(keys.count({0, 0, 1, 1}) == 1);
    CHECK(keys.count({1, 0, 0, 1}) == 1);
    CHECK(keys == edge_keys(ground_truth_graph(ndm)));
}

TEST_CASE("reported p for a single level-zero test matches the public primitive") {
    Rng rng(404);
    const Eigen::Index n = 200;
    MatrixXd x = random_matrix(rng, n, 9);
    MatrixXd y(n, 1);
    y.col(0) = 0.8 * x.col(4) + 0.2 * random_matrix(rng, n, 1).col(0);

    PipConfig cfg;
    cfg.max_cond_size = 0;  // level 0 only: one test per candidate
    std::vector<std::vector<char>> allowed(1, std::vector<char>(9, 1));
    const auto parents = select_parents_ci(x, y, allowed, cfg);
    REQUIRE(!parents.empty());
    for (const auto& p : parents) {
        const CiTestResult direct =
            partial_correlation_test(x.col(p.col), y.col(0), MatrixXd(n, 0));
        CHECK(p.p == doctest::Approx(direct.p_value).epsilon(1e-10));
    }
}

TEST_CASE("blacklists are honored by both backends across random configurations") {
    Rng rng(405);
    int ci_selected = 0, lasso_selected = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int v = 1 + static_cast<int>(rng.uniform_int(3));
        const int cols = 9 * v;
        const Eigen::Index n = 40 + static_cast<Eigen::Index>(rng.uniform_int(40));

        LinkAssumptions assume;
        for (int s = 0; s < v; ++s)
            if (rng.uniform() < 0.3) assume.forbidden_sources.insert(s);
        for (int s = 0; s < v; ++s)
            for (int d = 0; d < v; ++d)
                if (rng.uniform() < 0.2) assume.forbidden_links.insert({s, d});

        MatrixXd x = random_matrix(rng, n, cols);
        MatrixXd y(n, v);
        for (int t = 0; t < v; ++t) {
            y.col(t) = 0.1 * random_matrix(rng, n, 1).col(0);
            for (int k = 0; k < 4; ++k) {
                // Plant signal on arbitrary columns, forbidden ones included:
                // masking has to hold against real correlation, not just noise.
                const int c = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cols)));
                y.col(t) += (rng.uniform() < 0.5 ? 1.0 : -1.0) * x.col(c);
            }
        }

        std::vector<std::vector<char>> allowed(static_cast<std::size_t>(v),
                                               std::vector<char>(static_cast<std::size_t>(cols)));
        for (int t = 0; t < v; ++t)
            for (int c = 0; c < cols; ++c)
                allowed[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)] =
                    assume.allows(c % v, t) ? 1 : 0;

        PipConfig cfg;
        cfg.max_cond_size = 1;
        for (const auto& p : select_parents_ci(x, y, allowed, cfg)) {
            CHECK(assume.allows(p.col % v, p.target));
            ++ci_selected;
        }
        cfg.backend = PipBackend::lasso;
        cfg.lambda_w = 0.05;
        for (const auto& p : select_parents_lasso(x, y, allowed, cfg)) {
            CHECK(assume.allows(p.col % v, p.target));
            ++lasso_selected;
        }
    }
    // The fuzz is vacuous unless plenty of parents actually got selected.
    CHECK(ci_selected > 1000);
    CHECK(lasso_selected > 1000);
}

TEST_CASE("discovery commutes with variable permutation") {
    Ndm ndm(2);
    ndm.at(0, 0, 0, 0) = 0.5;
    ndm.at(1, 1, 0, 0) = 0.4;
    ndm.at(1, 0, -1, 1) = 0.45;
    const GridTensor x = simulate_ndm(ndm, 4, 1000, 0.1, 406);

    GridTensor swapped = GridTensor::zeros(x.n_rows, x.n_cols, 2, x.n_time);
    for (std::size_t i = 0; i < x.n_rows; ++i)
        for (std::size_t j = 0; j < x.n_cols; ++j)
            for (std::size_t v = 0; v < 2; ++v)
                for (std::size_t t = 0; t < x.n_time; ++t)
                    swapped.at(i, j, 1 - v, t) = x.at(i, j, v, t);

    const StencilGraph g = discover(x, PipConfig{});
    const StencilGraph h = discover(swapped, PipConfig{});
    REQUIRE(g.edges.size() == h.edges.size());
    for (const auto& e : g.edges) {
        const StencilEdge* m = h.find(e.pos, 1 - e.src_var, 1 - e.dst_var);
        REQUIRE(m != nullptr);
        CHECK(m->weight == doctest::Approx(e.weight).epsilon(1e-9));
    }
}

TEST_CASE("discovery is invariant to toroidal shifts of a strong system") {
    Ndm ndm(1);
    ndm.at(0, 0, 0, 0) = 0.5;
    ndm.at(0, 0, 1, -1) = 0.4;
    const int n = 6, t = 1500;
    const GridTensor x = simulate_ndm(ndm, n, t, 0.1, 407);

    GridTensor rolled = GridTensor::zeros(6, 6, 1, static_cast<std::size_t>(t));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            for (std::size_t k = 0; k < static_cast<std::size_t>(t); ++k)
                rolled.at((i + 1) % 6, (j + 2) % 6, 0, k) = x.at(i, j, 0, k);

    const auto want = edge_keys(ground_truth_graph(ndm));
    CHECK(edge_keys(discover(x, PipConfig{})) == want);
    CHECK(edge_keys(discover(rolled, PipConfig{})) == want);
}

TEST_CASE("lasso support shrinks as the penalty grows") {
    Rng rng(408);
    const Eigen::Index n = 200;
    MatrixXd x = random_matrix(rng, n, 18);
    MatrixXd y(n, 1);
    y.col(0) = x.col(2) - 0.8 * x.col(7) + 0.5 * x.col(12) +
               0.1 * random_matrix(rng, n, 1).col(0);
    std::vector<std::vector<char>> allowed(1, std::vector<char>(18, 1));

    std::size_t prev = 19;
    for (double lambda : {0.001, 0.01, 0.1, 0.5, 1.5}) {
        PipConfig cfg;
        cfg.backend = PipBackend::lasso;
        cfg.lambda_w = lambda;
        cfg.w_threshold = 0.0;
        const auto sel = select_parents_lasso(x, y, allowed, cfg);
        CHECK(sel.size() <= prev);
        prev = sel.size();
    }

    PipConfig cfg;
    cfg.backend = PipBackend::lasso;
    cfg.lambda_w = 0.01;
    cfg.w_threshold = 0.01;
    const auto sel = select_parents_lasso(x, y, allowed, cfg);
    std::set<int> cols;
    for (const auto& p : sel) cols.insert(p.col);
    CHECK(cols == std::set<int>{2, 7, 12});
}

TEST_CASE("chain recall flips from zero to perfect with signal strength") {
    PipConfig cfg;
    cfg.backend = PipBackend::lasso;
    cfg.lambda_w = 0.01;
    cfg.w_threshold = 0.01;

    const GeneratedSystem strong = generate_chain_system(10, 1.0, 409);
    const StencilGraph truth = ground_truth_graph(strong.ndm);
    REQUIRE(truth.edges.size() == 9);

    GenSpec spec;
    spec.n_grid = 4;
    spec.n_vars = 10;
    spec.n_time = 1000;
    spec.noise_sigma = 0.1;
    spec.seed = 410;
    const GridTensor x = simulate(strong.a, spec);
    const F1Result strong_score = graph_f1(discover(x, cfg), truth);
    CHECK(strong_score.recall == 1.0);

    const GeneratedSystem faint = generate_chain_system(10, 0.01, 409);
    const GridTensor xf = simulate(faint.a, spec);
    const F1Result faint_score = graph_f1(discover(xf, cfg), ground_truth_graph(faint.ndm));
    CHECK(faint_score.recall == 0.0);
}

TEST_CASE("too few usable rows raises before any test runs") {
    LaggedDesign d;
    d.rows = 14;  // needs 9 * 1 + 3 + 3 = 15
    d.n_vars = 1;
    d.x = MatrixXd::Random(14, 9);
    d.y = MatrixXd::Random(14, 1);
    PipConfig cfg;
    CHECK(mctest::code_of([&] { (void)pip_ci(d, cfg); }) == Errc::insufficient_samples);

    // Through the full pipeline: one interior window, 15 steps, 14 rows.
    const GridTensor x = GridTensor::zeros(3, 3, 1, 15);
    CHECK(mctest::code_of([&] { (void)discover(x, cfg); }) == Errc::insufficient_samples);

    LaggedDesign tiny;
    tiny.rows = 1;
    tiny.n_vars = 1;
    tiny.x = MatrixXd::Random(1, 9);
    tiny.y = MatrixXd::Random(1, 1);
    cfg.backend = PipBackend::lasso;
    CHECK(mctest::code_of([&] { (void)pip_lasso(tiny, cfg); }) == Errc::insufficient_samples);
}

TEST_CASE("discovery reruns are identical") {
    Ndm ndm(1);
    ndm.at(0, 0, 0, 0) = 0.5;
    const GridTensor x = simulate_ndm(ndm, 4, 500, 0.1, 411);
    const std::string a = graph_to_json(discover(x, PipConfig{}));
    const std::string b = graph_to_json(discover(x, PipConfig{}));
    CHECK(a == b);
}
