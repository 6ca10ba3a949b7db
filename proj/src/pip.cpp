#include "mcastle/pip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "mcastle/errors.hpp"

namespace mcastle {

using json = nlohmann::json;

namespace {

constexpr double kRankTol = 1e-10;

double student_t_two_sided_p(double t, std::size_t dof) {
    if (!std::isfinite(t)) return 0.0;
    boost::math::students_t dist(static_cast<double>(dof));
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

// p-value for a (partial) correlation r at the given residual dof.
double corr_p_value(double r, std::size_t dof) {
    const double denom = 1.0 - r * r;
    if (denom <= 1e-15) return 0.0;
    const double t = r * std::sqrt(static_cast<double>(dof) / denom);
    return student_t_two_sided_p(t, dof);
}

// Precomputed second moments of a design: everything the CI engine needs to
// evaluate any partial correlation without touching the raw rows again.
struct CovContext {
    std::size_t n = 0;
    Eigen::MatrixXd cxx;  // p x p covariance of candidates
    Eigen::MatrixXd cxy;  // p x q cross-covariance candidates x targets
    Eigen::VectorXd cyy;  // q target variances
};

CovContext make_cov_context(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    CovContext c;
    c.n = static_cast<std::size_t>(x.rows());
    const double n = static_cast<double>(c.n);
    const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
    c.cxx = (xc.transpose() * xc) / n;
    c.cxy = (xc.transpose() * yc) / n;
    c.cyy = (yc.array().square().colwise().sum() / n).matrix().transpose();
    return c;
}

// Partial correlation of candidate a with target ty given candidate set Z,
// from the correlation-normalized covariance submatrix over [a, y, Z]. The
// normalization keeps the 1e-10 pivot tolerance meaningful across wildly
// different data scales.
double parcorr(const CovContext& c, int a, int ty, const std::vector<int>& z) {
    const int m = 2 + static_cast<int>(z.size());
    Eigen::MatrixXd s(m, m);
    auto cov = [&](int i, int j) -> double {
        // index 0 = candidate a, 1 = target, 2.. = z[k-2]
        const bool yi = (i == 1), yj = (j == 1);
        const int ci = (i == 0) ? a : (i >= 2 ? z[static_cast<std::size_t>(i - 2)] : -1);
        const int cj = (j == 0) ? a : (j >= 2 ? z[static_cast<std::size_t>(j - 2)] : -1);
        if (yi && yj) return c.cyy(ty);
        if (yi) return c.cxy(cj, ty);
        if (yj) return c.cxy(ci, ty);
        return c.cxx(ci, cj);
    };
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) s(i, j) = s(j, i) = cov(i, j);

    Eigen::VectorXd d(m);
    for (int i = 0; i < m; ++i) {
        const double v = s(i, i);
        if (!(v > 0.0) || !std::isfinite(v))
            raise(Errc::singular_design, "zero-variance column in CI test");
        d(i) = std::sqrt(v);
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) s(i, j) /= d(i) * d(j);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    const auto& pivots = ldlt.vectorD();
    for (int i = 0; i < m; ++i)
        if (!(pivots(i) > kRankTol))
            raise(Errc::singular_design, "rank-deficient conditioning set");

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, 2);
    rhs(0, 0) = 1.0;
    rhs(1, 1) = 1.0;
    const Eigen::MatrixXd omega = ldlt.solve(rhs);
    const double r = -omega(0, 1) / std::sqrt(omega(0, 0) * omega(1, 1));
    return std::clamp(r, -1.0, 1.0);
}

std::size_t ci_dof(std::size_t n, std::size_t cond_size) {
    if (n < cond_size + 3)
        raise(Errc::insufficient_samples, "not enough rows for the conditioning set");
    return n - cond_size - 2;
}

// Lexicographic size-k subset enumeration over {0..m-1}; calls fn with index
// vector, stops early when fn returns false.
template <typename Fn>
void for_each_subset(int m, int k, Fn&& fn) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    if (k == 0) {
        fn(idx);
        return;
    }
    if (k > m) return;
    while (true) {
        if (!fn(idx)) return;
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i) --i;
        if (i < 0) return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

}  // namespace

std::vector<char> benjamini_hochberg(const std::vector<double>& p_values, double q) {
    const std::size_t m = p_values.size();
    std::vector<char> keep(m, 0);
    if (m == 0) return keep;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    double cutoff = -1.0;
    for (std::size_t k = m; k >= 1; --k) {
        const double p = p_values[order[k - 1]];
        if (p <= q * static_cast<double>(k) / static_cast<double>(m)) {
            cutoff = p;
            break;
        }
    }
    if (cutoff < 0.0) return keep;
    for (std::size_t i = 0; i < m; ++i)
        if (p_values[i] <= cutoff) keep[i] = 1;
    return keep;
}

CiTestResult partial_correlation_test(const Eigen::VectorXd& a, const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& z) {
    const Eigen::Index n = a.size();
    if (y.size() != n || (z.cols() > 0 && z.rows() != n))
        raise(Errc::validation, "mismatched sample counts");
    const std::size_t dof = ci_dof(static_cast<std::size_t>(n), static_cast<std::size_t>(z.cols()));

    Eigen::VectorXd ra = a.array() - a.mean();
    Eigen::VectorXd ry = y.array() - y.mean();
    const double base_a = ra.norm(), base_y = ry.norm();
    if (z.cols() > 0) {
        Eigen::MatrixXd zc = z.rowwise() - z.colwise().mean();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(zc);
        qr.setThreshold(kRankTol);
        if (qr.rank() < z.cols())
            raise(Errc::singular_design, "rank-deficient conditioning set");
        ra -= zc * qr.solve(ra);
        ry -= zc * qr.solve(ry);
    }
    const double na = ra.norm(), ny = ry.norm();
    if (na <= kRankTol * base_a || ny <= kRankTol * base_y || na == 0.0 || ny == 0.0)
        raise(Errc::singular_design, "residual has no variance");
    const double r = std::clamp(ra.dot(ry) / (na * ny), -1.0, 1.0);
    return {r, corr_p_value(r, dof), dof};
}

std::vector<SelectedParent> select_parents_ci(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                              const std::vector<std::vector<char>>& allowed,
                                              const PipConfig& cfg) {
    const int p = static_cast<int>(x.cols());
    const int q = static_cast<int>(y.cols());
    const CovContext cov = make_cov_context(x, y);

    struct Survivor {
        int target, col;
        double min_p;
    };
    std::vector<Survivor> survivors;
    std::vector<std::vector<int>> alive_by_target(static_cast<std::size_t>(q));

    for (int t = 0; t < q; ++t) {
        std::vector<int> alive;
        for (int col = 0; col < p; ++col)
            if (allowed[static_cast<std::size_t>(t)][static_cast<std::size_t>(col)]) alive.push_back(col);
        std::vector<double> min_p(static_cast<std::size_t>(p), 1.0);

        for (int s = 0; s <= cfg.max_cond_size; ++s) {
            if (static_cast<int>(alive.size()) - 1 < s) break;
            const std::vector<int> frozen = alive;  // adjacency frozen for the whole level
            std::vector<char> removed(static_cast<std::size_t>(p), 0);
            for (int a : frozen) {
                std::vector<int> others;
                others.reserve(frozen.size() - 1);
                for (int c : frozen)
                    if (c != a) others.push_back(c);
                bool drop = false;
                std::vector<int> zbuf(static_cast<std::size_t>(s));
                for_each_subset(static_cast<int>(others.size()), s, [&](const std::vector<int>& idx) {
                    for (int k = 0; k < s; ++k)
                        zbuf[static_cast<std::size_t>(k)] = others[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
                    const double r = parcorr(cov, a, t, zbuf);
                    const double pv = corr_p_value(r, ci_dof(cov.n, static_cast<std::size_t>(s)));
                    auto& mp = min_p[static_cast<std::size_t>(a)];
                    mp = std::min(mp, pv);
                    if (pv > cfg.alpha) {
                        drop = true;
                        return false;
                    }
                    return true;
                });
                if (drop) removed[static_cast<std::size_t>(a)] = 1;
            }
            std::vector<int> next;
            for (int c : alive)
                if (!removed[static_cast<std::size_t>(c)]) next.push_back(c);
            alive = std::move(next);
        }

        alive_by_target[static_cast<std::size_t>(t)] = alive;
        for (int c : alive) survivors.push_back({t, c, min_p[static_cast<std::size_t>(c)]});
    }

    // False-discovery control across the whole graph on the survivors'
    // minimal p-values, then final weights given the post-BH parent sets.
    std::vector<double> pvec;
    pvec.reserve(survivors.size());
    for (const auto& sv : survivors) pvec.push_back(sv.min_p);
    const std::vector<char> keep = benjamini_hochberg(pvec, cfg.graph_alpha);

    std::vector<std::vector<int>> final_by_target(static_cast<std::size_t>(q));
    for (std::size_t i = 0; i < survivors.size(); ++i)
        if (keep[i]) final_by_target[static_cast<std::size_t>(survivors[i].target)].push_back(survivors[i].col);

    std::vector<SelectedParent> out;
    for (std::size_t i = 0; i < survivors.size(); ++i) {
        if (!keep[i]) continue;
        const auto& sv = survivors[i];
        const auto& final_set = final_by_target[static_cast<std::size_t>(sv.target)];
        std::vector<int> z;
        z.reserve(final_set.size() - 1);
        for (int c : final_set)
            if (c != sv.col) z.push_back(c);
        ci_dof(cov.n, z.size());  // insufficient_samples guard for the weight fit
        const double w = parcorr(cov, sv.col, sv.target, z);
        if (std::abs(w) < cfg.coeff_threshold) continue;
        out.push_back({sv.target, sv.col, w, sv.min_p, true});
    }
    std::sort(out.begin(), out.end(), [](const SelectedParent& a, const SelectedParent& b) {
        return std::tie(a.target, a.col) < std::tie(b.target, b.col);
    });
    return out;
}

std::vector<SelectedParent> select_parents_lasso(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                                 const std::vector<std::vector<char>>& allowed,
                                                 const PipConfig& cfg) {
    const Eigen::Index n = x.rows();
    const int p = static_cast<int>(x.cols());
    const int q = static_cast<int>(y.cols());
    const double nd = static_cast<double>(n);

    // Standardize candidate columns once; zero-variance columns become all-zero
    // and can never enter the active set.
    Eigen::MatrixXd xs = x.rowwise() - x.colwise().mean();
    for (int j = 0; j < p; ++j) {
        const double sd = std::sqrt(xs.col(j).squaredNorm() / nd);
        if (sd > 1e-300)
            xs.col(j) /= sd;
        else
            xs.col(j).setZero();
    }

    std::vector<SelectedParent> out;
    constexpr int kMaxSweeps = 10000;
    constexpr double kGapTol = 1e-8;

    for (int t = 0; t < q; ++t) {
        std::vector<int> active;
        for (int col = 0; col < p; ++col)
            if (allowed[static_cast<std::size_t>(t)][static_cast<std::size_t>(col)] &&
                xs.col(col).squaredNorm() > 0.0)
                active.push_back(col);

        Eigen::VectorXd yc = y.col(t).array() - y.col(t).mean();
        const double y_half_ss = yc.squaredNorm() / (2.0 * nd);
        const double tol = kGapTol * std::max(1.0, y_half_ss);
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd resid = yc;
        const double lambda = cfg.lambda_w;

        bool converged = active.empty();
        for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
            double max_step = 0.0;
            for (int j : active) {
                const double g = xs.col(j).dot(resid) / nd + beta(j);
                const double nb = std::copysign(std::max(0.0, std::abs(g) - lambda), g);
                const double delta = nb - beta(j);
                if (delta != 0.0) {
                    resid -= delta * xs.col(j);
                    beta(j) = nb;
                    max_step = std::max(max_step, std::abs(delta));
                }
            }
            // Duality gap on the centered problem; a dead-stop sweep is a CD
            // fixed point, which for lasso is the global optimum.
            double z_inf = 0.0;
            for (int j : active) z_inf = std::max(z_inf, std::abs(xs.col(j).dot(resid) / nd));
            const double scale = (z_inf > lambda && z_inf > 0.0) ? lambda / z_inf : 1.0;
            const double primal = resid.squaredNorm() / (2.0 * nd) + lambda * beta.cwiseAbs().sum();
            const double dual = -scale * scale * resid.squaredNorm() / (2.0 * nd) +
                                scale * resid.dot(yc) / nd;
            if (primal - dual <= tol || max_step == 0.0) converged = true;
        }
        if (!converged)
            raise(Errc::non_convergence, "lasso coordinate descent hit the sweep cap");

        for (int j : active) {
            const double b = beta(j);
            if (b == 0.0 || std::abs(b) < cfg.w_threshold || std::abs(b) < cfg.coeff_threshold)
                continue;
            out.push_back({t, j, b, 0.0, false});
        }
    }
    std::sort(out.begin(), out.end(), [](const SelectedParent& a, const SelectedParent& b) {
        return std::tie(a.target, a.col) < std::tie(b.target, b.col);
    });
    return out;
}

namespace {

std::vector<std::vector<char>> stencil_masks(int n_vars, const LinkAssumptions& assumptions) {
    std::vector<std::vector<char>> allowed(static_cast<std::size_t>(n_vars),
                                           std::vector<char>(static_cast<std::size_t>(9 * n_vars), 0));
    for (int t = 0; t < n_vars; ++t)
        for (int col = 0; col < 9 * n_vars; ++col)
            allowed[static_cast<std::size_t>(t)][static_cast<std::size_t>(col)] =
                assumptions.allows(col % n_vars, t) ? 1 : 0;
    return allowed;
}

StencilGraph parents_to_graph(const std::vector<SelectedParent>& parents, int n_vars,
                              WeightScale scale) {
    StencilGraph g;
    g.n_vars = n_vars;
    g.scale = scale;
    for (const auto& sp : parents) {
        StencilEdge e;
        e.pos = position_from_index(sp.col / n_vars);
        e.src_var = sp.col % n_vars;
        e.dst_var = sp.target;
        e.weight = sp.weight;
        if (sp.has_p) e.p_value = sp.p;
        g.add_edge(std::move(e));
    }
    return g;
}

}  // namespace

StencilGraph pip_ci(const LaggedDesign& design, const PipConfig& cfg) {
    const std::size_t need = 9 * static_cast<std::size_t>(design.n_vars) +
                             static_cast<std::size_t>(cfg.max_cond_size) + 3;
    if (design.rows < need)
        raise(Errc::insufficient_samples,
              "need at least " + std::to_string(need) + " usable rows, have " + std::to_string(design.rows));
    const auto allowed = stencil_masks(design.n_vars, cfg.assumptions);
    return parents_to_graph(select_parents_ci(design.x, design.y, allowed, cfg), design.n_vars,
                            WeightScale::correlation);
}

StencilGraph pip_lasso(const LaggedDesign& design, const PipConfig& cfg) {
    if (design.rows < 2)
        raise(Errc::insufficient_samples, "need at least 2 usable rows");
    const auto allowed = stencil_masks(design.n_vars, cfg.assumptions);
    return parents_to_graph(select_parents_lasso(design.x, design.y, allowed, cfg), design.n_vars,
                            WeightScale::regression);
}

StencilGraph discover(const GridTensor& x, const PipConfig& cfg) {
    const LaggedDesign design = lens_lagged_view(build_lens(x));
    return cfg.backend == PipBackend::ci ? pip_ci(design, cfg) : pip_lasso(design, cfg);
}

PipConfig pip_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::usage, std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) raise(Errc::usage, "config must be a JSON object");
    PipConfig cfg;
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "backend") {
                const std::string b = val.get<std::string>();
                if (b == "ci_pc_stable" || b == "ci")
                    cfg.backend = PipBackend::ci;
                else if (b == "lasso")
                    cfg.backend = PipBackend::lasso;
                else
                    raise(Errc::usage, "unknown backend: " + b);
            } else if (key == "alpha") {
                cfg.alpha = val.get<double>();
            } else if (key == "graph_alpha") {
                cfg.graph_alpha = val.get<double>();
            } else if (key == "max_cond_size") {
                cfg.max_cond_size = val.get<int>();
            } else if (key == "lambda_w") {
                cfg.lambda_w = val.get<double>();
            } else if (key == "w_threshold") {
                cfg.w_threshold = val.get<double>();
            } else if (key == "coeff_threshold") {
                cfg.coeff_threshold = val.get<double>();
            } else if (key == "assumptions") {
                for (const auto& [akey, aval] : val.items()) {
                    if (akey == "forbidden_sources") {
                        for (const auto& s : aval) cfg.assumptions.forbidden_sources.insert(s.get<int>());
                    } else if (akey == "forbidden_links") {
                        for (const auto& l : aval)
                            cfg.assumptions.forbidden_links.insert({l.at(0).get<int>(), l.at(1).get<int>()});
                    } else {
                        raise(Errc::usage, "unknown assumptions key: " + akey);
                    }
                }
            } else {
                raise(Errc::usage, "unknown config key: " + key);
            }
        }
    } catch (const json::exception& e) {
        raise(Errc::usage, std::string("config shape error: ") + e.what());
    }
    if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0 || cfg.graph_alpha <= 0.0 || cfg.graph_alpha >= 1.0)
        raise(Errc::usage, "alpha and graph_alpha must lie in (0, 1)");
    if (cfg.max_cond_size < 0) raise(Errc::usage, "max_cond_size must be >= 0");
    if (cfg.lambda_w < 0.0 || cfg.w_threshold < 0.0 || cfg.coeff_threshold < 0.0)
        raise(Errc::usage, "thresholds must be non-negative");
    return cfg;
}

std::string pip_config_to_json(const PipConfig& cfg) {
    json j;
    j["backend"] = cfg.backend == PipBackend::ci ? "ci_pc_stable" : "lasso";
    j["alpha"] = cfg.alpha;
    j["graph_alpha"] = cfg.graph_alpha;
    j["max_cond_size"] = cfg.max_cond_size;
    j["lambda_w"] = cfg.lambda_w;
    j["w_threshold"] = cfg.w_threshold;
    j["coeff_threshold"] = cfg.coeff_threshold;
    json fs = json::array(), fl = json::array();
    for (int s : cfg.assumptions.forbidden_sources) fs.push_back(s);
    for (const auto& [u, v] : cfg.assumptions.forbidden_links) fl.push_back({u, v});
    j["assumptions"] = {{"forbidden_sources", fs}, {"forbidden_links", fl}};
    return j.dump();
}

}  // namespace mcastle
