#include "mcastle/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include <json.hpp>

#include "mcastle/errors.hpp"
#include "mcastle/lens.hpp"

namespace mcastle {

using json = nlohmann::json;

FlatGraph direct_discover(const GridTensor& x, const PipConfig& cfg) {
    const int n = static_cast<int>(x.n_rows);
    const int nv = static_cast<int>(x.n_vars);
    const int nt = static_cast<int>(x.n_time);
    if (x.n_cols != x.n_rows) raise(Errc::validation, "flat discovery expects a square grid");
    const long long node_count = static_cast<long long>(n) * n * nv;
    if (node_count > 256)
        raise(Errc::resource_limit,
              "flat graph over " + std::to_string(node_count) + " nodes refused (limit 256)");
    const int m = static_cast<int>(node_count);
    if (cfg.backend == PipBackend::ci && nt < m + 3)
        raise(Errc::insufficient_samples,
              "CI backend needs T >= " + std::to_string(m + 3) + ", have " + std::to_string(nt));
    if (nt < 2) raise(Errc::insufficient_samples, "need at least 2 time steps");

    const int rows = nt - 1;
    Eigen::MatrixXd design(rows, m), response(rows, m);
    for (int v = 0; v < nv; ++v)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const int k = FlatGraph::node_index(v, i, j, n);
                for (int t = 1; t < nt; ++t) {
                    design(t - 1, k) = x.at(i, j, v, t - 1);
                    response(t - 1, k) = x.at(i, j, v, t);
                }
            }

    std::vector<std::vector<char>> allowed(static_cast<std::size_t>(m),
                                           std::vector<char>(static_cast<std::size_t>(m), 0));
    const int cells = n * n;
    for (int dst = 0; dst < m; ++dst)
        for (int src = 0; src < m; ++src)
            allowed[static_cast<std::size_t>(dst)][static_cast<std::size_t>(src)] =
                cfg.assumptions.allows(src / cells, dst / cells) ? 1 : 0;

    const std::vector<SelectedParent> parents =
        cfg.backend == PipBackend::ci ? select_parents_ci(design, response, allowed, cfg)
                                      : select_parents_lasso(design, response, allowed, cfg);

    FlatGraph g;
    g.n_grid = n;
    g.n_vars = nv;
    g.scale = cfg.backend == PipBackend::ci ? WeightScale::correlation : WeightScale::regression;
    for (const auto& sp : parents) {
        FlatEdge e;
        e.src = sp.col;
        e.dst = sp.target;
        e.weight = sp.weight;
        if (sp.has_p) e.p_value = sp.p;
        g.edges.push_back(e);
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const FlatEdge& a, const FlatEdge& b) {
        return std::tie(a.dst, a.src) < std::tie(b.dst, b.src);
    });
    return g;
}

DirectProjection project_direct(const FlatGraph& g) {
    const int n = g.n_grid;
    const int cells = n * n;
    // torus-minimal representative in (-N/2, N/2]
    const auto fold = [n](int d) {
        int r = ((d % n) + n) % n;
        if (r > n / 2) r -= n;
        return r;
    };
    // key (dr, dc, src_var, dst_var) -> strongest representative weight
    std::map<std::tuple<int, int, int, int>, double> seen;
    for (const auto& e : g.edges) {
        const int sv = e.src / cells, sc = e.src % cells;
        const int dv = e.dst / cells, dc_cell = e.dst % cells;
        const int dr = fold(sc / n - dc_cell / n);
        const int dcol = fold(sc % n - dc_cell % n);
        auto [it, inserted] = seen.try_emplace({dr, dcol, sv, dv}, e.weight);
        if (!inserted && std::abs(e.weight) > std::abs(it->second)) it->second = e.weight;
    }
    DirectProjection proj;
    proj.conformant.n_vars = g.n_vars;
    proj.conformant.scale = g.scale;
    for (const auto& [key, w] : seen) {
        const auto [dr, dc, sv, dv] = key;
        if (std::abs(dr) <= 1 && std::abs(dc) <= 1) {
            StencilEdge e;
            e.pos = {dr, dc};
            e.src_var = sv;
            e.dst_var = dv;
            e.weight = w;
            proj.conformant.add_edge(std::move(e));
        } else {
            ++proj.off_stencil;
        }
    }
    return proj;
}

F1Result direct_f1(const FlatGraph& predicted, const StencilGraph& truth) {
    const DirectProjection proj = project_direct(predicted);
    const F1Result base = graph_f1(proj.conformant, truth);
    return f1_from_counts(base.tp, base.fp + static_cast<std::size_t>(proj.off_stencil), base.fn);
}

StencilGraph cartesian_discover(const GridTensor& x, const PipConfig& cfg) {
    const int nv = static_cast<int>(x.n_vars);
    const int nt = static_cast<int>(x.n_time);
    StencilGraph out;
    out.n_vars = nv;
    out.scale = cfg.backend == PipBackend::ci ? WeightScale::correlation : WeightScale::regression;

    // stage 1: univariate stencil per variable
    for (int v = 0; v < nv; ++v) {
        GridTensor slice = GridTensor::zeros(x.n_rows, x.n_cols, 1, x.n_time);
        for (std::size_t i = 0; i < x.n_rows; ++i)
            for (std::size_t j = 0; j < x.n_cols; ++j)
                for (std::size_t t = 0; t < x.n_time; ++t)
                    slice.at(i, j, 0, t) = x.at(i, j, static_cast<std::size_t>(v), t);
        PipConfig uni = cfg;
        uni.assumptions = {};  // variable-level constraints do not apply within one field
        if (!cfg.assumptions.allows(v, v)) continue;
        const StencilGraph g = discover(slice, uni);
        for (const auto& e : g.edges) {
            StencilEdge copy = e;
            copy.src_var = v;
            copy.dst_var = v;
            out.add_edge(std::move(copy));
        }
    }
    if (nv == 1) return out;

    // stage 2: cross-variable discovery on the spatial-mean series; findings
    // are attachable only center-to-center
    if (nt < 2) raise(Errc::insufficient_samples, "need at least 2 time steps");
    const int rows = nt - 1;
    if (cfg.backend == PipBackend::ci && rows < nv + cfg.max_cond_size + 3)
        raise(Errc::insufficient_samples, "too few samples for the aggregate stage");
    Eigen::MatrixXd design(rows, nv), response(rows, nv);
    const double cell_count = static_cast<double>(x.n_rows) * static_cast<double>(x.n_cols);
    for (int t = 0; t < nt; ++t)
        for (int v = 0; v < nv; ++v) {
            double sum = 0.0;
            for (std::size_t i = 0; i < x.n_rows; ++i)
                for (std::size_t j = 0; j < x.n_cols; ++j)
                    sum += x.at(i, j, static_cast<std::size_t>(v), static_cast<std::size_t>(t));
            const double mean = sum / cell_count;
            if (t >= 1) response(t - 1, v) = mean;
            if (t < nt - 1) design(t, v) = mean;
        }

    std::vector<std::vector<char>> allowed(
        static_cast<std::size_t>(nv), std::vector<char>(static_cast<std::size_t>(nv), 0));
    for (int dst = 0; dst < nv; ++dst)
        for (int src = 0; src < nv; ++src)
            allowed[static_cast<std::size_t>(dst)][static_cast<std::size_t>(src)] =
                cfg.assumptions.allows(src, dst) ? 1 : 0;

    const std::vector<SelectedParent> parents =
        cfg.backend == PipBackend::ci ? select_parents_ci(design, response, allowed, cfg)
                                      : select_parents_lasso(design, response, allowed, cfg);
    for (const auto& sp : parents) {
        if (sp.col == sp.target) continue;  // self-links belong to stage 1
        StencilEdge e;
        e.pos = {0, 0};
        e.src_var = sp.col;
        e.dst_var = sp.target;
        e.weight = sp.weight;
        if (sp.has_p) e.p_value = sp.p;
        out.add_edge(std::move(e));
    }
    return out;
}

std::string flat_to_json(const FlatGraph& g) {
    json edges = json::array();
    for (const auto& e : g.edges) {
        json je{{"src", e.src}, {"dst", e.dst}, {"w", e.weight}};
        if (e.p_value) je["p"] = *e.p_value;
        edges.push_back(std::move(je));
    }
    json j{{"kind", "flat"},
           {"N", g.n_grid},
           {"V", g.n_vars},
           {"edges", std::move(edges)}};
    if (g.scale == WeightScale::regression) j["scale"] = "regression";
    return j.dump();
}

FlatGraph flat_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::format, std::string("flat graph parse error: ") + e.what());
    }
    FlatGraph g;
    try {
        if (j.at("kind").get<std::string>() != "flat")
            raise(Errc::format, "not a flat graph file");
        g.n_grid = j.at("N").get<int>();
        g.n_vars = j.at("V").get<int>();
        g.scale = j.value("scale", std::string("correlation")) == "regression"
                      ? WeightScale::regression
                      : WeightScale::correlation;
        const int limit = g.n_grid * g.n_grid * g.n_vars;
        for (const auto& je : j.at("edges")) {
            FlatEdge e;
            e.src = je.at("src").get<int>();
            e.dst = je.at("dst").get<int>();
            e.weight = je.at("w").get<double>();
            if (je.contains("p")) e.p_value = je.at("p").get<double>();
            if (e.src < 0 || e.src >= limit || e.dst < 0 || e.dst >= limit)
                raise(Errc::validation, "flat edge endpoint out of range");
            g.edges.push_back(e);
        }
    } catch (const json::exception& e) {
        raise(Errc::format, std::string("flat graph shape error: ") + e.what());
    }
    if (g.n_grid < 1 || g.n_vars < 1) raise(Errc::validation, "flat graph dims must be positive");
    return g;
}

}  // namespace mcastle
