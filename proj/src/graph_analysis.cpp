#include "mcastle/graph_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include "mcastle/errors.hpp"

namespace mcastle {

double fisher_aggregate(std::span<const double> weights) {
    if (weights.empty()) raise(Errc::domain, "fisher aggregate of an empty set");
    double s = 0.0;
    for (double w : weights) {
        if (!(std::abs(w) < 1.0))
            raise(Errc::domain, "fisher aggregate needs |w| < 1");
        s += std::atanh(w);
    }
    return std::tanh(s / static_cast<double>(weights.size()));
}

namespace {

void require_correlation_scale(const StencilGraph& g) {
    if (g.scale != WeightScale::correlation)
        raise(Errc::domain, "aggregation requires correlation-scale weights");
}

}  // namespace

ReactionGraph decompose_reaction(const StencilGraph& g) {
    require_correlation_scale(g);
    ReactionGraph r;
    r.n_vars = g.n_vars;
    r.self_weight.assign(static_cast<std::size_t>(g.n_vars), std::nullopt);
    for (int u = 0; u < g.n_vars; ++u) {
        for (int v = 0; v < g.n_vars; ++v) {
            std::vector<double> ws;
            for (const auto& e : g.edges)
                if (e.src_var == u && e.dst_var == v) ws.push_back(e.weight);
            if (ws.empty()) continue;
            const double w = fisher_aggregate(ws);
            if (u == v)
                r.self_weight[static_cast<std::size_t>(u)] = w;
            else
                r.edges.push_back({u, v, w});
        }
    }
    std::sort(r.edges.begin(), r.edges.end(),
              [](const ReactionEdge& a, const ReactionEdge& b) { return a.key() < b.key(); });
    return r;
}

SpatialGraph decompose_spatial(const StencilGraph& g) {
    require_correlation_scale(g);
    SpatialGraph s;
    for (int k = 0; k < 9; ++k) {
        const auto pos = position_from_index(k);
        std::vector<double> ws;
        for (const auto& e : g.edges)
            if (e.pos == pos) ws.push_back(e.weight);
        if (!ws.empty()) s.weight[static_cast<std::size_t>(k)] = fisher_aggregate(ws);
    }
    return s;
}

AngleEstimate derive_angle(const StencilGraph& g) {
    bool any = false;
    double sx = 0.0, sy = 0.0;
    for (const auto& e : g.edges) {
        if (e.pos.is_center() || e.weight == 0.0) continue;
        any = true;
        const double mag = std::abs(e.weight);
        const double norm = std::hypot(static_cast<double>(e.pos.dr), static_cast<double>(e.pos.dc));
        // Unit vector from the parent cell toward the center, in (x=east, y=north).
        sx += mag * (-e.pos.dc / norm);
        sy += mag * (-e.pos.dr / norm);
    }
    if (!any) raise(Errc::domain, "no non-center edge with nonzero weight");
    const double resultant = std::hypot(sx, sy);
    if (resultant < 1e-12)
        raise(Errc::zero_resultant, "direction votes cancel; no net transport");
    double theta = std::atan2(sy, sx) * 180.0 / M_PI;
    if (theta < 0.0) theta += 360.0;
    if (theta >= 360.0) theta -= 360.0;
    return {theta, resultant};
}

double angle_error(double a_deg, double b_deg) {
    double d = std::fmod(std::abs(a_deg - b_deg), 360.0);
    return std::min(d, 360.0 - d);
}

F1Result f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    F1Result r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.precision = (tp + fp == 0) ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    r.recall = (tp + fn == 0) ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    r.f1 = (r.precision == 0.0 && r.recall == 0.0)
               ? 0.0
               : 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

namespace {

template <typename Key>
F1Result key_set_f1(const std::set<Key>& pred, const std::set<Key>& truth) {
    std::size_t tp = 0;
    for (const auto& k : pred) tp += truth.count(k);
    return f1_from_counts(tp, pred.size() - tp, truth.size() - tp);
}

}  // namespace

F1Result graph_f1(const StencilGraph& predicted, const StencilGraph& truth) {
    std::set<std::tuple<int, int, int, int>> p, t;
    for (const auto& e : predicted.edges) p.insert(e.key());
    for (const auto& e : truth.edges) t.insert(e.key());
    return key_set_f1(p, t);
}

F1Result reaction_f1(const ReactionGraph& predicted, const ReactionGraph& truth) {
    auto keys = [](const ReactionGraph& g) {
        std::set<std::pair<int, int>> s;
        for (const auto& e : g.edges) s.insert(e.key());
        for (int v = 0; v < g.n_vars; ++v)
            if (g.self_weight[static_cast<std::size_t>(v)]) s.insert({v, v});
        return s;
    };
    return key_set_f1(keys(predicted), keys(truth));
}

std::string f1_csv_fields(const F1Result& r) {
    std::ostringstream os;
    os << r.tp << ',' << r.fp << ',' << r.fn << ',' << r.precision << ',' << r.recall << ','
       << r.f1;
    return os.str();
}

}  // namespace mcastle
