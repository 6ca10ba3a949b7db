#include "mcastle/graph.hpp"

#include <algorithm>

#include <json.hpp>

#include "mcastle/errors.hpp"

namespace mcastle {

// nlohmann::json's default object map keeps keys sorted, which together with
// the sorted edge order makes serialization deterministic byte-for-byte.
using json = nlohmann::json;

void StencilGraph::add_edge(StencilEdge e) {
    if (e.src_var < 0 || e.src_var >= n_vars || e.dst_var < 0 || e.dst_var >= n_vars)
        raise(Errc::validation, "edge variable out of range");
    if (e.pos.dr < -1 || e.pos.dr > 1 || e.pos.dc < -1 || e.pos.dc > 1)
        raise(Errc::validation, "edge position outside the Moore stencil");
    auto it = std::lower_bound(edges.begin(), edges.end(), e,
                               [](const StencilEdge& a, const StencilEdge& b) { return a.key() < b.key(); });
    if (it != edges.end() && it->key() == e.key())
        raise(Errc::validation, "duplicate edge for (position, src, dst)");
    edges.insert(it, std::move(e));
}

const StencilEdge* StencilGraph::find(StencilPosition pos, int src_var, int dst_var) const {
    for (const auto& e : edges)
        if (e.pos == pos && e.src_var == src_var && e.dst_var == dst_var) return &e;
    return nullptr;
}

std::string graph_to_json(const StencilGraph& g) {
    json j;
    j["V"] = g.n_vars;
    j["edges"] = json::array();
    for (const auto& e : g.edges) {
        json je;
        je["src"] = {{"dr", e.pos.dr}, {"dc", e.pos.dc}, {"var", e.src_var}};
        je["dst"] = e.dst_var;
        je["w"] = e.weight;
        if (e.p_value) je["p"] = *e.p_value;
        j["edges"].push_back(std::move(je));
    }
    // Correlation is the default scale; only the non-default is written so the
    // minimal shape {"V":..,"edges":[..]} stays canonical.
    if (g.scale == WeightScale::regression) j["scale"] = "regression";
    return j.dump();
}

StencilGraph graph_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(Errc::format, std::string("graph JSON parse error: ") + e.what());
    }
    if (!j.is_object() || !j.contains("V") || !j.contains("edges"))
        raise(Errc::format, "graph JSON must contain V and edges");
    StencilGraph g;
    try {
        g.n_vars = j.at("V").get<int>();
        if (j.contains("scale")) {
            const std::string s = j.at("scale").get<std::string>();
            if (s == "regression")
                g.scale = WeightScale::regression;
            else if (s == "correlation")
                g.scale = WeightScale::correlation;
            else
                raise(Errc::validation, "unknown weight scale: " + s);
        }
        for (const auto& je : j.at("edges")) {
            StencilEdge e;
            e.pos.dr = je.at("src").at("dr").get<int>();
            e.pos.dc = je.at("src").at("dc").get<int>();
            e.src_var = je.at("src").at("var").get<int>();
            e.dst_var = je.at("dst").get<int>();
            e.weight = je.at("w").get<double>();
            if (je.contains("p")) e.p_value = je.at("p").get<double>();
            g.add_edge(std::move(e));
        }
    } catch (const json::exception& e) {
        raise(Errc::format, std::string("graph JSON shape error: ") + e.what());
    }
    if (g.n_vars < 0) raise(Errc::validation, "negative variable count");
    return g;
}

bool ReactionGraph::has_edge(int u, int v) const {
    for (const auto& e : edges)
        if (e.src_var == u && e.dst_var == v) return true;
    return false;
}

std::string reaction_to_json(const ReactionGraph& g) {
    json j;
    j["V"] = g.n_vars;
    j["edges"] = json::array();
    for (const auto& e : g.edges)
        j["edges"].push_back({{"src", e.src_var}, {"dst", e.dst_var}, {"w", e.weight}});
    j["self"] = json::array();
    for (const auto& w : g.self_weight)
        j["self"].push_back(w ? json(*w) : json(nullptr));
    return j.dump();
}

std::string spatial_to_json(const SpatialGraph& g) {
    json j;
    j["positions"] = json::array();
    for (int k = 0; k < 9; ++k) {
        const auto p = position_from_index(k);
        json jp = {{"dr", p.dr}, {"dc", p.dc}};
        jp["w"] = g.weight[k] ? json(*g.weight[k]) : json(nullptr);
        j["positions"].push_back(std::move(jp));
    }
    return j.dump();
}

}  // namespace mcastle
