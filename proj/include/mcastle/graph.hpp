#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace mcastle {

// Scale of the weights a discovery backend reports. Aggregation with Fisher's
// z transform is only meaningful on correlation-scale weights, so graphs carry
// the tag with them instead of trusting callers to remember.
enum class WeightScale { correlation, regression };

// Parent cell offset relative to the influenced (center) cell; each component
// lies in {-1, 0, 1} for stencil graphs. (0,0) is the center itself.
struct StencilPosition {
    int dr = 0;
    int dc = 0;
    auto operator<=>(const StencilPosition&) const = default;
    bool is_center() const { return dr == 0 && dc == 0; }
};

// Flat index 0..8 for a Moore offset, row-major: 0=(-1,-1) ... 4=(0,0) ... 8=(1,1).
inline int position_index(StencilPosition p) { return (p.dr + 1) * 3 + (p.dc + 1); }
inline StencilPosition position_from_index(int k) { return {k / 3 - 1, k % 3 - 1}; }

struct StencilEdge {
    StencilPosition pos;  // where the parent sits
    int src_var = 0;      // parent variable
    int dst_var = 0;      // influenced variable, always at the center cell
    double weight = 0.0;
    std::optional<double> p_value;

    auto key() const { return std::tuple(pos.dr, pos.dc, src_var, dst_var); }
    bool operator==(const StencilEdge&) const = default;
};

// Lag-1 causal stencil: every edge targets the center cell of the window, so
// at most 9 * V^2 edges exist and (pos, src_var, dst_var) is a unique key.
// Edges are kept sorted by that key; the JSON serialization is byte-stable.
struct StencilGraph {
    int n_vars = 0;
    WeightScale scale = WeightScale::correlation;
    std::vector<StencilEdge> edges;

    // Insert preserving order; rejects duplicate keys and out-of-range vars.
    void add_edge(StencilEdge e);
    const StencilEdge* find(StencilPosition pos, int src_var, int dst_var) const;

    bool operator==(const StencilGraph&) const = default;
};

std::string graph_to_json(const StencilGraph& g);
StencilGraph graph_from_json(const std::string& text);

// Variable-interaction summary: stencil edges aggregated over positions.
// u->u edges (every position, center included) fold into self_weight[u].
struct ReactionEdge {
    int src_var = 0;
    int dst_var = 0;
    double weight = 0.0;
    auto key() const { return std::pair(src_var, dst_var); }
    bool operator==(const ReactionEdge&) const = default;
};

struct ReactionGraph {
    int n_vars = 0;
    std::vector<ReactionEdge> edges;             // src != dst, sorted by (src, dst)
    std::vector<std::optional<double>> self_weight;  // size n_vars

    bool has_edge(int u, int v) const;
    bool operator==(const ReactionGraph&) const = default;
};

// Spatial-interaction summary: stencil edges aggregated over variable pairs,
// one slot per Moore offset. The center slot is the autodependence weight.
struct SpatialGraph {
    std::array<std::optional<double>, 9> weight{};  // indexed by position_index
    bool operator==(const SpatialGraph&) const = default;
};

std::string reaction_to_json(const ReactionGraph& g);
std::string spatial_to_json(const SpatialGraph& g);

// Domain-knowledge blacklist honored by every backend: a variable in
// forbidden_sources may parent nothing; a (u, v) pair in forbidden_links bans
// u as a parent of v at any position.
struct LinkAssumptions {
    std::set<int> forbidden_sources;
    std::set<std::pair<int, int>> forbidden_links;

    bool allows(int src_var, int dst_var) const {
        return !forbidden_sources.count(src_var) && !forbidden_links.count({src_var, dst_var});
    }
    bool empty() const { return forbidden_sources.empty() && forbidden_links.empty(); }
    bool operator==(const LinkAssumptions&) const = default;
};

}  // namespace mcastle
