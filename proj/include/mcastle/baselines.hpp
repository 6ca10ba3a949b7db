#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcastle/graph.hpp"
#include "mcastle/graph_analysis.hpp"
#include "mcastle/pip.hpp"
#include "mcastle/tensor.hpp"

namespace mcastle {

// Lag-1 edge between flattened (variable, cell) nodes.
struct FlatEdge {
    int src = 0;
    int dst = 0;
    double weight = 0.0;
    std::optional<double> p_value;
};

// Graph over every (variable, cell) node of an N x N grid; node index
// v * N^2 + i * N + j.
struct FlatGraph {
    int n_grid = 0;
    int n_vars = 0;
    WeightScale scale = WeightScale::correlation;
    std::vector<FlatEdge> edges;  // sorted by (dst, src)

    static int node_index(int v, int i, int j, int n_grid) {
        return (v * n_grid + i) * n_grid + j;
    }
};

std::string flat_to_json(const FlatGraph& g);
FlatGraph flat_from_json(const std::string& text);

// Non-stencil baseline: one discovery problem over all N^2 V nodes at lag 1.
// Refuses more than 256 nodes; the CI backend additionally needs
// T >= N^2 V + 3 samples.
FlatGraph direct_discover(const GridTensor& x, const PipConfig& cfg);

// Flat edges folded onto torus-minimal parent-child offsets and deduplicated
// to distinct (offset, src_var, dst_var) triples. Offsets outside the Moore
// stencil cannot match any stencil truth and are tallied separately.
struct DirectProjection {
    StencilGraph conformant;
    int off_stencil = 0;
};
DirectProjection project_direct(const FlatGraph& g);

// Score a flat prediction against stencil truth: conformant triples match
// normally, off-stencil triples all count as false positives.
F1Result direct_f1(const FlatGraph& predicted, const StencilGraph& truth);

// Ablation baseline: per-variable univariate stencils plus a non-spatial
// cross-variable stage on each variable's grid-mean series, whose findings
// enter only as center-to-center links.
StencilGraph cartesian_discover(const GridTensor& x, const PipConfig& cfg);

}  // namespace mcastle
