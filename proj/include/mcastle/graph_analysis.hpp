#pragma once

#include <cstddef>
#include <span>

#include "mcastle/graph.hpp"

namespace mcastle {

// Fisher-z average of correlation-scale weights: tanh(mean(atanh(w))).
// Signed; preserves sign structure instead of averaging magnitudes.
// Raises domain on an empty span or any |w| >= 1.
double fisher_aggregate(std::span<const double> weights);

// Collapse a stencil graph over positions into a variable-interaction graph.
// For u != v the 9 possible (u -> v) edges aggregate into one reaction edge;
// u -> u edges (center included) aggregate into the node's self-weight.
// Raises domain unless the graph carries correlation-scale weights.
ReactionGraph decompose_reaction(const StencilGraph& g);

// Collapse over variable pairs into per-position weights. The center slot is
// the aggregate autodependence. Same correlation-scale requirement.
SpatialGraph decompose_spatial(const StencilGraph& g);

// Direction of net transport implied by the non-center edges. Each parent at
// offset (dr,dc) votes with magnitude |w| along the unit vector from its cell
// toward the center; with rows running north and columns east that vector has
// angle atan2(-dr, -dc): W->0, SW->45, S->90, SE->135, E->180, NE->225,
// N->270, NW->315 degrees. Raises zero_resultant when the votes cancel below
// 1e-12, and domain when no non-center edge with |w| > 0 exists.
struct AngleEstimate {
    double theta_deg = 0.0;   // [0, 360)
    double resultant = 0.0;   // magnitude of the vector sum
};
AngleEstimate derive_angle(const StencilGraph& g);

// Circular distance between two angles in degrees, in [0, 180].
double angle_error(double a_deg, double b_deg);

// Structural precision/recall/F1 on edge keys. Degenerate conventions:
// precision := 1 when TP+FP = 0, recall := 1 when TP+FN = 0, and f1 := 0 when
// precision = recall = 0; two empty graphs therefore score F1 = 1.
struct F1Result {
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
};
F1Result f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// Stencil comparison keys on (position, src_var, dst_var); weights ignored.
F1Result graph_f1(const StencilGraph& predicted, const StencilGraph& truth);

// Reaction comparison keys on (src_var, dst_var) with self-weights counted as
// u -> u edges.
F1Result reaction_f1(const ReactionGraph& predicted, const ReactionGraph& truth);

// One flat metrics row for sweep CSVs.
std::string f1_csv_fields(const F1Result& r);

}  // namespace mcastle
