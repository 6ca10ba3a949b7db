#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mcastle/graph.hpp"
#include "mcastle/graph_analysis.hpp"
#include "mcastle/pip.hpp"
#include "mcastle/tensor.hpp"

namespace mcastle {

// Two-species advection-diffusion-reaction problem on a square domain:
// species 1 is injected as a Gaussian blob, decays at rate alpha, and feeds
// species 2 with conversion factor beta while both are carried by a uniform
// velocity field and diffuse.
struct AdrSpec {
    double d1 = 0.005;  // diffusion of species 1
    double d2 = 0.005;  // diffusion of species 2
    double speed = 1.0;
    double theta_deg = 0.0;  // flow direction; 0 = +x, 90 = +y (row index is y)
    double alpha = 1.0;
    double beta = 1.0;
    double domain_size = 10.0;
    double interior_extent = 6.0;  // centered analysis region side length
    int nx = 50;                   // solver cells per side
    double dt = 0.0;               // 0 = auto from the stability bound
    int sample_stride = 0;  // steps per recorded sample; 0 = auto
    // Default record length: with the auto stride (~0.75 cells of drift per
    // sample) a unit-speed run spans about four decay constants, so the
    // source species stays observable across most of the record instead of
    // flatlining early and starving the cross-species signal.
    int t_samples = 20;
    double u1_init_amplitude = 50.0;
    double blob_width = 0.0;  // Gaussian sigma; 0 = domain_size / 10
    std::uint64_t seed = 0;   // reserved; the solver itself is deterministic
};

// Largest stable explicit step: 0.5 * min(h/|v|, h^2/(4*max(D1,D2))).
double adr_max_dt(const AdrSpec& spec);

// Explicit upwind advection + central diffusion + exact-exponential reaction,
// zero-flux boundaries. Returns the centered interior crop as a grid tensor
// with V = 2 (species) and T = t_samples.
GridTensor solve_adr(const AdrSpec& spec);

struct AdrTruth {
    ReactionGraph reaction;
    double theta_deg = 0.0;
};

// The reaction structure the physics implies: both self-dependencies, plus
// species1 -> species2 whenever alpha > 0 and beta > 0.
AdrTruth adr_ground_truth(const AdrSpec& spec);

struct AdrMetrics {
    std::string experiment_id;
    F1Result reaction_f1;
    double theta_true = 0.0;
    std::optional<double> theta_hat;    // empty when the stencil was isotropic
    std::optional<double> delta_theta;  // empty likewise
};

struct AdrOutcome {
    StencilGraph stencil;
    ReactionGraph reaction;
    std::optional<AngleEstimate> angle;
    AdrMetrics metrics;
};

// Full verification pipeline for one spec: solve, discover with the given
// config (CI backend required for correlation-scaled decomposition), split
// into reaction graph and flow angle, score against the known truth. An
// isotropic stencil (zero resultant) is recorded, not raised.
AdrOutcome run_adr_experiment(const AdrSpec& spec, const PipConfig& cfg);

// Fixed evaluation row schema shared by the sweep CSV and eval subcommand.
extern const char* const kMetricsCsvHeader;
std::string metrics_csv_row(const AdrMetrics& m);

}  // namespace mcastle
