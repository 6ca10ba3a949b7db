#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcastle/graph.hpp"
#include "mcastle/lens.hpp"
#include "mcastle/tensor.hpp"

namespace mcastle {

enum class PipBackend { ci, lasso };

// Shared knobs for parent identification. alpha drives the per-test CI
// decisions, graph_alpha the Benjamini-Hochberg pass over surviving edges.
// lambda_w / w_threshold belong to the lasso backend; coeff_threshold is a
// final magnitude cut applied by both.
struct PipConfig {
    PipBackend backend = PipBackend::ci;
    double alpha = 0.01;
    double graph_alpha = 0.01;
    int max_cond_size = 3;
    double lambda_w = 0.01;
    double w_threshold = 0.01;
    double coeff_threshold = 0.0;
    LinkAssumptions assumptions;
};

// Strict JSON round-trip: exactly the field names above; unknown keys are a
// usage error so sweep configs fail loudly instead of silently defaulting.
PipConfig pip_config_from_json(const std::string& text);
std::string pip_config_to_json(const PipConfig& cfg);

// Conditional-independence primitive: statistic is the correlation between
// the least-squares residuals of a and y on Z (intercept included), p-value
// two-sided Student-t with dof = n - |Z| - 2. Raises singular_design when Z
// is rank-deficient (tolerance 1e-10) or a residual has no variance, and
// insufficient_samples when dof < 1.
struct CiTestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
};
CiTestResult partial_correlation_test(const Eigen::VectorXd& a, const Eigen::VectorXd& y,
                                      const Eigen::MatrixXd& z);

// Generic engines over an arbitrary design: candidates are columns of x,
// targets columns of y. allowed(col, target) masks blacklisted pairs.
// Both return one entry per selected parent, sorted by (target, col).
struct SelectedParent {
    int target = 0;
    int col = 0;
    double weight = 0.0;
    double p = 0.0;     // CI engine: minimal p across its tests; lasso: unset (0)
    bool has_p = false;
};

// PC-stable restricted to center targets: level-s sweeps with per-level frozen
// adjacency test every surviving candidate against all size-s subsets of the
// other survivors (lexicographic), removing on p > alpha; afterwards BH at
// graph_alpha runs across all surviving edges' minimal p-values, final weights
// are the lag-1 partial correlation given the post-BH parent set, and edges
// with |weight| < coeff_threshold are dropped.
std::vector<SelectedParent> select_parents_ci(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                              const std::vector<std::vector<char>>& allowed,
                                              const PipConfig& cfg);

// Per-target L1 regression: design columns standardized to zero mean and unit
// variance, response centered on its raw scale, cyclic coordinate descent to
// duality gap 1e-8 (relative) or 1e4 sweeps (then non_convergence). Weights
// are reported on the standardized-column scale; |beta| < w_threshold and
// |beta| < coeff_threshold are zeroed.
std::vector<SelectedParent> select_parents_lasso(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                                 const std::vector<std::vector<char>>& allowed,
                                                 const PipConfig& cfg);

// Center-target identification on a lagged window design. Requires
// rows >= 9V + max_cond_size + 3 (ci) or rows >= 2 (lasso).
StencilGraph pip_ci(const LaggedDesign& design, const PipConfig& cfg);
StencilGraph pip_lasso(const LaggedDesign& design, const PipConfig& cfg);

// Full pipeline: embed every interior window, take the lag-1 view, identify
// the center parents with the configured backend.
StencilGraph discover(const GridTensor& x, const PipConfig& cfg);

// Benjamini-Hochberg step-up at level q: returns keep flags for p-values.
std::vector<char> benjamini_hochberg(const std::vector<double>& p_values, double q);

}  // namespace mcastle
