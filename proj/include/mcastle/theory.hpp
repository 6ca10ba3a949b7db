#pragma once

#include <cstddef>
#include <span>

namespace mcastle {

// Closed-form sample-efficiency and complexity calculators for the windowed
// embedding. All functions are pure.

// Number of pooled window samples: every interior cell contributes one window
// per time step. Raises grid_too_small when no interior cell exists.
std::size_t effective_samples(std::size_t n_rows, std::size_t n_cols, std::size_t t);
inline std::size_t effective_samples(std::size_t n, std::size_t t) { return effective_samples(n, n, t); }

// Variance-inflation design effect for a 1-D series of replicates with
// lag-correlation profile rho[k-1] = rho_k: DE = 1 + 2 * sum_k rho_k.
double design_effect_1d(std::span<const double> rho);

// Finite-sample variant with triangular weights, truncated at k < n:
// 1 + 2 * sum_k rho_k * (1 - k/n).
double vif_1d(std::span<const double> rho, std::size_t n);

// Windowed design effect over a 2-D lattice of overlapping 3x3 windows laid
// out on an nx-by-ny grid of window positions:
//   DE = 1 + 2 * sum_{(i,j) != (0,0), i,j < 3} rho_ij * w(i, nx) * w(j, ny)
// with w(k, n) = max(0, 1 - k/n) and the fixed fractional-overlap table
// rho_10 = rho_01 = 6/9, rho_11 = 4/9, rho_20 = rho_02 = 3/9,
// rho_21 = rho_12 = 2/9, rho_22 = 1/9.
// DE(1,1) = 1 and DE grows toward its infinite-grid limit of 7.
double design_effect_window(double nx, double ny);

// sqrt(L_eff / T) where L_eff = effective_samples(n,n,t) / DE of the (n-2)^2
// window lattice: the single-site error-bar shrink factor of pooling.
double error_reduction(std::size_t n, std::size_t t);

// Search-space and cost comparison between per-window discovery (9V lag-1
// candidates per target) and discovery over the flattened N^2 V node set.
// Everything is reported in log space; the linear values overflow long before
// the sizes of interest.
struct ComplexityReport {
    double search_naive_log2 = 0;   // N^2 * V
    double search_windowed_log2 = 0;  // 9 * V
    double search_ratio_log10 = 0;  // (N^2 V - 9V) * log10(2)
    double naive_cost_log10 = 0;    // log10(T N^6 V^3 2^(N^2 V))
    double windowed_cost_log10 = 0;   // log10(T N^2 V^3 2^(9V))
};
ComplexityReport complexity_compare(std::size_t n, std::size_t v, std::size_t t);

}  // namespace mcastle
