#include "mcastle/theory.hpp"

#include <algorithm>
#include <cmath>

#include "mcastle/errors.hpp"

namespace mcastle {

std::size_t effective_samples(std::size_t n_rows, std::size_t n_cols, std::size_t t) {
    if (n_rows < 3 || n_cols < 3)
        raise(Errc::grid_too_small, "grid has no interior 3x3 window");
    return t * (n_rows - 2) * (n_cols - 2);
}

double design_effect_1d(std::span<const double> rho) {
    double s = 0.0;
    for (double r : rho) s += r;
    return 1.0 + 2.0 * s;
}

double vif_1d(std::span<const double> rho, std::size_t n) {
    double s = 0.0;
    for (std::size_t k = 1; k <= rho.size() && k < n; ++k)
        s += rho[k - 1] * (1.0 - static_cast<double>(k) / static_cast<double>(n));
    return 1.0 + 2.0 * s;
}

double design_effect_window(double nx, double ny) {
    if (nx < 1.0 || ny < 1.0)
        raise(Errc::domain, "window lattice must be at least 1x1");
    // Fractional cell overlap of two 3x3 windows shifted by (i, j).
    static constexpr double rho[3][3] = {
        {0.0, 6.0 / 9.0, 3.0 / 9.0},
        {6.0 / 9.0, 4.0 / 9.0, 2.0 / 9.0},
        {3.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0},
    };
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == 0 && j == 0) continue;
            const double wi = std::max(0.0, 1.0 - i / nx);
            const double wj = std::max(0.0, 1.0 - j / ny);
            s += rho[i][j] * wi * wj;
        }
    }
    return 1.0 + 2.0 * s;
}

double error_reduction(std::size_t n, std::size_t t) {
    const double l = static_cast<double>(effective_samples(n, n, t));
    const double de = design_effect_window(static_cast<double>(n - 2), static_cast<double>(n - 2));
    return std::sqrt(l / de / static_cast<double>(t));
}

ComplexityReport complexity_compare(std::size_t n, std::size_t v, std::size_t t) {
    if (n == 0 || v == 0 || t == 0) raise(Errc::domain, "n, v, t must be positive");
    const double log10_2 = std::log10(2.0);
    const double nd = static_cast<double>(n);
    const double vd = static_cast<double>(v);
    const double td = static_cast<double>(t);
    ComplexityReport r;
    r.search_naive_log2 = nd * nd * vd;
    r.search_windowed_log2 = 9.0 * vd;
    r.search_ratio_log10 = (r.search_naive_log2 - r.search_windowed_log2) * log10_2;
    r.naive_cost_log10 = std::log10(td) + 6.0 * std::log10(nd) + 3.0 * std::log10(vd) +
                         r.search_naive_log2 * log10_2;
    r.windowed_cost_log10 = std::log10(td) + 2.0 * std::log10(nd) + 3.0 * std::log10(vd) +
                          r.search_windowed_log2 * log10_2;
    return r;
}

}  // namespace mcastle
