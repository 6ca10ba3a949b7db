#include "mcastle/lens.hpp"

#include "mcastle/errors.hpp"
#include "mcastle/graph.hpp"

namespace mcastle {

LensTensor build_lens(const GridTensor& x) {
    if (x.n_rows < 3 || x.n_cols < 3)
        raise(Errc::grid_too_small, "grid has no interior 3x3 window");
    if (x.n_vars == 0 || x.n_time == 0)
        raise(Errc::validation, "tensor has no variables or no time steps");

    LensTensor lens;
    lens.n_vars = static_cast<int>(x.n_vars);
    lens.n_rep = (x.n_rows - 2) * (x.n_cols - 2);
    lens.n_time = x.n_time;
    const std::size_t L = lens.length();
    lens.data.assign(9 * x.n_vars * L, 0.0);
    lens.index_map.resize(L);

    std::size_t w = 0;
    for (std::size_t i = 1; i + 1 < x.n_rows; ++i) {
        for (std::size_t j = 1; j + 1 < x.n_cols; ++j, ++w) {
            for (std::size_t t = 0; t < x.n_time; ++t) {
                const std::size_t l = w * x.n_time + t;
                lens.index_map[l] = {i, j, t};
                for (int pos = 0; pos < 9; ++pos) {
                    const auto off = position_from_index(pos);
                    const std::size_t si = i + static_cast<std::size_t>(off.dr + 1) - 1;
                    const std::size_t sj = j + static_cast<std::size_t>(off.dc + 1) - 1;
                    for (std::size_t v = 0; v < x.n_vars; ++v)
                        lens.data[(static_cast<std::size_t>(pos) * x.n_vars + v) * L + l] =
                            x.at(si, sj, v, t);
                }
            }
        }
    }
    return lens;
}

LaggedDesign lens_lagged_view(const LensTensor& lens) {
    if (lens.n_time < 2)
        raise(Errc::insufficient_samples, "need at least two time steps for a lag-1 view");

    LaggedDesign d;
    d.n_vars = lens.n_vars;
    d.rows = lens.n_rep * (lens.n_time - 1);
    const int V = lens.n_vars;
    d.x.resize(static_cast<Eigen::Index>(d.rows), 9 * V);
    d.y.resize(static_cast<Eigen::Index>(d.rows), V);
    d.row_ref.resize(d.rows);

    const int center = position_index({0, 0});
    std::size_t r = 0;
    for (std::size_t w = 0; w < lens.n_rep; ++w) {
        for (std::size_t t = 1; t < lens.n_time; ++t, ++r) {
            const std::size_t l_prev = w * lens.n_time + (t - 1);
            const std::size_t l_cur = w * lens.n_time + t;
            d.row_ref[r] = lens.index_map[l_cur];
            for (int pos = 0; pos < 9; ++pos)
                for (int v = 0; v < V; ++v)
                    d.x(static_cast<Eigen::Index>(r), pos * V + v) = lens.at(pos, v, l_prev);
            for (int v = 0; v < V; ++v)
                d.y(static_cast<Eigen::Index>(r), v) = lens.at(center, v, l_cur);
        }
    }
    return d;
}

}  // namespace mcastle
