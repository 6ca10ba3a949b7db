#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "mcastle/tensor.hpp"

namespace mcastle {

// Local neighborhood embedding: every interior cell's 3x3 Moore window is
// pooled into one big 3x3 x V x L tensor, L = T * (N_rows-2) * (N_cols-2).
// This is pure re-indexing. Replicates are ordered window-major (interior
// cells row-major) with time fastest, so sample l = window * T + t.
struct LensTensor {
    int n_vars = 0;
    std::size_t n_rep = 0;   // interior window count
    std::size_t n_time = 0;  // original T
    std::vector<double> data;  // layout [(pos * V + v) * L + l], pos = position_index

    struct WindowRef {
        std::size_t wi = 0, wj = 0;  // center cell of the window in the source grid
        std::size_t t = 0;
    };
    std::vector<WindowRef> index_map;  // size L; provenance of each replicate

    std::size_t length() const { return n_rep * n_time; }
    double at(int pos, int v, std::size_t l) const {
        return data[(static_cast<std::size_t>(pos) * static_cast<std::size_t>(n_vars) +
                     static_cast<std::size_t>(v)) * length() + l];
    }
};

// Raises grid_too_small when the grid has no interior cell.
LensTensor build_lens(const GridTensor& x);

// Lag-1 supervised view: predictors are the 9V window values at t-1, responses
// the V center values at t. The first step of every window block is dropped, so
// rows = n_rep * (T-1) and no row ever pairs samples from different windows.
// Column order of X is position-major: col = position_index * V + var.
struct LaggedDesign {
    std::size_t rows = 0;
    int n_vars = 0;
    Eigen::MatrixXd x;  // rows x 9V
    Eigen::MatrixXd y;  // rows x V
    std::vector<LensTensor::WindowRef> row_ref;  // response provenance per row
};

LaggedDesign lens_lagged_view(const LensTensor& lens);

}  // namespace mcastle
