#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace mcastle {

// Dense space-time field on an N_rows x N_cols grid with V variables and T
// steps. Storage is row-major over (i, j, v) with t varying fastest, matching
// the on-disk layout so serialization is a single contiguous write.
//
// Orientation convention used throughout: row index i runs north (+y), column
// index j runs east (+x). Offsets (dr, dc) always describe a parent cell
// relative to the cell it influences.
struct GridTensor {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::size_t n_vars = 0;
    std::size_t n_time = 0;
    std::vector<double> data;

    static GridTensor zeros(std::size_t rows, std::size_t cols, std::size_t vars, std::size_t t);

    std::size_t size() const { return n_rows * n_cols * n_vars * n_time; }

    std::size_t index(std::size_t i, std::size_t j, std::size_t v, std::size_t t) const {
        return ((i * n_cols + j) * n_vars + v) * n_time + t;
    }
    double& at(std::size_t i, std::size_t j, std::size_t v, std::size_t t) {
        return data[index(i, j, v, t)];
    }
    double at(std::size_t i, std::size_t j, std::size_t v, std::size_t t) const {
        return data[index(i, j, v, t)];
    }

    bool operator==(const GridTensor&) const = default;
};

// Binary tensor file, bit-exact layout (all little-endian):
//   bytes 0..3   magic "MCTL"
//   bytes 4..7   u32 version = 1
//   bytes 8..11  u32 ndim = 4
//   bytes 12..43 four u64 dims [N_rows, N_cols, V, T]
//   bytes 44..   float64 values, row-major with t fastest
// Errors: io on filesystem failure, format on bad magic/version/ndim,
// validation when the payload size disagrees with the dims.
void write_tensor(const GridTensor& x, const std::filesystem::path& path);
GridTensor read_tensor(const std::filesystem::path& path);

// Optional free-form provenance sidecar at "<path>.meta.json".
void write_tensor_meta(const std::filesystem::path& tensor_path, const std::string& json_text);
std::string read_tensor_meta(const std::filesystem::path& tensor_path);  // "" if absent

}  // namespace mcastle
