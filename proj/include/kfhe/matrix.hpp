#pragma once

// Dense matrices used by the GEMM-formulated NTT: 32-bit residue matrices,
// 32-bit signed accumulator matrices and 8-bit byte-plane matrices.

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "kfhe/modarith.hpp"

namespace kfhe {

enum class Layout { row_major, column_major };

template <typename T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Layout layout = Layout::row_major;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, Layout l = Layout::row_major)
        : rows(r), cols(c), layout(l), data(r * c) {}

    std::size_t index(std::size_t i, std::size_t j) const {
        return layout == Layout::row_major ? i * cols + j : j * rows + i;
    }
    T& operator()(std::size_t i, std::size_t j) { return data[index(i, j)]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[index(i, j)]; }

    // Same logical matrix stored in the requested layout.
    Matrix relayout(Layout target) const {
        if (target == layout) return *this;
        Matrix out(rows, cols, target);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) out(i, j) = (*this)(i, j);
        return out;
    }

    // Logical equality, independent of storage layout.
    friend bool operator==(const Matrix& a, const Matrix& b) {
        if (a.rows != b.rows || a.cols != b.cols) return false;
        if (a.layout == b.layout) return a.data == b.data;
        for (std::size_t i = 0; i < a.rows; ++i)
            for (std::size_t j = 0; j < a.cols; ++j)
                if (a(i, j) != b(i, j)) return false;
        return true;
    }
};

using U32Matrix = Matrix<u32>;
using I32Matrix = Matrix<std::int32_t>;
using ByteMatrix = Matrix<std::uint8_t>;

// Four byte-planes of a u32 matrix; plane b holds bits [8b, 8b+8) of every element.
using BytePlanes = std::array<ByteMatrix, 4>;

// Slice every element into its four bytes. Planes are stored in `layout`.
BytePlanes segment_matrix(const U32Matrix& m, Layout layout = Layout::column_major);

// Inverse of segment_matrix: sum_b plane_b * 2^(8b), exact over the integers.
U32Matrix fuse_planes(const BytePlanes& planes, Layout layout = Layout::row_major);

}  // namespace kfhe
