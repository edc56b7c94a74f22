#include "kfhe/matrix.hpp"

#include "kfhe/errors.hpp"

namespace kfhe {

BytePlanes segment_matrix(const U32Matrix& m, Layout layout) {
    BytePlanes planes;
    for (auto& p : planes) p = ByteMatrix(m.rows, m.cols, layout);
    if (layout == m.layout) {
        for (std::size_t idx = 0; idx < m.data.size(); ++idx) {
            const u32 v = m.data[idx];
            for (unsigned b = 0; b < 4; ++b)
                planes[b].data[idx] = static_cast<std::uint8_t>(v >> (8 * b));
        }
        return planes;
    }
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            const u32 v = m(i, j);
            for (unsigned b = 0; b < 4; ++b)
                planes[b](i, j) = static_cast<std::uint8_t>(v >> (8 * b));
        }
    }
    return planes;
}

U32Matrix fuse_planes(const BytePlanes& planes, Layout layout) {
    const std::size_t rows = planes[0].rows, cols = planes[0].cols;
    for (const auto& p : planes) {
        if (p.rows != rows || p.cols != cols) throw MismatchError("byte planes differ in shape");
    }
    U32Matrix out(rows, cols, layout);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            u32 v = 0;
            for (unsigned b = 0; b < 4; ++b) v |= static_cast<u32>(planes[b](i, j)) << (8 * b);
            out(i, j) = v;
        }
    }
    return out;
}

}  // namespace kfhe
