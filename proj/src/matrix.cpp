#include "mvpa/matrix.hpp"

namespace mvpa {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m.rows()) throw InvalidArgument("gather_rows: row index out of range");
        auto src = m.row(rows[i]);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j];
    }
    return out;
}

Matrix gather_cols(const Matrix& m, std::span<const std::size_t> cols) {
    Matrix out(m.rows(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (cols[j] >= m.cols()) throw InvalidArgument("gather_cols: column index out of range");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto src = m.row(i);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < cols.size(); ++j) dst[j] = src[cols[j]];
    }
    return out;
}

Matrix gather(const Matrix& m, std::span<const std::size_t> rows,
              std::span<const std::size_t> cols) {
    Matrix out(rows.size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j)
        if (cols[j] >= m.cols()) throw InvalidArgument("gather: column index out of range");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m.rows()) throw InvalidArgument("gather: row index out of range");
        auto src = m.row(rows[i]);
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = src[cols[j]];
    }
    return out;
}

} // namespace mvpa
