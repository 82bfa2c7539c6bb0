#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvpa/errors.hpp"

namespace mvpa {

// Dense row-major matrix of doubles. All numeric work in the library happens
// in double precision regardless of on-disk storage width.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return Matrix();
        Matrix m(rows.size(), rows[0].size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_)
                throw InvalidArgument("Matrix::from_rows: ragged input");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

// Copies of selected rows / columns, in the order given by the index lists.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);
Matrix gather_cols(const Matrix& m, std::span<const std::size_t> cols);
Matrix gather(const Matrix& m, std::span<const std::size_t> rows,
              std::span<const std::size_t> cols);

} // namespace mvpa
