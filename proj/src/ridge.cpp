#include "mvpa/ridge.hpp"

#include <cmath>

namespace mvpa {

namespace {

// In-place lower Cholesky of a symmetric positive definite matrix. Returns
// false when a pivot is not usable, which for our normal equations means the
// (unregularized) system is rank deficient.
bool cholesky(Matrix& a) {
    const std::size_t d = a.rows();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, a(i, i));
    const double floor = max_diag > 0.0 ? max_diag * 1e-13 : 0.0;

    for (std::size_t j = 0; j < d; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
        if (!(diag > floor)) return false;
        const double l = std::sqrt(diag);
        a(j, j) = l;
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = a(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
            a(i, j) = v / l;
        }
    }
    return true;
}

// Solves L L' w = b for every column of b, in place.
void cholesky_solve(const Matrix& l, Matrix& b) {
    const std::size_t d = l.rows();
    for (std::size_t col = 0; col < b.cols(); ++col) {
        for (std::size_t i = 0; i < d; ++i) {
            double v = b(i, col);
            for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * b(k, col);
            b(i, col) = v / l(i, i);
        }
        for (std::size_t i = d; i-- > 0;) {
            double v = b(i, col);
            for (std::size_t k = i + 1; k < d; ++k) v -= l(k, i) * b(k, col);
            b(i, col) = v / l(i, i);
        }
    }
}

} // namespace

RidgeModel ridge_fit(const Matrix& x, const Matrix& y, double lambda) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t m = y.cols();
    if (n == 0 || d == 0) throw InvalidArgument("ridge_fit: empty feature matrix");
    if (y.rows() != n) throw InvalidArgument("ridge_fit: row count mismatch between x and y");
    if (m == 0) throw InvalidArgument("ridge_fit: no output columns");
    if (!(lambda >= 0.0)) throw InvalidArgument("ridge_fit: lambda must be >= 0");
    for (double v : std::span<const double>(x.data(), x.size()))
        if (!std::isfinite(v)) throw DegenerateInput("ridge_fit: non-finite feature value");
    for (double v : std::span<const double>(y.data(), y.size()))
        if (!std::isfinite(v)) throw DegenerateInput("ridge_fit: non-finite target value");

    std::vector<double> x_mean(d, 0.0), y_mean(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) x_mean[j] += x(i, j);
        for (std::size_t j = 0; j < m; ++j) y_mean[j] += y(i, j);
    }
    for (auto& v : x_mean) v /= static_cast<double>(n);
    for (auto& v : y_mean) v /= static_cast<double>(n);

    Matrix xc(n, d), yc(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) xc(i, j) = x(i, j) - x_mean[j];
        for (std::size_t j = 0; j < m; ++j) yc(i, j) = y(i, j) - y_mean[j];
    }

    Matrix gram(d, d);
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += xc(i, a) * xc(i, b);
            gram(a, b) = s;
            gram(b, a) = s;
        }
        gram(a, a) += lambda;
    }

    Matrix rhs(d, m);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += xc(i, a) * yc(i, j);
            rhs(a, j) = s;
        }

    if (!cholesky(gram)) {
        if (lambda == 0.0)
            throw DegenerateInput(
                "ridge_fit: feature matrix is rank deficient with lambda = 0; "
                "set lambda > 0 to regularize");
        throw DegenerateInput("ridge_fit: normal equations are numerically singular");
    }
    cholesky_solve(gram, rhs);

    RidgeModel model;
    model.weights = std::move(rhs);
    model.lambda = lambda;
    model.intercept.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        double v = y_mean[j];
        for (std::size_t a = 0; a < d; ++a) v -= x_mean[a] * model.weights(a, j);
        model.intercept[j] = v;
    }
    return model;
}

Matrix ridge_predict(const RidgeModel& model, const Matrix& x) {
    if (x.cols() != model.weights.rows())
        throw InvalidArgument("ridge_predict: feature dimension mismatch");
    const std::size_t n = x.rows();
    const std::size_t m = model.weights.cols();
    Matrix out(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            double v = model.intercept[j];
            for (std::size_t a = 0; a < x.cols(); ++a) v += x(i, a) * model.weights(a, j);
            out(i, j) = v;
        }
    return out;
}

} // namespace mvpa
