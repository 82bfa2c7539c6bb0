#pragma once

#include <vector>

#include "mvpa/matrix.hpp"

namespace mvpa {

// Multi-output linear ridge regression. Inputs and outputs are centered so
// the intercept absorbs the means and is never penalized; weights come from
// the normal equations (Xc'Xc + lambda I) W = Xc'Y solved by Cholesky.

struct RidgeModel {
    Matrix weights;                 // n_features x n_outputs
    std::vector<double> intercept;  // n_outputs
    double lambda = 0.0;
};

// lambda must be >= 0. With lambda == 0 a rank-deficient feature matrix has
// no unique solution; that case throws DegenerateInput telling the caller to
// use lambda > 0.
RidgeModel ridge_fit(const Matrix& x, const Matrix& y, double lambda = 1.0);

Matrix ridge_predict(const RidgeModel& model, const Matrix& x);

} // namespace mvpa
