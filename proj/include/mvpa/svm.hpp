#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mvpa/matrix.hpp"

namespace mvpa {

// Binary soft-margin SVM with an RBF kernel, trained by sequential minimal
// optimization on the dual (maximal-violating-pair working set selection).
// Deterministic: no randomness anywhere, ties in the pair selection go to
// the lowest index.

struct SvmConfig {
    double c = 1.0;
    // Kernel width. Unset means 1 / (n_features * variance of all training
    // entries), falling back to 1 / n_features when that variance is zero.
    std::optional<double> gamma;
    double tol = 1e-3;           // stop when the max KKT violation drops below this
    std::size_t max_iter = 10000;
};

struct SvmModel {
    Matrix support_vectors;
    std::vector<double> dual_coefficients;  // alpha_i * y_i, same order as rows above
    double bias = 0.0;
    double gamma = 0.0;
    double regularization_c = 1.0;
    std::size_t solver_iterations = 0;
    bool solver_converged = false;
};

// gamma = 1 / (n_features * population variance of the listed rows' entries);
// 1 / n_features when the variance is zero. Iteration order is rows as given,
// columns within each row, so callers that must agree bitwise can share it.
double rbf_gamma_scale(const Matrix& x, std::span<const std::size_t> rows);
double rbf_gamma_scale(const Matrix& x);

// Dual solution for a precomputed kernel Gram matrix.
struct SmoSolution {
    std::vector<double> alpha;
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

SmoSolution smo_solve(const Matrix& kernel, const std::vector<int>& y, double c,
                      double tol, std::size_t max_iter);

// Labels must be +1/-1 with both classes present; features must be finite.
SvmModel svm_fit(const Matrix& x, const std::vector<int>& y, const SvmConfig& config = {});

// Decision values f(x) = sum_i dual_i * k(sv_i, x) + bias.
std::vector<double> svm_decision(const SvmModel& model, const Matrix& x);

// Predicted labels; f(x) >= 0 maps to +1.
std::vector<int> svm_classify(const SvmModel& model, const Matrix& x);

} // namespace mvpa
