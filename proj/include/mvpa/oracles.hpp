#pragma once

#include <cstdint>
#include <vector>

#include "mvpa/matrix.hpp"
#include "mvpa/svm.hpp"

namespace mvpa::oracles {

// Test-only reference implementations. Each one takes the dumbest correct
// route (exhaustive enumeration, textbook formulas, plain loops) so the
// optimized library code has something independent to be checked against.
// Nothing here is meant for real workloads.

// Exact optimum of the k-means objective by enumerating every assignment of
// points to k non-empty clusters. Guarded to n <= 12.
double best_kmeans_inertia(const Matrix& points, std::size_t k);

// Rank table built by counting: rank_i = #(v < v_i) + (#(v == v_i) + 1) / 2.
std::vector<double> fractional_ranks(const std::vector<double>& values);

// Pearson of the rank tables, textbook sums.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

// Leave-one-in pairwise matching with its own cosine distance; ties fail.
std::vector<double> pairwise_accuracy(const Matrix& predicted, const Matrix& observed);

// Minimum-norm least squares through the pseudo-inverse of [1 | x] computed
// with a one-sided Jacobi SVD. Splits the solution into weights + intercept
// the same way ridge_fit reports it.
void least_squares(const Matrix& x, const Matrix& y, Matrix& weights,
                   std::vector<double>& intercept);

// Largest violation of the soft-margin KKT conditions for a dual solution
// on a precomputed kernel: bound points must respect their margin side,
// free points must sit on the margin.
double max_kkt_violation(const Matrix& kernel, const std::vector<int>& y, double c,
                         const std::vector<double>& alpha, double bias);

// Random rotation matrix (dim x dim) from Gram-Schmidt on a Gaussian draw.
Matrix random_orthogonal(std::size_t dim, std::uint64_t seed);

} // namespace mvpa::oracles
