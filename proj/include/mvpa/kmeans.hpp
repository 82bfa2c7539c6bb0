#pragma once

#include <cstdint>
#include <vector>

#include "mvpa/matrix.hpp"

namespace mvpa {

// Lloyd k-means with k-means++ seeding and multiple restarts. Every random
// draw comes from the seed, so a given (data, config) pair is reproducible.

struct KmeansConfig {
    std::size_t k = 2;
    std::size_t restarts = 10;
    std::size_t max_iterations = 300;
    std::uint64_t seed = 0;
    // When set, receives the inertia after each Lloyd iteration of the
    // winning restart. Diagnostic only.
    std::vector<double>* inertia_trace = nullptr;
};

struct ClusterResult {
    std::vector<std::size_t> assignment;   // point -> cluster, in [0, k)
    Matrix centroids;                      // k x n_features
    double inertia = 0.0;                  // sum of squared point-to-centroid distances
    std::size_t best_restart = 0;
    std::size_t iterations = 0;            // Lloyd iterations of the winning restart
};

// Requires k >= 1 and at least k points. Assignment ties (equal distance to
// two centroids) go to the lower centroid index; the best restart on equal
// inertia is the earlier one.
ClusterResult kmeans_cluster(const Matrix& points, const KmeansConfig& config = {});

} // namespace mvpa
