#include "mvpa/kmeans.hpp"

#include <cmath>
#include <limits>

#include "mvpa/rng.hpp"
#include "mvpa/stats.hpp"

namespace mvpa {

namespace {

struct Run {
    std::vector<std::size_t> assignment;
    Matrix centroids;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> trace;
};

// k-means++: first center uniform, each further center sampled with
// probability proportional to the squared distance to the nearest chosen
// center. Prefix-sum walk in point order keeps the draw deterministic.
Matrix seed_centroids(const Matrix& points, std::size_t k, Rng& rng) {
    const std::size_t n = points.rows();
    Matrix centroids(k, points.cols());
    std::vector<bool> taken(n, false);

    std::size_t first = static_cast<std::size_t>(rng.next_below(n));
    taken[first] = true;
    for (std::size_t j = 0; j < points.cols(); ++j) centroids(0, j) = points(first, j);

    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i)
        dist2[i] = squared_distance(points.row(i), centroids.row(0));

    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += dist2[i];
        std::size_t chosen = n;
        if (total > 0.0) {
            const double target = rng.next_double() * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += dist2[i];
                if (target < acc) {
                    chosen = i;
                    break;
                }
            }
            if (chosen == n) {
                // Rounding pushed the target past the last positive weight.
                for (std::size_t i = n; i-- > 0;)
                    if (dist2[i] > 0.0) { chosen = i; break; }
            }
        }
        if (chosen == n) {
            // All remaining points coincide with chosen centers; take the
            // lowest-index point not already used.
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i]) { chosen = i; break; }
            if (chosen == n) chosen = 0;
        }
        taken[chosen] = true;
        for (std::size_t j = 0; j < points.cols(); ++j) centroids(c, j) = points(chosen, j);
        for (std::size_t i = 0; i < n; ++i)
            dist2[i] = std::min(dist2[i], squared_distance(points.row(i), centroids.row(c)));
    }
    return centroids;
}

void assign_points(const Matrix& points, const Matrix& centroids,
                   std::vector<std::size_t>& assignment) {
    const std::size_t k = centroids.rows();
    for (std::size_t i = 0; i < points.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_c = 0;
        for (std::size_t c = 0; c < k; ++c) {
            const double d = squared_distance(points.row(i), centroids.row(c));
            if (d < best) {   // strict: ties keep the lower centroid index
                best = d;
                best_c = c;
            }
        }
        assignment[i] = best_c;
    }
}

// An empty cluster captures the point farthest from its assigned centroid
// (lowest index on ties) and becomes centered on it. Repeats until every
// cluster is populated.
void repair_empty_clusters(const Matrix& points, Matrix& centroids,
                           std::vector<std::size_t>& assignment) {
    const std::size_t n = points.rows();
    const std::size_t k = centroids.rows();
    std::vector<std::size_t> counts(k);
    for (;;) {
        std::fill(counts.begin(), counts.end(), 0);
        for (auto a : assignment) ++counts[a];
        std::size_t empty = k;
        for (std::size_t c = 0; c < k; ++c)
            if (counts[c] == 0) { empty = c; break; }
        if (empty == k) return;

        double worst = -1.0;
        std::size_t worst_i = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (counts[assignment[i]] <= 1) continue;  // do not empty another cluster
            const double d = squared_distance(points.row(i), centroids.row(assignment[i]));
            if (d > worst) {
                worst = d;
                worst_i = i;
            }
        }
        if (worst_i == n) return;  // n == k and every cluster is a singleton
        assignment[worst_i] = empty;
        for (std::size_t j = 0; j < points.cols(); ++j)
            centroids(empty, j) = points(worst_i, j);
    }
}

double inertia_of(const Matrix& points, const Matrix& centroids,
                  const std::vector<std::size_t>& assignment) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        total += squared_distance(points.row(i), centroids.row(assignment[i]));
    return total;
}

Run lloyd(const Matrix& points, std::size_t k, std::size_t max_iterations, Rng& rng,
          bool want_trace) {
    const std::size_t n = points.rows();
    Run run;
    run.centroids = seed_centroids(points, k, rng);
    run.assignment.assign(n, 0);
    std::vector<std::size_t> previous(n, n);   // n = sentinel, differs from any cluster
    std::vector<std::size_t> counts(k);

    for (std::size_t it = 0; it < max_iterations; ++it) {
        assign_points(points, run.centroids, run.assignment);
        repair_empty_clusters(points, run.centroids, run.assignment);
        run.iterations = it + 1;
        if (want_trace) run.trace.push_back(inertia_of(points, run.centroids, run.assignment));
        if (run.assignment == previous) break;
        previous = run.assignment;

        // Centroid update: mean of members in point order.
        std::fill(counts.begin(), counts.end(), 0);
        Matrix sums(k, points.cols());
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = run.assignment[i];
            ++counts[c];
            auto row = points.row(i);
            for (std::size_t j = 0; j < points.cols(); ++j) sums(c, j) += row[j];
        }
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < points.cols(); ++j)
                run.centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }

    // The loop can exit on the iteration cap right after a centroid update;
    // one more assignment keeps labels consistent with the final centroids.
    assign_points(points, run.centroids, run.assignment);
    repair_empty_clusters(points, run.centroids, run.assignment);
    run.inertia = inertia_of(points, run.centroids, run.assignment);
    return run;
}

} // namespace

ClusterResult kmeans_cluster(const Matrix& points, const KmeansConfig& config) {
    const std::size_t n = points.rows();
    if (config.k == 0) throw InvalidArgument("kmeans_cluster: k must be positive");
    if (config.restarts == 0) throw InvalidArgument("kmeans_cluster: restarts must be positive");
    if (config.max_iterations == 0)
        throw InvalidArgument("kmeans_cluster: max_iterations must be positive");
    if (n < config.k)
        throw InvalidArgument("kmeans_cluster: fewer points (" + std::to_string(n) +
                              ") than clusters (" + std::to_string(config.k) + ")");
    for (double v : std::span<const double>(points.data(), points.size()))
        if (!std::isfinite(v)) throw DegenerateInput("kmeans_cluster: non-finite value");

    ClusterResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    std::vector<double> best_trace;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        Rng rng(derive_seed(config.seed, r));
        Run run = lloyd(points, config.k, config.max_iterations, rng,
                        config.inertia_trace != nullptr);
        if (run.inertia < best.inertia) {   // strict: ties keep the earlier restart
            best.assignment = std::move(run.assignment);
            best.centroids = std::move(run.centroids);
            best.inertia = run.inertia;
            best.best_restart = r;
            best.iterations = run.iterations;
            best_trace = std::move(run.trace);
        }
    }
    if (config.inertia_trace) *config.inertia_trace = std::move(best_trace);
    return best;
}

} // namespace mvpa
