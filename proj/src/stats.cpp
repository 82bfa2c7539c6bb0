#include "mvpa/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mvpa {

namespace {

double pairwise_sum_range(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_range(v, half) + pairwise_sum_range(v + half, n - half);
}

} // namespace

double pairwise_sum(std::span<const double> values) {
    return pairwise_sum_range(values.data(), values.size());
}

double mean(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("mean: empty input");
    return pairwise_sum(values) / static_cast<double>(values.size());
}

double population_variance(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("population_variance: empty input");
    const double m = mean(values);
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - m;
        sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(values.size());
}

double population_stddev(std::span<const double> values) {
    return std::sqrt(population_variance(values));
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("squared_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double cosine_distance(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw InvalidArgument("cosine_distance: length mismatch");
    if (u.empty()) throw InvalidArgument("cosine_distance: empty input");
    const double nu = std::sqrt(dot(u, u));
    const double nv = std::sqrt(dot(v, v));
    if (nu == 0.0 || nv == 0.0)
        throw DegenerateInput("cosine_distance: zero-norm vector");
    return 1.0 - dot(u, v) / (nu * nv);
}

std::vector<double> fractional_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        // Positions i..j (0-based) hold equal values; they share the average
        // of ranks i+1..j+1.
        const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("pearson: length mismatch");
    if (x.size() < 2) throw InvalidArgument("pearson: need at least 2 values");
    const double mx = mean(x);
    const double my = mean(y);
    std::vector<double> cov(x.size()), vx(x.size()), vy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        cov[i] = dx * dy;
        vx[i] = dx * dx;
        vy[i] = dy * dy;
    }
    const double sxx = pairwise_sum(vx);
    const double syy = pairwise_sum(vy);
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateInput("pearson: constant input has no defined correlation");
    return pairwise_sum(cov) / std::sqrt(sxx * syy);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw InvalidArgument("spearman_rho: length mismatch");
    if (x.size() < 2) throw InvalidArgument("spearman_rho: need at least 2 values");
    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    return pearson(rx, ry);
}

} // namespace mvpa
