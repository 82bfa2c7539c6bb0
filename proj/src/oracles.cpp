#include "mvpa/oracles.hpp"

#include <cmath>
#include <limits>

#include "mvpa/rng.hpp"

namespace mvpa::oracles {

double best_kmeans_inertia(const Matrix& points, std::size_t k) {
    const std::size_t n = points.rows();
    if (n > 12) throw InvalidArgument("oracle best_kmeans_inertia: too many points");
    if (k == 0 || k > n) throw InvalidArgument("oracle best_kmeans_inertia: bad k");

    std::vector<std::size_t> assign(n, 0);
    double best = std::numeric_limits<double>::infinity();
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < n; ++i) total *= k;

    for (std::uint64_t code = 0; code < total; ++code) {
        std::uint64_t rest = code;
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            assign[i] = rest % k;
            rest /= k;
            ++counts[assign[i]];
        }
        bool ok = true;
        for (auto c : counts)
            if (c == 0) { ok = false; break; }
        if (!ok) continue;

        double inertia = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            std::vector<double> centroid(points.cols(), 0.0);
            for (std::size_t i = 0; i < n; ++i)
                if (assign[i] == c)
                    for (std::size_t j = 0; j < points.cols(); ++j)
                        centroid[j] += points(i, j);
            for (auto& v : centroid) v /= static_cast<double>(counts[c]);
            for (std::size_t i = 0; i < n; ++i)
                if (assign[i] == c)
                    for (std::size_t j = 0; j < points.cols(); ++j) {
                        const double d = points(i, j) - centroid[j];
                        inertia += d * d;
                    }
        }
        if (inertia < best) best = inertia;
    }
    return best;
}

std::vector<double> fractional_ranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t less = 0, equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (values[j] < values[i]) ++less;
            if (values[j] == values[i]) ++equal;
        }
        ranks[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return ranks;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    const auto rx = fractional_ranks(x);
    const auto ry = fractional_ranks(y);
    const std::size_t n = rx.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

namespace {

double plain_cosine_distance(std::span<const double> u, std::span<const double> v) {
    double uv = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    return 1.0 - uv / (std::sqrt(uu) * std::sqrt(vv));
}

} // namespace

std::vector<double> pairwise_accuracy(const Matrix& predicted, const Matrix& observed) {
    const std::size_t n = predicted.rows();
    std::vector<double> acc(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double own = plain_cosine_distance(predicted.row(i), observed.row(i));
        std::size_t wins = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (own < plain_cosine_distance(predicted.row(i), observed.row(j))) ++wins;
        }
        acc[i] = static_cast<double>(wins) / static_cast<double>(n - 1);
    }
    return acc;
}

namespace {

// One-sided Jacobi SVD: rotate column pairs of `w` until all are orthogonal,
// accumulating the rotations in `v`. Good enough for the tiny matrices the
// tests feed it.
void jacobi_orthogonalize(Matrix& w, Matrix& v) {
    const std::size_t m = w.cols();
    const std::size_t n = w.rows();
    for (int sweep = 0; sweep < 60; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p < m; ++p) {
            for (std::size_t q = p + 1; q < m; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    app += w(i, p) * w(i, p);
                    aqq += w(i, q) * w(i, q);
                    apq += w(i, p) * w(i, q);
                }
                if (std::abs(apq) <= 1e-15 * std::sqrt(app * aqq) || apq == 0.0) continue;
                rotated = true;
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = w(i, p);
                    w(i, p) = cs * wp - sn * w(i, q);
                    w(i, q) = sn * wp + cs * w(i, q);
                }
                for (std::size_t i = 0; i < m; ++i) {
                    const double vp = v(i, p);
                    v(i, p) = cs * vp - sn * v(i, q);
                    v(i, q) = sn * vp + cs * v(i, q);
                }
            }
        }
        if (!rotated) break;
    }
}

} // namespace

void least_squares(const Matrix& x, const Matrix& y, Matrix& weights,
                   std::vector<double>& intercept) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    Matrix a(n, d + 1);
    for (std::size_t i = 0; i < n; ++i) {
        a(i, 0) = 1.0;
        for (std::size_t j = 0; j < d; ++j) a(i, j + 1) = x(i, j);
    }

    Matrix w = a;
    Matrix v(d + 1, d + 1);
    for (std::size_t i = 0; i <= d; ++i) v(i, i) = 1.0;
    jacobi_orthogonalize(w, v);

    std::vector<double> sigma(d + 1, 0.0);
    double sigma_max = 0.0;
    for (std::size_t j = 0; j <= d; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += w(i, j) * w(i, j);
        sigma[j] = std::sqrt(s);
        sigma_max = std::max(sigma_max, sigma[j]);
    }

    // pinv(A) * Y = V * diag(1/sigma) * U' * Y with small singular values
    // dropped; U columns are w_j / sigma_j.
    Matrix solution(d + 1, y.cols());
    for (std::size_t j = 0; j <= d; ++j) {
        if (sigma[j] <= 1e-12 * sigma_max) continue;
        for (std::size_t col = 0; col < y.cols(); ++col) {
            double uty = 0.0;
            for (std::size_t i = 0; i < n; ++i) uty += (w(i, j) / sigma[j]) * y(i, col);
            const double scaled = uty / sigma[j];
            for (std::size_t row = 0; row <= d; ++row)
                solution(row, col) += v(row, j) * scaled;
        }
    }

    weights = Matrix(d, y.cols());
    intercept.assign(y.cols(), 0.0);
    for (std::size_t col = 0; col < y.cols(); ++col) {
        intercept[col] = solution(0, col);
        for (std::size_t row = 0; row < d; ++row) weights(row, col) = solution(row + 1, col);
    }
}

double max_kkt_violation(const Matrix& kernel, const std::vector<int>& y, double c,
                         const std::vector<double>& alpha, double bias) {
    const std::size_t n = y.size();
    const double bound_eps = 1e-9 * c;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double g = bias;
        for (std::size_t j = 0; j < n; ++j)
            g += alpha[j] * static_cast<double>(y[j]) * kernel(j, i);
        const double margin = static_cast<double>(y[i]) * g;
        double violation;
        if (alpha[i] <= bound_eps) violation = std::max(0.0, 1.0 - margin);
        else if (alpha[i] >= c - bound_eps) violation = std::max(0.0, margin - 1.0);
        else violation = std::abs(margin - 1.0);
        worst = std::max(worst, violation);
    }
    return worst;
}

Matrix random_orthogonal(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Matrix q(dim, dim);
    for (std::size_t i = 0; i < q.size(); ++i) q.data()[i] = rng.next_normal();

    // Gram-Schmidt over columns, twice for numerical cleanliness.
    for (int repeat = 0; repeat < 2; ++repeat) {
        for (std::size_t j = 0; j < dim; ++j) {
            for (std::size_t prev = 0; prev < j; ++prev) {
                double proj = 0.0;
                for (std::size_t i = 0; i < dim; ++i) proj += q(i, j) * q(i, prev);
                for (std::size_t i = 0; i < dim; ++i) q(i, j) -= proj * q(i, prev);
            }
            double norm = 0.0;
            for (std::size_t i = 0; i < dim; ++i) norm += q(i, j) * q(i, j);
            norm = std::sqrt(norm);
            if (norm == 0.0) throw Error("random_orthogonal: degenerate draw");
            for (std::size_t i = 0; i < dim; ++i) q(i, j) /= norm;
        }
    }
    return q;
}

} // namespace mvpa::oracles
