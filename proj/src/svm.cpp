#include "mvpa/svm.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "mvpa/stats.hpp"

namespace mvpa {

double rbf_gamma_scale(const Matrix& x, std::span<const std::size_t> rows) {
    const std::size_t d = x.cols();
    if (d == 0 || rows.empty()) throw InvalidArgument("rbf_gamma_scale: empty input");
    // Two fixed-order passes over the listed rows. Keep this the single
    // source of the scale so independently built kernels agree bitwise.
    double sum = 0.0;
    for (auto r : rows)
        for (double v : x.row(r)) sum += v;
    const double n = static_cast<double>(rows.size() * d);
    const double m = sum / n;
    double ss = 0.0;
    for (auto r : rows)
        for (double v : x.row(r)) {
            const double dv = v - m;
            ss += dv * dv;
        }
    const double var = ss / n;
    if (var == 0.0) return 1.0 / static_cast<double>(d);
    return 1.0 / (static_cast<double>(d) * var);
}

double rbf_gamma_scale(const Matrix& x) {
    std::vector<std::size_t> rows(x.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rbf_gamma_scale(x, rows);
}

SmoSolution smo_solve(const Matrix& kernel, const std::vector<int>& y, double c,
                      double tol, std::size_t max_iter) {
    const std::size_t n = y.size();
    if (kernel.rows() != n || kernel.cols() != n)
        throw InvalidArgument("smo_solve: kernel shape does not match labels");
    if (!(c > 0.0)) throw InvalidArgument("smo_solve: C must be positive");
    bool has_pos = false, has_neg = false;
    for (int label : y) {
        if (label == 1) has_pos = true;
        else if (label == -1) has_neg = true;
        else throw InvalidArgument("smo_solve: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg)
        throw DegenerateInput("smo_solve: both classes required");

    SmoSolution sol;
    sol.alpha.assign(n, 0.0);
    // grad_i of the dual objective 1/2 a'Qa - e'a at a = 0 is -1 everywhere.
    std::vector<double> grad(n, -1.0);
    const double inf = std::numeric_limits<double>::infinity();

    auto in_up = [&](std::size_t k) {
        return (y[k] == 1 && sol.alpha[k] < c) || (y[k] == -1 && sol.alpha[k] > 0.0);
    };
    auto in_low = [&](std::size_t k) {
        return (y[k] == 1 && sol.alpha[k] > 0.0) || (y[k] == -1 && sol.alpha[k] < c);
    };

    double m_up = 0.0, m_low = 0.0;
    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        // e_k = -y_k * grad_k is the bias each point votes for; the most
        // violating pair is the largest vote in I_up against the smallest
        // in I_low. Strict comparisons keep ties at the lowest index.
        std::size_t i = n, j = n;
        m_up = -inf;
        m_low = inf;
        for (std::size_t k = 0; k < n; ++k) {
            const double e = -static_cast<double>(y[k]) * grad[k];
            if (in_up(k) && e > m_up) {
                m_up = e;
                i = k;
            }
            if (in_low(k) && e < m_low) {
                m_low = e;
                j = k;
            }
        }
        if (i == n || j == n || m_up - m_low < tol) break;

        // Two-variable subproblem along the equality-feasible direction
        // alpha_i += y_i t, alpha_j -= y_j t.
        double a = kernel(i, i) + kernel(j, j) - 2.0 * kernel(i, j);
        if (a <= 0.0) a = 1e-12;
        double t = (m_up - m_low) / a;

        const double yi = static_cast<double>(y[i]);
        const double yj = static_cast<double>(y[j]);
        double t_max = inf;
        t_max = std::min(t_max, yi > 0.0 ? c - sol.alpha[i] : sol.alpha[i]);
        t_max = std::min(t_max, yj > 0.0 ? sol.alpha[j] : c - sol.alpha[j]);
        if (t > t_max) t = t_max;

        double ai = sol.alpha[i] + yi * t;
        double aj = sol.alpha[j] - yj * t;
        ai = std::min(std::max(ai, 0.0), c);
        aj = std::min(std::max(aj, 0.0), c);
        const double di = ai - sol.alpha[i];
        const double dj = aj - sol.alpha[j];
        sol.alpha[i] = ai;
        sol.alpha[j] = aj;

        // grad_k += Q_ki * di + Q_kj * dj, with Q_kl = y_k y_l K_kl.
        const double ci = yi * di;
        const double cj = yj * dj;
        for (std::size_t k = 0; k < n; ++k)
            grad[k] += static_cast<double>(y[k]) * (kernel(i, k) * ci + kernel(j, k) * cj);
    }
    sol.iterations = iter;
    sol.converged = iter < max_iter;

    // Bias: average vote of the free support vectors; if none exist the
    // midpoint of the remaining feasible interval.
    double free_sum = 0.0;
    std::size_t free_count = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (sol.alpha[k] > 0.0 && sol.alpha[k] < c) {
            free_sum += -static_cast<double>(y[k]) * grad[k];
            ++free_count;
        }
    }
    if (free_count > 0) {
        sol.bias = free_sum / static_cast<double>(free_count);
    } else {
        double lo = -inf, hi = inf;
        for (std::size_t k = 0; k < n; ++k) {
            const double e = -static_cast<double>(y[k]) * grad[k];
            if (in_up(k)) lo = std::max(lo, e);
            if (in_low(k)) hi = std::min(hi, e);
        }
        sol.bias = (lo + hi) / 2.0;
    }
    return sol;
}

SvmModel svm_fit(const Matrix& x, const std::vector<int>& y, const SvmConfig& config) {
    const std::size_t n = x.rows();
    if (n == 0 || x.cols() == 0) throw InvalidArgument("svm_fit: empty training data");
    if (y.size() != n) throw InvalidArgument("svm_fit: label count does not match rows");
    for (double v : std::span<const double>(x.data(), x.size()))
        if (!std::isfinite(v)) throw DegenerateInput("svm_fit: non-finite feature value");

    const double gamma = config.gamma ? *config.gamma : rbf_gamma_scale(x);
    if (!(gamma > 0.0)) throw InvalidArgument("svm_fit: gamma must be positive");

    Matrix kernel(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        kernel(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = std::exp(-gamma * squared_distance(x.row(i), x.row(j)));
            kernel(i, j) = k;
            kernel(j, i) = k;
        }
    }

    const SmoSolution sol = smo_solve(kernel, y, config.c, config.tol, config.max_iter);

    std::vector<std::size_t> sv;
    for (std::size_t k = 0; k < n; ++k)
        if (sol.alpha[k] > 0.0) sv.push_back(k);

    SvmModel model;
    model.support_vectors = gather_rows(x, sv);
    model.dual_coefficients.reserve(sv.size());
    for (auto k : sv) model.dual_coefficients.push_back(sol.alpha[k] * static_cast<double>(y[k]));
    model.bias = sol.bias;
    model.gamma = gamma;
    model.regularization_c = config.c;
    model.solver_iterations = sol.iterations;
    model.solver_converged = sol.converged;
    return model;
}

std::vector<double> svm_decision(const SvmModel& model, const Matrix& x) {
    if (x.cols() != model.support_vectors.cols())
        throw InvalidArgument("svm_decision: feature dimension mismatch");
    std::vector<double> values(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double g = 0.0;
        for (std::size_t s = 0; s < model.support_vectors.rows(); ++s)
            g += model.dual_coefficients[s] *
                 std::exp(-model.gamma * squared_distance(model.support_vectors.row(s), x.row(i)));
        values[i] = g + model.bias;
    }
    return values;
}

std::vector<int> svm_classify(const SvmModel& model, const Matrix& x) {
    const auto values = svm_decision(model, x);
    std::vector<int> labels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) labels[i] = values[i] >= 0.0 ? 1 : -1;
    return labels;
}

} // namespace mvpa
