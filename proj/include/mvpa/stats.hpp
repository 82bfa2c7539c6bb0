#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mvpa/errors.hpp"

namespace mvpa {

// Ordered pairwise summation: deterministic and far more accurate than a
// running sum on long inputs. Used by every reduction whose value feeds a
// reported number.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

// Population variance (divides by n, not n - 1).
double population_variance(std::span<const double> values);
double population_stddev(std::span<const double> values);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

// 1 - u.v / (|u| |v|). Throws DegenerateInput when either norm is zero.
double cosine_distance(std::span<const double> u, std::span<const double> v);

// Ranks starting at 1; tied values share the average of the ranks they cover.
std::vector<double> fractional_ranks(std::span<const double> values);

// Throws DegenerateInput when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of fractional ranks. Length >= 2 required; constant
// input throws DegenerateInput.
double spearman_rho(std::span<const double> x, std::span<const double> y);

} // namespace mvpa
