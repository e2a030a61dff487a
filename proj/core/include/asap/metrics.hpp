#pragma once

#include <span>
#include <vector>

namespace asap {

// Root-mean-squared error after removing each vector's mean (the scale has
// a free shift; its unit is fixed by beta on both sides).
// Throws std::invalid_argument on a length mismatch or fewer than 2 entries.
double rmse_aligned(std::span<const double> estimated,
                    std::span<const double> truth);

// Fractional ranks (1-based) with ties sharing their average rank.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman rank-order correlation: Pearson correlation of average ranks.
// Throws std::domain_error when either input is constant.
double srocc(std::span<const double> estimated, std::span<const double> truth);

// arctanh of a correlation, clamped to |y| <= 1 - 1e-7 first.
double fisher_transform(double correlation);

}  // namespace asap
