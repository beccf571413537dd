#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace contpol {

using Rng = std::mt19937_64;

/// Pairwise (cascade) summation; result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values) noexcept;

double mean(std::span<const double> values) noexcept;

/// Linear-interpolation quantile (R type 7). `values` need not be sorted.
double quantile(std::span<const double> values, double p);

double median(std::span<const double> values);

/// Mixes a list of integers into a single 64-bit seed (splitmix64 chain).
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) noexcept;

/// Random permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace contpol
