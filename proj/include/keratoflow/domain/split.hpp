#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace keratoflow::domain {

/// Train / validation / test partition of cohort indices.
struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

/// Uniform random permutation of 0..n-1 under `seed`, cut into
/// floor(0.72 n) / floor(0.18 n) / remainder. Throws ValidationError for n < 10.
DatasetSplit split_dataset(std::size_t n, std::uint64_t seed);

}  // namespace keratoflow::domain
