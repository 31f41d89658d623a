#include "keratoflow/domain/split.hpp"

#include <numeric>
#include <string>
#include <utility>

#include "keratoflow/error.hpp"
#include "keratoflow/random.hpp"

namespace keratoflow::domain {

DatasetSplit split_dataset(std::size_t n, std::uint64_t seed) {
  if (n < 10) {
    throw ValidationError("split_dataset needs at least 10 samples, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  const std::size_t n_train = n * 72 / 100;
  const std::size_t n_val = n * 18 / 100;

  DatasetSplit split;
  split.seed = seed;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                          order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  split.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return split;
}

}  // namespace keratoflow::domain
