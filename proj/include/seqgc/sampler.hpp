#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "seqgc/neighbors.hpp"

namespace seqgc {

/// Ids of one minimal sample, indices into the caller's point pool.
struct MinimalSample {
  std::vector<std::size_t> ids;

  std::size_t size() const { return ids.size(); }
};

/// m distinct indices from [0, n) in draw order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m,
                                                    std::mt19937_64& rng);

/// Draws m distinct pool indices uniformly. Every m-subset is reachable.
class UniformSampler {
 public:
  UniformSampler(std::size_t pool_size, std::uint64_t seed);

  MinimalSample sample(std::size_t m);

  std::mt19937_64& engine() { return rng_; }

 private:
  std::size_t pool_size_;
  std::mt19937_64 rng_;
};

/// Spatially localized sampling on an image grid: the first point is uniform,
/// the rest come from the smallest ring of cells around it holding enough
/// points. The ring widens by one cell every `widen_every` draws, so later
/// samples are progressively less local.
class LocalizedSampler {
 public:
  LocalizedSampler(std::vector<GridCell> cells, std::uint64_t seed, std::size_t widen_every = 20);

  MinimalSample sample(std::size_t m);

  std::mt19937_64& engine() { return rng_; }

 private:
  std::vector<GridCell> cells_;
  std::mt19937_64 rng_;
  std::size_t widen_every_;
  std::size_t draws_ = 0;
};

}  // namespace seqgc
