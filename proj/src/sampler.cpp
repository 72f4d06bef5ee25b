#include "seqgc/sampler.hpp"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

namespace seqgc {
namespace {

std::vector<std::size_t> draw_distinct(std::size_t n, std::size_t m, std::mt19937_64& rng) {
  return sample_without_replacement(n, m, rng);
}

}  // namespace

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m,
                                                    std::mt19937_64& rng) {
  if (m > n) throw std::invalid_argument("cannot draw more items than the pool holds");
  std::vector<std::size_t> out;
  out.reserve(m);
  if (4 * m <= n) {
    // Rejection is cheap for small samples of large pools.
    while (out.size() < m) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      const std::size_t candidate = pick(rng);
      if (std::find(out.begin(), out.end(), candidate) == out.end()) out.push_back(candidate);
    }
    return out;
  }
  // Partial Fisher-Yates.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(m);
  return pool;
}

UniformSampler::UniformSampler(std::size_t pool_size, std::uint64_t seed)
    : pool_size_(pool_size), rng_(seed) {}

MinimalSample UniformSampler::sample(std::size_t m) {
  if (pool_size_ < m) throw std::invalid_argument("sample pool smaller than sample size");
  return {draw_distinct(pool_size_, m, rng_)};
}

LocalizedSampler::LocalizedSampler(std::vector<GridCell> cells, std::uint64_t seed,
                                   std::size_t widen_every)
    : cells_(std::move(cells)), rng_(seed), widen_every_(std::max<std::size_t>(1, widen_every)) {}

MinimalSample LocalizedSampler::sample(std::size_t m) {
  const std::size_t n = cells_.size();
  if (n < m) throw std::invalid_argument("sample pool smaller than sample size");
  if (m == 0) return {};

  std::uniform_int_distribution<std::size_t> pick_first(0, n - 1);
  const std::size_t first = pick_first(rng_);
  const GridCell center = cells_[first];

  auto ring_distance = [&](std::size_t i) {
    return std::max(std::abs(cells_[i][0] - center[0]), std::abs(cells_[i][1] - center[1]));
  };

  // Smallest Chebyshev ring holding m points, then the progressive widening.
  std::vector<int> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = ring_distance(i);
  std::vector<int> sorted = dist;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(m - 1), sorted.end());
  const int needed = sorted[m - 1];
  const int ring = needed + static_cast<int>(draws_ / widen_every_);
  ++draws_;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != first && dist[i] <= ring) candidates.push_back(i);
  }
  MinimalSample s;
  s.ids.push_back(first);
  for (const std::size_t k : draw_distinct(candidates.size(), m - 1, rng_)) {
    s.ids.push_back(candidates[k]);
  }
  return s;
}

}  // namespace seqgc
