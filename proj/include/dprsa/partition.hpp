#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dprsa/rng.hpp"

namespace dprsa {

using IndexShards = std::vector<std::vector<std::size_t>>;

/// Random permutation split into K shards with sizes differing by at most 1.
/// Shards are disjoint and cover [0, n).
IndexShards partition_iid(std::size_t n, std::size_t K, RngStream& rng);

/// Class-skewed split: per class c, a random half (rounded up) is dealt
/// evenly over all K workers; the remaining half is dealt evenly over the
/// group_size workers of group (c mod (K / group_size)). Requires group_size
/// to divide K and at least K/group_size classes.
IndexShards partition_noniid(std::span<const int> labels, std::size_t K,
                             std::size_t group_size, RngStream& rng);

}  // namespace dprsa
