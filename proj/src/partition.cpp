#include "dprsa/partition.hpp"

#include <algorithm>
#include <numeric>

#include "dprsa/errors.hpp"

namespace dprsa {

IndexShards partition_iid(std::size_t n, std::size_t K, RngStream& rng) {
  if (K < 1) throw ConfigError("partition: need at least one worker");
  if (n < K) throw ConfigError("partition: fewer samples than workers");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(idx), rng);

  IndexShards shards(K);
  std::size_t base = n / K, extra = n % K, pos = 0;
  for (std::size_t k = 0; k < K; ++k) {
    std::size_t take = base + (k < extra ? 1 : 0);
    shards[k].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                     idx.begin() + static_cast<std::ptrdiff_t>(pos + take));
    pos += take;
  }
  return shards;
}

IndexShards partition_noniid(std::span<const int> labels, std::size_t K,
                             std::size_t group_size, RngStream& rng) {
  if (K < 1 || group_size < 1) throw ConfigError("partition: empty configuration");
  if (K % group_size != 0) {
    throw ConfigError("partition: group_size must divide the worker count");
  }
  const std::size_t num_groups = K / group_size;
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  const std::size_t num_classes = static_cast<std::size_t>(max_label) + 1;
  if (num_classes < num_groups) {
    throw ConfigError("partition: need at least one class per worker group");
  }

  IndexShards shards(K);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == static_cast<int>(c)) members.push_back(i);
    }
    shuffle(std::span<std::size_t>(members), rng);

    std::size_t spread = (members.size() + 1) / 2;  // half rounded up
    for (std::size_t i = 0; i < spread; ++i) {
      shards[i % K].push_back(members[i]);
    }
    std::size_t group = c % num_groups;
    for (std::size_t i = spread; i < members.size(); ++i) {
      std::size_t slot = (i - spread) % group_size;
      shards[group * group_size + slot].push_back(members[i]);
    }
  }
  return shards;
}

}  // namespace dprsa
