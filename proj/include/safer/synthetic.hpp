#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "safer/interactions.hpp"

namespace safer {

/// Two populations over one item catalogue. Each population has its own
/// latent factor model (user and item factors of width latent_dim); a user
/// picks items without replacement with probability proportional to
/// exp(sharpness * u.v), via Gumbel top-k.
struct SyntheticConfig {
  std::size_t num_users = 500;
  std::size_t num_items = 200;
  std::size_t latent_dim = 4;
  double tail_fraction = 0.2;
  std::size_t head_min_items = 10;
  std::size_t head_max_items = 30;
  std::size_t tail_min_items = 10;
  std::size_t tail_max_items = 30;
  double sharpness = 2.0;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  InteractionSet interactions;
  std::vector<char> is_tail;  ///< per user
};

SyntheticData generate_two_population(const SyntheticConfig& config);

/// Writes user<TAB>item lines using the set's labels.
void write_pairs_tsv(const InteractionSet& set, const std::filesystem::path& path);

}  // namespace safer
