#include "safer/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <Eigen/Dense>

#include "safer/errors.hpp"
#include "safer/random.hpp"

namespace safer {

namespace {

Eigen::MatrixXd unit_rows(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = normal(rng);
    m.row(r).normalize();
  }
  return m;
}

}  // namespace

SyntheticData generate_two_population(const SyntheticConfig& cfg) {
  if (cfg.num_users < 2 || cfg.num_items < 2 || cfg.latent_dim < 1) throw ConfigError("synthetic sizes too small");
  if (!(cfg.tail_fraction >= 0.0 && cfg.tail_fraction <= 1.0)) throw ConfigError("tail_fraction must lie in [0, 1]");
  if (cfg.head_min_items < 1 || cfg.head_min_items > cfg.head_max_items || cfg.tail_min_items < 1 ||
      cfg.tail_min_items > cfg.tail_max_items || std::max(cfg.head_max_items, cfg.tail_max_items) > cfg.num_items) {
    throw ConfigError("invalid per-user interaction range");
  }

  Rng rng(cfg.seed);
  const Eigen::MatrixXd head_items = unit_rows(cfg.num_items, cfg.latent_dim, rng);
  const Eigen::MatrixXd tail_items = unit_rows(cfg.num_items, cfg.latent_dim, rng);
  const auto num_tail = static_cast<std::size_t>(std::llround(cfg.tail_fraction * static_cast<double>(cfg.num_users)));

  SyntheticData out;
  out.is_tail.assign(cfg.num_users, 0);
  for (std::size_t i = cfg.num_users - num_tail; i < cfg.num_users; ++i) out.is_tail[i] = 1;
  // Interleave the populations so user id carries no information.
  for (std::size_t i = cfg.num_users; i > 1; --i) std::swap(out.is_tail[i - 1], out.is_tail[uniform_index(rng, i)]);

  std::vector<std::pair<Index, Index>> pairs;
  std::extreme_value_distribution<double> gumbel(0.0, 1.0);
  std::vector<std::pair<double, Index>> keyed(cfg.num_items);
  for (std::size_t i = 0; i < cfg.num_users; ++i) {
    const bool tail = out.is_tail[i] != 0;
    const Eigen::MatrixXd& items = tail ? tail_items : head_items;
    const Eigen::MatrixXd u = unit_rows(1, cfg.latent_dim, rng);
    const std::size_t lo = tail ? cfg.tail_min_items : cfg.head_min_items;
    const std::size_t hi = tail ? cfg.tail_max_items : cfg.head_max_items;
    const std::size_t count = lo + uniform_index(rng, hi - lo + 1);
    const Eigen::VectorXd scores = items * u.row(0).transpose();
    for (std::size_t j = 0; j < cfg.num_items; ++j) {
      keyed[j] = {cfg.sharpness * scores[static_cast<Eigen::Index>(j)] + gumbel(rng), static_cast<Index>(j)};
    }
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(count), keyed.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; k < count; ++k) pairs.emplace_back(static_cast<Index>(i), keyed[k].second);
  }

  // Items nobody picked would leave an empty column; give each one an
  // interaction from a random user so the catalogue stays intact.
  std::vector<char> seen(cfg.num_items, 0);
  for (const auto& [u, j] : pairs) seen[j] = 1;
  for (std::size_t j = 0; j < cfg.num_items; ++j) {
    if (!seen[j]) pairs.emplace_back(static_cast<Index>(uniform_index(rng, cfg.num_users)), static_cast<Index>(j));
  }
  out.interactions = InteractionSet::from_pairs(cfg.num_users, cfg.num_items, pairs, {}, {});
  return out;
}

void write_pairs_tsv(const InteractionSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (std::size_t i = 0; i < set.num_users(); ++i) {
    for (const Index j : set.items_of(i)) out << set.user_labels()[i] << '\t' << set.item_labels()[j] << '\n';
  }
}

}  // namespace safer
