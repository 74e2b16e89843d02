#include "safer/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "safer/errors.hpp"
#include "safer/random.hpp"

namespace safer {

std::size_t foldin_size(std::size_t count, double fraction) {
  // The small slack keeps products such as 0.8 * 5 from rounding up past 4.
  const double raw = fraction * static_cast<double>(count);
  const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(k, count);
}

namespace {

std::vector<FoldInUser> make_foldin_users(const InteractionSet& set, std::span<const Index> users,
                                          const std::vector<Index>& item_map, double fraction,
                                          Rng& rng, std::size_t& dropped_users,
                                          std::size_t& dropped_interactions) {
  constexpr Index kUnseen = static_cast<Index>(-1);
  std::vector<FoldInUser> out;
  out.reserve(users.size());
  for (const Index u : users) {
    std::vector<Index> items;
    for (const Index j : set.items_of(u)) {
      if (item_map[j] == kUnseen) {
        ++dropped_interactions;
      } else {
        items.push_back(item_map[j]);
      }
    }
    std::sort(items.begin(), items.end());
    const std::size_t k = foldin_size(items.size(), fraction);
    if (k == 0 || k == items.size()) {
      ++dropped_users;
      continue;
    }
    partial_shuffle(std::span<Index>(items), k, rng);
    FoldInUser f;
    f.user_id = u;
    f.label = set.user_labels()[u];
    f.input_items.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(k));
    f.holdout_items.assign(items.begin() + static_cast<std::ptrdiff_t>(k), items.end());
    std::sort(f.input_items.begin(), f.input_items.end());
    std::sort(f.holdout_items.begin(), f.holdout_items.end());
    out.push_back(std::move(f));
  }
  return out;
}

void write_foldin(std::ostream& os, const std::vector<FoldInUser>& users,
                  const std::vector<std::string>& item_labels) {
  for (const auto& f : users) {
    for (const Index j : f.input_items) os << f.label << '\t' << item_labels[j] << "\t1\n";
    for (const Index j : f.holdout_items) os << f.label << '\t' << item_labels[j] << "\t0\n";
  }
}

}  // namespace

SplitBundle split_strong_generalization(const InteractionSet& set, std::size_t holdout_users,
                                        double foldin_fraction, std::uint64_t seed) {
  if (!(foldin_fraction > 0.0 && foldin_fraction < 1.0)) {
    throw ConfigError("foldin_fraction must lie in (0, 1)");
  }
  if (2 * holdout_users >= set.num_users()) {
    throw ConfigError("2 * holdout_users (" + std::to_string(2 * holdout_users) +
                      ") must be smaller than the number of users (" +
                      std::to_string(set.num_users()) + ")");
  }

  Rng rng(seed);
  std::vector<Index> order(set.num_users());
  std::iota(order.begin(), order.end(), Index{0});
  partial_shuffle(std::span<Index>(order), 2 * holdout_users, rng);

  std::vector<Index> validation_users(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout_users));
  std::vector<Index> test_users(order.begin() + static_cast<std::ptrdiff_t>(holdout_users),
                                order.begin() + static_cast<std::ptrdiff_t>(2 * holdout_users));
  std::vector<Index> train_users(order.begin() + static_cast<std::ptrdiff_t>(2 * holdout_users), order.end());
  std::sort(validation_users.begin(), validation_users.end());
  std::sort(test_users.begin(), test_users.end());
  std::sort(train_users.begin(), train_users.end());

  // Item vocabulary of the training users, in source order.
  constexpr Index kUnseen = static_cast<Index>(-1);
  std::vector<char> seen(set.num_items(), 0);
  for (const Index u : train_users) {
    for (const Index j : set.items_of(u)) seen[j] = 1;
  }
  std::vector<Index> item_map(set.num_items(), kUnseen);
  std::vector<std::string> item_labels;
  for (std::size_t j = 0; j < set.num_items(); ++j) {
    if (seen[j]) {
      item_map[j] = static_cast<Index>(item_labels.size());
      item_labels.push_back(set.item_labels()[j]);
    }
  }

  std::vector<std::pair<Index, Index>> pairs;
  std::vector<std::string> user_labels;
  for (std::size_t r = 0; r < train_users.size(); ++r) {
    user_labels.push_back(set.user_labels()[train_users[r]]);
    for (const Index j : set.items_of(train_users[r])) pairs.emplace_back(static_cast<Index>(r), item_map[j]);
  }

  SplitBundle bundle;
  bundle.seed = seed;
  bundle.foldin_fraction = foldin_fraction;
  bundle.holdout_users = holdout_users;
  bundle.train_source_users = train_users;
  const auto num_train_items = item_labels.size();
  bundle.train = InteractionSet::from_pairs(train_users.size(), num_train_items, std::move(pairs),
                                            std::move(user_labels), std::move(item_labels));

  Rng foldin_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  bundle.validation = make_foldin_users(set, validation_users, item_map, foldin_fraction, foldin_rng,
                                        bundle.counters.dropped_validation_users,
                                        bundle.counters.dropped_unseen_interactions);
  bundle.test = make_foldin_users(set, test_users, item_map, foldin_fraction, foldin_rng,
                                  bundle.counters.dropped_test_users,
                                  bundle.counters.dropped_unseen_interactions);
  return bundle;
}

void write_split_bundle(const SplitBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& train = bundle.train;
  {
    std::ofstream os(dir / "train.tsv");
    if (!os) throw DataError("cannot write " + (dir / "train.tsv").string());
    for (std::size_t u = 0; u < train.num_users(); ++u) {
      for (const Index j : train.items_of(u)) os << train.user_labels()[u] << '\t' << train.item_labels()[j] << '\n';
    }
  }
  {
    std::ofstream os(dir / "validation.tsv");
    write_foldin(os, bundle.validation, train.item_labels());
  }
  {
    std::ofstream os(dir / "test.tsv");
    write_foldin(os, bundle.test, train.item_labels());
  }
  nlohmann::ordered_json manifest;
  manifest["seed"] = bundle.seed;
  manifest["holdout_users"] = bundle.holdout_users;
  manifest["foldin_fraction"] = bundle.foldin_fraction;
  manifest["train"] = {{"users", train.num_users()}, {"items", train.num_items()}, {"interactions", train.nnz()}};
  manifest["validation_users"] = bundle.validation.size();
  manifest["test_users"] = bundle.test.size();
  manifest["dropped"] = {{"validation_users", bundle.counters.dropped_validation_users},
                         {"test_users", bundle.counters.dropped_test_users},
                         {"unseen_item_interactions", bundle.counters.dropped_unseen_interactions}};
  std::ofstream os(dir / "manifest.json");
  os << manifest.dump(2) << '\n';
}

std::vector<FoldInUser> read_foldin_file(const std::filesystem::path& path,
                                         const std::vector<std::string>& item_labels,
                                         std::size_t* dropped_users, std::size_t* dropped_interactions) {
  std::unordered_map<std::string, Index> item_ids;
  for (std::size_t j = 0; j < item_labels.size(); ++j) item_ids.emplace(item_labels[j], static_cast<Index>(j));

  const auto rows = read_triplet_rows(path, TripletFormat::tsv);
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<FoldInUser> users;
  std::size_t unseen = 0;
  for (const auto& row : rows) {
    if (!row.value || (*row.value != 0.0 && *row.value != 1.0)) {
      throw ParseError(row.line, "fold-in rows need a role column of 1 (input) or 0 (holdout)");
    }
    auto [it, fresh] = slot.try_emplace(row.user, users.size());
    if (fresh) {
      FoldInUser f;
      f.user_id = static_cast<Index>(users.size());
      f.label = row.user;
      users.push_back(std::move(f));
    }
    const auto item = item_ids.find(row.item);
    if (item == item_ids.end()) {
      ++unseen;
      continue;
    }
    auto& f = users[it->second];
    (*row.value == 1.0 ? f.input_items : f.holdout_items).push_back(item->second);
  }
  std::vector<FoldInUser> kept;
  std::size_t dropped = 0;
  for (auto& f : users) {
    std::sort(f.input_items.begin(), f.input_items.end());
    f.input_items.erase(std::unique(f.input_items.begin(), f.input_items.end()), f.input_items.end());
    std::sort(f.holdout_items.begin(), f.holdout_items.end());
    f.holdout_items.erase(std::unique(f.holdout_items.begin(), f.holdout_items.end()), f.holdout_items.end());
    if (f.input_items.empty() || f.holdout_items.empty()) {
      ++dropped;
      continue;
    }
    kept.push_back(std::move(f));
  }
  if (dropped_users) *dropped_users = dropped;
  if (dropped_interactions) *dropped_interactions = unseen;
  return kept;
}

}  // namespace safer
