#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "safer/interactions.hpp"

namespace safer {

/// A held-out user: fold-in items are disclosed to the model, holdout items
/// are scored. Item ids index the training item vocabulary.
struct FoldInUser {
  Index user_id = 0;  ///< dense id in the source set (or file order when read back)
  std::string label;
  std::vector<Index> input_items;
  std::vector<Index> holdout_items;
};

struct SplitCounters {
  std::size_t dropped_validation_users = 0;
  std::size_t dropped_test_users = 0;
  std::size_t dropped_unseen_interactions = 0;
};

struct SplitBundle {
  InteractionSet train;
  std::vector<Index> train_source_users;  ///< source user id of every train row
  std::vector<FoldInUser> validation;
  std::vector<FoldInUser> test;
  std::uint64_t seed = 0;
  double foldin_fraction = 0.8;
  std::size_t holdout_users = 0;
  SplitCounters counters;
};

/// Number of fold-in items for a user with `count` interactions: ceil(fraction * count).
std::size_t foldin_size(std::size_t count, double fraction);

/// Draws `holdout_users` validation and test users without replacement; the
/// rest form the training set. Holdout interactions on items absent from
/// training are dropped, and users left without input or holdout items are
/// dropped. Both are counted.
SplitBundle split_strong_generalization(const InteractionSet& set, std::size_t holdout_users,
                                        double foldin_fraction, std::uint64_t seed);

/// Writes train.tsv, validation.tsv, test.tsv and manifest.json into `dir`.
/// Holdout files carry a third column: 1 for fold-in input, 0 for holdout.
void write_split_bundle(const SplitBundle& bundle, const std::filesystem::path& dir);

/// Reads a holdout file written by write_split_bundle, mapping item labels onto
/// `item_labels`. Unknown items and users without input or holdout items are
/// dropped and counted.
std::vector<FoldInUser> read_foldin_file(const std::filesystem::path& path,
                                         const std::vector<std::string>& item_labels,
                                         std::size_t* dropped_users = nullptr,
                                         std::size_t* dropped_interactions = nullptr);

}  // namespace safer
