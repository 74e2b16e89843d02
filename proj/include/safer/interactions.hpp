#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace safer {

using Index = std::uint32_t;

/// Implicit-feedback pair set stored twice: user-major (items of each user)
/// and item-major (users of each item). Both adjacency lists are sorted and
/// free of duplicates. Immutable once built.
class InteractionSet {
 public:
  InteractionSet() = default;

  /// Builds from (user, item) pairs over dense ids. Duplicate pairs are
  /// collapsed. Throws DataError if any user or item ends up empty or an id
  /// is out of range.
  static InteractionSet from_pairs(std::size_t num_users, std::size_t num_items,
                                   std::vector<std::pair<Index, Index>> pairs,
                                   std::vector<std::string> user_labels = {},
                                   std::vector<std::string> item_labels = {});

  std::size_t num_users() const noexcept { return user_ptr_.empty() ? 0 : user_ptr_.size() - 1; }
  std::size_t num_items() const noexcept { return item_ptr_.empty() ? 0 : item_ptr_.size() - 1; }
  std::size_t nnz() const noexcept { return user_idx_.size(); }

  std::span<const Index> items_of(std::size_t user) const {
    return {user_idx_.data() + user_ptr_[user], user_idx_.data() + user_ptr_[user + 1]};
  }
  std::span<const Index> users_of(std::size_t item) const {
    return {item_idx_.data() + item_ptr_[item], item_idx_.data() + item_ptr_[item + 1]};
  }

  /// Offset of user `user`'s first entry in the user-major pair array.
  std::size_t user_offset(std::size_t user) const { return user_ptr_[user]; }
  std::size_t item_offset(std::size_t item) const { return item_ptr_[item]; }

  /// For every item-major position, the matching user-major position.
  const std::vector<std::size_t>& item_to_user_position() const noexcept { return item_to_user_pos_; }

  /// External ids, in dense-id order. Generated ("0", "1", ...) when absent.
  const std::vector<std::string>& user_labels() const noexcept { return user_labels_; }
  const std::vector<std::string>& item_labels() const noexcept { return item_labels_; }

 private:
  std::vector<std::size_t> user_ptr_;
  std::vector<Index> user_idx_;
  std::vector<std::size_t> item_ptr_;
  std::vector<Index> item_idx_;
  std::vector<std::size_t> item_to_user_pos_;
  std::vector<std::string> user_labels_;
  std::vector<std::string> item_labels_;
};

enum class TripletFormat { tsv, csv };

TripletFormat parse_triplet_format(const std::string& name);
char delimiter_of(TripletFormat format);

/// One record of a delimiter-separated interaction file.
struct TripletRow {
  std::string user;
  std::string item;
  std::optional<double> value;
  std::size_t line = 0;
};

/// Reads user,item[,value] rows. A first row whose third column is not
/// numeric is treated as a header and skipped.
std::vector<TripletRow> read_triplet_rows(const std::filesystem::path& path, TripletFormat format);

/// Loads an interaction log, drops rows rated below `min_rating` (when set),
/// densifies ids in order of first appearance and removes duplicates.
InteractionSet load_interactions(const std::filesystem::path& path, TripletFormat format,
                                 std::optional<double> min_rating = std::nullopt);

/// Same as load_interactions over rows already in memory.
InteractionSet interactions_from_rows(const std::vector<TripletRow>& rows,
                                      std::optional<double> min_rating = std::nullopt);

}  // namespace safer
