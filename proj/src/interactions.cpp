#include "safer/interactions.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "safer/errors.hpp"

namespace safer {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    f = (b == std::string::npos) ? std::string{} : f.substr(b, e - b + 1);
  }
  return fields;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

}  // namespace

InteractionSet InteractionSet::from_pairs(std::size_t num_users, std::size_t num_items,
                                          std::vector<std::pair<Index, Index>> pairs,
                                          std::vector<std::string> user_labels,
                                          std::vector<std::string> item_labels) {
  for (const auto& [u, i] : pairs) {
    if (u >= num_users || i >= num_items) throw DataError("interaction id out of range");
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  InteractionSet set;
  set.user_ptr_.assign(num_users + 1, 0);
  set.item_ptr_.assign(num_items + 1, 0);
  for (const auto& [u, i] : pairs) {
    ++set.user_ptr_[u + 1];
    ++set.item_ptr_[i + 1];
  }
  for (std::size_t u = 0; u < num_users; ++u) {
    if (set.user_ptr_[u + 1] == 0) throw DataError("user " + std::to_string(u) + " has no interactions");
  }
  for (std::size_t i = 0; i < num_items; ++i) {
    if (set.item_ptr_[i + 1] == 0) throw DataError("item " + std::to_string(i) + " has no interactions");
  }
  std::partial_sum(set.user_ptr_.begin(), set.user_ptr_.end(), set.user_ptr_.begin());
  std::partial_sum(set.item_ptr_.begin(), set.item_ptr_.end(), set.item_ptr_.begin());

  // Pairs are sorted by (user, item), so the user-major array is the item column.
  set.user_idx_.resize(pairs.size());
  set.item_idx_.resize(pairs.size());
  set.item_to_user_pos_.resize(pairs.size());
  std::vector<std::size_t> cursor(set.item_ptr_.begin(), set.item_ptr_.end() - 1);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [u, i] = pairs[k];
    set.user_idx_[k] = i;
    const std::size_t slot = cursor[i]++;
    set.item_idx_[slot] = u;  // users arrive in ascending order
    set.item_to_user_pos_[slot] = k;
  }

  if (user_labels.empty()) {
    user_labels.resize(num_users);
    for (std::size_t u = 0; u < num_users; ++u) user_labels[u] = std::to_string(u);
  }
  if (item_labels.empty()) {
    item_labels.resize(num_items);
    for (std::size_t i = 0; i < num_items; ++i) item_labels[i] = std::to_string(i);
  }
  if (user_labels.size() != num_users || item_labels.size() != num_items) {
    throw DataError("label vocabulary size does not match id range");
  }
  set.user_labels_ = std::move(user_labels);
  set.item_labels_ = std::move(item_labels);
  return set;
}

TripletFormat parse_triplet_format(const std::string& name) {
  if (name == "tsv" || name == "triplet-tsv") return TripletFormat::tsv;
  if (name == "csv" || name == "triplet-csv") return TripletFormat::csv;
  throw ConfigError("unknown triplet format '" + name + "' (expected tsv or csv)");
}

char delimiter_of(TripletFormat format) { return format == TripletFormat::tsv ? '\t' : ','; }

std::vector<TripletRow> read_triplet_rows(const std::filesystem::path& path, TripletFormat format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  const char delim = delimiter_of(format);

  std::vector<TripletRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_line(line, delim);
    if (fields.size() < 2) {
      throw ParseError(line_no, std::string("expected user, item[, rating] separated by ") +
                                    (delim == '\t' ? "tabs" : "commas"));
    }
    if (fields[0].empty() || fields[1].empty()) throw ParseError(line_no, "empty user or item id");
    TripletRow row{fields[0], fields[1], std::nullopt, line_no};
    if (fields.size() >= 3 && !fields[2].empty()) {
      row.value = parse_number(fields[2]);
      if (!row.value) {
        if (first_record) {
          first_record = false;
          continue;  // header
        }
        throw ParseError(line_no, "rating column '" + fields[2] + "' is not numeric");
      }
    }
    first_record = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

InteractionSet interactions_from_rows(const std::vector<TripletRow>& rows,
                                      std::optional<double> min_rating) {
  std::unordered_map<std::string, Index> user_ids;
  std::unordered_map<std::string, Index> item_ids;
  std::vector<std::string> user_labels;
  std::vector<std::string> item_labels;
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(rows.size());

  for (const auto& row : rows) {
    if (min_rating) {
      if (!row.value) throw ParseError(row.line, "rating threshold set but row has no rating");
      if (*row.value < *min_rating) continue;
    }
    auto [uit, unew] = user_ids.try_emplace(row.user, static_cast<Index>(user_labels.size()));
    if (unew) user_labels.push_back(row.user);
    auto [iit, inew] = item_ids.try_emplace(row.item, static_cast<Index>(item_labels.size()));
    if (inew) item_labels.push_back(row.item);
    pairs.emplace_back(uit->second, iit->second);
  }
  if (pairs.empty()) throw DataError("dataset is empty after filtering");
  const auto nu = user_labels.size();
  const auto ni = item_labels.size();
  return InteractionSet::from_pairs(nu, ni, std::move(pairs), std::move(user_labels), std::move(item_labels));
}

InteractionSet load_interactions(const std::filesystem::path& path, TripletFormat format,
                                 std::optional<double> min_rating) {
  return interactions_from_rows(read_triplet_rows(path, format), min_rating);
}

}  // namespace safer
