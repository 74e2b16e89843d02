#include "safer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "safer/detail/parallel.hpp"
#include "safer/errors.hpp"

namespace safer {

FoldInConstants FoldInConstants::from(const SolverConfig& config) {
  return {config.solver, config.lambda, config.beta0, config.ials_exponent};
}

double foldin_ridge(const FoldInConstants& c, std::size_t input_count, std::size_t num_items) {
  const double m = static_cast<double>(num_items);
  if (c.solver == SolverKind::ials) return c.lambda * std::pow(static_cast<double>(input_count) + c.beta0 * m, c.ials_exponent);
  return c.lambda * (1.0 + c.beta0 * m);
}

RowSystem foldin_system(const Matrix& items, const Matrix& item_gram, std::span<const Index> input_items,
                        const FoldInConstants& c) {
  if (input_items.empty()) throw ConfigError("fold-in requires at least one input item");
  const double ridge = foldin_ridge(c, input_items.size(), static_cast<std::size_t>(items.rows()));
  if (c.solver == SolverKind::ials) return ials_user_system(items, input_items, c.beta0, ridge, item_gram);
  return safer2_user_system(items, input_items, 1.0, c.beta0, ridge, item_gram);
}

Vector foldin_user_embedding(const Matrix& items, const Matrix& item_gram, std::span<const Index> input_items,
                             const FoldInConstants& c) {
  return solve_spd(foldin_system(items, item_gram, input_items, c));
}

std::vector<Index> rank_items(const Vector& u, const Matrix& items, std::span<const Index> exclude,
                              std::size_t k_max) {
  const std::unordered_set<Index> skip(exclude.begin(), exclude.end());
  const Vector scores = items * u;
  std::vector<Index> eligible;
  eligible.reserve(static_cast<std::size_t>(items.rows()));
  for (Index j = 0; j < static_cast<Index>(items.rows()); ++j) {
    if (!skip.contains(j)) eligible.push_back(j);
  }
  const std::size_t k = std::min(k_max, eligible.size());
  auto better = [&](Index a, Index b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(k), eligible.end(), better);
  eligible.resize(k);
  return eligible;
}

double recall_at_k(std::span<const Index> ranked, std::span<const Index> holdout, std::size_t k) {
  if (k < 1) throw ConfigError("K must be at least 1");
  if (holdout.empty()) throw ConfigError("recall of an empty holdout set");
  const std::unordered_set<Index> truth(holdout.begin(), holdout.end());
  std::size_t hits = 0;
  for (std::size_t p = 0; p < std::min(k, ranked.size()); ++p) hits += truth.contains(ranked[p]) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(std::min(k, truth.size()));
}

double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> holdout, std::size_t k) {
  if (k < 1) throw ConfigError("K must be at least 1");
  if (holdout.empty()) throw ConfigError("nDCG of an empty holdout set");
  const std::unordered_set<Index> truth(holdout.begin(), holdout.end());
  double dcg = 0.0;
  for (std::size_t p = 0; p < std::min(k, ranked.size()); ++p) {
    if (truth.contains(ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t p = 0; p < std::min(k, truth.size()); ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
  return dcg / idcg;
}

double tail_mean(std::span<const double> values, double alpha) {
  if (values.empty()) throw ConfigError("tail mean of an empty vector");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("tail level must lie in (0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto count = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(sorted.size()) - 1e-9)), 1, sorted.size());
  double sum = 0.0;
  for (std::size_t r = 0; r < count; ++r) sum += sorted[r];
  return sum / static_cast<double>(count);
}

double MetricReport::tail(const std::string& metric, std::size_t k, double alpha) const {
  for (const auto& t : tails) {
    if (t.metric == metric && t.k == k && std::abs(t.alpha - alpha) < 1e-12) return t.value;
  }
  throw std::out_of_range("no tail value for " + metric + "@" + std::to_string(k));
}

double MetricReport::mean(const std::string& metric, std::size_t k) const {
  for (std::size_t p = 0; p < ks.size(); ++p) {
    if (ks[p] == k) {
      if (metric == "recall") return mean_recall[p];
      if (metric == "ndcg") return mean_ndcg[p];
    }
  }
  throw std::out_of_range("no mean value for " + metric + "@" + std::to_string(k));
}

MetricReport evaluate(const Matrix& items, const std::vector<FoldInUser>& users, const FoldInConstants& constants,
                      const std::vector<std::size_t>& ks, const std::vector<double>& alphas) {
  if (ks.empty()) throw ConfigError("at least one K is required");
  for (const auto k : ks)
    if (k < 1) throw ConfigError("K must be at least 1");
  for (const double a : alphas)
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("tail levels must lie in (0, 1]");

  MetricReport report;
  report.ks = ks;
  report.alphas = alphas;
  const std::size_t k_max = *std::max_element(ks.begin(), ks.end());
  const Matrix gram = gramian(items);

  std::vector<char> kept(users.size(), 0);
  std::vector<UserMetrics> scored(users.size());
  const auto count = static_cast<std::ptrdiff_t>(users.size());
  detail::FirstError errors;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t p = 0; p < count; ++p) {
    errors.guard([&] {
      const auto& user = users[static_cast<std::size_t>(p)];
      if (user.input_items.empty() || user.holdout_items.empty()) return;
      const Vector u = foldin_user_embedding(items, gram, user.input_items, constants);
      const auto ranked = rank_items(u, items, user.input_items, k_max);
      UserMetrics m{user.user_id, user.label, {}, {}};
      for (const auto k : ks) {
        m.recall.push_back(recall_at_k(ranked, user.holdout_items, k));
        m.ndcg.push_back(ndcg_at_k(ranked, user.holdout_items, k));
      }
      scored[static_cast<std::size_t>(p)] = std::move(m);
      kept[static_cast<std::size_t>(p)] = 1;
    });
  }
  errors.rethrow();
  for (std::size_t p = 0; p < users.size(); ++p) {
    if (kept[p]) {
      report.per_user.push_back(std::move(scored[p]));
    } else {
      ++report.dropped_users;
    }
  }
  if (report.per_user.empty()) throw DataError("no evaluable users (every user has an empty input or holdout set)");

  for (std::size_t q = 0; q < ks.size(); ++q) {
    std::vector<double> rec, nd;
    for (const auto& m : report.per_user) {
      rec.push_back(m.recall[q]);
      nd.push_back(m.ndcg[q]);
    }
    report.mean_recall.push_back(tail_mean(rec, 1.0));
    report.mean_ndcg.push_back(tail_mean(nd, 1.0));
    for (const double a : alphas) {
      report.tails.push_back({"recall", ks[q], a, tail_mean(rec, a)});
      report.tails.push_back({"ndcg", ks[q], a, tail_mean(nd, a)});
    }
  }
  return report;
}

nlohmann::ordered_json to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["users"] = report.per_user.size();
  j["dropped_users"] = report.dropped_users;
  j["ks"] = report.ks;
  j["alphas"] = report.alphas;
  auto& mean = j["mean"];
  for (std::size_t q = 0; q < report.ks.size(); ++q) {
    mean["recall@" + std::to_string(report.ks[q])] = report.mean_recall[q];
    mean["ndcg@" + std::to_string(report.ks[q])] = report.mean_ndcg[q];
  }
  auto& tail = j["tail"];
  tail = nlohmann::ordered_json::array();
  for (const auto& t : report.tails) {
    tail.push_back({{"metric", t.metric + "@" + std::to_string(t.k)}, {"alpha", t.alpha}, {"value", t.value}});
  }
  return j;
}

void write_per_user_csv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "user";
  for (const auto k : report.ks) out << ",recall@" << k;
  for (const auto k : report.ks) out << ",ndcg@" << k;
  out << '\n';
  out.precision(17);
  for (const auto& m : report.per_user) {
    out << m.label;
    for (const double v : m.recall) out << ',' << v;
    for (const double v : m.ndcg) out << ',' << v;
    out << '\n';
  }
}

}  // namespace safer
