#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "safer/model.hpp"
#include "safer/solvers.hpp"
#include "safer/split.hpp"

namespace safer {

/// Constants of the per-user fold-in problem.
///
/// SAFER2, SAFER2++, ERM and CVaR solve
///   min_u (1/(alpha n)) l(Vu, I) + lambda_u/2 |u|^2,  lambda_u = lambda/(alpha n) (1 + beta0 |V|),
/// whose normal equations reduce to
///   ((1/|I|) sum v v^T + beta0 V^T V + lambda (1 + beta0 |V|) I) u = (1/|I|) sum v.
/// iALS solves its unnormalized loss with ridge lambda (|I| + beta0 |V|)^nu.
struct FoldInConstants {
  SolverKind solver = SolverKind::safer2;
  double lambda = 0.01;
  double beta0 = 0.1;
  double ials_exponent = 1.0;

  static FoldInConstants from(const SolverConfig& config);
};

/// Ridge of the fold-in system for a user with `input_count` items.
double foldin_ridge(const FoldInConstants& constants, std::size_t input_count, std::size_t num_items);
RowSystem foldin_system(const Matrix& items, const Matrix& item_gram, std::span<const Index> input_items,
                        const FoldInConstants& constants);
/// Throws ConfigError on an empty input set.
Vector foldin_user_embedding(const Matrix& items, const Matrix& item_gram, std::span<const Index> input_items,
                             const FoldInConstants& constants);

/// Top-k items by u.v descending, ties by ascending item id, `exclude`
/// removed. k is clamped to the number of eligible items.
std::vector<Index> rank_items(const Vector& u, const Matrix& items, std::span<const Index> exclude,
                              std::size_t k_max);

double recall_at_k(std::span<const Index> ranked, std::span<const Index> holdout, std::size_t k);
double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> holdout, std::size_t k);

/// Mean of the ceil(alpha n) smallest values. Throws on empty input or alpha outside (0, 1].
double tail_mean(std::span<const double> values, double alpha);

struct UserMetrics {
  Index user_id = 0;
  std::string label;
  std::vector<double> recall;  ///< one per K
  std::vector<double> ndcg;
};

struct TailValue {
  std::string metric;  ///< "recall" or "ndcg"
  std::size_t k = 0;
  double alpha = 0.0;
  double value = 0.0;
};

struct MetricReport {
  std::vector<std::size_t> ks;
  std::vector<double> alphas;
  std::vector<UserMetrics> per_user;
  std::vector<double> mean_recall;  ///< one per K
  std::vector<double> mean_ndcg;
  std::vector<TailValue> tails;
  std::size_t dropped_users = 0;

  /// Tail value lookup; throws std::out_of_range when absent.
  double tail(const std::string& metric, std::size_t k, double alpha) const;
  double mean(const std::string& metric, std::size_t k) const;
};

/// Fold-in, rank and score every user. Users with empty input or holdout
/// sets are skipped and counted in dropped_users.
MetricReport evaluate(const Matrix& items, const std::vector<FoldInUser>& users, const FoldInConstants& constants,
                      const std::vector<std::size_t>& ks, const std::vector<double>& alphas);

nlohmann::ordered_json to_json(const MetricReport& report);
void write_per_user_csv(const MetricReport& report, const std::filesystem::path& path);

}  // namespace safer
