#include <cmath>

#include "safer/errors.hpp"
#include "safer/solvers.hpp"

namespace safer {

TikhonovWeights tikhonov_safer2(std::size_t num_users, std::size_t num_items,
                                std::span<const double> item_inverse_count_sums, double alpha, double beta0,
                                double lambda) {
  if (item_inverse_count_sums.size() != num_items) throw ConfigError("tikhonov_safer2: one sum per item required");
  const double n = static_cast<double>(num_users);
  const double scale = lambda / (alpha * n);
  TikhonovWeights w;
  w.strategy = TikhonovStrategy::safer2;
  w.user = Vector::Constant(static_cast<Eigen::Index>(num_users),
                            scale * (1.0 + beta0 * static_cast<double>(num_items)));
  w.item.resize(static_cast<Eigen::Index>(num_items));
  for (std::size_t j = 0; j < num_items; ++j) {
    w.item[static_cast<Eigen::Index>(j)] = scale * (item_inverse_count_sums[j] + beta0 * alpha * n);
  }
  return w;
}

TikhonovWeights tikhonov_safer2(const InteractionSet& train, double alpha, double beta0, double lambda) {
  std::vector<double> sums(train.num_items(), 0.0);
  for (std::size_t j = 0; j < train.num_items(); ++j) {
    for (const Index i : train.users_of(j)) sums[j] += 1.0 / static_cast<double>(train.items_of(i).size());
  }
  return tikhonov_safer2(train.num_users(), train.num_items(), sums, alpha, beta0, lambda);
}

TikhonovWeights tikhonov_ials(std::span<const std::size_t> user_counts, std::span<const std::size_t> item_counts,
                              double beta0, double lambda, double exponent) {
  const double nu = static_cast<double>(user_counts.size());
  const double ni = static_cast<double>(item_counts.size());
  TikhonovWeights w;
  w.strategy = TikhonovStrategy::ials;
  w.user.resize(static_cast<Eigen::Index>(user_counts.size()));
  w.item.resize(static_cast<Eigen::Index>(item_counts.size()));
  for (std::size_t i = 0; i < user_counts.size(); ++i) {
    w.user[static_cast<Eigen::Index>(i)] = lambda * std::pow(static_cast<double>(user_counts[i]) + beta0 * ni, exponent);
  }
  for (std::size_t j = 0; j < item_counts.size(); ++j) {
    w.item[static_cast<Eigen::Index>(j)] = lambda * std::pow(static_cast<double>(item_counts[j]) + beta0 * nu, exponent);
  }
  return w;
}

TikhonovWeights tikhonov_ials(const InteractionSet& train, double beta0, double lambda, double exponent) {
  std::vector<std::size_t> uc(train.num_users());
  std::vector<std::size_t> ic(train.num_items());
  for (std::size_t i = 0; i < uc.size(); ++i) uc[i] = train.items_of(i).size();
  for (std::size_t j = 0; j < ic.size(); ++j) ic[j] = train.users_of(j).size();
  return tikhonov_ials(uc, ic, beta0, lambda, exponent);
}

}  // namespace safer
