#include "safer/model.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "safer/errors.hpp"
#include "safer/random.hpp"

namespace safer {

ModelState::ModelState(std::size_t num_users, std::size_t num_items, std::size_t dim)
    : dual(Vector::Ones(static_cast<Eigen::Index>(num_users))),
      users_(Matrix::Zero(static_cast<Eigen::Index>(num_users), static_cast<Eigen::Index>(dim))),
      items_(Matrix::Zero(static_cast<Eigen::Index>(num_items), static_cast<Eigen::Index>(dim))) {}

ModelState init_embeddings(std::size_t num_users, std::size_t num_items, std::size_t dim, double sigma,
                           std::uint64_t seed) {
  if (dim < 1) throw ConfigError("embedding dimension must be at least 1");
  ModelState state(num_users, num_items, dim);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sigma / std::sqrt(static_cast<double>(dim)));
  auto& u = state.mutable_users();
  for (Eigen::Index r = 0; r < u.rows(); ++r)
    for (Eigen::Index c = 0; c < u.cols(); ++c) u(r, c) = noise(rng);
  auto& v = state.mutable_items();
  for (Eigen::Index r = 0; r < v.rows(); ++r)
    for (Eigen::Index c = 0; c < v.cols(); ++c) v(r, c) = noise(rng);
  return state;
}

namespace {

constexpr Eigen::Index kChunkRows = 512;

Matrix chunked_gramian(const Matrix& rows, const double* weights) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  const Eigen::Index chunks = (n + kChunkRows - 1) / kChunkRows;
  std::vector<Matrix> partial(static_cast<std::size_t>(chunks));

#pragma omp parallel for schedule(static)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index begin = c * kChunkRows;
    const Eigen::Index len = std::min(kChunkRows, n - begin);
    const auto block = rows.middleRows(begin, len);
    Matrix& g = partial[static_cast<std::size_t>(c)];
    if (weights == nullptr) {
      g.noalias() = block.transpose() * block;
    } else {
      const Eigen::Map<const Vector> w(weights + begin, len);
      g.noalias() = block.transpose() * (w.asDiagonal() * block);
    }
  }

  Matrix total = Matrix::Zero(d, d);
  for (const auto& g : partial) total += g;
  // Mirror the lower triangle so the result is exactly symmetric.
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i + 1; j < d; ++j) total(i, j) = total(j, i);
  return total;
}

}  // namespace

Matrix gramian(const Matrix& rows) { return chunked_gramian(rows, nullptr); }

Matrix weighted_gramian(const Matrix& rows, std::span<const double> weights) {
  if (weights.size() != static_cast<std::size_t>(rows.rows())) {
    throw ConfigError("weighted_gramian: weight count does not match row count");
  }
  return chunked_gramian(rows, weights.data());
}

Gramian item_gramian(const ModelState& state) { return {gramian(state.items()), state.item_version()}; }

Gramian weighted_user_gramian(const ModelState& state, const Vector& z) {
  return {weighted_gramian(state.users(), std::span<const double>(z.data(), static_cast<std::size_t>(z.size()))),
          state.user_version()};
}

void require_fresh_item_gramian(const ModelState& state, const Gramian& gram) {
  if (gram.source_version != state.item_version()) {
    throw ContractViolation("item Gramian is stale: built from V version " + std::to_string(gram.source_version) +
                            ", current version " + std::to_string(state.item_version()));
  }
}

void require_fresh_user_gramian(const ModelState& state, const Gramian& gram) {
  if (gram.source_version != state.user_version()) {
    throw ContractViolation("weighted user Gramian is stale: built from U version " +
                            std::to_string(gram.source_version) + ", current version " +
                            std::to_string(state.user_version()));
  }
}

namespace {

double residual_sum(const Eigen::Ref<const Vector>& u, const Matrix& items, std::span<const Index> observed) {
  double sum = 0.0;
  for (const Index j : observed) {
    const double r = 1.0 - items.row(j).dot(u);
    sum += r * r;
  }
  return 0.5 * sum;
}

}  // namespace

double implicit_loss(const Eigen::Ref<const Vector>& u, const Matrix& items, std::span<const Index> observed,
                     const Matrix& item_gram, double beta0) {
  const double data = observed.empty() ? 0.0 : residual_sum(u, items, observed) / static_cast<double>(observed.size());
  return data + 0.5 * beta0 * u.dot(item_gram * u);
}

double unnormalized_implicit_loss(const Eigen::Ref<const Vector>& u, const Matrix& items,
                                  std::span<const Index> observed, const Matrix& item_gram, double beta0) {
  return residual_sum(u, items, observed) + 0.5 * beta0 * u.dot(item_gram * u);
}

double user_loss(const ModelState& state, std::size_t user, const InteractionSet& train, const Gramian& item_gram,
                 double beta0) {
  require_fresh_item_gramian(state, item_gram);
  return implicit_loss(state.users().row(static_cast<Eigen::Index>(user)).transpose(), state.items(),
                       train.items_of(user), item_gram.value, beta0);
}

double ials_user_loss(const ModelState& state, std::size_t user, const InteractionSet& train,
                      const Gramian& item_gram, double beta0) {
  require_fresh_item_gramian(state, item_gram);
  return unnormalized_implicit_loss(state.users().row(static_cast<Eigen::Index>(user)).transpose(), state.items(),
                                    train.items_of(user), item_gram.value, beta0);
}

Vector all_losses(const ModelState& state, const InteractionSet& train, const Gramian& item_gram, double beta0) {
  require_fresh_item_gramian(state, item_gram);
  const auto n = static_cast<Eigen::Index>(train.num_users());
  Vector losses(n);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    losses[i] = implicit_loss(state.users().row(i).transpose(), state.items(),
                              train.items_of(static_cast<std::size_t>(i)), item_gram.value, beta0);
  }
  return losses;
}

}  // namespace safer
