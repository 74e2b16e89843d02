#include <algorithm>
#include <chrono>

#include <Eigen/Cholesky>

#include "safer/detail/parallel.hpp"
#include "safer/errors.hpp"
#include "safer/quantile.hpp"
#include "safer/trainer.hpp"

namespace safer {

std::vector<std::pair<std::size_t, std::size_t>> index_blocks(std::size_t dim, std::size_t block_size) {
  if (block_size == 0) block_size = dim;
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  for (std::size_t b = 0; b < dim; b += block_size) blocks.emplace_back(b, std::min(dim, b + block_size));
  return blocks;
}

std::vector<double> compute_predictions(const ModelState& state, const InteractionSet& train) {
  std::vector<double> pred(train.nnz());
  const auto n = static_cast<Eigen::Index>(train.num_users());
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto items = train.items_of(static_cast<std::size_t>(i));
    const std::size_t base = train.user_offset(static_cast<std::size_t>(i));
    for (std::size_t k = 0; k < items.size(); ++k) pred[base + k] = state.items().row(items[k]).dot(state.users().row(i));
  }
  return pred;
}

namespace {

Vector newton_direction(const Matrix& h, const Vector& g) {
  return -solve_spd(RowSystem{h, g});
}

}  // namespace

void subspace_users_step(ModelState& state, const InteractionSet& train, const Vector& z,
                         const TikhonovWeights& weights, double alpha, double beta0, std::size_t begin,
                         std::size_t end, std::vector<double>& predictions) {
  const auto b = static_cast<Eigen::Index>(begin);
  const auto s = static_cast<Eigen::Index>(end - begin);
  const Matrix& V = state.items();
  const Matrix partial = V.middleCols(b, s).transpose() * V;  // s x d
  const Matrix partial_block = partial.middleCols(b, s);
  const double scale = alpha * static_cast<double>(train.num_users());
  const auto n = static_cast<Eigen::Index>(train.num_users());
  Matrix& U = state.mutable_users();

  detail::FirstError errors;
#pragma omp parallel for schedule(dynamic, 64)
  for (Eigen::Index i = 0; i < n; ++i) {
    errors.guard([&] {
      const auto items = train.items_of(static_cast<std::size_t>(i));
      const std::size_t base = train.user_offset(static_cast<std::size_t>(i));
      const double ridge = scale * weights.user[i];
      const double c = items.empty() ? 0.0 : z[i] / static_cast<double>(items.size());
      Vector g = (z[i] * beta0) * (partial * U.row(i).transpose()) + ridge * U.row(i).segment(b, s).transpose();
      Matrix h = (z[i] * beta0) * partial_block;
      h.diagonal().array() += ridge;
      for (std::size_t k = 0; k < items.size(); ++k) {
        const auto vp = V.row(items[k]).segment(b, s);
        g += (c * (predictions[base + k] - 1.0)) * vp.transpose();
        h.noalias() += c * (vp.transpose() * vp);
      }
      const Vector delta = newton_direction(h, g);
      U.row(i).segment(b, s) += delta.transpose();
      for (std::size_t k = 0; k < items.size(); ++k) predictions[base + k] += V.row(items[k]).segment(b, s).dot(delta);
    });
  }
  errors.rethrow();
}

void subspace_items_step(ModelState& state, const InteractionSet& train, const Vector& z,
                         const TikhonovWeights& weights, double alpha, double beta0, std::size_t begin,
                         std::size_t end, std::vector<double>& predictions) {
  const auto b = static_cast<Eigen::Index>(begin);
  const auto s = static_cast<Eigen::Index>(end - begin);
  const Matrix& U = state.users();
  const Matrix partial = (U.middleCols(b, s).array().colwise() * z.array()).matrix().transpose() * U;
  const Matrix partial_block = partial.middleCols(b, s);
  const double scale = alpha * static_cast<double>(train.num_users());
  const auto m = static_cast<Eigen::Index>(train.num_items());
  const auto& to_user = train.item_to_user_position();
  Matrix& V = state.mutable_items();

  detail::FirstError errors;
#pragma omp parallel for schedule(dynamic, 64)
  for (Eigen::Index j = 0; j < m; ++j) {
    errors.guard([&] {
      const auto users = train.users_of(static_cast<std::size_t>(j));
      const std::size_t base = train.item_offset(static_cast<std::size_t>(j));
      const double ridge = scale * weights.item[j];
      Vector g = beta0 * (partial * V.row(j).transpose()) + ridge * V.row(j).segment(b, s).transpose();
      Matrix h = beta0 * partial_block;
      h.diagonal().array() += ridge;
      for (std::size_t k = 0; k < users.size(); ++k) {
        const Index i = users[k];
        const double c = z[i] / static_cast<double>(train.items_of(i).size());
        const auto up = U.row(i).segment(b, s);
        g += (c * (predictions[to_user[base + k]] - 1.0)) * up.transpose();
        h.noalias() += c * (up.transpose() * up);
      }
      const Vector delta = newton_direction(h, g);
      V.row(j).segment(b, s) += delta.transpose();
      for (std::size_t k = 0; k < users.size(); ++k) {
        predictions[to_user[base + k]] += U.row(users[k]).segment(b, s).dot(delta);
      }
    });
  }
  errors.rethrow();
}

EpochDiagnostics epoch_safer2pp(ModelState& state, const InteractionSet& train, EpochContext& ctx) {
  if (state.num_users() != train.num_users() || state.num_items() != train.num_items()) {
    throw ConfigError("model dimensions do not match the training set");
  }
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = ctx.config;
  EpochDiagnostics diag;
  const Matrix u_before = state.users();
  const Matrix v_before = state.items();

  // xi and z exactly as in SAFER2.
  {
    const Vector losses = all_losses(state, train, item_gramian(state), cfg.beta0);
    const std::span<const double> l(losses.data(), static_cast<std::size_t>(losses.size()));
    const double x0 = ctx.epoch == 0 ? empirical_quantile_higher(l, 1.0 - cfg.alpha) : state.xi;
    const XiResult r = solve_xi(l, ctx.config.xi, cfg.kernel, x0, ctx.rng);
    const Vector z = dual_step(l, r.xi, cfg.kernel);
    diag.residual_xi = std::abs(r.xi - state.xi);
    diag.residual_dual = state.dual.size() == z.size() ? (z - state.dual).norm() : z.norm();
    diag.xi_iters = r.iterations;
    diag.xi_grad = r.gradient;
    diag.xi_halvings = r.halvings;
    state.xi = diag.xi = r.xi;
    state.dual = z;
    diag.sum_z = z.sum();
  }

  std::vector<double> predictions = compute_predictions(state, train);
  for (const auto& [lo, hi] : index_blocks(state.dim(), cfg.block_size)) {
    subspace_users_step(state, train, state.dual, ctx.weights, cfg.alpha, cfg.beta0, lo, hi, predictions);
    subspace_items_step(state, train, state.dual, ctx.weights, cfg.alpha, cfg.beta0, lo, hi, predictions);
  }

  diag.residual_users = (state.users() - u_before).norm();
  diag.residual_items = (state.items() - v_before).norm();
  diag.objective = cts_cvar_objective(state, train, ctx.weights, cfg.alpha, cfg.beta0, cfg.kernel);
  diag.epoch = ++ctx.epoch;
  diag.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return diag;
}

}  // namespace safer
