#include <algorithm>
#include <cmath>

#include "safer/errors.hpp"
#include "safer/solvers.hpp"

namespace safer {

double tikhonov_penalty(const ModelState& state, const TikhonovWeights& weights) {
  const double pu = weights.user.dot(state.users().rowwise().squaredNorm());
  const double pv = weights.item.dot(state.items().rowwise().squaredNorm());
  return 0.5 * (pu + pv);
}

double reweighted_objective(const ModelState& state, const InteractionSet& train, const Vector& z,
                            const TikhonovWeights& weights, double alpha, double beta0) {
  const Vector losses = all_losses(state, train, item_gramian(state), beta0);
  const double n = static_cast<double>(train.num_users());
  return z.dot(losses) / (alpha * n) + tikhonov_penalty(state, weights);
}

double erm_objective(const ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                     double beta0) {
  const Vector losses = all_losses(state, train, item_gramian(state), beta0);
  return losses.mean() + tikhonov_penalty(state, weights);
}

double ials_objective(const ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                      double beta0) {
  const Gramian g = item_gramian(state);
  double total = 0.0;
  for (std::size_t i = 0; i < train.num_users(); ++i) total += ials_user_loss(state, i, train, g, beta0);
  return total + tikhonov_penalty(state, weights);
}

double cts_cvar_objective(const ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                          double alpha, double beta0, const Kernel& kernel) {
  const Vector losses = all_losses(state, train, item_gramian(state), beta0);
  const std::span<const double> l(losses.data(), static_cast<std::size_t>(losses.size()));
  return cvar_objective(l, state.xi, alpha, kernel) + tikhonov_penalty(state, weights);
}

double cvar_mf_objective(const ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                         double alpha, double beta0, double xi) {
  const Vector losses = all_losses(state, train, item_gramian(state), beta0);
  const double n = static_cast<double>(train.num_users());
  double excess = 0.0;
  for (Eigen::Index i = 0; i < losses.size(); ++i) excess += std::max(0.0, losses[i] - xi);
  return xi + excess / (alpha * n) + tikhonov_penalty(state, weights);
}

CvarSubgradient cvar_subgradient(const ModelState& state, const InteractionSet& train,
                                 const TikhonovWeights& weights, double alpha, double beta0, double xi) {
  const Matrix& U = state.users();
  const Matrix& V = state.items();
  const Gramian g = item_gramian(state);
  const Vector losses = all_losses(state, train, g, beta0);
  const auto n = static_cast<Eigen::Index>(train.num_users());
  const double scale = 1.0 / (alpha * static_cast<double>(n));

  CvarSubgradient out;
  out.users = Matrix::Zero(U.rows(), U.cols());
  out.items = Matrix::Zero(V.rows(), V.cols());
  std::vector<double> active(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (losses[i] >= xi) {
      active[static_cast<std::size_t>(i)] = 1.0;
      ++out.active_users;
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto items = train.items_of(static_cast<std::size_t>(i));
    const bool on = active[static_cast<std::size_t>(i)] != 0.0;
    Vector gu = weights.user[i] * U.row(i).transpose();
    if (on) {
      const double inv = 1.0 / static_cast<double>(items.size());
      Vector data = beta0 * (g.value * U.row(i).transpose());
      for (const Index j : items) {
        const double r = V.row(j).dot(U.row(i)) - 1.0;
        data += inv * r * V.row(j).transpose();
        out.items.row(j) += (scale * inv * r) * U.row(i);
      }
      gu += scale * data;
    }
    out.users.row(i) = gu.transpose();
  }

  const Matrix active_gram = weighted_gramian(U, active);
  out.items += (scale * beta0) * (V * active_gram);
  out.items += weights.item.asDiagonal() * V;
  return out;
}

}  // namespace safer
