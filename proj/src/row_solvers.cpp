#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "safer/detail/parallel.hpp"
#include "safer/errors.hpp"
#include "safer/solvers.hpp"

namespace safer {

Vector solve_spd(const RowSystem& system) {
  Eigen::LLT<Matrix> llt(system.lhs);
  if (llt.info() != Eigen::Success) {
    Matrix jittered = system.lhs;
    jittered.diagonal().array() += 1e-12;
    llt.compute(jittered);
    if (llt.info() != Eigen::Success) throw NumericalError("row system is not positive definite");
  }
  Vector x = llt.solve(system.rhs);
  if (!x.allFinite()) throw NumericalError("row solve produced non-finite values");
  return x;
}

RowSystem safer2_user_system(const Matrix& items, std::span<const Index> observed, double z, double beta0,
                             double ridge, const Matrix& item_gram) {
  const auto d = items.cols();
  RowSystem s{Matrix::Zero(d, d), Vector::Zero(d)};
  for (const Index j : observed) {
    s.lhs.noalias() += items.row(j).transpose() * items.row(j);
    s.rhs += items.row(j).transpose();
  }
  const double scale = observed.empty() ? 0.0 : z / static_cast<double>(observed.size());
  s.lhs *= scale;
  s.rhs *= scale;
  s.lhs += (z * beta0) * item_gram;
  s.lhs.diagonal().array() += ridge;
  return s;
}

RowSystem safer2_item_system(const Matrix& users, std::span<const Index> observers, const Vector& z,
                             const InteractionSet& train, double beta0, double ridge,
                             const Matrix& weighted_user_gram) {
  const auto d = users.cols();
  RowSystem s{Matrix::Zero(d, d), Vector::Zero(d)};
  for (const Index i : observers) {
    const double c = z[i] / static_cast<double>(train.items_of(i).size());
    s.lhs.noalias() += c * (users.row(i).transpose() * users.row(i));
    s.rhs += c * users.row(i).transpose();
  }
  s.lhs += beta0 * weighted_user_gram;
  s.lhs.diagonal().array() += ridge;
  return s;
}

RowSystem ials_user_system(const Matrix& items, std::span<const Index> observed, double beta0, double ridge,
                           const Matrix& item_gram) {
  const auto d = items.cols();
  RowSystem s{Matrix::Zero(d, d), Vector::Zero(d)};
  for (const Index j : observed) {
    s.lhs.noalias() += items.row(j).transpose() * items.row(j);
    s.rhs += items.row(j).transpose();
  }
  s.lhs += beta0 * item_gram;
  s.lhs.diagonal().array() += ridge;
  return s;
}

RowSystem ials_item_system(const Matrix& users, std::span<const Index> observers, double beta0, double ridge,
                           const Matrix& user_gram) {
  return ials_user_system(users, observers, beta0, ridge, user_gram);
}

void update_users_safer2(ModelState& state, const InteractionSet& train, const Vector& z,
                         const TikhonovWeights& weights, const Gramian& item_gram, double alpha, double beta0) {
  require_fresh_item_gramian(state, item_gram);
  const auto n = static_cast<Eigen::Index>(train.num_users());
  const double scale = alpha * static_cast<double>(n);
  Matrix next(n, static_cast<Eigen::Index>(state.dim()));
  const Matrix& items = state.items();
  detail::FirstError errors;
#pragma omp parallel for schedule(dynamic, 64)
  for (Eigen::Index i = 0; i < n; ++i) {
    errors.guard([&] {
      const auto sys = safer2_user_system(items, train.items_of(static_cast<std::size_t>(i)), z[i], beta0,
                                          scale * weights.user[i], item_gram.value);
      next.row(i) = solve_spd(sys).transpose();
    });
  }
  errors.rethrow();
  state.mutable_users() = std::move(next);
}

void update_items_safer2(ModelState& state, const InteractionSet& train, const Vector& z,
                         const TikhonovWeights& weights, const Gramian& weighted_user_gram, double alpha,
                         double beta0) {
  require_fresh_user_gramian(state, weighted_user_gram);
  const auto m = static_cast<Eigen::Index>(train.num_items());
  const double scale = alpha * static_cast<double>(train.num_users());
  Matrix next(m, static_cast<Eigen::Index>(state.dim()));
  const Matrix& users = state.users();
  detail::FirstError errors;
#pragma omp parallel for schedule(dynamic, 64)
  for (Eigen::Index j = 0; j < m; ++j) {
    errors.guard([&] {
      const auto sys = safer2_item_system(users, train.users_of(static_cast<std::size_t>(j)), z, train, beta0,
                                          scale * weights.item[j], weighted_user_gram.value);
      next.row(j) = solve_spd(sys).transpose();
    });
  }
  errors.rethrow();
  state.mutable_items() = std::move(next);
}

void update_users_ials(ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                       const Gramian& item_gram, double beta0) {
  require_fresh_item_gramian(state, item_gram);
  const auto n = static_cast<Eigen::Index>(train.num_users());
  Matrix next(n, static_cast<Eigen::Index>(state.dim()));
  const Matrix& items = state.items();
  detail::FirstError errors;
#pragma omp parallel for schedule(dynamic, 64)
  for (Eigen::Index i = 0; i < n; ++i) {
    errors.guard([&] {
      const auto sys = ials_user_system(items, train.items_of(static_cast<std::size_t>(i)), beta0, weights.user[i],
                                        item_gram.value);
      next.row(i) = solve_spd(sys).transpose();
    });
  }
  errors.rethrow();
  state.mutable_users() = std::move(next);
}

void update_items_ials(ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                       const Gramian& user_gram, double beta0) {
  require_fresh_user_gramian(state, user_gram);
  const auto m = static_cast<Eigen::Index>(train.num_items());
  Matrix next(m, static_cast<Eigen::Index>(state.dim()));
  const Matrix& users = state.users();
  detail::FirstError errors;
#pragma omp parallel for schedule(dynamic, 64)
  for (Eigen::Index j = 0; j < m; ++j) {
    errors.guard([&] {
      const auto sys = ials_item_system(users, train.users_of(static_cast<std::size_t>(j)), beta0, weights.item[j],
                                        user_gram.value);
      next.row(j) = solve_spd(sys).transpose();
    });
  }
  errors.rethrow();
  state.mutable_items() = std::move(next);
}

double condition_number(const Matrix& h) {
  if (h.rows() != h.cols()) throw ConfigError("condition_number: matrix is not square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (!h.isApprox(h.transpose(), 1e-12) && (h - h.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw ConfigError("condition_number: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  return std::abs(ev.maxCoeff()) / std::abs(ev.minCoeff());
}

}  // namespace safer
