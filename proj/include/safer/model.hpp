#pragma once

#include <cstdint>
#include <filesystem>
#include <span>

#include <Eigen/Dense>

#include "safer/interactions.hpp"

namespace safer {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Embeddings U (users x d) and V (items x d), the quantile xi and the
/// per-user dual weights z. Every mutable access to U or V bumps a version
/// counter so derived caches can detect staleness.
class ModelState {
 public:
  ModelState() = default;
  ModelState(std::size_t num_users, std::size_t num_items, std::size_t dim);

  std::size_t num_users() const noexcept { return static_cast<std::size_t>(users_.rows()); }
  std::size_t num_items() const noexcept { return static_cast<std::size_t>(items_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(users_.cols()); }

  const Matrix& users() const noexcept { return users_; }
  const Matrix& items() const noexcept { return items_; }
  Matrix& mutable_users() noexcept {
    ++user_version_;
    return users_;
  }
  Matrix& mutable_items() noexcept {
    ++item_version_;
    return items_;
  }

  std::uint64_t user_version() const noexcept { return user_version_; }
  std::uint64_t item_version() const noexcept { return item_version_; }

  double xi = 0.0;
  Vector dual;  ///< z, one weight in [0, 1] per user

 private:
  Matrix users_;
  Matrix items_;
  std::uint64_t user_version_ = 0;
  std::uint64_t item_version_ = 0;
};

/// U, V ~ N(0, (sigma / sqrt(d))^2) i.i.d.; xi = 0; z = 1.
ModelState init_embeddings(std::size_t num_users, std::size_t num_items, std::size_t dim, double sigma,
                           std::uint64_t seed);

/// A d x d Gramian together with the version of the matrix it was built from.
struct Gramian {
  Matrix value;
  std::uint64_t source_version = 0;
};

/// Sum of outer products of the rows. Reduction runs over fixed-size row
/// chunks in a fixed order, so the result does not depend on thread count.
Matrix gramian(const Matrix& rows);
/// Sum of weights[r] * rows.row(r)^T rows.row(r).
Matrix weighted_gramian(const Matrix& rows, std::span<const double> weights);

Gramian item_gramian(const ModelState& state);
Gramian weighted_user_gramian(const ModelState& state, const Vector& z);

/// Throws ContractViolation when `gram` was built from an older V.
void require_fresh_item_gramian(const ModelState& state, const Gramian& gram);
void require_fresh_user_gramian(const ModelState& state, const Gramian& gram);

/// Normalized implicit-MF loss of one embedding,
///   (1/|I|) sum_{j in I} (1 - u.v_j)^2 / 2 + beta0/2 u^T G u.
double implicit_loss(const Eigen::Ref<const Vector>& u, const Matrix& items, std::span<const Index> observed,
                     const Matrix& item_gram, double beta0);
/// Same without the 1/|I| normalization of the residual term.
double unnormalized_implicit_loss(const Eigen::Ref<const Vector>& u, const Matrix& items,
                                  std::span<const Index> observed, const Matrix& item_gram, double beta0);

double user_loss(const ModelState& state, std::size_t user, const InteractionSet& train, const Gramian& item_gram,
                 double beta0);
double ials_user_loss(const ModelState& state, std::size_t user, const InteractionSet& train,
                      const Gramian& item_gram, double beta0);

/// user_loss for every user against one shared Gramian.
Vector all_losses(const ModelState& state, const InteractionSet& train, const Gramian& item_gram, double beta0);

/// Little-endian binary checkpoint: magic, version, |U|, |V|, d, U, V, xi, z.
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);

}  // namespace safer
