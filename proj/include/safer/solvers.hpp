#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "safer/interactions.hpp"
#include "safer/kernels.hpp"
#include "safer/model.hpp"
#include "safer/quantile.hpp"

namespace safer {

enum class SolverKind { safer2, safer2pp, ials, erm, cvar_subgrad };

SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

struct SolverConfig {
  SolverKind solver = SolverKind::safer2;
  double alpha = 0.3;
  double beta0 = 0.1;
  double lambda = 0.01;
  Kernel kernel{KernelFamily::gaussian, 1.0};
  std::size_t dim = 8;
  int epochs = 20;
  XiSolverConfig xi;              ///< xi.alpha is overwritten by alpha
  std::size_t block_size = 0;     ///< SAFER2++ subspace size; 0 means d
  double learning_rate = 0.01;    ///< cvar_subgrad
  bool adam = false;              ///< cvar_subgrad
  double ials_exponent = 1.0;     ///< nu in the iALS weighting
  double init_sigma = 0.1;
  double divergence_threshold = 1e12;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class TikhonovStrategy { safer2, ials };

/// Per-row ridge weights lambda_u^(i), lambda_v^(j).
struct TikhonovWeights {
  Vector user;
  Vector item;
  TikhonovStrategy strategy = TikhonovStrategy::safer2;
};

/// Condition-number-based weights:
///   lambda_u = lambda/(alpha n) (1 + beta0 |V|)
///   lambda_v^(j) = lambda/(alpha n) (sum_{i in U_j} 1/|V_i| + beta0 alpha n)
/// `item_inverse_count_sums[j]` is sum_{i in U_j} 1/|V_i|.
TikhonovWeights tikhonov_safer2(std::size_t num_users, std::size_t num_items,
                                std::span<const double> item_inverse_count_sums, double alpha, double beta0,
                                double lambda);
TikhonovWeights tikhonov_safer2(const InteractionSet& train, double alpha, double beta0, double lambda);

/// lambda_u^(i) = lambda (|V_i| + beta0 |V|)^nu, lambda_v^(j) = lambda (|U_j| + beta0 |U|)^nu.
TikhonovWeights tikhonov_ials(std::span<const std::size_t> user_counts, std::span<const std::size_t> item_counts,
                              double beta0, double lambda, double exponent);
TikhonovWeights tikhonov_ials(const InteractionSet& train, double beta0, double lambda, double exponent);

/// A d x d symmetric positive definite system lhs * x = rhs.
struct RowSystem {
  Matrix lhs;
  Vector rhs;
};

/// Cholesky solve. Retries once with 1e-12 diagonal jitter; throws
/// NumericalError if the matrix is still not positive definite.
Vector solve_spd(const RowSystem& system);

/// User row of the re-weighted ALS step, scaled by alpha n:
///   ((z/|V_i|) sum v v^T + z beta0 V^T V + ridge I) u = (z/|V_i|) sum v
/// with ridge = alpha n lambda_u^(i).
RowSystem safer2_user_system(const Matrix& items, std::span<const Index> observed, double z, double beta0,
                             double ridge, const Matrix& item_gram);
/// Item row: (sum_{i in U_j} (z_i/|V_i|) u u^T + beta0 U^T diag(z) U + ridge I) v = sum (z_i/|V_i|) u.
RowSystem safer2_item_system(const Matrix& users, std::span<const Index> observers, const Vector& z,
                             const InteractionSet& train, double beta0, double ridge,
                             const Matrix& weighted_user_gram);
/// iALS user row: (sum v v^T + beta0 V^T V + lambda_u I) u = sum v.
RowSystem ials_user_system(const Matrix& items, std::span<const Index> observed, double beta0, double ridge,
                           const Matrix& item_gram);
RowSystem ials_item_system(const Matrix& users, std::span<const Index> observers, double beta0, double ridge,
                           const Matrix& user_gram);

/// Exact re-weighted ALS updates of every row of U (resp. V).
void update_users_safer2(ModelState& state, const InteractionSet& train, const Vector& z,
                         const TikhonovWeights& weights, const Gramian& item_gram, double alpha, double beta0);
void update_items_safer2(ModelState& state, const InteractionSet& train, const Vector& z,
                         const TikhonovWeights& weights, const Gramian& weighted_user_gram, double alpha,
                         double beta0);
void update_users_ials(ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                       const Gramian& item_gram, double beta0);
void update_items_ials(ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                       const Gramian& user_gram, double beta0);

/// 1/2 sum_i lambda_u^(i) |u_i|^2 + 1/2 sum_j lambda_v^(j) |v_j|^2.
double tikhonov_penalty(const ModelState& state, const TikhonovWeights& weights);
/// (1/(alpha n)) sum_i z_i l_i + penalty: the U/V subproblem with xi, z frozen.
double reweighted_objective(const ModelState& state, const InteractionSet& train, const Vector& z,
                            const TikhonovWeights& weights, double alpha, double beta0);
/// (1/n) sum_i l_i + penalty.
double erm_objective(const ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                     double beta0);
/// sum_i l_iALS + penalty.
double ials_objective(const ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                      double beta0);
/// Smoothed CVaR plus penalty at the state's xi.
double cts_cvar_objective(const ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                          double alpha, double beta0, const Kernel& kernel);
/// xi + (1/(alpha n)) sum_i max(0, l_i - xi) + penalty.
double cvar_mf_objective(const ModelState& state, const InteractionSet& train, const TikhonovWeights& weights,
                         double alpha, double beta0, double xi);

/// Batch subgradient of cvar_mf_objective with respect to U and V at fixed
/// xi, taking 1{l_i >= xi} as the ramp subgradient.
struct CvarSubgradient {
  Matrix users;
  Matrix items;
  std::size_t active_users = 0;
};
CvarSubgradient cvar_subgradient(const ModelState& state, const InteractionSet& train,
                                 const TikhonovWeights& weights, double alpha, double beta0, double xi);

/// Condition number lambda_max / lambda_min of a symmetric matrix.
double condition_number(const Matrix& h);

}  // namespace safer
