#pragma once

#include <functional>
#include <vector>

#include "safer/interactions.hpp"
#include "safer/model.hpp"
#include "safer/random.hpp"
#include "safer/solvers.hpp"

namespace safer {

/// One record of the training log.
struct EpochDiagnostics {
  int epoch = 0;
  double objective = 0.0;
  double xi = 0.0;
  double sum_z = 0.0;
  int xi_iters = 0;
  double xi_grad = 0.0;
  int xi_halvings = 0;
  double residual_users = 0.0;  ///< |U^{t+1} - U^t|_F
  double residual_items = 0.0;  ///< |V^{t+1} - V^t|_F
  double residual_xi = 0.0;
  double residual_dual = 0.0;   ///< |z^{t+1} - z^t|_2
  std::size_t active_users = 0; ///< cvar_subgrad only
  double wall_time = 0.0;       ///< seconds spent in this epoch
};

/// Mutable state carried between epochs besides the model itself.
struct EpochContext {
  SolverConfig config;
  TikhonovWeights weights;
  Rng rng;
  int epoch = 0;
  // Adam moments for cvar_subgrad.
  Matrix m_users, v_users, m_items, v_items;
  int adam_step = 0;
};

EpochContext make_context(const SolverConfig& config, const InteractionSet& train);

/// xi -> z -> U -> V with exact row solves.
EpochDiagnostics epoch_safer2(ModelState& state, const InteractionSet& train, EpochContext& ctx);
/// SAFER2 with the xi and z steps skipped and z fixed at alpha.
EpochDiagnostics epoch_erm(ModelState& state, const InteractionSet& train, EpochContext& ctx);
EpochDiagnostics epoch_ials(ModelState& state, const InteractionSet& train, EpochContext& ctx);
/// Exact empirical quantile, then one batch (sub)gradient step on U and V.
/// Throws DivergenceError when the objective leaves the finite range.
EpochDiagnostics epoch_cvar_subgrad(ModelState& state, const InteractionSet& train, EpochContext& ctx);
/// xi -> z, then one Newton step per index block, users then items for each block.
EpochDiagnostics epoch_safer2pp(ModelState& state, const InteractionSet& train, EpochContext& ctx);

/// Index blocks [begin, end) covering 0..dim-1; the last one may be short.
std::vector<std::pair<std::size_t, std::size_t>> index_blocks(std::size_t dim, std::size_t block_size);

/// Newton step on every user's block [begin, end) given cached predictions
/// (user-major, aligned with the training CSR). Predictions are updated.
void subspace_users_step(ModelState& state, const InteractionSet& train, const Vector& z,
                         const TikhonovWeights& weights, double alpha, double beta0, std::size_t begin,
                         std::size_t end, std::vector<double>& predictions);
void subspace_items_step(ModelState& state, const InteractionSet& train, const Vector& z,
                         const TikhonovWeights& weights, double alpha, double beta0, std::size_t begin,
                         std::size_t end, std::vector<double>& predictions);
std::vector<double> compute_predictions(const ModelState& state, const InteractionSet& train);

/// Runs the configured solver epoch by epoch.
class Trainer {
 public:
  Trainer(const InteractionSet& train, const SolverConfig& config);
  Trainer(const InteractionSet& train, const SolverConfig& config, ModelState initial);

  EpochDiagnostics step();
  std::vector<EpochDiagnostics> run(const std::function<void(const EpochDiagnostics&)>& on_epoch = {});

  const ModelState& state() const noexcept { return state_; }
  ModelState& state() noexcept { return state_; }
  const EpochContext& context() const noexcept { return ctx_; }

 private:
  const InteractionSet& train_;
  EpochContext ctx_;
  ModelState state_;
};

}  // namespace safer
