#include <chrono>
#include <cmath>

#include "safer/errors.hpp"
#include "safer/quantile.hpp"
#include "safer/trainer.hpp"

namespace safer {

SolverKind parse_solver_kind(const std::string& name) {
  if (name == "safer2") return SolverKind::safer2;
  if (name == "safer2pp") return SolverKind::safer2pp;
  if (name == "ials") return SolverKind::ials;
  if (name == "erm") return SolverKind::erm;
  if (name == "cvar_subgrad") return SolverKind::cvar_subgrad;
  throw ConfigError("unknown solver '" + name + "' (expected safer2, safer2pp, ials, erm or cvar_subgrad)");
}

std::string to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::safer2: return "safer2";
    case SolverKind::safer2pp: return "safer2pp";
    case SolverKind::ials: return "ials";
    case SolverKind::erm: return "erm";
    case SolverKind::cvar_subgrad: return "cvar_subgrad";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive");
  if (!(beta0 >= 0.0) || !std::isfinite(beta0)) throw ConfigError("beta0 must be nonnegative");
  if (dim < 1) throw ConfigError("dim must be at least 1");
  if (epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (block_size > dim) throw ConfigError("block_size must not exceed dim");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (!std::isfinite(ials_exponent)) throw ConfigError("ials_exponent must be finite");
  if (!(init_sigma > 0.0) || !std::isfinite(init_sigma)) throw ConfigError("init_sigma must be positive");
  if (!(divergence_threshold > 0.0)) throw ConfigError("divergence_threshold must be positive");
  XiSolverConfig x = xi;
  x.alpha = alpha;
  x.validate();
}

EpochContext make_context(const SolverConfig& config, const InteractionSet& train) {
  config.validate();
  EpochContext ctx{config, {}, Rng(config.seed ^ 0x5deece66dULL), 0, {}, {}, {}, {}, 0};
  ctx.config.xi.alpha = config.alpha;
  if (config.solver == SolverKind::ials) {
    ctx.weights = tikhonov_ials(train, config.beta0, config.lambda, config.ials_exponent);
  } else {
    ctx.weights = tikhonov_safer2(train, config.alpha, config.beta0, config.lambda);
  }
  return ctx;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_dims(const ModelState& state, const InteractionSet& train) {
  if (state.num_users() != train.num_users() || state.num_items() != train.num_items()) {
    throw ConfigError("model dimensions do not match the training set");
  }
}

std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

// Quantile and dual steps shared by SAFER2 and SAFER2++.
void xi_and_dual(ModelState& state, const InteractionSet& train, EpochContext& ctx, EpochDiagnostics& diag) {
  const auto& cfg = ctx.config;
  const Vector losses = all_losses(state, train, item_gramian(state), cfg.beta0);
  const double start = ctx.epoch == 0 ? empirical_quantile_higher(as_span(losses), 1.0 - cfg.alpha) : state.xi;
  const XiResult r = solve_xi(as_span(losses), ctx.config.xi, cfg.kernel, start, ctx.rng);
  const Vector z = dual_step(as_span(losses), r.xi, cfg.kernel);

  diag.residual_xi = std::abs(r.xi - state.xi);
  diag.residual_dual = state.dual.size() == z.size() ? (z - state.dual).norm() : z.norm();
  diag.xi_iters = r.iterations;
  diag.xi_grad = r.gradient;
  diag.xi_halvings = r.halvings;
  state.xi = r.xi;
  state.dual = z;
  diag.xi = r.xi;
  diag.sum_z = z.sum();
}

void finish(ModelState& state, const InteractionSet& train, EpochContext& ctx, EpochDiagnostics& diag,
            const Matrix& u_before, const Matrix& v_before, Clock::time_point start) {
  diag.residual_users = (state.users() - u_before).norm();
  diag.residual_items = (state.items() - v_before).norm();
  const auto& cfg = ctx.config;
  switch (cfg.solver) {
    case SolverKind::ials: diag.objective = ials_objective(state, train, ctx.weights, cfg.beta0); break;
    case SolverKind::erm: diag.objective = erm_objective(state, train, ctx.weights, cfg.beta0); break;
    case SolverKind::cvar_subgrad: break;
    default:
      diag.objective = cts_cvar_objective(state, train, ctx.weights, cfg.alpha, cfg.beta0, cfg.kernel);
  }
  diag.epoch = ++ctx.epoch;
  diag.wall_time = seconds_since(start);
}

}  // namespace

EpochDiagnostics epoch_safer2(ModelState& state, const InteractionSet& train, EpochContext& ctx) {
  check_dims(state, train);
  const auto start = Clock::now();
  const auto& cfg = ctx.config;
  EpochDiagnostics diag;
  const Matrix u_before = state.users();
  const Matrix v_before = state.items();

  xi_and_dual(state, train, ctx, diag);
  update_users_safer2(state, train, state.dual, ctx.weights, item_gramian(state), cfg.alpha, cfg.beta0);
  update_items_safer2(state, train, state.dual, ctx.weights, weighted_user_gramian(state, state.dual), cfg.alpha,
                      cfg.beta0);
  finish(state, train, ctx, diag, u_before, v_before, start);
  return diag;
}

EpochDiagnostics epoch_erm(ModelState& state, const InteractionSet& train, EpochContext& ctx) {
  check_dims(state, train);
  const auto start = Clock::now();
  const auto& cfg = ctx.config;
  EpochDiagnostics diag;
  const Matrix u_before = state.users();
  const Matrix v_before = state.items();

  const Vector z = Vector::Constant(static_cast<Eigen::Index>(train.num_users()), cfg.alpha);
  diag.residual_dual = state.dual.size() == z.size() ? (z - state.dual).norm() : 0.0;
  state.dual = z;
  diag.sum_z = z.sum();
  update_users_safer2(state, train, z, ctx.weights, item_gramian(state), cfg.alpha, cfg.beta0);
  update_items_safer2(state, train, z, ctx.weights, weighted_user_gramian(state, z), cfg.alpha, cfg.beta0);
  finish(state, train, ctx, diag, u_before, v_before, start);
  return diag;
}

EpochDiagnostics epoch_ials(ModelState& state, const InteractionSet& train, EpochContext& ctx) {
  check_dims(state, train);
  const auto start = Clock::now();
  const auto& cfg = ctx.config;
  EpochDiagnostics diag;
  const Matrix u_before = state.users();
  const Matrix v_before = state.items();

  update_users_ials(state, train, ctx.weights, item_gramian(state), cfg.beta0);
  update_items_ials(state, train, ctx.weights, Gramian{gramian(state.users()), state.user_version()}, cfg.beta0);
  diag.sum_z = static_cast<double>(train.num_users());
  finish(state, train, ctx, diag, u_before, v_before, start);
  return diag;
}

EpochDiagnostics epoch_cvar_subgrad(ModelState& state, const InteractionSet& train, EpochContext& ctx) {
  check_dims(state, train);
  const auto start = Clock::now();
  const auto& cfg = ctx.config;
  EpochDiagnostics diag;
  const Matrix u_before = state.users();
  const Matrix v_before = state.items();

  const Vector losses = all_losses(state, train, item_gramian(state), cfg.beta0);
  if (!losses.allFinite()) {
    throw DivergenceError("non-finite user losses", ctx.epoch + 1, std::numeric_limits<double>::infinity());
  }
  const double xi = empirical_quantile_higher(as_span(losses), 1.0 - cfg.alpha);
  const CvarSubgradient g = cvar_subgradient(state, train, ctx.weights, cfg.alpha, cfg.beta0, xi);

  if (cfg.adam) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (ctx.adam_step == 0) {
      ctx.m_users = Matrix::Zero(g.users.rows(), g.users.cols());
      ctx.v_users = ctx.m_users;
      ctx.m_items = Matrix::Zero(g.items.rows(), g.items.cols());
      ctx.v_items = ctx.m_items;
    }
    ++ctx.adam_step;
    const double c1 = 1.0 - std::pow(b1, ctx.adam_step);
    const double c2 = 1.0 - std::pow(b2, ctx.adam_step);
    auto apply = [&](Matrix& x, Matrix& m, Matrix& v, const Matrix& grad) {
      m = b1 * m + (1.0 - b1) * grad;
      v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
      x.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    apply(state.mutable_users(), ctx.m_users, ctx.v_users, g.users);
    apply(state.mutable_items(), ctx.m_items, ctx.v_items, g.items);
  } else {
    state.mutable_users() -= cfg.learning_rate * g.users;
    state.mutable_items() -= cfg.learning_rate * g.items;
  }

  Vector z(losses.size());
  for (Eigen::Index i = 0; i < losses.size(); ++i) z[i] = losses[i] >= xi ? 1.0 : 0.0;
  diag.residual_xi = std::abs(xi - state.xi);
  diag.residual_dual = state.dual.size() == z.size() ? (z - state.dual).norm() : z.norm();
  state.xi = xi;
  state.dual = z;
  diag.xi = xi;
  diag.sum_z = z.sum();
  diag.active_users = g.active_users;

  const Vector after = all_losses(state, train, item_gramian(state), cfg.beta0);
  double objective = std::numeric_limits<double>::infinity();
  if (after.allFinite()) {
    const double xi_after = empirical_quantile_higher(as_span(after), 1.0 - cfg.alpha);
    objective = cvar_mf_objective(state, train, ctx.weights, cfg.alpha, cfg.beta0, xi_after);
  }
  if (!std::isfinite(objective) || objective > cfg.divergence_threshold) {
    throw DivergenceError("objective diverged", ctx.epoch + 1, objective);
  }
  diag.objective = objective;
  finish(state, train, ctx, diag, u_before, v_before, start);
  return diag;
}

Trainer::Trainer(const InteractionSet& train, const SolverConfig& config)
    : Trainer(train, config,
              init_embeddings(train.num_users(), train.num_items(), config.dim, config.init_sigma, config.seed)) {}

Trainer::Trainer(const InteractionSet& train, const SolverConfig& config, ModelState initial)
    : train_(train), ctx_(make_context(config, train)), state_(std::move(initial)) {
  check_dims(state_, train_);
  if (state_.dim() != config.dim) throw ConfigError("initial state has the wrong embedding dimension");
}

EpochDiagnostics Trainer::step() {
  switch (ctx_.config.solver) {
    case SolverKind::safer2: return epoch_safer2(state_, train_, ctx_);
    case SolverKind::safer2pp: return epoch_safer2pp(state_, train_, ctx_);
    case SolverKind::ials: return epoch_ials(state_, train_, ctx_);
    case SolverKind::erm: return epoch_erm(state_, train_, ctx_);
    case SolverKind::cvar_subgrad: return epoch_cvar_subgrad(state_, train_, ctx_);
  }
  throw ConfigError("unknown solver");
}

std::vector<EpochDiagnostics> Trainer::run(const std::function<void(const EpochDiagnostics&)>& on_epoch) {
  std::vector<EpochDiagnostics> out;
  for (int t = 0; t < ctx_.config.epochs; ++t) {
    out.push_back(step());
    if (on_epoch) on_epoch(out.back());
  }
  return out;
}

}  // namespace safer
