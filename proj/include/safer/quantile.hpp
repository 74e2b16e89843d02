#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "safer/kernels.hpp"
#include "safer/model.hpp"
#include "safer/random.hpp"

namespace safer {

struct XiSolverConfig {
  double alpha = 0.3;              ///< tail level in (0, 1]
  int max_iters = 5;               ///< Newton iterations per call (L)
  std::size_t subsample_size = 0;  ///< users per call; 0 uses every user
  double armijo_c = 1e-4;
  double grad_tol = 1e-10;
  std::optional<double> hess_floor;  ///< defaults to 1e-12 / (alpha * n)
  int max_halvings = 30;

  void validate() const;
};

/// One accepted Newton step, kept for diagnostics and tests.
struct XiTraceStep {
  double xi_before;
  double xi_after;
  double step_size;
  double direction;
  double objective_before;
  double objective_after;
  double gradient_before;
  double gradient_after;
};

struct XiResult {
  double xi = 0.0;
  int iterations = 0;
  int halvings = 0;  ///< total backtracking halvings over all iterations
  double gradient = 0.0;
  bool converged = false;
  std::vector<XiTraceStep> trace;
};

/// Smoothed CVaR of a loss vector at xi:
///   xi + 1/(alpha n) sum_i (rho_1 * k_h)(l_i - xi).
double cvar_objective(std::span<const double> losses, double xi, double alpha, const Kernel& kernel);
/// d/dxi of cvar_objective: 1 - (1/(alpha n)) sum_i (1 - K_h(xi - l_i)).
double cvar_objective_grad(std::span<const double> losses, double xi, double alpha, const Kernel& kernel);
/// d2/dxi2 of cvar_objective: (1/(alpha n)) sum_i k_h(xi - l_i).
double cvar_objective_hess(std::span<const double> losses, double xi, double alpha, const Kernel& kernel);

/// Minimizes cvar_objective over xi by damped Newton-Raphson with Armijo
/// backtracking, starting from `warm_start`. With subsample_size > 0 a fresh
/// uniform subsample (without replacement) drawn from `rng` replaces the full
/// loss vector.
XiResult solve_xi(std::span<const double> losses, const XiSolverConfig& config, const Kernel& kernel,
                  double warm_start, Rng& rng);
XiResult solve_xi(std::span<const double> losses, const XiSolverConfig& config, const Kernel& kernel,
                  double warm_start);

/// Closed-form dual weights z_i = 1 - K_h(xi - l_i).
Vector dual_step(std::span<const double> losses, double xi, const Kernel& kernel);

/// The "higher" empirical quantile: sorted[ceil(level * (n - 1))].
double empirical_quantile_higher(std::span<const double> values, double level);

}  // namespace safer
