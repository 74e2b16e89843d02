#include "safer/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "safer/errors.hpp"

namespace safer {

void XiSolverConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (max_iters < 1) throw ConfigError("xi solver needs at least one iteration");
  if (!(armijo_c > 0.0 && armijo_c <= 0.5)) throw ConfigError("armijo_c must lie in (0, 0.5]");
  if (!(grad_tol >= 0.0)) throw ConfigError("grad_tol must be non-negative");
  if (hess_floor && !(*hess_floor > 0.0)) throw ConfigError("hess_floor must be positive");
  if (max_halvings < 0) throw ConfigError("max_halvings must be non-negative");
}

double cvar_objective(std::span<const double> losses, double xi, double alpha, const Kernel& kernel) {
  if (losses.empty()) throw ConfigError("cvar_objective: empty loss vector");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  double sum = 0.0;
  for (const double l : losses) sum += kernel.smoothed_check(1.0, l - xi);
  return xi + sum / (alpha * static_cast<double>(losses.size()));
}

double cvar_objective_grad(std::span<const double> losses, double xi, double alpha, const Kernel& kernel) {
  double sum = 0.0;
  for (const double l : losses) sum += 1.0 - kernel.cdf(xi - l);
  return 1.0 - sum / (alpha * static_cast<double>(losses.size()));
}

double cvar_objective_hess(std::span<const double> losses, double xi, double alpha, const Kernel& kernel) {
  double sum = 0.0;
  for (const double l : losses) sum += kernel.density(xi - l);
  return sum / (alpha * static_cast<double>(losses.size()));
}

namespace {

XiResult newton(std::span<const double> losses, const XiSolverConfig& config, const Kernel& kernel,
                double warm_start) {
  const double alpha = config.alpha;
  const double n = static_cast<double>(losses.size());
  const double floor = config.hess_floor.value_or(1e-12 / (alpha * n));

  XiResult result;
  double xi = warm_start;
  double psi = cvar_objective(losses, xi, alpha, kernel);
  double grad = cvar_objective_grad(losses, xi, alpha, kernel);

  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os << "xi solver: " << why << "; iterates:";
    os << ' ' << warm_start;
    for (const auto& s : result.trace) os << " -> " << s.xi_after;
    throw NumericalError(os.str());
  };
  if (!std::isfinite(psi) || !std::isfinite(grad)) fail("non-finite objective at the starting point");

  while (result.iterations < config.max_iters) {
    if (std::abs(grad) <= config.grad_tol) {
      result.converged = true;
      break;
    }
    ++result.iterations;
    const double hess = std::max(cvar_objective_hess(losses, xi, alpha, kernel), floor);
    const double direction = grad / hess;

    // Armijo backtracking over {1, 1/2, 1/4, ...}.
    double step = 1.0;
    double trial = xi;
    double trial_psi = psi;
    bool accepted = false;
    for (int h = 0; h <= config.max_halvings; ++h) {
      trial = xi - step * direction;
      trial_psi = cvar_objective(losses, trial, alpha, kernel);
      if (std::isfinite(trial_psi) && trial_psi <= psi - config.armijo_c * step * direction * grad) {
        accepted = true;
        break;
      }
      if (h == config.max_halvings) break;
      step *= 0.5;
      ++result.halvings;
    }
    if (!accepted) {
      // Flat or pathological region: take a zero step and stop here.
      result.trace.push_back({xi, xi, 0.0, direction, psi, psi, grad, grad});
      break;
    }
    const double trial_grad = cvar_objective_grad(losses, trial, alpha, kernel);
    if (!std::isfinite(trial) || !std::isfinite(trial_grad)) fail("non-finite iterate");
    result.trace.push_back({xi, trial, step, direction, psi, trial_psi, grad, trial_grad});
    xi = trial;
    psi = trial_psi;
    grad = trial_grad;
  }
  if (!result.converged && std::abs(grad) <= config.grad_tol) result.converged = true;
  result.xi = xi;
  result.gradient = grad;
  return result;
}

void check_losses(std::span<const double> losses) {
  if (losses.empty()) throw ConfigError("solve_xi: empty loss vector");
  for (const double l : losses) {
    if (std::isnan(l)) throw NumericalError("solve_xi: NaN in loss vector");
  }
}

}  // namespace

XiResult solve_xi(std::span<const double> losses, const XiSolverConfig& config, const Kernel& kernel,
                  double warm_start, Rng& rng) {
  config.validate();
  check_losses(losses);
  if (config.subsample_size == 0 || config.subsample_size >= losses.size()) {
    return newton(losses, config, kernel, warm_start);
  }
  std::vector<double> pool(losses.begin(), losses.end());
  partial_shuffle(std::span<double>(pool), config.subsample_size, rng);
  pool.resize(config.subsample_size);
  return newton(pool, config, kernel, warm_start);
}

XiResult solve_xi(std::span<const double> losses, const XiSolverConfig& config, const Kernel& kernel,
                  double warm_start) {
  XiSolverConfig full = config;
  full.subsample_size = 0;
  Rng unused(0);
  return solve_xi(losses, full, kernel, warm_start, unused);
}

Vector dual_step(std::span<const double> losses, double xi, const Kernel& kernel) {
  Vector z(static_cast<Eigen::Index>(losses.size()));
  for (std::size_t i = 0; i < losses.size(); ++i) z[static_cast<Eigen::Index>(i)] = 1.0 - kernel.cdf(xi - losses[i]);
  return z;
}

double empirical_quantile_higher(std::span<const double> values, double level) {
  if (values.empty()) throw ConfigError("quantile of an empty vector");
  if (!(level >= 0.0 && level <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto k = std::min(static_cast<std::size_t>(std::ceil(pos - 1e-12)), sorted.size() - 1);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
  return sorted[k];
}

}  // namespace safer
