#pragma once

#include <string>

namespace safer {

enum class KernelFamily { gaussian, epanechnikov };

KernelFamily parse_kernel_family(const std::string& name);
std::string to_string(KernelFamily family);

/// Symmetric smoothing kernel k_h(u) = k(u / h) / h with bandwidth h in loss
/// units.
///
/// The smoothed check function is the convolution of the check function
/// rho_tau(v) = (tau - 1{v <= 0}) v with the kernel,
///
///   (rho_tau * k_h)(u) = integral rho_tau(v) k_h(v - u) dv,
///
/// which for a symmetric kernel splits into (tau - 1/2) u + E|u + h e| / 2
/// with e drawn from k. Its derivatives are tau - K_h(-u) and k_h(u).
class Kernel {
 public:
  Kernel(KernelFamily family, double bandwidth);

  KernelFamily family() const noexcept { return family_; }
  double bandwidth() const noexcept { return h_; }

  double density(double u) const noexcept;
  double cdf(double u) const noexcept;

  double smoothed_check(double tau, double u) const noexcept;
  double smoothed_check_grad(double tau, double u) const noexcept { return tau - cdf(-u); }
  double smoothed_check_hess(double /*tau*/, double u) const noexcept { return density(u); }

 private:
  KernelFamily family_;
  double h_;
};

}  // namespace safer
