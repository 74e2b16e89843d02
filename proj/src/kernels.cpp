#include "safer/kernels.hpp"

#include <cmath>
#include <numbers>

#include "safer/errors.hpp"

namespace safer {

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "epanechnikov") return KernelFamily::epanechnikov;
  throw ConfigError("unknown kernel '" + name + "' (expected gaussian or epanechnikov)");
}

std::string to_string(KernelFamily family) {
  return family == KernelFamily::gaussian ? "gaussian" : "epanechnikov";
}

Kernel::Kernel(KernelFamily family, double bandwidth) : family_(family), h_(bandwidth) {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw ConfigError("kernel bandwidth must be positive and finite");
  }
}

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;  // 1 / sqrt(2 pi)

double std_normal_pdf(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

}  // namespace

double Kernel::density(double u) const noexcept {
  const double t = u / h_;
  if (family_ == KernelFamily::gaussian) return std_normal_pdf(t) / h_;
  if (t < -1.0 || t > 1.0) return 0.0;
  return 0.75 * (1.0 - t * t) / h_;
}

double Kernel::cdf(double u) const noexcept {
  const double t = u / h_;
  if (family_ == KernelFamily::gaussian) return 0.5 * std::erfc(-t / std::numbers::sqrt2);
  if (t < -1.0) return 0.0;
  if (t < 1.0) return 0.25 * (t * (3.0 - t * t) + 2.0);
  return 1.0;
}

double Kernel::smoothed_check(double tau, double u) const noexcept {
  const double t = u / h_;
  const double linear = (tau - 0.5) * u;
  if (family_ == KernelFamily::gaussian) {
    // E|u + hZ| / 2 = h phi(u/h) + u erf(u / (sqrt2 h)) / 2
    return h_ * std_normal_pdf(t) + 0.5 * u * std::erf(t / std::numbers::sqrt2) + linear;
  }
  if (t >= -1.0 && t <= 1.0) {
    const double t2 = t * t;
    return 0.5 * h_ * (0.75 * t2 - 0.125 * t2 * t2 + 0.375) + linear;
  }
  return 0.5 * std::abs(u) + linear;
}

}  // namespace safer
