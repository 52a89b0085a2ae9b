#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <string_view>

namespace qspec {

enum class KernelKind {
  gaussian,      // smoothing kernel K for the covariate direction
  epanechnikov,  // inversion kernel kappa
  quartic4,      // order-4 response smoothing kernel omega
};

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;

  /// Half-width of the support; +inf for the Gaussian.
  double support_radius() const noexcept {
    return kind == KernelKind::gaussian ? std::numeric_limits<double>::infinity() : 1.0;
  }
  bool compact() const noexcept { return kind != KernelKind::gaussian; }
  /// Order of the kernel: index of the first nonvanishing moment past zero.
  int order() const noexcept { return kind == KernelKind::quartic4 ? 4 : 2; }
};

inline constexpr KernelSpec kGaussian{KernelKind::gaussian};
inline constexpr KernelSpec kEpanechnikov{KernelKind::epanechnikov};
inline constexpr KernelSpec kQuartic4{KernelKind::quartic4};

/// Parses "gaussian", "epanechnikov" or "quartic4". Throws InvalidArgument.
KernelSpec parse_kernel(std::string_view name);
std::string kernel_name(KernelSpec spec);

double eval_kernel(KernelSpec spec, double u) noexcept;

/// m-th derivative of the kernel at u, m in {0, 1, 2}.
double kernel_derivative(KernelSpec spec, int m, double u);

// Closed forms used in the hot loops.

inline double gaussian_density(double u) noexcept {
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return inv_sqrt_2pi * std::exp(-0.5 * u * u);
}

/// Antiderivative of omega(u) = (15/32)(3 - 10u^2 + 7u^4) on [-1, 1].
/// Not monotone: omega is negative for sqrt(3/7) < |u| < 1.
inline double eval_Omega(double u) noexcept {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double u2 = u * u;
  return 0.5 + (15.0 / 32.0) * u * (3.0 + u2 * (-10.0 / 3.0 + u2 * (7.0 / 5.0)));
}

/// Distribution function of the Epanechnikov kernel.
inline double eval_kappa_cdf(double u) noexcept {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return 0.5 + u * (0.75 - 0.25 * u * u);
}

}  // namespace qspec
