#include "qspec/kernels.hpp"

#include <cmath>

#include "qspec/errors.hpp"

namespace qspec {

KernelSpec parse_kernel(std::string_view name) {
  if (name == "gaussian") return kGaussian;
  if (name == "epanechnikov") return kEpanechnikov;
  if (name == "quartic4") return kQuartic4;
  throw InvalidArgument("unknown kernel '" + std::string(name) +
                        "' (expected gaussian, epanechnikov or quartic4)");
}

std::string kernel_name(KernelSpec spec) {
  switch (spec.kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::epanechnikov: return "epanechnikov";
    case KernelKind::quartic4: return "quartic4";
  }
  return "unknown";
}

double eval_kernel(KernelSpec spec, double u) noexcept {
  switch (spec.kind) {
    case KernelKind::gaussian:
      return gaussian_density(u);
    case KernelKind::epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    case KernelKind::quartic4: {
      if (std::abs(u) > 1.0) return 0.0;
      const double u2 = u * u;
      return (15.0 / 32.0) * (3.0 - 10.0 * u2 + 7.0 * u2 * u2);
    }
  }
  return 0.0;
}

double kernel_derivative(KernelSpec spec, int m, double u) {
  if (m < 0 || m > 2) {
    throw InvalidArgument("kernel_derivative: order must be 0, 1 or 2, got " + std::to_string(m));
  }
  if (m == 0) return eval_kernel(spec, u);
  switch (spec.kind) {
    case KernelKind::gaussian: {
      const double g = gaussian_density(u);
      return m == 1 ? -u * g : (u * u - 1.0) * g;
    }
    case KernelKind::epanechnikov:
      // Piecewise: derivatives jump at the support boundary.
      if (std::abs(u) > 1.0) return 0.0;
      return m == 1 ? -1.5 * u : -1.5;
    case KernelKind::quartic4:
      if (std::abs(u) > 1.0) return 0.0;
      return m == 1 ? (15.0 / 32.0) * (-20.0 * u + 28.0 * u * u * u)
                    : (15.0 / 32.0) * (-20.0 + 84.0 * u * u);
  }
  return 0.0;
}

}  // namespace qspec
