#include "qspec/bandwidths.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qspec/errors.hpp"

namespace qspec {

void BandwidthSet::validate() const {
  if (p < 2) throw InvalidArgument("local polynomial order p must be at least 2");
  local_poly().validate();
  if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("bandwidth b must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be nonnegative");
  if (!(trim >= 0.0) || !(trim < 0.5)) throw InvalidArgument("trim must lie in [0, 0.5)");
}

double default_trim(KernelSpec kernel, double h) noexcept { return kernel.compact() ? h : 0.0; }

double rice_variance(const Sample& sample) {
  const std::size_t n = sample.size();
  if (n < 2 || sample.y.size() != n) throw InvalidArgument("rice_variance: need n >= 2 pairs");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (sample.x[a] != sample.x[b]) return sample.x[a] < sample.x[b];
    if (sample.y[a] != sample.y[b]) return sample.y[a] < sample.y[b];
    return a < b;
  });
  double sum = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double diff = sample.y[order[k]] - sample.y[order[k - 1]];
    sum += diff * diff;
  }
  return sum / (2.0 * static_cast<double>(n - 1));
}

BandwidthChoice default_bandwidths(std::size_t n, double sigma2, KernelSpec kernel) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw InvalidArgument("default_bandwidths: variance estimate must be positive");
  }
  if (n == 0) throw InvalidArgument("default_bandwidths: n must be positive");
  const double nn = static_cast<double>(n);
  BandwidthChoice choice;
  auto& set = choice.set;
  set.h = std::pow(sigma2 / nn, 1.0 / 7.0);
  set.d = 2.0 * set.h;
  set.b = sigma2 * std::pow(1.0 / nn, 2.0 / 7.0);
  set.p = 3;
  set.kernel = kernel;
  set.trim = default_trim(kernel, set.h);
  if (set.h >= 0.25) {
    choice.warnings.push_back(
        {"h_too_large", "h = " + std::to_string(set.h) +
                            " >= 1/4: the window [2h, 1 - 2h] is empty for literal h-trimming"});
  }
  return choice;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("lower_median: empty input");
  const std::size_t k = (values.size() + 1) / 2 - 1;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

double bootstrap_alpha(std::span<const double> residuals, std::size_t n) {
  if (residuals.empty()) throw InvalidArgument("bootstrap_alpha: no residuals");
  if (n == 0) throw InvalidArgument("bootstrap_alpha: n must be positive");
  std::vector<double> abs_res(residuals.size());
  std::transform(residuals.begin(), residuals.end(), abs_res.begin(),
                 [](double e) { return std::abs(e); });
  return 0.1 * std::pow(static_cast<double>(n), -0.25) * std::sqrt(2.0) *
         lower_median(std::move(abs_res));
}

}  // namespace qspec
