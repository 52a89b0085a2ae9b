#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qspec/cond_cdf.hpp"
#include "qspec/kernels.hpp"
#include "qspec/sample.hpp"

namespace qspec {

/// Tuning constants of the estimators and the bootstrap.
///
/// `trim` is the boundary half-width used by every trimming rule: quantile
/// residuals for the scale fit live on [trim, 1 - trim], data residuals on
/// (2 trim, 1 - 2 trim], bootstrap residuals on (4 trim, 1 - 4 trim], and the
/// rearrangement interval is [trim, 1 - trim]. It equals h for compact
/// covariate kernels. The Gaussian kernel has no support edge, and the h the
/// bandwidth rule produces at moderate n (around 0.3) would leave every window
/// empty, so trimming defaults to 0 there.
struct BandwidthSet {
  double h = 0.1;      // covariate bandwidth
  double d = 0.2;      // response smoothing bandwidth
  double b = 0.01;     // inversion bandwidth of the H functional
  double alpha = 0.0;  // bootstrap error smoothing
  int p = 3;           // local polynomial order
  double trim = 0.0;
  KernelSpec kernel = kGaussian;

  LocalPolyConfig local_poly() const { return LocalPolyConfig{p, h, d, kernel}; }

  /// Throws InvalidArgument on nonpositive bandwidths, negative alpha/trim or
  /// p < 2.
  void validate() const;
};

/// Default trimming half-width for a covariate kernel and bandwidth.
double default_trim(KernelSpec kernel, double h) noexcept;

struct BandwidthWarning {
  std::string code;
  std::string message;
};

struct BandwidthChoice {
  BandwidthSet set;
  std::vector<BandwidthWarning> warnings;
};

/// Difference-based variance estimate: responses ordered by covariate (ties
/// broken by response, then index), sum of squared successive differences over
/// 2(n - 1).
double rice_variance(const Sample& sample);

/// h = (s2/n)^(1/7), d = 2h, b = s2 n^(-2/7), p = 3. Warns with code
/// "h_too_large" when h >= 1/4, where the literal [2h, 1 - 2h] window is
/// empty. Throws InvalidArgument for s2 <= 0 or n == 0.
BandwidthChoice default_bandwidths(std::size_t n, double sigma2, KernelSpec kernel = kGaussian);

/// Bootstrap smoothing 0.1 n^(-1/4) sqrt(2) median|e|, lower median for even
/// counts.
double bootstrap_alpha(std::span<const double> residuals, std::size_t n);

/// Lower median: the ceil(m/2)-th order statistic.
double lower_median(std::vector<double> values);

}  // namespace qspec
