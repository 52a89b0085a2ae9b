#pragma once

#include <span>
#include <vector>

#include "qspec/kernels.hpp"
#include "qspec/sample.hpp"

namespace qspec {

/// Local polynomial smoother settings: order p, covariate bandwidth h,
/// response smoothing bandwidth d and the covariate kernel.
struct LocalPolyConfig {
  int p = 3;
  double h = 0.1;
  double d = 0.2;
  KernelSpec kernel = kGaussian;

  void validate() const;
};

/// Largest supported polynomial order.
inline constexpr int kMaxLocalPolyOrder = 7;

/// Equivalent-kernel weights W_i(x): the first row of (X'WX)^{-1} X'W. The
/// weights sum to one and annihilate (x - X_i)^k for k = 1..p. Columns are
/// scaled by powers of h before factorization; a reciprocal condition number
/// below 1e-12 raises SingularDesign.
std::vector<double> local_poly_weights(double x, std::span<const double> sample_x,
                                       const LocalPolyConfig& config);

/// Allocation-free variant; `out` must have sample_x.size() entries.
void local_poly_weights(double x, std::span<const double> sample_x, const LocalPolyConfig& config,
                        std::span<double> out);

enum class CdfMode {
  smoothed_Omega,  // sum_i W_i(x) Omega((y - Y_i) / d)
  indicator,       // sum_i W_i(x) 1{Y_i <= y}
};

/// Conditional distribution function estimate F(y | x) as a weighted average
/// of (smoothed) indicators. Values are not clipped to [0, 1]: the weights can
/// be negative.
class CondCdfEstimate {
 public:
  CondCdfEstimate(LocalPolyConfig config, Sample sample, CdfMode mode = CdfMode::smoothed_Omega);

  double operator()(double x, double y) const;

  std::vector<double> weights(double x) const;
  /// F(y | x) for weights previously obtained from weights(x).
  double eval_with_weights(std::span<const double> weights, double y) const;

  const LocalPolyConfig& config() const noexcept { return config_; }
  const Sample& sample() const noexcept { return sample_; }
  CdfMode mode() const noexcept { return mode_; }

 private:
  LocalPolyConfig config_;
  Sample sample_;
  CdfMode mode_;
};

/// Weighted EDF of absolute residuals: sum_i W_i(x) 1{|e_i| <= y}.
double abs_residual_cdf(std::span<const double> sample_x, std::span<const double> abs_e,
                        const LocalPolyConfig& config, double x, double y);

}  // namespace qspec
