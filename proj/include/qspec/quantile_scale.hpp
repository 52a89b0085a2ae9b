#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "qspec/bandwidths.hpp"
#include "qspec/cond_cdf.hpp"
#include "qspec/parallel.hpp"
#include "qspec/sample.hpp"

namespace qspec {

/// Normal reference distribution G used to map the response axis onto (0, 1).
struct NormalRef {
  double mu = 0.0;
  double sigma = 1.0;

  double cdf(double y) const noexcept { return 0.5 * std::erfc(-(y - mu) / (sigma * M_SQRT2)); }
  double quantile(double u) const;
};

/// Standard normal quantile.
double normal_quantile(double u);
/// Standard normal distribution function.
inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / M_SQRT2); }

/// Left-continuous inverse of the EDF, inf{v : F_n(v) >= prob}, on sorted data.
double empirical_quantile(std::span<const double> sorted, double prob);

/// Normal whose 5% and 95% quantiles match the empirical ones. Throws
/// DegenerateSample when they coincide.
NormalRef fit_normal_ref(std::span<const double> values);

/// Number of coarse panels used to scan the u-axis of the H functional.
inline constexpr int kHPanels = 64;

/// Integrates u -> 1 - KappaCdf((phi(u) - tau) / b) over (0, 1), where
/// phi(u) = F(G^{-1}(u)). The caller supplies phi at the kHPanels + 1 panel
/// edges u_k = k / kHPanels (edge values are the limits F(-inf), F(+inf)) and
/// a callable for phi at interior points. Panels where phi stays on one side
/// of [tau - b, tau + b] are integrated exactly; crossings of tau - b and
/// tau + b are located by bracketing root search and the transition pieces
/// use 16-point Gauss-Legendre.
double integrate_h(std::span<const double> phi_edges, const std::function<double(double)>& phi,
                   double tau, double b);

/// H_{G,kappa,tau,b}(F) = int_0^1 [1 - KappaCdf((F(G^{-1}(u)) - tau) / b)] du.
/// F must accept +-infinity.
double h_functional(const std::function<double(double)>& F, const NormalRef& G, double tau,
                    double b);

/// H for a right-continuous step function: F = levels[j] on
/// [jumps[j], jumps[j+1]) with F = 0 before jumps[0]. `jumps` must be
/// nondecreasing. Exact.
double h_functional_step(std::span<const double> jumps, std::span<const double> levels,
                         const NormalRef& G, double tau, double b);

/// Non-crossing conditional quantile estimator x -> G^{-1}(H(F(.|x))) with
/// F the Omega-smoothed local polynomial conditional CDF and G fitted to the
/// responses.
class QuantileEstimator {
 public:
  QuantileEstimator(const Sample& sample, double tau, const BandwidthSet& bw);

  double operator()(double x) const;
  std::vector<double> evaluate(std::span<const double> xs, Exec exec = {}) const;

  double tau() const noexcept { return tau_; }
  const NormalRef& reference() const noexcept { return ref_; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  double tau_;
  LocalPolyConfig config_;
  double b_;
  NormalRef ref_;
  std::vector<double> edge_y_;       // G^{-1}(k / kHPanels), k = 1..kHPanels-1
  std::vector<double> omega_table_;  // Omega((edge_y_[k] - Y_i) / d), row-major by k
};

/// Scale estimator x -> G_s^{-1}(H_{G_s,kappa,1/2,b}(F_|e|(.|x))) from the
/// indicator-weighted EDF of absolute residuals, with G_s fitted to |e|.
class ScaleEstimator {
 public:
  ScaleEstimator(std::span<const double> x, std::span<const double> abs_residuals,
                 const BandwidthSet& bw);

  double operator()(double x) const;
  std::vector<double> evaluate(std::span<const double> xs, Exec exec = {}) const;

  const NormalRef& reference() const noexcept { return ref_; }

 private:
  std::vector<double> x_;
  std::vector<std::size_t> order_;  // indices of residuals by increasing |e|
  std::vector<double> sorted_abs_;
  std::vector<double> ref_cdf_;  // G_s(sorted_abs_[j])
  LocalPolyConfig config_;
  double b_;
  NormalRef ref_;
};

/// q_tau on grid_x (nodes should lie in [trim, 1 - trim]).
Curve estimate_quantile_curve(const Sample& sample, double tau, const BandwidthSet& bw,
                              std::span<const double> grid_x, Exec exec = {});

/// Absolute residuals |Y_i - q(X_i)| for X_i in [lo, hi]; returns the covariates
/// and residuals of the retained observations.
struct AbsResiduals {
  std::vector<double> x;
  std::vector<double> abs_e;
};
AbsResiduals absolute_residuals(const Sample& sample, std::span<const double> q_at_x, double lo,
                                double hi);

/// s on grid_x from the quantile fit evaluated at the sample covariates
/// (q_at_x[i] = q(X_i)); residuals enter for X_i in [trim, 1 - trim]. Throws
/// ScaleDegenerate if the estimate is nonpositive at any node.
Curve estimate_scale_curve(const Sample& sample, std::span<const double> q_at_x,
                           const BandwidthSet& bw, std::span<const double> grid_x, Exec exec = {});

/// Same, with the quantile fit given as a curve interpolated at X_i.
Curve estimate_scale_curve(const Sample& sample, const Curve& qhat, const BandwidthSet& bw,
                           std::span<const double> grid_x, Exec exec = {});

}  // namespace qspec
