#include "qspec/quantile_scale.hpp"

#include <algorithm>
#include <array>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <limits>
#include <numeric>
#include <string>

#include "qspec/errors.hpp"
#include "qspec/kernels.hpp"

namespace qspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double h_integrand(double v, double tau, double b) noexcept {
  return 1.0 - eval_kappa_cdf((v - tau) / b);
}

// Locates phi(u) = level in (ua, ub) given a sign change at the ends.
double find_crossing(const std::function<double(double)>& phi, double level, double ua, double ub,
                     double fa, double fb) {
  std::uintmax_t max_iter = 200;
  const auto tolerance = [](double a, double b) { return std::abs(b - a) <= 1e-14; };
  const auto bracket = boost::math::tools::toms748_solve(
      [&](double u) { return phi(u) - level; }, ua, ub, fa - level, fb - level, tolerance, max_iter);
  return 0.5 * (bracket.first + bracket.second);
}

void check_tau_b(double tau, double b) {
  if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
  if (!(b > 0.0) || !std::isfinite(b)) throw InvalidArgument("inversion bandwidth b must be positive");
}

double invert_reference(const NormalRef& ref, double h_value) {
  if (!(h_value > 0.0 && h_value < 1.0)) {
    throw DegenerateSample("quantile inversion saturated (H = " + std::to_string(h_value) + ")");
  }
  return ref.quantile(h_value);
}

}  // namespace

double normal_quantile(double u) {
  if (u <= 0.0) return -kInf;
  if (u >= 1.0) return kInf;
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, u);
}

double NormalRef::quantile(double u) const { return mu + sigma * normal_quantile(u); }

double empirical_quantile(std::span<const double> sorted, double prob) {
  if (sorted.empty()) throw InvalidArgument("empirical_quantile: empty sample");
  const auto n = static_cast<double>(sorted.size());
  // Guard n * prob against representation error (e.g. 100 * 0.95).
  auto k = static_cast<std::size_t>(std::ceil(n * prob * (1.0 - 1e-12)));
  k = std::clamp<std::size_t>(k, 1, sorted.size());
  return sorted[k - 1];
}

NormalRef fit_normal_ref(std::span<const double> values) {
  if (values.size() < 2) throw DegenerateSample("fit_normal_ref: need at least two values");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double q05 = empirical_quantile(sorted, 0.05);
  const double q95 = empirical_quantile(sorted, 0.95);
  if (!(q95 > q05)) {
    throw DegenerateSample("fit_normal_ref: empirical 5% and 95% quantiles coincide");
  }
  static const double z95 = normal_quantile(0.95);
  return NormalRef{0.5 * (q05 + q95), (q95 - q05) / (2.0 * z95)};
}

double integrate_h(std::span<const double> phi_edges, const std::function<double(double)>& phi,
                   double tau, double b) {
  const auto panels = static_cast<int>(phi_edges.size()) - 1;
  if (panels < 1) throw InvalidArgument("integrate_h: need at least one panel");
  const double lower = tau - b, upper = tau + b;
  const auto state = [&](double v) { return v <= lower ? -1 : (v >= upper ? 1 : 0); };
  const auto integrand = [&](double u) { return h_integrand(phi(u), tau, b); };

  double total = 0.0;
  for (int k = 0; k < panels; ++k) {
    const double ua = static_cast<double>(k) / panels;
    const double ub = static_cast<double>(k + 1) / panels;
    const double fa = phi_edges[k], fb = phi_edges[k + 1];
    const int sa = state(fa), sb = state(fb);
    if (sa == sb && sa != 0) {
      if (sa < 0) total += ub - ua;
      continue;
    }
    std::array<double, 4> cuts{};
    std::size_t count = 0;
    cuts[count++] = ua;
    for (const double level : {lower, upper}) {
      if ((fa - level) * (fb - level) < 0.0) cuts[count++] = find_crossing(phi, level, ua, ub, fa, fb);
    }
    cuts[count++] = ub;
    std::sort(cuts.begin(), cuts.begin() + static_cast<std::ptrdiff_t>(count));
    for (std::size_t j = 0; j + 1 < count; ++j) {
      const double a = cuts[j], c = cuts[j + 1];
      if (!(c > a)) continue;
      const int s = state(phi(0.5 * (a + c)));
      if (s < 0) {
        total += c - a;
      } else if (s == 0) {
        total += boost::math::quadrature::gauss<double, 16>::integrate(integrand, a, c);
      }
    }
  }
  return total;
}

double h_functional(const std::function<double(double)>& F, const NormalRef& G, double tau,
                    double b) {
  check_tau_b(tau, b);
  std::vector<double> edges(kHPanels + 1);
  edges.front() = F(-kInf);
  edges.back() = F(kInf);
  for (int k = 1; k < kHPanels; ++k) edges[k] = F(G.quantile(static_cast<double>(k) / kHPanels));
  return integrate_h(edges, [&](double u) { return F(G.quantile(u)); }, tau, b);
}

double h_functional_step(std::span<const double> jumps, std::span<const double> levels,
                         const NormalRef& G, double tau, double b) {
  check_tau_b(tau, b);
  if (jumps.size() != levels.size()) throw InvalidArgument("h_functional_step: size mismatch");
  if (jumps.empty()) return h_integrand(0.0, tau, b);
  double total = h_integrand(0.0, tau, b) * G.cdf(jumps.front());
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    const double next = j + 1 < jumps.size() ? G.cdf(jumps[j + 1]) : 1.0;
    total += h_integrand(levels[j], tau, b) * (next - G.cdf(jumps[j]));
  }
  return total;
}

// ---------------------------------------------------------------------------

QuantileEstimator::QuantileEstimator(const Sample& sample, double tau, const BandwidthSet& bw)
    : x_(sample.x), y_(sample.y), tau_(tau), config_(bw.local_poly()), b_(bw.b) {
  sample.validate(static_cast<std::size_t>(bw.p) + 2, static_cast<std::size_t>(bw.p) + 1);
  bw.validate();
  check_tau_b(tau, bw.b);
  ref_ = fit_normal_ref(y_);
  edge_y_.resize(kHPanels - 1);
  for (int k = 1; k < kHPanels; ++k) edge_y_[k - 1] = ref_.quantile(static_cast<double>(k) / kHPanels);
  const std::size_t n = y_.size();
  omega_table_.resize(edge_y_.size() * n);
  const double inv_d = 1.0 / config_.d;
  for (std::size_t k = 0; k < edge_y_.size(); ++k)
    for (std::size_t i = 0; i < n; ++i)
      omega_table_[k * n + i] = eval_Omega((edge_y_[k] - y_[i]) * inv_d);
}

double QuantileEstimator::operator()(double x) const {
  const std::size_t n = y_.size();
  std::vector<double> w(n);
  local_poly_weights(x, x_, config_, w);

  std::array<double, kHPanels + 1> edges{};
  edges.front() = 0.0;
  edges.back() = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t k = 0; k < edge_y_.size(); ++k) {
    const double* row = &omega_table_[k * n];
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += w[i] * row[i];
    edges[k + 1] = sum;
  }
  const double inv_d = 1.0 / config_.d;
  const auto phi = [&](double u) {
    const double y = ref_.quantile(u);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += w[i] * eval_Omega((y - y_[i]) * inv_d);
    return sum;
  };
  return invert_reference(ref_, integrate_h(edges, phi, tau_, b_));
}

std::vector<double> QuantileEstimator::evaluate(std::span<const double> xs, Exec exec) const {
  std::vector<double> out(xs.size());
  parallel_for(xs.size(), exec, [&](std::size_t i) { out[i] = (*this)(xs[i]); });
  return out;
}

ScaleEstimator::ScaleEstimator(std::span<const double> x, std::span<const double> abs_residuals,
                               const BandwidthSet& bw)
    : x_(x.begin(), x.end()), config_(bw.local_poly()), b_(bw.b) {
  if (x.size() != abs_residuals.size()) {
    throw InvalidArgument("ScaleEstimator: covariates and residuals differ in length");
  }
  bw.validate();
  if (x.size() < static_cast<std::size_t>(bw.p) + 2) {
    throw InvalidArgument("ScaleEstimator: too few residuals for the local polynomial order");
  }
  ref_ = fit_normal_ref(abs_residuals);
  order_.resize(x.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t c) {
    return abs_residuals[a] < abs_residuals[c];
  });
  sorted_abs_.resize(order_.size());
  ref_cdf_.resize(order_.size());
  for (std::size_t j = 0; j < order_.size(); ++j) {
    sorted_abs_[j] = abs_residuals[order_[j]];
    ref_cdf_[j] = ref_.cdf(sorted_abs_[j]);
  }
}

double ScaleEstimator::operator()(double x) const {
  constexpr double tau = 0.5;
  std::vector<double> w(x_.size());
  local_poly_weights(x, x_, config_, w);
  const std::size_t m = sorted_abs_.size();
  // F is a right-continuous step function with jumps at the distinct |e|.
  double total = h_integrand(0.0, tau, b_) * ref_cdf_.front();
  double level = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    level += w[order_[j]];
    if (j + 1 < m && sorted_abs_[j + 1] == sorted_abs_[j]) continue;
    const double next = j + 1 < m ? ref_cdf_[j + 1] : 1.0;
    total += h_integrand(level, tau, b_) * (next - ref_cdf_[j]);
  }
  return invert_reference(ref_, total);
}

std::vector<double> ScaleEstimator::evaluate(std::span<const double> xs, Exec exec) const {
  std::vector<double> out(xs.size());
  parallel_for(xs.size(), exec, [&](std::size_t i) { out[i] = (*this)(xs[i]); });
  return out;
}

Curve estimate_quantile_curve(const Sample& sample, double tau, const BandwidthSet& bw,
                              std::span<const double> grid_x, Exec exec) {
  const QuantileEstimator estimator(sample, tau, bw);
  return Curve(std::vector<double>(grid_x.begin(), grid_x.end()), estimator.evaluate(grid_x, exec));
}

AbsResiduals absolute_residuals(const Sample& sample, std::span<const double> q_at_x, double lo,
                                double hi) {
  if (q_at_x.size() != sample.size()) {
    throw InvalidArgument("absolute_residuals: need one quantile value per observation");
  }
  AbsResiduals out;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample.x[i] >= lo && sample.x[i] <= hi) {
      out.x.push_back(sample.x[i]);
      out.abs_e.push_back(std::abs(sample.y[i] - q_at_x[i]));
    }
  }
  return out;
}

Curve estimate_scale_curve(const Sample& sample, std::span<const double> q_at_x,
                           const BandwidthSet& bw, std::span<const double> grid_x, Exec exec) {
  const auto residuals = absolute_residuals(sample, q_at_x, bw.trim, 1.0 - bw.trim);
  const ScaleEstimator estimator(residuals.x, residuals.abs_e, bw);
  auto values = estimator.evaluate(grid_x, exec);
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0.0)) {
      throw ScaleDegenerate("scale estimate is nonpositive at x = " + std::to_string(grid_x[k]));
    }
  }
  return Curve(std::vector<double>(grid_x.begin(), grid_x.end()), std::move(values));
}

Curve estimate_scale_curve(const Sample& sample, const Curve& qhat, const BandwidthSet& bw,
                           std::span<const double> grid_x, Exec exec) {
  std::vector<double> q_at_x(sample.size(), 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    if (sample.x[i] >= bw.trim && sample.x[i] <= 1.0 - bw.trim) q_at_x[i] = qhat.clamped(sample.x[i]);
  }
  return estimate_scale_curve(sample, q_at_x, bw, grid_x, exec);
}

}  // namespace qspec
