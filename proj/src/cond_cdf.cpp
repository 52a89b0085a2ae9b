#include "qspec/cond_cdf.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>

#include "qspec/errors.hpp"

namespace qspec {

namespace {

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxLocalPolyOrder + 1,
                                  kMaxLocalPolyOrder + 1>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxLocalPolyOrder + 1, 1>;

constexpr double kMinReciprocalCondition = 1e-12;

}  // namespace

void LocalPolyConfig::validate() const {
  if (p < 0 || p > kMaxLocalPolyOrder) {
    throw InvalidArgument("local polynomial order must be in [0, " +
                          std::to_string(kMaxLocalPolyOrder) + "], got " + std::to_string(p));
  }
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("bandwidth h must be positive");
  if (!(d > 0.0) || !std::isfinite(d)) throw InvalidArgument("bandwidth d must be positive");
}

void local_poly_weights(double x, std::span<const double> sample_x, const LocalPolyConfig& config,
                        std::span<double> out) {
  const int p = config.p;
  const std::size_t n = sample_x.size();
  if (out.size() != n) throw InvalidArgument("local_poly_weights: output size mismatch");

  // Moments S_k = sum_i K(z_i) z_i^k with z_i = (X_i - x) / h, k = 0..2p.
  std::array<double, 2 * kMaxLocalPolyOrder + 1> moments{};
  for (std::size_t i = 0; i < n; ++i) {
    const double z = (sample_x[i] - x) / config.h;
    const double k = eval_kernel(config.kernel, z);
    out[i] = k;
    double power = k;
    for (int m = 0; m <= 2 * p; ++m) {
      moments[m] += power;
      power *= z;
    }
  }

  SmallMatrix gram(p + 1, p + 1);
  for (int r = 0; r <= p; ++r)
    for (int c = 0; c <= p; ++c) gram(r, c) = moments[r + c];

  Eigen::LDLT<SmallMatrix> ldlt(gram);
  // rcond misses exactly vanishing pivots (all covariates at x), so the
  // pivots are checked as well.
  const SmallVector pivots = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      !(ldlt.rcond() >= kMinReciprocalCondition) ||
      !(pivots.minCoeff() > kMinReciprocalCondition * pivots.maxCoeff())) {
    throw SingularDesign("local polynomial design is singular at x = " + std::to_string(x) +
                         " (widen h or add observations)");
  }
  SmallVector e1 = SmallVector::Zero(p + 1);
  e1(0) = 1.0;
  const SmallVector a = ldlt.solve(e1);

  for (std::size_t i = 0; i < n; ++i) {
    const double z = (sample_x[i] - x) / config.h;
    double poly = a(p);
    for (int m = p - 1; m >= 0; --m) poly = poly * z + a(m);
    out[i] *= poly;
  }
}

std::vector<double> local_poly_weights(double x, std::span<const double> sample_x,
                                       const LocalPolyConfig& config) {
  std::vector<double> out(sample_x.size());
  local_poly_weights(x, sample_x, config, out);
  return out;
}

CondCdfEstimate::CondCdfEstimate(LocalPolyConfig config, Sample sample, CdfMode mode)
    : config_(config), sample_(std::move(sample)), mode_(mode) {
  config_.validate();
  sample_.validate(1, 1);
}

std::vector<double> CondCdfEstimate::weights(double x) const {
  return local_poly_weights(x, sample_.x, config_);
}

double CondCdfEstimate::eval_with_weights(std::span<const double> weights, double y) const {
  double sum = 0.0;
  const auto& ys = sample_.y;
  if (mode_ == CdfMode::indicator) {
    for (std::size_t i = 0; i < ys.size(); ++i)
      if (ys[i] <= y) sum += weights[i];
  } else {
    const double inv_d = 1.0 / config_.d;
    for (std::size_t i = 0; i < ys.size(); ++i) sum += weights[i] * eval_Omega((y - ys[i]) * inv_d);
  }
  return sum;
}

double CondCdfEstimate::operator()(double x, double y) const {
  const auto w = weights(x);
  return eval_with_weights(w, y);
}

double abs_residual_cdf(std::span<const double> sample_x, std::span<const double> abs_e,
                        const LocalPolyConfig& config, double x, double y) {
  if (sample_x.size() != abs_e.size()) {
    throw InvalidArgument("abs_residual_cdf: covariates and residuals differ in length");
  }
  const auto w = local_poly_weights(x, sample_x, config);
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (abs_e[i] <= y) sum += w[i];
  return sum;
}

}  // namespace qspec
