#pragma once

#include <functional>

namespace qspec {

/// Raw error family before normalization.
enum class ErrorFamily { normal, student_t };

struct RawErrorLaw {
  ErrorFamily family = ErrorFamily::normal;
  double mu = 0.0;     // location
  double sigma = 1.0;  // scale
  double nu = 0.0;     // degrees of freedom (student_t)

  double cdf(double x) const;
  double pdf(double x) const;
  double quantile(double u) const;
};

/// Error law normalized to tau-quantile zero and median |eps| = 1:
/// eps = (eta - shift) * factor.
struct ErrorModel {
  RawErrorLaw raw;
  double tau = 0.5;
  double shift = 0.0;
  double factor = 1.0;

  /// F_eps; returns tau exactly at 0, which holds by construction.
  double cdf(double y) const;
  double pdf(double y) const;
  /// Density of |eps| for y >= 0, zero below.
  double abs_pdf(double y) const;
};

/// Shift so that the tau-quantile is zero, then scale so that |eps| has
/// median one.
ErrorModel rescale_error_model(const RawErrorLaw& raw, double tau);

double phi(const ErrorModel& em, double y);
double psi(const ErrorModel& em, double y);

/// g(eps, y) = 1{eps <= y} - F(y) - phi(y)(1{eps <= 0} - tau)
///             - psi(y)(1{|eps| <= 1} - 1/2).
double influence(const ErrorModel& em, double eps, double y);

/// Which form of the expansion: the location-scale model, or the location
/// model where phi = f / f(0) and psi = 0.
enum class ExpansionKind { location_scale, location };

struct LimitCovarianceSpec {
  ErrorModel error_model;
  std::function<double(double)> F_X;  // empty means uniform on [0, 1]
  ExpansionKind kind = ExpansionKind::location_scale;
};

/// Covariance of the limit process at (s, y) and (t, z).
double limit_covariance(const LimitCovarianceSpec& spec, double s, double y, double t, double z);

/// The location-model covariance written out on its own, for cross-checking
/// the general formula.
double location_limit_covariance(const ErrorModel& em, const std::function<double(double)>& F_X,
                                 double s, double y, double t, double z);

}  // namespace qspec
