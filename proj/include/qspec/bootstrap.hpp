#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qspec/bandwidths.hpp"
#include "qspec/parallel.hpp"
#include "qspec/residual_process.hpp"
#include "qspec/rng.hpp"
#include "qspec/sample.hpp"

namespace qspec {

/// Null hypothesis under test. `location` fixes the scale at one,
/// `location_scale` standardizes by the estimated scale, and `monotone` tests
/// for an increasing quantile curve through the rearranged estimate.
enum class ModelKind { location, location_scale, monotone };

ModelKind parse_model_kind(std::string_view name);
std::string model_kind_name(ModelKind kind);

/// Curve the bootstrap responses are built around.
enum class BootstrapCenter { unconstrained_q, rearranged_q };

BootstrapCenter default_center(ModelKind kind) noexcept;
std::string center_name(BootstrapCenter center);

/// Settings for one fit of the residual process.
struct FitOptions {
  ModelKind kind = ModelKind::location_scale;
  double tau = 0.5;
  BandwidthSet bw;
  double trim_factor = 2.0;       // residual window (f trim, 1 - f trim]
  std::size_t grid_nodes = 201;   // nodes of the tabulated quantile curve
  std::size_t grid_m = 2001;      // rearrangement grid
  bool tabulate = false;          // build the quantile curve for every kind
  Exec exec;
};

/// Everything a single fit produces. Curves are tabulated on [trim, 1 - trim]
/// only for the monotone kind or when requested.
struct ModelFit {
  std::vector<double> q_at_x;   // q(X_i), all observations
  std::vector<double> s_at_x;   // s(X_i), ones for the location kind
  std::vector<double> qI_at_x;  // rearranged quantile at X_i (monotone only)
  std::optional<Curve> qhat;
  std::optional<Curve> qhat_I;
  ResidualSet residuals;                   // unconstrained
  std::optional<ResidualSet> constrained;  // monotone only
  ProcessField field;
  double ks = 0.0;
  double cvm = 0.0;
};

/// Fits quantile (and scale) curves, builds residuals on the trimming window
/// and evaluates the independence process with its KS and CvM statistics.
/// For the monotone kind the process compares constrained with unconstrained
/// residuals.
ModelFit fit_model(const Sample& sample, const FitOptions& opts);

/// Smoothed residual distribution: the mean of Phi((y - e_i) / alpha).
struct SmoothErrorCdf {
  std::vector<double> residuals;
  double alpha = 0.0;
};

double smooth_error_cdf_eval(const SmoothErrorCdf& cdf, double y);

/// n draws e*_J + alpha Z with J uniform over the residuals.
std::vector<double> draw_bootstrap_errors(const SmoothErrorCdf& cdf, std::size_t n, Rng& rng);

struct BootstrapStatistics {
  double ks;
  double cvm;
};

/// One bootstrap world: Y*_i = center_i + scale_i e*_i, refit with the same
/// bandwidths and trimming factor opts.trim_factor. Estimator failures
/// propagate.
BootstrapStatistics bootstrap_replication(std::span<const double> sample_x,
                                          std::span<const double> center,
                                          std::span<const double> scale, const SmoothErrorCdf& cdf,
                                          const FitOptions& opts, Rng& rng);

struct BootstrapConfig {
  std::size_t B = 200;
  double level = 0.05;
  std::uint64_t seed = 1;
  std::optional<BootstrapCenter> center;  // defaults per model kind
  int workers = 1;                        // replications in parallel
  double max_failure_fraction = 0.1;
  std::size_t grid_nodes = 201;
  std::size_t grid_m = 2001;

  void validate() const;
};

struct TestReport {
  ModelKind kind = ModelKind::location_scale;
  double tau = 0.5;
  BandwidthSet bw;  // alpha holds the value actually used
  BootstrapConfig config;
  std::size_t n = 0;
  std::size_t n_trim = 0;
  double statistic_ks = 0.0;
  double statistic_cvm = 0.0;
  double critical_ks = 0.0;   // +inf when the order statistic exceeds B_effective
  double critical_cvm = 0.0;
  double p_ks = 1.0;
  double p_cvm = 1.0;
  bool reject_ks = false;
  bool reject_cvm = false;
  std::size_t B_effective = 0;
  std::size_t failures = 0;
  std::vector<double> boot_ks;
  std::vector<double> boot_cvm;

  /// Stable JSON document; infinite critical values are written as null.
  std::string to_json(int indent = 2) const;
};

/// Index k = ceil((1 - level)(B + 1)) of the critical order statistic (1-based).
std::size_t critical_rank(std::size_t B, double level);
/// k-th order statistic of the bootstrap statistics, +inf if k > B.
double critical_value(std::vector<double> stats, double level);
/// (1 + #{stats >= observed}) / (B + 1).
double bootstrap_p_value(std::span<const double> stats, double observed);

/// Full test: data fit with residuals on (2 trim, 1 - 2 trim], bootstrap
/// errors from the smoothed data residuals, B replications with residuals on
/// (4 trim, 1 - 4 trim]. bw.alpha <= 0 selects the data-driven smoothing.
/// Throws BootstrapUnstable when more than max_failure_fraction of the
/// replications fail.
TestReport bootstrap_test(const Sample& sample, double tau, const BandwidthSet& bw,
                          const BootstrapConfig& cfg, ModelKind kind);

}  // namespace qspec
