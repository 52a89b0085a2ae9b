#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qspec/bandwidths.hpp"
#include "qspec/bootstrap.hpp"
#include "qspec/rng.hpp"
#include "qspec/sample.hpp"

namespace qspec {

enum class ModelId { m1, m2a, m2b, m3, m1h, m2ah, m2bh, m3h, m4, m5 };

/// Data-generating process with its parameters. Unused parameters are
/// ignored: a for m1, c for m2a/m2b, b for m3, beta for m4.
struct ModelSpec {
  ModelId id = ModelId::m1;
  double a = 0.0;
  double b = 0.0;
  double c = 2.0;
  double beta = 0.0;

  void validate() const;
  /// e.g. "m3(b=5)".
  std::string label() const;
};

ModelId parse_model_id(std::string_view name);
std::string model_id_name(ModelId id);

/// Regression function shared by models 1-3: x - x^2 / 2.
inline double base_curve(double x) noexcept { return x - 0.5 * x * x; }

/// Draw of (X, U) from the copula construction with parameter b.
struct CopulaDraw {
  double x;
  double u;
};
CopulaDraw draw_copula(double b, Rng& rng);

/// Student t variate with possibly fractional (or infinite) degrees of freedom
/// by inversion.
double draw_student_t(double nu, Rng& rng);

/// n i.i.d. pairs from the model.
Sample generate(const ModelSpec& model, std::size_t n, Rng& rng);

/// True conditional tau-quantile; models m4 and m5 only.
double true_quantile(const ModelSpec& model, double tau, double x);

/// Runs one test on one simulated sample.
using TestFn = std::function<TestReport(const Sample&, double tau, const BandwidthSet&,
                                        const BootstrapConfig&, ModelKind)>;

struct StudyConfig {
  ModelSpec model;
  std::size_t n = 100;
  std::size_t runs = 200;
  std::size_t B = 200;
  double tau = 0.5;
  double level = 0.05;
  ModelKind kind = ModelKind::location;
  std::uint64_t root_seed = 1;
  int workers = 1;  // runs in parallel
  KernelSpec kernel = kGaussian;
  std::optional<double> trim;  // overrides the kernel default
  std::size_t grid_nodes = 201;
  std::size_t grid_m = 2001;

  void validate() const;
};

struct StudyResult {
  StudyConfig config;
  std::size_t completed = 0;
  std::size_t failures = 0;
  std::size_t rejections_ks = 0;
  std::size_t rejections_cvm = 0;
  double reject_rate_ks = 0.0;
  double reject_rate_cvm = 0.0;
  std::vector<double> p_ks;  // per run, NaN for failed runs
  std::vector<double> p_cvm;
};

/// Bandwidths for a simulated sample: the default rule on the Rice variance,
/// with the trimming override applied.
BandwidthSet study_bandwidths(const Sample& sample, const StudyConfig& cfg);

/// Each run draws its sample and bootstrap seed from (root_seed, run index),
/// so the result does not depend on the worker count. Runs whose estimators
/// fail are counted and excluded from the rates.
StudyResult run_study(const StudyConfig& cfg, const TestFn& test = {});

std::string study_csv_header();
std::string study_csv_row(const StudyResult& r);

/// Rows "KS n=..." / "CvM n=...", one column per model label.
std::string format_study_table(const std::vector<StudyResult>& results);

}  // namespace qspec
