#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qspec/parallel.hpp"
#include "qspec/sample.hpp"

namespace qspec {

/// Covariate window (lo, hi]. A window starting at or below zero is closed at
/// the left end so that X = 0 is kept when nothing is trimmed.
struct TrimWindow {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double x) const noexcept { return (lo <= 0.0 ? x >= lo : x > lo) && x <= hi; }
  /// (k * trim, 1 - k * trim]
  static TrimWindow symmetric(double trim, double k) { return {k * trim, 1.0 - k * trim}; }
};

/// Standardized residuals (Y_i - q(X_i)) / s(X_i) of the observations inside a
/// trimming window.
struct ResidualSet {
  std::vector<std::size_t> indices;  // positions in the originating sample
  std::vector<double> x;
  std::vector<double> eps;
  TrimWindow window;
  std::size_t n_total = 0;

  std::size_t n_trim() const noexcept { return eps.size(); }
};

/// q_at_x / s_at_x hold q(X_i) and s(X_i) for every observation (entries
/// outside the window are ignored). Without s_at_x the scale is taken as one
/// (location model). Throws TrimEmpty if the window holds no observation.
ResidualSet compute_residuals(const Sample& sample, std::span<const double> q_at_x,
                              std::optional<std::span<const double>> s_at_x, TrimWindow window);

/// Joint EDF of covariates and residuals normalized by the trimmed count:
/// #{i : eps_i <= y, lo < X_i <= t} / n_trim.
double joint_edf(const ResidualSet& res, double t, double y);

/// The independence process sqrt(n) (F_num(t, y) - F_marg(hi, y) F_marg(t, inf))
/// on the grid of distinct trimmed covariates times distinct residual values
/// (both sets) plus +inf. It is a right-continuous step field whose jumps sit
/// on this grid, so the grid carries its supremum. S = 0 for t outside the
/// window.
struct ProcessField {
  std::vector<double> t_grid;
  std::vector<std::size_t> t_count;  // observations sharing each t
  std::vector<double> y_grid;        // last entry is +inf
  std::vector<double> values;        // row-major, t_grid.size() x y_grid.size()
  TrimWindow window;
  std::size_t n_total = 0;

  double at(std::size_t ti, std::size_t yi) const { return values[ti * y_grid.size() + yi]; }
  /// S(t, y) for arbitrary arguments.
  double eval(double t, double y) const;
};

/// num = marg gives S_n; constrained residuals in num with unconstrained
/// residuals in marg give S_{n,I}. Both sets must come from the same
/// observations. Rows are filled in parallel.
ProcessField independence_process(const ResidualSet& num, const ResidualSet& marg, Exec exec = {});

/// Serial triple-loop evaluation straight from the definition. Kept as the
/// reference the fast kernel is tested and benchmarked against.
ProcessField independence_process_reference(const ResidualSet& num, const ResidualSet& marg);

/// sup |S| over the field.
double ks_statistic(const ProcessField& field);

/// Integral of S^2 against the covariate EDF (all n observations) and the
/// residual EDF of `marg`.
double cvm_statistic(const ProcessField& field, const ResidualSet& marg);

struct DegenerateDiagnostics {
  double sup_r;        // sup_t |R_n(t)|
  double sup_s_tilde;  // sup_y |S~_n(hi, y)|
};

/// R_n(t) = n^{-1/2} sum (1{eps_I <= 0} - tau) 1{X_i <= t} and
/// S~_n(hi, y) = n^{-1/2} sum (1{eps_I <= y} - F_eps(y)) over the trimmed
/// observations. Both vanish asymptotically under monotonicity; they are
/// diagnostics only.
DegenerateDiagnostics degenerate_diagnostics(const ResidualSet& constrained,
                                             const ResidualSet& unconstrained, double tau);

}  // namespace qspec
