#include "qspec/residual_process.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "qspec/errors.hpp"

namespace qspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_compatible(const ResidualSet& num, const ResidualSet& marg) {
  if (num.indices != marg.indices || num.x.size() != num.eps.size() ||
      marg.x.size() != marg.eps.size() || num.n_total != marg.n_total) {
    throw InvalidArgument("independence_process: residual sets must share observations");
  }
  if (num.n_trim() == 0) throw TrimEmpty("independence_process: trim interval empty");
}

struct FieldLayout {
  std::vector<std::size_t> by_x;  // trimmed positions sorted by covariate
  std::vector<double> t_grid;
  std::vector<std::size_t> t_count;
  std::vector<double> y_grid;
};

FieldLayout layout(const ResidualSet& num, const ResidualSet& marg) {
  FieldLayout out;
  const std::size_t m = num.n_trim();
  out.by_x.resize(m);
  std::iota(out.by_x.begin(), out.by_x.end(), std::size_t{0});
  std::stable_sort(out.by_x.begin(), out.by_x.end(),
                   [&](std::size_t a, std::size_t b) { return num.x[a] < num.x[b]; });
  for (const std::size_t i : out.by_x) {
    if (out.t_grid.empty() || num.x[i] != out.t_grid.back()) {
      out.t_grid.push_back(num.x[i]);
      out.t_count.push_back(0);
    }
    ++out.t_count.back();
  }
  out.y_grid.reserve(2 * m + 1);
  out.y_grid.insert(out.y_grid.end(), num.eps.begin(), num.eps.end());
  out.y_grid.insert(out.y_grid.end(), marg.eps.begin(), marg.eps.end());
  std::sort(out.y_grid.begin(), out.y_grid.end());
  out.y_grid.erase(std::unique(out.y_grid.begin(), out.y_grid.end()), out.y_grid.end());
  out.y_grid.push_back(kInf);
  return out;
}

// Index of the largest grid value <= v (grid holds v exactly for residuals).
std::size_t column_of(const std::vector<double>& y_grid, double v) {
  return static_cast<std::size_t>(std::lower_bound(y_grid.begin(), y_grid.end(), v) - y_grid.begin());
}

ProcessField make_field(FieldLayout&& lay, const ResidualSet& num) {
  ProcessField field;
  field.t_grid = std::move(lay.t_grid);
  field.t_count = std::move(lay.t_count);
  field.y_grid = std::move(lay.y_grid);
  field.values.assign(field.t_grid.size() * field.y_grid.size(), 0.0);
  field.window = num.window;
  field.n_total = num.n_total;
  return field;
}

// sqrt(n) (c_num m - c_marg c_x) / m^2 with the integer part formed exactly,
// so that identities such as S(t_max, .) = 0 hold without rounding.
double field_value(double scale, std::size_t c_num, std::size_t c_marg, std::size_t c_x,
                   std::size_t m) {
  const auto lhs = static_cast<double>(c_num * m);
  const auto rhs = static_cast<double>(c_marg * c_x);
  return scale * (lhs - rhs);
}

}  // namespace

ResidualSet compute_residuals(const Sample& sample, std::span<const double> q_at_x,
                              std::optional<std::span<const double>> s_at_x, TrimWindow window) {
  const std::size_t n = sample.size();
  if (q_at_x.size() != n || (s_at_x && s_at_x->size() != n)) {
    throw InvalidArgument("compute_residuals: need one curve value per observation");
  }
  ResidualSet res;
  res.window = window;
  res.n_total = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (!window.contains(sample.x[i])) continue;
    const double scale = s_at_x ? (*s_at_x)[i] : 1.0;
    if (!(scale > 0.0)) {
      throw ScaleDegenerate("compute_residuals: nonpositive scale at x = " +
                            std::to_string(sample.x[i]));
    }
    res.indices.push_back(i);
    res.x.push_back(sample.x[i]);
    res.eps.push_back((sample.y[i] - q_at_x[i]) / scale);
  }
  if (res.indices.empty()) {
    throw TrimEmpty("trim interval empty: no covariate in (" + std::to_string(window.lo) + ", " +
                    std::to_string(window.hi) + "]");
  }
  return res;
}

double joint_edf(const ResidualSet& res, double t, double y) {
  if (res.n_trim() == 0) throw TrimEmpty("joint_edf: trim interval empty");
  std::size_t count = 0;
  for (std::size_t i = 0; i < res.n_trim(); ++i)
    if (res.eps[i] <= y && res.x[i] <= t && res.window.contains(res.x[i])) ++count;
  return static_cast<double>(count) / static_cast<double>(res.n_trim());
}

double ProcessField::eval(double t, double y) const {
  if (!window.contains(t) || t_grid.empty() || t < t_grid.front()) return 0.0;
  const auto ti = static_cast<std::size_t>(std::upper_bound(t_grid.begin(), t_grid.end(), t) -
                                           t_grid.begin()) - 1;
  const auto yi_end = std::upper_bound(y_grid.begin(), y_grid.end(), y);
  if (yi_end == y_grid.begin()) return 0.0;
  const auto yi = static_cast<std::size_t>(yi_end - y_grid.begin()) - 1;
  return at(ti, yi);
}

ProcessField independence_process(const ResidualSet& num, const ResidualSet& marg, Exec exec) {
  check_compatible(num, marg);
  auto lay = layout(num, marg);
  const std::size_t m = num.n_trim();
  const std::size_t ny = lay.y_grid.size();

  // Column index of every residual; marginal counts c_marg(y_l) are shared by all rows.
  std::vector<std::size_t> num_col(m), marg_col(m);
  std::vector<std::size_t> marg_cum(ny, 0);
  for (std::size_t i = 0; i < m; ++i) {
    num_col[i] = column_of(lay.y_grid, num.eps[i]);
    marg_col[i] = column_of(lay.y_grid, marg.eps[i]);
    ++marg_cum[marg_col[i]];
  }
  std::partial_sum(marg_cum.begin(), marg_cum.end(), marg_cum.begin());

  // Row k covers the observations sorted by covariate up to end_of_row[k].
  std::vector<std::size_t> end_of_row(lay.t_count.size());
  std::partial_sum(lay.t_count.begin(), lay.t_count.end(), end_of_row.begin());

  const std::vector<std::size_t> by_x = lay.by_x;
  ProcessField field = make_field(std::move(lay), num);
  const double scale = std::sqrt(static_cast<double>(field.n_total)) /
                       (static_cast<double>(m) * static_cast<double>(m));

  parallel_for(field.t_grid.size(), exec, [&](std::size_t k) {
    std::vector<std::size_t> hist(ny, 0);
    const std::size_t c_x = end_of_row[k];
    for (std::size_t r = 0; r < c_x; ++r) ++hist[num_col[by_x[r]]];
    std::size_t c_num = 0;
    double* row = &field.values[k * ny];
    for (std::size_t l = 0; l < ny; ++l) {
      c_num += hist[l];
      row[l] = field_value(scale, c_num, marg_cum[l], c_x, m);
    }
  });
  return field;
}

ProcessField independence_process_reference(const ResidualSet& num, const ResidualSet& marg) {
  check_compatible(num, marg);
  auto lay = layout(num, marg);
  const std::size_t m = num.n_trim();
  ProcessField field = make_field(std::move(lay), num);
  const double scale = std::sqrt(static_cast<double>(field.n_total)) /
                       (static_cast<double>(m) * static_cast<double>(m));
  const std::size_t ny = field.y_grid.size();
  for (std::size_t k = 0; k < field.t_grid.size(); ++k) {
    const double t = field.t_grid[k];
    for (std::size_t l = 0; l < ny; ++l) {
      const double y = field.y_grid[l];
      std::size_t c_num = 0, c_marg = 0, c_x = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (num.x[i] <= t && num.eps[i] <= y) ++c_num;
        if (marg.eps[i] <= y) ++c_marg;
        if (num.x[i] <= t) ++c_x;
      }
      field.values[k * ny + l] = field_value(scale, c_num, c_marg, c_x, m);
    }
  }
  return field;
}

double ks_statistic(const ProcessField& field) {
  double sup = 0.0;
  for (const double v : field.values) sup = std::max(sup, std::abs(v));
  return sup;
}

double cvm_statistic(const ProcessField& field, const ResidualSet& marg) {
  const std::size_t m = marg.n_trim();
  if (m == 0 || field.n_total == 0) return 0.0;
  std::vector<std::size_t> cols(m);
  for (std::size_t j = 0; j < m; ++j) cols[j] = column_of(field.y_grid, marg.eps[j]);
  double total = 0.0;
  for (std::size_t k = 0; k < field.t_grid.size(); ++k) {
    double row_sum = 0.0;
    for (const std::size_t c : cols) {
      const double s = field.at(k, c);
      row_sum += s * s;
    }
    total += static_cast<double>(field.t_count[k]) * row_sum;
  }
  return total / (static_cast<double>(field.n_total) * static_cast<double>(m));
}

DegenerateDiagnostics degenerate_diagnostics(const ResidualSet& constrained,
                                             const ResidualSet& unconstrained, double tau) {
  check_compatible(constrained, unconstrained);
  const std::size_t m = constrained.n_trim();
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(constrained.n_total));

  std::vector<std::size_t> by_x(m);
  std::iota(by_x.begin(), by_x.end(), std::size_t{0});
  std::stable_sort(by_x.begin(), by_x.end(),
                   [&](std::size_t a, std::size_t b) { return constrained.x[a] < constrained.x[b]; });
  double sup_r = 0.0, running = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t i = by_x[r];
    running += (constrained.eps[i] <= 0.0 ? 1.0 : 0.0) - tau;
    // Evaluate only after the last of a run of tied covariates.
    if (r + 1 < m && constrained.x[by_x[r + 1]] == constrained.x[i]) continue;
    sup_r = std::max(sup_r, std::abs(running));
  }

  std::vector<double> a(constrained.eps), b(unconstrained.eps);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> grid(a);
  grid.insert(grid.end(), b.begin(), b.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  double sup_s = 0.0;
  for (const double y : grid) {
    const auto ca = std::upper_bound(a.begin(), a.end(), y) - a.begin();
    const auto cb = std::upper_bound(b.begin(), b.end(), y) - b.begin();
    sup_s = std::max(sup_s, std::abs(static_cast<double>(ca - cb)));
  }
  return {sup_r * inv_sqrt_n, sup_s * inv_sqrt_n};
}

}  // namespace qspec
