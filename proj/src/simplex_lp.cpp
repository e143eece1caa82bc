#include "ttbell/simplex_lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ttbell {
namespace {

constexpr double kEps = 1e-9;

struct Tableau {
  std::size_t m = 0;      // constraint rows
  std::size_t n = 0;      // columns eligible to enter
  std::vector<std::vector<double>> a;  // m x (width+1), last col = rhs
  std::vector<double> obj;             // reduced costs, width entries
  std::vector<std::size_t> basis;      // var index per row
};

void pivot(Tableau& t, std::size_t row, std::size_t col) {
  auto& pr = t.a[row];
  const double pv = pr[col];
  for (auto& v : pr) v /= pv;
  for (std::size_t i = 0; i < t.m; ++i) {
    if (i == row) continue;
    const double f = t.a[i][col];
    if (f == 0.0) continue;
    for (std::size_t j = 0; j < pr.size(); ++j) t.a[i][j] -= f * pr[j];
  }
  const double f = t.obj[col];
  if (f != 0.0)
    for (std::size_t j = 0; j < t.obj.size(); ++j) t.obj[j] -= f * pr[j];
  t.basis[row] = col;
}

/// Minimizes the (already reduced) objective row.  Returns false if unbounded.
bool run_simplex(Tableau& t) {
  const std::size_t rhs = t.a.empty() ? 0 : t.a[0].size() - 1;
  for (;;) {
    std::size_t enter = t.n;
    for (std::size_t j = 0; j < t.n; ++j) {
      if (t.obj[j] < -kEps) {
        enter = j;  // Bland: smallest improving index
        break;
      }
    }
    if (enter == t.n) return true;
    std::size_t leave = t.m;
    double best = 0.0;
    for (std::size_t i = 0; i < t.m; ++i) {
      if (t.a[i][enter] > kEps) {
        const double ratio = t.a[i][rhs] / t.a[i][enter];
        if (leave == t.m || ratio < best - 1e-12 ||
            (std::abs(ratio - best) <= 1e-12 && t.basis[i] < t.basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave == t.m) return false;
    pivot(t, leave, enter);
  }
}

}  // namespace

LpResult solve_lp(const LpProblem& lp) {
  const std::size_t n = lp.num_vars;
  if (lp.objective.size() != n) throw std::invalid_argument("solve_lp: objective size");
  if (!lp.upper.empty() && lp.upper.size() != n)
    throw std::invalid_argument("solve_lp: upper size");

  // Assemble rows: upper bounds become plain <= rows.
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  std::vector<bool> is_eq;
  auto push_row = [&](const std::vector<double>& coef, double b, bool eq) {
    if (coef.size() != n) throw std::invalid_argument("solve_lp: row size");
    rows.push_back(coef);
    rhs.push_back(b);
    is_eq.push_back(eq);
  };
  for (std::size_t i = 0; i < lp.a_ub.size(); ++i) push_row(lp.a_ub[i], lp.b_ub[i], false);
  for (std::size_t i = 0; i < lp.a_eq.size(); ++i) push_row(lp.a_eq[i], lp.b_eq[i], true);
  if (!lp.upper.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(lp.upper[i])) continue;
      std::vector<double> coef(n, 0.0);
      coef[i] = 1.0;
      push_row(coef, lp.upper[i], false);
    }
  }

  const std::size_t m = rows.size();
  // Column layout: structural | slacks (one per <= row) | artificials.
  std::size_t n_slack = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (!is_eq[i]) ++n_slack;

  // Normalize b >= 0.  A flipped <= row's slack gets coefficient -1 and
  // cannot start basic; such rows receive artificials, as do all = rows.
  std::vector<double> slack_sign(m, 0.0);
  {
    std::size_t s = 0;
    for (std::size_t i = 0; i < m; ++i) {
      double sign = 1.0;
      if (rhs[i] < 0.0) {
        for (auto& v : rows[i]) v = -v;
        rhs[i] = -rhs[i];
        sign = -1.0;
      }
      if (!is_eq[i]) slack_sign[i] = sign * 1.0, ++s;
    }
    (void)s;
  }

  std::vector<std::size_t> slack_col(m, SIZE_MAX);
  {
    std::size_t next = n;
    for (std::size_t i = 0; i < m; ++i)
      if (!is_eq[i]) slack_col[i] = next++;
  }
  std::vector<bool> needs_artificial(m, false);
  std::size_t n_art = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const bool slack_ok = !is_eq[i] && slack_sign[i] > 0.0;
    needs_artificial[i] = !slack_ok;
    if (needs_artificial[i]) ++n_art;
  }
  const std::size_t n_real = n + n_slack;
  const std::size_t width = n_real + n_art;

  Tableau t;
  t.m = m;
  t.n = n_real;  // artificials may leave but not re-enter in phase 2
  t.a.assign(m, std::vector<double>(width + 1, 0.0));
  t.basis.assign(m, 0);
  {
    std::size_t art = n_real;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) t.a[i][j] = rows[i][j];
      if (slack_col[i] != SIZE_MAX) t.a[i][slack_col[i]] = slack_sign[i];
      t.a[i][width] = rhs[i];
      if (needs_artificial[i]) {
        t.a[i][art] = 1.0;
        t.basis[i] = art++;
      } else {
        t.basis[i] = slack_col[i];
      }
    }
  }

  LpResult res;

  if (n_art > 0) {
    // Phase 1: minimize the artificial sum.
    t.obj.assign(width, 0.0);
    for (std::size_t j = n_real; j < width; ++j) t.obj[j] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis[i] >= n_real)
        for (std::size_t j = 0; j < width; ++j) t.obj[j] -= t.a[i][j];
    }
    const std::size_t saved_n = t.n;
    t.n = width;  // artificials may move during phase 1
    run_simplex(t);
    t.n = saved_n;
    double art_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (t.basis[i] >= n_real) art_sum += t.a[i][width];
    if (art_sum > 1e-7) {
      res.feasible = false;
      return res;
    }
    // Pivot lingering zero-valued artificials out where possible.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis[i] < n_real) continue;
      std::size_t col = n_real;
      for (std::size_t j = 0; j < n_real; ++j) {
        if (std::abs(t.a[i][j]) > kEps) {
          col = j;
          break;
        }
      }
      if (col < n_real) pivot(t, i, col);
      // else: redundant row; the artificial stays basic at zero, harmless
      // since artificials cannot re-enter.
    }
  }

  // Phase 2: minimize -objective.
  t.obj.assign(width, 0.0);
  for (std::size_t j = 0; j < n; ++j) t.obj[j] = -lp.objective[j];
  for (std::size_t i = 0; i < m; ++i) {
    const double f = t.obj[t.basis[i]];
    if (f != 0.0)
      for (std::size_t j = 0; j < width; ++j) t.obj[j] -= f * t.a[i][j];
  }
  const bool bounded = run_simplex(t);

  res.feasible = true;
  res.bounded = bounded;
  res.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (t.basis[i] < n) res.x[t.basis[i]] = t.a[i][width];
  res.value = 0.0;
  for (std::size_t j = 0; j < n; ++j) res.value += lp.objective[j] * res.x[j];
  return res;
}

}  // namespace ttbell
