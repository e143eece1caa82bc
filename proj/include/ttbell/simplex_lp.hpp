#pragma once
// Dense two-phase primal simplex for the small linear programs used here
// (template decomposition over the 16 deterministic strategies, per-trial
// designation rates).  Bland's rule, so no cycling.

#include <cstddef>
#include <vector>

namespace ttbell {

/// maximize objective.x  subject to  a_ub x <= b_ub,  a_eq x = b_eq,
/// 0 <= x_i <= upper[i]  (upper empty = no upper bounds).
struct LpProblem {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<std::vector<double>> a_ub;
  std::vector<double> b_ub;
  std::vector<std::vector<double>> a_eq;
  std::vector<double> b_eq;
  std::vector<double> upper;
};

struct LpResult {
  bool feasible = false;
  bool bounded = true;
  double value = 0.0;
  std::vector<double> x;
};

LpResult solve_lp(const LpProblem& lp);

}  // namespace ttbell
