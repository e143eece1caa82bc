#pragma once
// Function-tuples (f_11, f_12, f_21, f_22): four real functions used as
// per-settings-pair timetag distances.  A tuple is admissible when
//   f_22(x+y+z) <= f_21(x) + f_11(y) + f_12(z)   for all x, y, z.
// Admissibility is by construction: the parametric constructors below are
// admissible, and the combinators preserve admissibility.  verify_t4 provides
// the empirical spot check (random triples plus a kink grid).
//
// Tuples are immutable expression trees; evaluation is pure and reentrant.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ttbell/core.hpp"

namespace ttbell {

namespace detail {
struct TupleNode;
}

/// Constant tuple with the exactness property c_22 = c_21 + c_11 + c_12.
struct ExactConstantTuple {
  std::array<double, kNumSettingsPairs> c{0.0, 0.0, 0.0, 0.0};

  /// (v, v, v, 3v).
  static ExactConstantTuple symmetric(double v) {
    return ExactConstantTuple{{v, v, v, 3.0 * v}};
  }
  /// Throws unless c_22 equals the sum of the others within 1e-12.
  void validate(const char* who) const;
};

struct LinearEdgeWindowParams {
  std::array<double, kNumSettingsPairs> t_l{};
  std::array<double, kNumSettingsPairs> t_h{};
  double m_l = 1.0;
  double m_h = 1.0;

  /// Dead zone [-t, t] at the non-22 settings and [-3t, 3t] at 22, equal
  /// slopes m on both edges.
  static LinearEdgeWindowParams symmetric(double t, double m);
  void validate() const;
};

class FunctionTuple {
 public:
  FunctionTuple() = default;

  bool valid() const { return node_ != nullptr; }
  double eval(int pair_index, double x) const;
  double eval(SettingsPair ab, double x) const { return eval(ab.index(), x); }

  /// Conservative traits used by combinator preconditions.
  bool nonnegative() const;
  bool monotone_nondecreasing_22() const;

  /// Smallest known u such that f_ab(x) >= 1 whenever |x| > u, for all ab;
  /// +infinity when no finite radius is derivable.  Enables gap splitting.
  double unit_radius() const;

  /// Kink locations of component ab (piecewise-linear breakpoints).
  std::vector<double> breakpoints(int pair_index) const;

  std::string to_json_string() const;
  static FunctionTuple from_json_string(const std::string& text);

  explicit FunctionTuple(std::shared_ptr<const detail::TupleNode> node)
      : node_(std::move(node)) {}
  const std::shared_ptr<const detail::TupleNode>& node() const {
    return node_;
  }

 private:
  std::shared_ptr<const detail::TupleNode> node_;
};

// Parametric constructors.
FunctionTuple make_linear(double lambda);                 // f_ab(x) = lambda x
FunctionTuple make_constant(const ExactConstantTuple& c);
FunctionTuple make_step();                                // f_ab(x) = [x >= 0]
FunctionTuple make_abs();                                 // f_ab(x) = |x|
FunctionTuple make_threshold(const ExactConstantTuple& t);  // [x >= t_ab]
FunctionTuple make_half_linear(double m, const ExactConstantTuple& t,
                               const ExactConstantTuple& c);  // max(m(x-t_ab), c_ab)
FunctionTuple make_linear_edge_window(const LinearEdgeWindowParams& p);

/// Hard window [|x| > w_ab]; requires w_22 >= w_21 + w_11 + w_12 (the
/// equal-width conventional window is rejected here).
FunctionTuple make_hard_window(const std::array<double, kNumSettingsPairs>& w);
/// Same shape without the admissibility check, for the loophole-vulnerable
/// conventional analysis and for demonstrating verify_t4 failures.
FunctionTuple make_hard_window_unchecked(const std::array<double, kNumSettingsPairs>& w);

/// min(lambda |x|, 1), the matching-compression tuple.
FunctionTuple make_compression(double lambda);

// Closure combinators.  Results are admissible whenever inputs are.
FunctionTuple tuple_add(const FunctionTuple& a, const FunctionTuple& b);
FunctionTuple tuple_scale(const FunctionTuple& a, double s);  // s > 0
FunctionTuple tuple_reflect(const FunctionTuple& a);          // f_ab(-x)
FunctionTuple tuple_max(const FunctionTuple& a, const FunctionTuple& b);
FunctionTuple tuple_shift(const FunctionTuple& a, const ExactConstantTuple& t);
FunctionTuple tuple_clamp(const FunctionTuple& a, double c);  // min(f, c), f >= 0, c >= 0
FunctionTuple tuple_compose(const FunctionTuple& outer, const FunctionTuple& inner);

struct T4VerifyResult {
  bool pass = true;
  double x = 0.0, y = 0.0, z = 0.0;  // counterexample triple when failing
  double violation = 0.0;            // lhs - rhs at the counterexample
};

/// Samples the defining inequality with `samples` random triples over
/// [lo, hi]^3 plus a deterministic grid built from component breakpoints
/// (shifted by +/-1e-6) including aligned 22-argument probes.  Tolerance 1e-9.
T4VerifyResult verify_t4(const FunctionTuple& f, double lo, double hi,
                         std::size_t samples, std::uint64_t seed);

}  // namespace ttbell
