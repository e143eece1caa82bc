#pragma once
// CH-style inequalities from per-settings-pair cost functions l_ab(o1, o2).
// For local-realist statistics the settings-conditional sum
//   <l_21(O^A,O^B)> + <l_11(O^B,O^A)> + <l_12(O^A,O^B)> - <l_22(O^A,O^B)>
// is nonnegative; note the swapped arguments in the 11 term.  bell_value
// turns the sum into a single per-trial random variable with that expectation
// under any settings distribution, and lr_oracle certifies the bound by
// enumerating deterministic strategies over a finite outcome list.

#include <array>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ttbell/core.hpp"
#include "ttbell/distance.hpp"
#include "ttbell/tuples.hpp"

namespace ttbell {

template <class O>
struct CHFunction {
  // l[pair index](o1, o2); the caller passes arguments already in the
  // term's order (B-side first at 11).
  std::array<std::function<double(const O&, const O&)>, kNumSettingsPairs> l;

  double term(int pair_index, const O& o1, const O& o2) const {
    const auto& fn = l[pair_index];
    if (!fn) throw std::logic_error("CHFunction: component not set");
    return fn(o1, o2);
  }
};

/// Per-trial Bell value: sign-flipped 22 term over the settings probability.
/// Its expectation over trials equals the CH sum; negative means violation.
template <class O>
double bell_value(const CHFunction<O>& l, const SettingsDistribution& dist,
                  const O& oa, Setting a, const O& ob, Setting b) {
  const SettingsPair ab{a, b};
  const int idx = ab.index();
  const double p = settings_prob(dist, ab);
  if (!(p > 0.0)) throw std::invalid_argument("bell_value: settings pair has zero probability");
  const double sign = idx == kPair22 ? -1.0 : 1.0;
  const double v = idx == kPair11 ? l.term(idx, ob, oa) : l.term(idx, oa, ob);
  return sign * v / p;
}

template <class O>
struct BellFunction {
  SettingsDistribution dist;
  CHFunction<O> l;
  double operator()(const O& oa, Setting a, const O& ob, Setting b) const {
    return bell_value(l, dist, oa, a, ob, b);
  }
};

template <class O>
BellFunction<O> make_bell_function(const CHFunction<O>& l,
                                   const SettingsDistribution& dist) {
  dist.validate();
  return BellFunction<O>{dist, l};
}

/// Inverse of make_bell_function: recovers cost functions whose CH sum has
/// the same per-trial values.  Exact round trip by construction.
template <class O>
CHFunction<O> bell_to_ch(const BellFunction<O>& bf) {
  CHFunction<O> out;
  const SettingsDistribution dist = bf.dist;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const SettingsPair ab = SettingsPair::from_index(idx);
    const double p = settings_prob(dist, ab);
    const double sign = idx == kPair22 ? -1.0 : 1.0;
    if (idx == kPair11) {
      out.l[idx] = [bf, ab, p, sign](const O& o1, const O& o2) {
        return sign * p * bf(o2, ab.a, o1, ab.b);
      };
    } else {
      out.l[idx] = [bf, ab, p, sign](const O& o1, const O& o2) {
        return sign * p * bf(o1, ab.a, o2, ab.b);
      };
    }
  }
  return out;
}

template <class O>
using OutcomeFunc = std::function<double(const O&)>;

/// No-signaling-safe adjustment: adds f_a(o^A) + g_b(o^B) to the 21, 12, 22
/// cost terms and subtracts both at 11, which cancels in expectation for any
/// no-signaling statistics but can reduce the variance of the Bell value.
template <class O>
CHFunction<O> apply_ns_adjustment(const CHFunction<O>& l,
                                  const LRAssignment<OutcomeFunc<O>>& adj) {
  for (const auto* fn : {&adj.a1, &adj.a2, &adj.b1, &adj.b2}) {
    if (!*fn) throw std::invalid_argument("apply_ns_adjustment: adjustment function not set");
  }
  CHFunction<O> out;
  // Formal arguments are term-ordered: at 11 the first argument is o^B.
  out.l[kPair11] = [l, adj](const O& x, const O& y) {
    return l.term(kPair11, x, y) - adj.a1(y) - adj.b1(x);
  };
  out.l[kPair12] = [l, adj](const O& x, const O& y) {
    return l.term(kPair12, x, y) + adj.a1(x) + adj.b2(y);
  };
  out.l[kPair21] = [l, adj](const O& x, const O& y) {
    return l.term(kPair21, x, y) + adj.a2(x) + adj.b1(y);
  };
  out.l[kPair22] = [l, adj](const O& x, const O& y) {
    return l.term(kPair22, x, y) + adj.a2(x) + adj.b2(y);
  };
  return out;
}

/// The variance-reducing default: f_2 = -n, f_1 = -n/2, g_1 = n/2, g_2 = 0
/// with n the numeric size of an outcome.
template <class O>
LRAssignment<OutcomeFunc<O>> standard_ns_adjustment(OutcomeFunc<O> size) {
  if (!size) throw std::invalid_argument("standard_ns_adjustment: size function not set");
  LRAssignment<OutcomeFunc<O>> adj;
  adj.a1 = [size](const O& o) { return -0.5 * size(o); };
  adj.a2 = [size](const O& o) { return -size(o); };
  adj.b1 = [size](const O& o) { return 0.5 * size(o); };
  adj.b2 = [size](const O& o) { return 0.0; };
  return adj;
}

/// Applies a scalar map v -> g(pair, v) on top of each cost term.
template <class O>
CHFunction<O> transform_ch(const CHFunction<O>& l,
                           std::function<double(int, double)> g) {
  if (!g) throw std::invalid_argument("transform_ch: map not set");
  CHFunction<O> out;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    out.l[idx] = [l, g, idx](const O& o1, const O& o2) {
      return g(idx, l.term(idx, o1, o2));
    };
  }
  return out;
}

template <class O>
struct LROracleResult {
  double value = std::numeric_limits<double>::infinity();
  LRAssignment<O> best;
};

/// CH sum of one deterministic strategy.
template <class O>
double ch_value_of_strategy(const CHFunction<O>& l, const LRAssignment<O>& s) {
  return l.term(kPair21, s.a2, s.b1) + l.term(kPair11, s.b1, s.a1) +
         l.term(kPair12, s.a1, s.b2) - l.term(kPair22, s.a2, s.b2);
}

/// Minimum CH sum over all deterministic strategies built from `outcomes`.
/// Mixtures cannot go lower, so a nonnegative result certifies the bound on
/// the whole local polytope spanned by these outcomes.
template <class O>
LROracleResult<O> lr_oracle(const CHFunction<O>& l,
                            const std::vector<O>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("lr_oracle: no outcomes");
  LROracleResult<O> res;
  for (const O& a1 : outcomes) {
    for (const O& a2 : outcomes) {
      for (const O& b1 : outcomes) {
        for (const O& b2 : outcomes) {
          const LRAssignment<O> s{a1, a2, b1, b2};
          const double v = ch_value_of_strategy(l, s);
          if (v < res.value) {
            res.value = v;
            res.best = s;
          }
        }
      }
    }
  }
  return res;
}

/// Cost functions from a timetag distance: l_ab(r, t) aligns r against t with
/// the tuple's ab component, gap-split at the tuple's unit radius.
CHFunction<TimetagSequence> ch_from_tuple_distance(const FunctionTuple& f);

/// Binary-outcome cost functions l_ab(x, y) = max(x - y, 0); with ideal
/// statistics this is the classic two-detector inequality.
CHFunction<int> binary_max_diff_ch();

/// Tag-count size functions for the standard adjustment.
OutcomeFunc<TimetagSequence> timetag_count();
OutcomeFunc<int> binary_count();

/// Every sorted sequence of length <= max_len over the given grid values.
std::vector<TimetagSequence> enumerate_sequences(const std::vector<double>& grid,
                                                 std::size_t max_len);

}  // namespace ttbell
