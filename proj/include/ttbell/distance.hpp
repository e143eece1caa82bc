#pragma once
// Timetag distance between a reference sequence r and a comparison sequence t:
// the cheapest way to explain t from r where deleting an entry of r costs 1,
// deleting an entry of t costs nothing, and matching r_k with t_l costs
// f(t_l - r_k).  Matchings are monotone (no crossings), which the alignment
// recurrence enforces by construction.

#include <cstddef>
#include <utility>
#include <vector>

#include "ttbell/core.hpp"
#include "ttbell/tuples.hpp"

namespace ttbell {

struct Matching {
  // (index into r, index into t), strictly increasing in both coordinates.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct DistanceResult {
  double cost = 0.0;
  Matching matching;
};

/// Cost of a given matching: one per unmatched r entry plus the per-pair
/// penalties f_ab(t_j - r_i).  Throws if the matching is out of range or not
/// monotone.
double matching_cost(const FunctionTuple& f, int pair_index, const Matching& m,
                     const TimetagSequence& r, const TimetagSequence& t);

/// Full alignment: minimal cost and one optimal matching (on cost ties the
/// backtrack prefers match, then deleting from t, then deleting from r).
DistanceResult min_cost(const FunctionTuple& f, int pair_index,
                        const TimetagSequence& r, const TimetagSequence& t);

/// Cost only, two-row memory.
double min_cost_value(const FunctionTuple& f, int pair_index,
                      const TimetagSequence& r, const TimetagSequence& t);

struct GapSegment {
  TimetagSequence r, t;
};

/// Cuts both sequences wherever the merged timeline has a gap wider than u.
/// When f_ab >= 1 outside [-u, u] for all ab, no optimal matching needs to
/// cross such a gap, so the distance decomposes over the segments.
std::vector<GapSegment> split_at_gaps(const TimetagSequence& r,
                                      const TimetagSequence& t, double u);

/// Distance computed segment by segment after gap splitting; equals
/// min_cost_value when u >= the tuple's unit radius.
double min_cost_value_split(const FunctionTuple& f, int pair_index,
                            const TimetagSequence& r, const TimetagSequence& t,
                            double u);

}  // namespace ttbell
