#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "ttbell/distance.hpp"
#include "ttbell/rng.hpp"

using namespace ttbell;

namespace {
// Independent reference: enumerate every monotone matching recursively.
// Deleting from t is free, so skipped t entries simply advance j.
double oracle_min_cost(const FunctionTuple& f, int ab, const TimetagSequence& r,
                       const TimetagSequence& t, std::size_t i = 0,
                       std::size_t j = 0) {
  if (i == r.size()) return 0.0;
  double best = 1.0 + oracle_min_cost(f, ab, r, t, i + 1, j);
  for (std::size_t jj = j; jj < t.size(); ++jj) {
    best = std::min(best, f.eval(ab, t[jj] - r[i]) +
                              oracle_min_cost(f, ab, r, t, i + 1, jj + 1));
  }
  return best;
}

TimetagSequence random_tags(Rng& rng, std::size_t len, double lo, double hi) {
  TimetagSequence s(len);
  for (auto& x : s) x = rng.uniform(lo, hi);
  std::sort(s.begin(), s.end());
  return s;
}

TimetagSequence poisson_tags(Rng& rng, double rate, double span) {
  TimetagSequence s;
  double t = rng.exponential(rate);
  while (t < span) {
    s.push_back(t);
    t += rng.exponential(rate);
  }
  return s;
}
}  // namespace

TEST_CASE("edge cases pin the boundary conditions") {
  const auto f = make_compression(1.0);
  CHECK(min_cost_value(f, kPair11, {}, {}) == 0.0);
  CHECK(min_cost_value(f, kPair11, {1.0, 2.0, 3.0}, {}) == 3.0);
  CHECK(min_cost_value(f, kPair11, {}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(min_cost_value(f, kPair11, {0.0}, {0.3}) == doctest::Approx(0.3));
  // Matching beats deleting only below the unit penalty.
  CHECK(min_cost_value(f, kPair11, {0.0}, {5.0}) == doctest::Approx(1.0));
}

TEST_CASE("full and row-memory alignments match the brute-force oracle") {
  Rng rng(101);
  const std::vector<FunctionTuple> tuples = {
      make_abs(),
      make_compression(1.0),
      make_linear_edge_window(LinearEdgeWindowParams::symmetric(0.1, 10.0)),
  };
  for (int inst = 0; inst < 1000; ++inst) {
    const auto& f = tuples[inst % tuples.size()];
    const int ab = int(rng.below(4));
    const auto r = random_tags(rng, rng.below(7), 0.0, 3.0);
    const auto t = random_tags(rng, rng.below(7), 0.0, 3.0);
    const double want = oracle_min_cost(f, ab, r, t);
    const DistanceResult full = min_cost(f, ab, r, t);
    CAPTURE(inst);
    CHECK(std::abs(full.cost - want) < 1e-12);
    CHECK(std::abs(min_cost_value(f, ab, r, t) - want) < 1e-12);
    // The returned matching prices out to the reported optimum.
    CHECK(std::abs(matching_cost(f, ab, full.matching, r, t) - full.cost) <
          1e-12);
  }
}

TEST_CASE("tie preference keeps unit-penalty matches in the matching") {
  // f(1.5) = 1 ties with delete-r + delete-t; the backtrack prefers the match.
  const auto f = make_compression(1.0);
  const auto res = min_cost(f, kPair11, {0.0}, {1.5});
  CHECK(res.cost == doctest::Approx(1.0));
  REQUIRE(res.matching.pairs.size() == 1);
  CHECK(res.matching.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
}

TEST_CASE("matching_cost validates its input") {
  const auto f = make_abs();
  Matching bad_range{{{0, 5}}};
  CHECK_THROWS_AS(matching_cost(f, kPair11, bad_range, {0.0}, {1.0}),
                  std::invalid_argument);
  Matching crossing{{{0, 1}, {1, 0}}};
  CHECK_THROWS_AS(
      matching_cost(f, kPair11, crossing, {0.0, 1.0}, {0.0, 1.0}),
      std::invalid_argument);
  CHECK_THROWS_AS(min_cost(f, kPair11, {2.0, 1.0}, {}), std::invalid_argument);
}

TEST_CASE("gap splitting preserves the distance for unit-radius tuples") {
  Rng rng(202);
  const auto comp = make_compression(1.0);
  const auto lew =
      make_linear_edge_window(LinearEdgeWindowParams::symmetric(0.1, 10.0));
  REQUIRE(lew.unit_radius() == doctest::Approx(0.4));
  int multi_segment = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const auto r = poisson_tags(rng, 1.0, 20.0);
    const auto t = poisson_tags(rng, 1.0, 20.0);
    for (const auto* f : {&comp, &lew}) {
      const double u = f->unit_radius();
      const auto segs = split_at_gaps(r, t, u);
      if (segs.size() > 1) ++multi_segment;
      double sum = 0.0;
      for (const auto& s : segs) sum += min_cost_value(*f, kPair22, s.r, s.t);
      const double whole = min_cost_value(*f, kPair22, r, t);
      CAPTURE(inst);
      CHECK(std::abs(sum - whole) < 1e-12);
      CHECK(std::abs(min_cost_value_split(*f, kPair22, r, t, u) - whole) <
            1e-12);
    }
  }
  CHECK(multi_segment > 100);  // the split does real work on these inputs
}

TEST_CASE("split segments partition both sequences in order") {
  const auto segs = split_at_gaps({0.0, 0.1, 5.0}, {0.05, 5.2, 9.0}, 1.0);
  REQUIRE(segs.size() == 3);
  CHECK(segs[0].r == TimetagSequence{0.0, 0.1});
  CHECK(segs[0].t == TimetagSequence{0.05});
  CHECK(segs[1].r == TimetagSequence{5.0});
  CHECK(segs[1].t == TimetagSequence{5.2});
  CHECK(segs[2].r.empty());
  CHECK(segs[2].t == TimetagSequence{9.0});
}
