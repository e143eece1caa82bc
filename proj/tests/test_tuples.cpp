#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "ttbell/rng.hpp"
#include "ttbell/tuples.hpp"

using namespace ttbell;

namespace {
// Random admissible tuple built purely from the closure combinators; the
// by-construction guarantee is what verify_t4 must confirm.
FunctionTuple random_admissible(Rng& rng, int depth) {
  if (depth == 0) {
    switch (rng.below(6)) {
      case 0:
        return make_linear(rng.uniform(-1.0, 1.0));
      case 1:
        return make_constant(ExactConstantTuple::symmetric(rng.uniform(0, 0.5)));
      case 2:
        return make_step();
      case 3:
        return make_abs();
      case 4:
        return make_threshold(ExactConstantTuple::symmetric(rng.uniform(-0.3, 0.3)));
      default:
        return make_half_linear(rng.uniform(0.5, 3.0),
                                ExactConstantTuple::symmetric(rng.uniform(-0.2, 0.2)),
                                ExactConstantTuple::symmetric(rng.uniform(0, 0.2)));
    }
  }
  const auto child = [&] { return random_admissible(rng, depth - 1); };
  for (int attempt = 0; attempt < 32; ++attempt) {
    try {
      switch (rng.below(7)) {
        case 0:
          return tuple_add(child(), child());
        case 1:
          return tuple_scale(child(), rng.uniform(0.1, 3.0));
        case 2:
          return tuple_reflect(child());
        case 3:
          return tuple_max(child(), child());
        case 4:
          return tuple_shift(child(),
                             ExactConstantTuple::symmetric(rng.uniform(-0.2, 0.2)));
        case 5:
          return tuple_clamp(child(), rng.uniform(0.0, 2.0));
        default:
          return tuple_compose(child(), child());
      }
    } catch (const std::invalid_argument&) {
      // Combinator precondition not met by the random children; retry.
    }
  }
  return make_abs();
}
}  // namespace

TEST_CASE("primitive shapes evaluate as defined") {
  const auto lin = make_linear(2.5);
  CHECK(lin.eval(kPair11, 0.4) == doctest::Approx(1.0));
  CHECK(lin.eval(kPair22, -0.4) == doctest::Approx(-1.0));

  const auto con = make_constant({{0.1, 0.2, 0.3, 0.6}});
  CHECK(con.eval(kPair11, 99.0) == doctest::Approx(0.1));
  CHECK(con.eval(kPair22, -99.0) == doctest::Approx(0.6));

  const auto st = make_step();
  CHECK(st.eval(kPair12, -1e-9) == 0.0);
  CHECK(st.eval(kPair12, 0.0) == 1.0);

  const auto ab = make_abs();
  CHECK(ab.eval(kPair21, -2.0) == doctest::Approx(2.0));

  const auto th = make_threshold({{0.1, 0.2, 0.3, 0.6}});
  CHECK(th.eval(kPair21, 0.29) == 0.0);
  CHECK(th.eval(kPair21, 0.31) == 1.0);

  const auto hl = make_half_linear(2.0, ExactConstantTuple::symmetric(0.5),
                                   ExactConstantTuple::symmetric(0.1));
  // max(2 (x - 0.5), 0.1): floor up to x = 0.55, linear after.
  CHECK(hl.eval(kPair11, 0.0) == doctest::Approx(0.1));
  CHECK(hl.eval(kPair11, 1.0) == doctest::Approx(1.0));
  CHECK(hl.eval(kPair22, 2.0) == doctest::Approx(2.0 * (2.0 - 1.5)));
}

TEST_CASE("linear edge window has a flat dead zone and clipped edges") {
  const auto w = make_linear_edge_window(LinearEdgeWindowParams::symmetric(0.1, 10.0));
  // Dead zone [-0.1, 0.1] at non-22, [-0.3, 0.3] at 22.
  CHECK(w.eval(kPair11, 0.0) == 0.0);
  CHECK(w.eval(kPair11, 0.1) == 0.0);
  CHECK(w.eval(kPair11, 0.15) == doctest::Approx(0.5));
  CHECK(w.eval(kPair11, 0.2) == doctest::Approx(1.0));
  CHECK(w.eval(kPair11, 5.0) == doctest::Approx(1.0));
  CHECK(w.eval(kPair11, -0.15) == doctest::Approx(0.5));
  CHECK(w.eval(kPair22, 0.25) == 0.0);
  CHECK(w.eval(kPair22, 0.35) == doctest::Approx(0.5));
  CHECK(w.unit_radius() == doctest::Approx(0.4));

  LinearEdgeWindowParams bad = LinearEdgeWindowParams::symmetric(0.1, 10.0);
  bad.t_l[kPair11] = 0.2;  // crosses t_h and breaks exactness
  CHECK_THROWS_AS(make_linear_edge_window(bad), std::invalid_argument);
  LinearEdgeWindowParams neg = LinearEdgeWindowParams::symmetric(0.1, 10.0);
  neg.m_h = 0.0;
  CHECK_THROWS_AS(make_linear_edge_window(neg), std::invalid_argument);
}

TEST_CASE("hard window construction enforces the width inequality") {
  const auto ok = make_hard_window({{0.1, 0.1, 0.1, 0.3}});
  CHECK(ok.eval(kPair11, 0.05) == 0.0);
  CHECK(ok.eval(kPair11, 0.15) == 1.0);
  CHECK(ok.eval(kPair22, 0.25) == 0.0);
  CHECK(ok.unit_radius() == doctest::Approx(0.3));

  CHECK_THROWS_AS(make_hard_window({{0.1, 0.1, 0.1, 0.1}}),
                  std::invalid_argument);
  const auto equal = make_hard_window_unchecked({{0.1, 0.1, 0.1, 0.1}});
  CHECK(equal.eval(kPair22, 0.2) == 1.0);
}

TEST_CASE("combinators evaluate pointwise") {
  const auto a = make_abs();
  const auto c = make_constant(ExactConstantTuple::symmetric(0.25));

  CHECK(tuple_add(a, c).eval(kPair11, -1.0) == doctest::Approx(1.25));
  CHECK(tuple_scale(a, 3.0).eval(kPair12, 2.0) == doctest::Approx(6.0));
  CHECK(tuple_reflect(make_step()).eval(kPair11, -1.0) == 1.0);
  CHECK(tuple_reflect(make_step()).eval(kPair11, 1.0) == 0.0);
  CHECK(tuple_max(a, c).eval(kPair11, 0.1) == doctest::Approx(0.25));
  CHECK(tuple_shift(a, ExactConstantTuple::symmetric(0.5)).eval(kPair11, 0.0) ==
        doctest::Approx(0.5));
  CHECK(tuple_clamp(a, 1.5).eval(kPair11, 7.0) == doctest::Approx(1.5));
  // Compose: outer half-linear applied to |x|.
  const auto outer = make_half_linear(1.0, ExactConstantTuple::symmetric(0.0),
                                      ExactConstantTuple::symmetric(0.0));
  CHECK(tuple_compose(outer, a).eval(kPair22, -2.0) == doctest::Approx(2.0));

  CHECK_THROWS_AS(tuple_scale(a, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tuple_scale(a, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(tuple_clamp(make_linear(1.0), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(tuple_compose(make_abs(), a), std::invalid_argument);
  CHECK_THROWS_AS(make_constant({{0.1, 0.1, 0.1, 0.5}}), std::invalid_argument);
}

TEST_CASE("compression tuple shape and radius") {
  const auto f = make_compression(2.0);
  CHECK(f.eval(kPair11, 0.25) == doctest::Approx(0.5));
  CHECK(f.eval(kPair11, -3.0) == doctest::Approx(1.0));
  CHECK(f.unit_radius() == doctest::Approx(0.5));
  CHECK(f.nonnegative());
}

TEST_CASE("traits are conservative but correct on basics") {
  CHECK(make_abs().nonnegative());
  CHECK(!make_abs().monotone_nondecreasing_22());
  CHECK(make_step().monotone_nondecreasing_22());
  CHECK(!make_linear(-1.0).monotone_nondecreasing_22());
  CHECK(make_linear(1.0).monotone_nondecreasing_22());
  CHECK(!make_linear(1.0).nonnegative());
  CHECK(make_half_linear(1.0, ExactConstantTuple::symmetric(0.0),
                         ExactConstantTuple::symmetric(0.0))
            .monotone_nondecreasing_22());
  // Shift widens the known radius by the largest offset.
  const auto shifted = tuple_shift(make_compression(1.0),
                                   ExactConstantTuple::symmetric(0.1));
  CHECK(shifted.unit_radius() == doctest::Approx(1.0 + 0.3));
  CHECK(std::isinf(make_step().unit_radius()));
}

TEST_CASE("breakpoints track shifts and reflections") {
  const auto w = make_linear_edge_window(LinearEdgeWindowParams::symmetric(0.1, 10.0));
  const auto b11 = w.breakpoints(kPair11);
  REQUIRE(b11.size() == 4);
  CHECK(b11[0] == doctest::Approx(-0.2));
  CHECK(b11[1] == doctest::Approx(-0.1));
  CHECK(b11[2] == doctest::Approx(0.1));
  CHECK(b11[3] == doctest::Approx(0.2));

  const auto r = tuple_reflect(make_threshold(ExactConstantTuple::symmetric(0.25)));
  CHECK(r.breakpoints(kPair11)[0] == doctest::Approx(-0.25));
  const auto s = tuple_shift(make_step(), ExactConstantTuple::symmetric(0.5));
  CHECK(s.breakpoints(kPair11)[0] == doctest::Approx(-0.5));
}

TEST_CASE("verify_t4 passes primitives and a random combinator zoo") {
  Rng rng(2024);
  std::vector<FunctionTuple> zoo = {
      make_linear(0.7),
      make_linear(-0.3),
      make_constant(ExactConstantTuple::symmetric(0.2)),
      make_step(),
      make_abs(),
      make_threshold({{0.1, -0.1, 0.2, 0.2}}),
      make_half_linear(2.0, ExactConstantTuple::symmetric(0.1),
                       ExactConstantTuple::symmetric(0.05)),
      make_linear_edge_window(LinearEdgeWindowParams::symmetric(0.1, 10.0)),
      make_hard_window({{0.05, 0.1, 0.15, 0.3}}),
      make_compression(1.0),
  };
  for (int i = 0; i < 40; ++i) zoo.push_back(random_admissible(rng, 3));

  for (std::size_t i = 0; i < zoo.size(); ++i) {
    CAPTURE(i);
    const auto res = verify_t4(zoo[i], -1.0, 1.0, 3000, 99 + i);
    CAPTURE(res.x);
    CAPTURE(res.y);
    CAPTURE(res.z);
    CHECK(res.pass);
  }
}

TEST_CASE("verify_t4 rejects the equal-width hard window") {
  const auto equal = make_hard_window_unchecked({{0.1, 0.1, 0.1, 0.1}});
  const auto res = verify_t4(equal, -1.0, 1.0, 20000, 5);
  REQUIRE(!res.pass);
  // The returned triple is a genuine counterexample.
  CHECK(std::abs(res.x) <= 0.1 + 1e-9);
  CHECK(std::abs(res.y) <= 0.1 + 1e-9);
  CHECK(std::abs(res.z) <= 0.1 + 1e-9);
  CHECK(std::abs(res.x + res.y + res.z) > 0.1);
  CHECK(res.violation == doctest::Approx(1.0));

  // The textbook counterexample by hand: all inside, sum outside.
  CHECK(equal.eval(kPair22, 0.24) == 1.0);
  CHECK(equal.eval(kPair21, 0.08) + equal.eval(kPair11, 0.08) +
            equal.eval(kPair12, 0.08) ==
        0.0);
}

TEST_CASE("json serialization round-trips evaluation") {
  Rng rng(31);
  for (int i = 0; i < 10; ++i) {
    const auto f = random_admissible(rng, 3);
    const std::string text = f.to_json_string();
    const auto g = FunctionTuple::from_json_string(text);
    for (int ab = 0; ab < kNumSettingsPairs; ++ab) {
      for (double x = -2.0; x <= 2.0; x += 0.0625) {
        CHECK(f.eval(ab, x) == g.eval(ab, x));
      }
    }
    CHECK(g.to_json_string() == text);
  }
  // Unchecked windows stay unchecked through serialization.
  const auto equal = make_hard_window_unchecked({{0.1, 0.1, 0.1, 0.1}});
  const auto back = FunctionTuple::from_json_string(equal.to_json_string());
  CHECK(back.eval(kPair22, 0.2) == 1.0);

  CHECK_THROWS_AS(FunctionTuple::from_json_string("{\"kind\":\"nope\"}"),
                  std::runtime_error);
  CHECK_THROWS_AS(FunctionTuple::from_json_string("[1,2]"), std::runtime_error);
}
