#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>

#include "ttbell/bell.hpp"

using namespace ttbell;

namespace {
// Binary no-signaling statistics: per settings pair a joint table with common
// marginals across the other party's setting choice.
struct BinaryNS {
  std::array<double, 2> pa;  // P(o^A = 1 | a), index a-1
  std::array<double, 2> pb;
  std::array<double, 4> p11;  // P(1,1 | ab) by pair index

  double joint(int idx, int x, int y) const {
    const SettingsPair ab = SettingsPair::from_index(idx);
    const double ma = pa[setting_value(ab.a) - 1];
    const double mb = pb[setting_value(ab.b) - 1];
    const double both = p11[idx];
    if (x == 1 && y == 1) return both;
    if (x == 1) return ma - both;
    if (y == 1) return mb - both;
    return 1.0 - ma - mb + both;
  }
};

double ch_expectation(const CHFunction<int>& l, const BinaryNS& ns) {
  double total = 0.0;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const double sign = idx == kPair22 ? -1.0 : 1.0;
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        const double v =
            idx == kPair11 ? l.term(idx, y, x) : l.term(idx, x, y);
        total += sign * ns.joint(idx, x, y) * v;
      }
    }
  }
  return total;
}

double bell_expectation(const BellFunction<int>& bf, const BinaryNS& ns) {
  double total = 0.0;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const SettingsPair ab = SettingsPair::from_index(idx);
    const double p = settings_prob(bf.dist, ab);
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        total += p * ns.joint(idx, x, y) * bf(x, ab.a, y, ab.b);
      }
    }
  }
  return total;
}

const BinaryNS kExampleNS{{0.3, 0.6}, {0.4, 0.7}, {0.1, 0.25, 0.2, 0.45}};
}  // namespace

TEST_CASE("deterministic strategies price out by hand") {
  const auto l = binary_max_diff_ch();
  CHECK(ch_value_of_strategy(l, LRAssignment<int>{1, 1, 1, 1}) == 0.0);
  CHECK(ch_value_of_strategy(l, LRAssignment<int>{0, 0, 0, 0}) == 0.0);
  // a = (1,1), b = (0,0): 21 and 12 cost one each, 22 refunds one.
  CHECK(ch_value_of_strategy(l, LRAssignment<int>{1, 1, 0, 0}) == 1.0);
  // a = (0,1), b = (1,0): the 11 payment is refunded by the 22 term.
  CHECK(ch_value_of_strategy(l, LRAssignment<int>{0, 1, 1, 0}) == 0.0);
  // a = (0,0), b = (1,1): only the 11 term pays.
  CHECK(ch_value_of_strategy(l, LRAssignment<int>{0, 0, 1, 1}) == 1.0);
}

TEST_CASE("binary cost functions satisfy the local bound with equality") {
  const auto res = lr_oracle(binary_max_diff_ch(), std::vector<int>{0, 1});
  CHECK(res.value == doctest::Approx(0.0));
  CHECK(res.value >= -1e-12);
}

TEST_CASE("bell_value scales by settings probability and flips 22") {
  const auto l = binary_max_diff_ch();
  const auto dist = SettingsDistribution::uniform();
  CHECK(bell_value(l, dist, 1, Setting::S2, 0, Setting::S2) ==
        doctest::Approx(-4.0));
  CHECK(bell_value(l, dist, 1, Setting::S2, 0, Setting::S1) ==
        doctest::Approx(4.0));
  // 11 swaps arguments: oa = 0, ob = 1 pays max(1 - 0, 0).
  CHECK(bell_value(l, dist, 0, Setting::S1, 1, Setting::S1) ==
        doctest::Approx(4.0));
  CHECK(bell_value(l, dist, 1, Setting::S1, 0, Setting::S1) ==
        doctest::Approx(0.0));

  SettingsDistribution skew;
  skew.p = {0.1, 0.2, 0.3, 0.4};
  CHECK(bell_value(l, skew, 1, Setting::S2, 0, Setting::S2) ==
        doctest::Approx(-1.0 / 0.4));
}

TEST_CASE("bell function round-trips to the same cost functions") {
  const auto l = binary_max_diff_ch();
  SettingsDistribution skew;
  skew.p = {0.1, 0.2, 0.3, 0.4};
  const auto bf = make_bell_function(l, skew);
  const auto back = bell_to_ch(bf);
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        CHECK(back.term(idx, x, y) == l.term(idx, x, y));
      }
    }
  }
  // And the bell values of the recovered functions are identical too.
  const auto bf2 = make_bell_function(back, skew);
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const SettingsPair ab = SettingsPair::from_index(idx);
    for (int x = 0; x < 2; ++x) {
      for (int y = 0; y < 2; ++y) {
        CHECK(bf2(x, ab.a, y, ab.b) == bf(x, ab.a, y, ab.b));
      }
    }
  }
}

TEST_CASE("ns adjustment cancels exactly for no-signaling statistics") {
  const auto l = binary_max_diff_ch();
  const auto adj = standard_ns_adjustment<int>(binary_count());
  const auto la = apply_ns_adjustment(l, adj);

  const double before = ch_expectation(l, kExampleNS);
  const double after = ch_expectation(la, kExampleNS);
  CHECK(std::abs(before - after) < 1e-12);

  // Per-trial values do move; only the expectation is pinned.
  CHECK(la.term(kPair22, 1, 0) != l.term(kPair22, 1, 0));

  // The bell-value expectation matches the CH sum under uniform settings.
  const auto bf = make_bell_function(la, SettingsDistribution::uniform());
  CHECK(bell_expectation(bf, kExampleNS) == doctest::Approx(before));
}

TEST_CASE("adjustment leaves every deterministic strategy unchanged") {
  const auto l = binary_max_diff_ch();
  const auto la =
      apply_ns_adjustment(l, standard_ns_adjustment<int>(binary_count()));
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2)
      for (int b1 = 0; b1 < 2; ++b1)
        for (int b2 = 0; b2 < 2; ++b2) {
          const LRAssignment<int> s{a1, a2, b1, b2};
          CHECK(std::abs(ch_value_of_strategy(la, s) -
                         ch_value_of_strategy(l, s)) < 1e-12);
        }
}

TEST_CASE("sequence enumeration covers sorted multisets") {
  const auto seqs = enumerate_sequences({0.0, 0.5, 1.0}, 2);
  CHECK(seqs.size() == 10);  // empty + 3 singles + 6 sorted pairs
  for (const auto& s : seqs) CHECK(is_sorted_sequence(s));
}

TEST_CASE("tuple-distance cost functions respect argument roles") {
  const auto ch = ch_from_tuple_distance(make_compression(1.0));
  CHECK(ch.term(kPair11, TimetagSequence{0.0}, TimetagSequence{}) == 1.0);
  CHECK(ch.term(kPair11, TimetagSequence{}, TimetagSequence{0.0}) == 0.0);
  CHECK(ch.term(kPair22, TimetagSequence{0.0}, TimetagSequence{0.25}) ==
        doctest::Approx(0.25));
}

TEST_CASE("timetag cost functions satisfy the local bound on a small grid") {
  const auto outcomes = enumerate_sequences({0.0, 0.5, 1.0}, 2);
  const auto base = ch_from_tuple_distance(make_compression(1.0));
  CHECK(lr_oracle(base, outcomes).value >= -1e-9);

  const auto adjusted = apply_ns_adjustment(
      base, standard_ns_adjustment<TimetagSequence>(timetag_count()));
  const auto r1 = lr_oracle(base, outcomes);
  const auto r2 = lr_oracle(adjusted, outcomes);
  CHECK(r2.value >= -1e-9);
  CHECK(r1.value == doctest::Approx(r2.value));

  const auto window = ch_from_tuple_distance(
      make_linear_edge_window(LinearEdgeWindowParams::symmetric(0.1, 10.0)));
  CHECK(lr_oracle(window, outcomes).value >= -1e-9);
}

TEST_CASE("transform_ch applies a per-pair scalar map") {
  const auto l = binary_max_diff_ch();
  const auto doubled = transform_ch<int>(
      l, [](int idx, double v) { return idx == kPair22 ? v : 2.0 * v; });
  CHECK(doubled.term(kPair21, 1, 0) == 2.0);
  CHECK(doubled.term(kPair22, 1, 0) == 1.0);
}
