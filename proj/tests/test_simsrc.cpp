#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "ttbell/simsrc.hpp"
#include "ttbell/stats.hpp"

using namespace ttbell;

namespace {
// Reference detection model straight from the state vector: psi lives in the
// |00>,|01>,|10>,|11> basis and click projectors are rank one per party.
struct StateOracle {
  double theta;

  std::array<double, 4> psi() const {
    return {std::cos(theta), 0.0, 0.0, std::sin(theta)};
  }
  static std::array<double, 2> dir(double angle) {
    return {std::cos(angle), std::sin(angle)};
  }
  double p_ab(double alpha, double beta) const {
    const auto s = psi();
    const auto va = dir(alpha), vb = dir(beta);
    double dot = 0.0;
    for (int ia = 0; ia < 2; ++ia)
      for (int ib = 0; ib < 2; ++ib) dot += s[ia * 2 + ib] * va[ia] * vb[ib];
    return dot * dot;
  }
  double p_a(double alpha) const {
    const auto s = psi();
    const auto va = dir(alpha);
    // Apply |v><v| (x) I, then take the squared norm.
    std::array<double, 4> out{};
    for (int ia = 0; ia < 2; ++ia)
      for (int ib = 0; ib < 2; ++ib)
        for (int ja = 0; ja < 2; ++ja)
          out[ia * 2 + ib] += va[ia] * va[ja] * s[ja * 2 + ib];
    double norm = 0.0;
    for (double v : out) norm += v * v;
    return norm;
  }
  double p_b(double beta) const {
    const auto s = psi();
    const auto vb = dir(beta);
    std::array<double, 4> out{};
    for (int ia = 0; ia < 2; ++ia)
      for (int ib = 0; ib < 2; ++ib)
        for (int jb = 0; jb < 2; ++jb)
          out[ia * 2 + ib] += vb[ib] * vb[jb] * s[ia * 2 + jb];
    double norm = 0.0;
    for (double v : out) norm += v * v;
    return norm;
  }
};
}  // namespace

TEST_CASE("click probabilities agree with the state-vector oracle") {
  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const double theta = rng.uniform(0.0, M_PI / 2.0);
    const LRAssignment<double> ang{rng.uniform(0.0, M_PI), rng.uniform(0.0, M_PI),
                                   rng.uniform(0.0, M_PI), rng.uniform(0.0, M_PI)};
    const double eta = rng.uniform(0.3, 1.0);
    const auto probs = outcome_probabilities(theta, ang, eta);
    const StateOracle oracle{theta};
    for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
      const SettingsPair ab = SettingsPair::from_index(idx);
      const double pab = oracle.p_ab(ang.a(ab.a), ang.b(ab.b));
      const double pa = oracle.p_a(ang.a(ab.a));
      const double pb = oracle.p_b(ang.b(ab.b));
      CHECK(probs.prob(idx, 1, 1) == doctest::Approx(eta * eta * pab).epsilon(1e-12));
      CHECK(probs.prob(idx, 1, 0) ==
            doctest::Approx(eta * pa - eta * eta * pab).epsilon(1e-11));
      CHECK(probs.prob(idx, 0, 1) ==
            doctest::Approx(eta * pb - eta * eta * pab).epsilon(1e-11));
      double sum = 0.0;
      for (int c = 0; c < 4; ++c) {
        CHECK(probs.p[idx][c] >= 0.0);
        sum += probs.p[idx][c];
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("click marginals do not signal") {
  const LRAssignment<double> ang{0.3, 1.1, 0.7, 1.9};
  const auto probs = outcome_probabilities(0.6, ang, 0.85);
  for (Setting a : {Setting::S1, Setting::S2}) {
    const int with_b1 = SettingsPair{a, Setting::S1}.index();
    const int with_b2 = SettingsPair{a, Setting::S2}.index();
    const double m1 = probs.p[with_b1][2] + probs.p[with_b1][3];
    const double m2 = probs.p[with_b2][2] + probs.p[with_b2][3];
    CHECK(m1 == doctest::Approx(m2).epsilon(1e-14));
    CHECK(probs.marginal_a(a) == doctest::Approx(m1));
  }
  for (Setting b : {Setting::S1, Setting::S2}) {
    const int with_a1 = SettingsPair{Setting::S1, b}.index();
    const int with_a2 = SettingsPair{Setting::S2, b}.index();
    const double m1 = probs.p[with_a1][1] + probs.p[with_a1][3];
    const double m2 = probs.p[with_a2][1] + probs.p[with_a2][3];
    CHECK(m1 == doctest::Approx(m2).epsilon(1e-14));
    CHECK(probs.marginal_b(b) == doctest::Approx(m1));
  }
}

TEST_CASE("source optimization recovers the ideal and lossy optima") {
  const SourceOptimum ideal = optimize_source(1.0);
  CHECK(ideal.chsh == doctest::Approx(-2.0 * std::sqrt(2.0)).epsilon(1e-5));

  const SourceOptimum lossy = optimize_source(0.8);
  CHECK(lossy.chsh < -2.001);      // still violates below unit efficiency
  CHECK(lossy.chsh > -2.0 * std::sqrt(2.0));
  // Lossy optimum prefers a less entangled state.
  CHECK(std::min(std::abs(lossy.theta), std::abs(M_PI / 2 - lossy.theta)) <
        std::min(std::abs(ideal.theta), std::abs(M_PI / 2 - ideal.theta)));
}

TEST_CASE("jitter models: medians, sampling ranges, parsing") {
  CHECK(JitterModel::none().median() == 0.0);
  CHECK(JitterModel::uniform(0.1).median() == doctest::Approx(0.05));
  CHECK(JitterModel::exponential(34.657).median() ==
        doctest::Approx(0.02).epsilon(1e-3));

  Rng rng(5);
  const auto u = JitterModel::uniform(0.1);
  const auto e = JitterModel::exponential(10.0);
  RunningStats se;
  for (int i = 0; i < 20000; ++i) {
    const double x = u.sample(rng);
    CHECK(x >= 0.0);
    CHECK(x < 0.1);
    se.add(e.sample(rng));
  }
  CHECK(se.mean == doctest::Approx(0.1).epsilon(0.03));

  CHECK(parse_jitter("none").kind == JitterModel::Kind::None);
  const auto pu = parse_jitter("uniform:0.02");
  CHECK(pu.kind == JitterModel::Kind::Uniform);
  CHECK(pu.param == doctest::Approx(0.02));
  const auto pe = parse_jitter("exp:34.7");
  CHECK(pe.kind == JitterModel::Kind::Exponential);
  CHECK(pe.param == doctest::Approx(34.7));
  CHECK(parse_jitter(format_jitter(pu)).param == doctest::Approx(pu.param));
  CHECK_THROWS_AS(parse_jitter("gauss:0.1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_jitter("uniform:abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_jitter("uniform:-1"), std::invalid_argument);
}

TEST_CASE("quantum trials have the right tag rates and stay in the window") {
  SourceConfig cfg;
  cfg.theta = 0.5;
  cfg.angles = {0.1, 0.9, 0.4, 1.2};
  cfg.efficiency = 0.8;
  cfg.window = 50.0;
  cfg.jitter_a = JitterModel::uniform(0.05);
  cfg.jitter_b = JitterModel::exponential(40.0);

  const auto probs = outcome_probabilities(cfg.theta, cfg.angles, cfg.efficiency);
  Rng rng(808);
  RunningStats count_a, count_b;
  for (int i = 0; i < 200; ++i) {
    const auto trial = generate_quantum_trial(cfg, {Setting::S2, Setting::S1}, i, rng);
    CHECK(is_sorted_sequence(trial.outcome_a));
    CHECK(is_sorted_sequence(trial.outcome_b));
    for (double t : trial.outcome_a) {
      CHECK(t >= 0.0);
      CHECK(t < cfg.window);
    }
    count_a.add(double(trial.outcome_a.size()));
    count_b.add(double(trial.outcome_b.size()));
  }
  CHECK(count_a.mean ==
        doctest::Approx(cfg.window * probs.marginal_a(Setting::S2)).epsilon(0.05));
  CHECK(count_b.mean ==
        doctest::Approx(cfg.window * probs.marginal_b(Setting::S1)).epsilon(0.05));

  // Same seed, same trial.
  Rng r1(9), r2(9);
  const auto t1 = generate_quantum_trial(cfg, {Setting::S1, Setting::S1}, 0, r1);
  const auto t2 = generate_quantum_trial(cfg, {Setting::S1, Setting::S1}, 0, r2);
  CHECK(t1.outcome_a == t2.outcome_a);
  CHECK(t1.outcome_b == t2.outcome_b);
}

TEST_CASE("delta-shift toy shifts tags by setting") {
  DeltaShiftConfig cfg;
  cfg.window = 40.0;
  cfg.delta = 0.1;
  Rng rng(33);

  const auto same = generate_delta_shift_trial(cfg, {Setting::S1, Setting::S1}, 0, rng);
  CHECK(same.outcome_a == same.outcome_b);
  CHECK(!same.outcome_a.empty());

  const auto shifted = generate_delta_shift_trial(cfg, {Setting::S2, Setting::S2}, 1, rng);
  // Away from the window edges the two sequences are the emission times
  // shifted by +delta and -delta.
  const double lo = 2 * cfg.delta, hi = cfg.window - 2 * cfg.delta;
  TimetagSequence ea, eb;
  for (double a : shifted.outcome_a) {
    const double s = a - cfg.delta;
    if (s >= lo && s < hi) ea.push_back(s);
  }
  for (double b : shifted.outcome_b) {
    const double s = b + cfg.delta;
    if (s >= lo && s < hi) eb.push_back(s);
  }
  REQUIRE(ea.size() == eb.size());
  CHECK(!ea.empty());
  for (std::size_t i = 0; i < ea.size(); ++i)
    CHECK(ea[i] == doctest::Approx(eb[i]).epsilon(1e-12));
}
