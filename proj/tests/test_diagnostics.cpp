#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ttbell/bell.hpp"
#include "ttbell/diagnostics.hpp"
#include "ttbell/rng.hpp"
#include "ttbell/simsrc.hpp"

using namespace ttbell;

namespace {
// Brute-force maximum-cardinality matching with |t_j - r_i| <= w.  Because
// window compatibility is an interval condition, crossings can always be
// removed, so the plain alignment recursion is exact.
std::size_t max_matching_oracle(const TimetagSequence& r,
                                const TimetagSequence& t, double w,
                                std::size_t i = 0, std::size_t j = 0) {
  if (i == r.size() || j == t.size()) return 0;
  std::size_t best = std::max(max_matching_oracle(r, t, w, i + 1, j),
                              max_matching_oracle(r, t, w, i, j + 1));
  if (std::abs(t[j] - r[i]) <= w)
    best = std::max(best, 1 + max_matching_oracle(r, t, w, i + 1, j + 1));
  return best;
}

TimetagSequence random_seq(Rng& rng, int max_len) {
  TimetagSequence s(std::size_t(rng.below(std::uint64_t(max_len) + 1)));
  for (double& x : s) x = rng.uniform(0.0, 3.0);
  std::sort(s.begin(), s.end());
  return s;
}

std::vector<TrialRecord> delta_trials(double delta, int n, double window,
                                      std::uint64_t seed) {
  DeltaShiftConfig cfg;
  cfg.window = window;
  cfg.delta = delta;
  Rng rng(seed);
  std::vector<TrialRecord> trials;
  for (int i = 0; i < n; ++i) {
    const SettingsPair ab = SettingsPair::from_index(int(rng.below(4)));
    trials.push_back(generate_delta_shift_trial(cfg, ab, std::uint64_t(i), rng));
  }
  return trials;
}
}  // namespace

TEST_CASE("coincidence counting: basic windows and the one-to-one rule") {
  CHECK(count_coincidences({1.0}, {1.1}, 0.2).count == 1);
  CHECK(count_coincidences({1.0}, {1.1}, 0.05).count == 0);
  // Two candidates, one partner: at most one coincidence.
  const auto res = count_coincidences({1.0}, {0.95, 1.04}, 0.1);
  CHECK(res.count == 1);
  REQUIRE(res.pairs.size() == 1);
  CHECK(res.pairs[0].first == 0);

  const auto empty = count_coincidences({}, {0.5}, 0.1);
  CHECK(empty.count == 0);
  CHECK_THROWS_AS(count_coincidences({1.0}, {1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("coincidence counting matches brute force on random instances") {
  Rng rng(404);
  for (int rep = 0; rep < 1000; ++rep) {
    const auto r = random_seq(rng, 6);
    const auto t = random_seq(rng, 6);
    const double w = rng.uniform(0.01, 1.0);
    const std::size_t want = max_matching_oracle(r, t, w);
    const auto got = count_coincidences(r, t, w);
    CHECK(got.count == want);
    CHECK(coincidence_count_value(r, t, w) == want);
    // Reported pairs are a valid in-window non-crossing matching.
    for (std::size_t k = 0; k < got.pairs.size(); ++k) {
      const auto [i, j] = got.pairs[k];
      CHECK(std::abs(t[j] - r[i]) <= w);
      if (k > 0) {
        CHECK(got.pairs[k - 1].first < i);
        CHECK(got.pairs[k - 1].second < j);
      }
    }
  }
}

TEST_CASE("single-pair trials reduce to the adjusted two-point CH estimate") {
  const double w = 0.3;
  const SettingsDistribution dist = SettingsDistribution::uniform();
  CHFunction<TimetagSequence> ch =
      ch_from_tuple_distance(make_hard_window_unchecked({w, w, w, w}));
  ch = apply_ns_adjustment(ch, standard_ns_adjustment<TimetagSequence>(timetag_count()));

  Rng rng(11);
  for (int rep = 0; rep < 400; ++rep) {
    TrialRecord trial;
    trial.settings = SettingsPair::from_index(int(rng.below(4)));
    if (rng.below(4) != 0) trial.outcome_a = {rng.uniform(0.0, 2.0)};
    if (rng.below(4) != 0) trial.outcome_b = {rng.uniform(0.0, 2.0)};
    const double via_counts = conventional_trial_value(trial, w, dist);
    const double via_tuple = bell_value(ch, dist, trial.outcome_a,
                                        trial.settings.a, trial.outcome_b,
                                        trial.settings.b);
    CHECK(via_counts == doctest::Approx(via_tuple).epsilon(1e-12));
  }
}

TEST_CASE("delta-shift toy: false violation in the plateau window only") {
  const double delta = 0.1;
  const auto trials = delta_trials(delta, 600, 30.0, 17);
  const SettingsDistribution dist = SettingsDistribution::uniform();

  const auto mid = conventional_analysis(trials, 1.5 * delta, dist);
  CHECK(mid.ch_estimate < 0.0);
  CHECK(mid.snr.snr > 2.0);
  CHECK(!mid.loophole_free);

  // Beyond 2*delta the 22 coincidences cancel the violation exactly.
  const auto wide = conventional_analysis(trials, 3.0 * delta, dist);
  CHECK(std::abs(wide.snr.snr) < 2.0);
  CHECK(wide.ch_estimate > mid.ch_estimate);

  std::ostringstream os;
  write_conventional_csv(os, mid);
  CHECK(os.str().find("loophole_free") != std::string::npos);
  CHECK(os.str().find("no") != std::string::npos);
}

TEST_CASE("window training lands in the toy's optimal plateau") {
  const double delta = 0.1;
  const auto trials = delta_trials(delta, 300, 30.0, 23);
  const SettingsDistribution dist = SettingsDistribution::uniform();
  const double w = optimize_window(trials, dist);
  CHECK(w > delta);
  CHECK(w < 2 * delta);
  CHECK(w == doctest::Approx(1.5 * delta).epsilon(0.2));
  CHECK(optimize_window(trials, dist) == w);  // deterministic
}

TEST_CASE("window training prefers tight windows on jitterless quantum data") {
  const SourceOptimum opt = optimize_source(0.8);
  SourceConfig cfg;
  cfg.theta = opt.theta;
  cfg.angles = opt.angles;
  cfg.efficiency = 0.8;
  cfg.window = 50.0;
  Rng rng(91);
  std::vector<TrialRecord> trials;
  for (int i = 0; i < 400; ++i) {
    const SettingsPair ab = SettingsPair::from_index(int(rng.below(4)));
    trials.push_back(generate_quantum_trial(cfg, ab, std::uint64_t(i), rng));
  }
  const double w = optimize_window(trials, SettingsDistribution::uniform());
  CHECK(w <= 0.02);
}

TEST_CASE("correlation estimate: formula basics and autocorrelation symmetry") {
  TrialRecord one;
  one.settings = {Setting::S1, Setting::S1};
  one.outcome_a = {0.5};
  one.outcome_b = {0.5};
  const CorrelationSelector cross{CorrelationSelector::Kind::Cross, Setting::S1,
                                  Setting::S1};
  auto est = correlation_estimate({one}, cross, 1.0, 3, 10.0);
  REQUIRE(est.lags.size() == 7);
  for (std::size_t k = 0; k < est.lags.size(); ++k)
    CHECK(est.mean[k] == (est.lags[k] == 0 ? 1.0 : 0.0));

  one.outcome_b = {1.5};
  est = correlation_estimate({one}, cross, 1.0, 3, 10.0);
  for (std::size_t k = 0; k < est.lags.size(); ++k)
    CHECK(est.mean[k] == (est.lags[k] == 1 ? 1.0 : 0.0));

  // Cross of a sequence with itself is symmetric; the auto panel reports the
  // d >= 0 half of the same values.
  TrialRecord self;
  self.settings = {Setting::S1, Setting::S1};
  self.outcome_a = {0.2, 0.7, 1.3, 4.4, 4.6};
  self.outcome_b = self.outcome_a;
  const auto sym = correlation_estimate({self}, cross, 0.5, 5, 10.0);
  const auto acf = correlation_estimate(
      {self}, {CorrelationSelector::Kind::AutoA, Setting::S1, Setting::S1}, 0.5,
      5, 10.0);
  CHECK(acf.lags.front() == 0);
  for (std::size_t k = 0; k < sym.lags.size(); ++k) {
    const int d = sym.lags[k];
    const auto mirror = std::find(sym.lags.begin(), sym.lags.end(), -d);
    REQUIRE(mirror != sym.lags.end());
    CHECK(sym.mean[k] ==
          sym.mean[std::size_t(mirror - sym.lags.begin())]);
    if (d >= 0) CHECK(acf.mean[std::size_t(d)] == sym.mean[k]);
  }
}

TEST_CASE("cross correlation of jittered quantum data peaks at lag zero") {
  const double ju = 0.04;
  const SourceOptimum opt = optimize_source(0.8);
  SourceConfig cfg;
  cfg.theta = opt.theta;
  cfg.angles = opt.angles;
  cfg.efficiency = 0.8;
  cfg.window = 50.0;
  cfg.jitter_a = JitterModel::uniform(ju);
  cfg.jitter_b = JitterModel::uniform(ju);
  Rng rng(2024);
  std::vector<TrialRecord> trials;
  for (int i = 0; i < 400; ++i) {
    const SettingsPair ab = SettingsPair::from_index(int(rng.below(4)));
    trials.push_back(generate_quantum_trial(cfg, ab, std::uint64_t(i), rng));
  }

  const auto panels = correlation_panels(trials, ju, cfg.window, 12);
  CHECK(panels.size() == 8);
  for (const auto& p : panels) {
    CHECK(p.bin_width == doctest::Approx(ju / 4));
    CHECK(p.trials > 50);
  }
  // Each cross panel: peak at lag 0, decayed to background by |lag| >= 6 bins
  // (the jitter difference is a triangle on [-ju, ju] = 4 bins).
  for (std::size_t pi = 4; pi < 8; ++pi) {
    const auto& p = panels[pi];
    REQUIRE(p.selector.kind == CorrelationSelector::Kind::Cross);
    double peak = 0.0, background = 0.0;
    int n_bg = 0;
    for (std::size_t k = 0; k < p.lags.size(); ++k) {
      if (p.lags[k] == 0) peak = p.mean[k];
      if (std::abs(p.lags[k]) >= 6) {
        background += p.mean[k];
        ++n_bg;
      }
    }
    background /= n_bg;
    // The lossy optimum suppresses 22 coincidences by design, so that panel
    // only shows a modest peak.
    const bool is22 = p.selector.a == Setting::S2 && p.selector.b == Setting::S2;
    CHECK(peak > (is22 ? 1.2 : 3.0) * background);
  }

  std::ostringstream os;
  write_correlation_csv(os, panels);
  CHECK(os.str().find("ccf_22") != std::string::npos);
  CHECK(os.str().find("acf_b2") != std::string::npos);
}
