#pragma once
// Continuously pumped pair source: Poisson pair emissions, per-pair detection
// outcomes from a two-qubit partially entangled state with finite detector
// efficiency, and per-party timing jitter on the detected tags.

#include <cstdint>
#include <string>

#include "ttbell/core.hpp"
#include "ttbell/rng.hpp"

namespace ttbell {

struct JitterModel {
  enum class Kind { None, Uniform, Exponential };
  Kind kind = Kind::None;
  double param = 0.0;  // uniform: width of U[0, w]; exponential: rate

  static JitterModel none() { return {}; }
  static JitterModel uniform(double width);
  static JitterModel exponential(double rate);

  double median() const;
  double sample(Rng& rng) const;
};

/// "none", "uniform:<width>", or "exp:<rate>".
JitterModel parse_jitter(const std::string& text);
std::string format_jitter(const JitterModel& m);

/// Joint click probabilities per settings pair; cell index is
/// click_a * 2 + click_b.
struct OutcomeProbabilities {
  std::array<std::array<double, 4>, kNumSettingsPairs> p{};

  double prob(int pair_index, int click_a, int click_b) const {
    return p[pair_index][click_a * 2 + click_b];
  }
  /// P(click | setting), identical across the partner's settings.
  double marginal_a(Setting a) const;
  double marginal_b(Setting b) const;
};

/// State cos(theta)|00> + sin(theta)|11>, projective measurements along
/// angles.a(setting) and angles.b(setting), detector efficiency applied
/// independently per party.
OutcomeProbabilities outcome_probabilities(double theta,
                                           const LRAssignment<double>& angles,
                                           double efficiency);

struct SourceOptimum {
  double theta = 0.0;
  LRAssignment<double> angles{0.0, 0.0, 0.0, 0.0};
  double chsh = 0.0;  // minimized correlator sum; below -2 violates
};

/// Minimizes E(22) - E(21) - E(11) - E(12) with no-click counted as -1,
/// over the state angle and the four measurement angles, by coarse grid then
/// simplex refinement.
SourceOptimum optimize_source(double efficiency);

struct SourceConfig {
  double theta = 0.0;
  LRAssignment<double> angles{0.0, 0.0, 0.0, 0.0};
  double efficiency = 1.0;
  double pair_rate = 1.0;
  double window = 200.0;
  JitterModel jitter_a, jitter_b;
};

/// One trial: pairs emitted on a padded interval, detected per the outcome
/// probabilities at the trial's settings, jittered per party, then cropped to
/// [0, window) and sorted.
TrialRecord generate_quantum_trial(const SourceConfig& cfg, SettingsPair ab,
                                   std::uint64_t id, Rng& rng);

struct DeltaShiftConfig {
  double pair_rate = 1.0;
  double window = 200.0;
  double delta = 0.1;
};

/// Classical always-detected toy: both parties tag every pair, A shifted by
/// +delta at setting 2, B by -delta at setting 2.  Cheats the conventional
/// coincidence analysis without any quantum resources.
TrialRecord generate_delta_shift_trial(const DeltaShiftConfig& cfg,
                                       SettingsPair ab, std::uint64_t id,
                                       Rng& rng);

}  // namespace ttbell
