#pragma once
// Conventional coincidence-window analysis (the loophole-vulnerable baseline)
// and binned auto/cross correlation estimates of timetag trial data.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ttbell/core.hpp"
#include "ttbell/inference.hpp"

namespace ttbell {

struct CoincidenceCount {
  std::size_t count = 0;
  // (index into r, index into t), increasing in both coordinates.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// Maximum-cardinality one-to-one non-crossing matching of tags with
/// |t_l - r_k| <= w, via the alignment DP with an equal-width hard window.
CoincidenceCount count_coincidences(const TimetagSequence& r,
                                    const TimetagSequence& t, double w);

/// Count only, using gap splitting; equals count_coincidences(...).count.
std::size_t coincidence_count_value(const TimetagSequence& r,
                                    const TimetagSequence& t, double w);

/// Signed per-trial Bell value of the coincidence analysis: the count-based
/// CH cost with the standard non-signaling adjustments, divided by the
/// settings probability, negated at 22.  Negative expectation = violation.
double conventional_trial_value(const TrialRecord& trial, double w,
                                const SettingsDistribution& dist);

std::vector<PairValue> conventional_values(const std::vector<TrialRecord>& trials,
                                           double w,
                                           const SettingsDistribution& dist);

struct ConventionalReport {
  double window = 0.0;
  double ch_estimate = 0.0;  // mean per-trial Bell value; negative violates
  SNRResult snr;             // violation comes out positive
  std::size_t trials = 0;
  // The coincidence analysis post-selects on detection at both sides, so a
  // "violation" here carries no device-independent weight.
  bool loophole_free = false;
};

ConventionalReport conventional_analysis(const std::vector<TrialRecord>& training,
                                         const std::vector<TrialRecord>& analysis,
                                         double w,
                                         const SettingsDistribution& dist);

ConventionalReport conventional_analysis(const std::vector<TrialRecord>& trials,
                                         double w,
                                         const SettingsDistribution& dist);

void write_conventional_csv(std::ostream& os, const ConventionalReport& rep);

/// Coincidence window maximizing the training-set SNR: coarse log grid, then
/// a fine linear pass, then the midpoint of the contiguous near-best plateau
/// (the objective is piecewise constant in w between observed separations).
double optimize_window(const std::vector<TrialRecord>& training,
                       const SettingsDistribution& dist, double w_min = 1e-3,
                       double w_max = 1.0);

struct CorrelationSelector {
  enum class Kind { AutoA, AutoB, Cross };
  Kind kind = Kind::Cross;
  Setting a = Setting::S1;  // AutoA, Cross
  Setting b = Setting::S1;  // AutoB, Cross

  bool accepts(SettingsPair ab) const;
  std::string label() const;  // "acf_a1", "acf_b2", "ccf_21", ...
};

/// Unnormalized binned correlation c(d) = sum_i b_r(i) b_t(i + d) per trial,
/// averaged over the selected trials.  Autocorrelations report d >= 0 only.
struct CorrelationEstimate {
  CorrelationSelector selector;
  double bin_width = 0.0;
  std::vector<int> lags;
  std::vector<double> mean;
  std::vector<double> std_err;
  std::size_t trials = 0;
};

CorrelationEstimate correlation_estimate(const std::vector<TrialRecord>& trials,
                                         const CorrelationSelector& sel,
                                         double bin_width, int max_lag,
                                         double window);

/// The standard eight panels: per-party autocorrelations at each local
/// setting and cross correlations at each settings pair, with bin width a
/// quarter of the jitter scale.
std::vector<CorrelationEstimate> correlation_panels(
    const std::vector<TrialRecord>& trials, double jitter_width, double window,
    int max_lag = 24);

void write_correlation_csv(std::ostream& os,
                           const std::vector<CorrelationEstimate>& panels);

}  // namespace ttbell
