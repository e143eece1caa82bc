#pragma once
// Hypothesis-test machinery on per-trial cost values: truncation of the
// adjusted costs into a bounded test factor, prediction-based-ratio (PBR)
// accumulation of log evidence with block-wise weight refits, the mapping
// between accumulated bits and normal-tail sigmas, and a martingale signal
// to noise estimate.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ttbell/core.hpp"
#include "ttbell/stats.hpp"

namespace ttbell {

/// Clamp window for adjusted cost values:
///   g_ab(x) = min(max(x + b_ab, 0), c) - u_ab.
/// b_22 is the exact sum of the other offsets and u is an exact tuple, which
/// keeps the local-realist bound of the truncated inequality intact.
struct TruncationParams {
  std::array<double, kNumSettingsPairs> b{};
  std::array<double, kNumSettingsPairs> u{};
  double c = 0.0;
  double v = 0.0;        // expected per-settings violation scale, from training
  bool helpful = true;   // false when the training drift points the wrong way

  double apply(int pair_index, double x) const {
    const double clipped = std::min(std::max(x + b[pair_index], 0.0), c);
    return clipped - u[pair_index];
  }
};

/// Builds the truncation from the per-pair training values of the adjusted
/// costs and per-pair clamp half-widths w_ab.  The offsets place the clamp
/// window at [mean - w, ...] per pair, the ceiling c sits w_22 above the
/// shifted 22 mean, and u recenters using the means of the clamped values so
/// that every pair's truncated mean lands at -v (+v for 22).  Since clamped
/// values are nonnegative, u_22 >= 3v always holds, which caps the predicted
/// per-trial evidence factor at 4/3.
/// Throws if a settings class is empty or the computed ceiling is negative.
TruncationParams choose_truncation(
    const std::array<std::vector<double>, kNumSettingsPairs>& training_values,
    const std::array<double, kNumSettingsPairs>& width);

/// Per-trial multiplicative evidence factor
///   R = (z - B)/z,  B = sign_ab g_ab(x)/p_ab,
/// with z the largest value B can reach, so R >= 0, and E[R] <= 1 for any
/// local-realist statistics.  `trivial` factors are identically 1.
struct TestFactor {
  TruncationParams trunc;
  SettingsDistribution dist;
  double z = 0.0;
  bool trivial = false;

  double value(int pair_index, double adjusted_cost) const;
};

TestFactor make_test_factor(const TruncationParams& trunc,
                            const SettingsDistribution& dist);
TestFactor trivial_test_factor();

/// One trial reduced to its settings pair and a scalar (an adjusted cost for
/// PBR, a Bell value for the SNR estimate).
struct PairValue {
  int pair_index = 0;
  double value = 0.0;
};

struct PBRCandidate {
  TestFactor factor;
  std::string label;
};

/// The default candidate set: truncations at half-widths {0.5, 1, 2, 4} times
/// the per-pair training standard deviation, plus the trivial factor.
/// Candidates whose truncation is degenerate (negative ceiling) are skipped.
std::vector<PBRCandidate> make_pbr_candidates(
    const std::vector<PairValue>& training_adjusted,
    const SettingsDistribution& dist);

struct PBRConfig {
  std::size_t block_size = 1000;
  double fit_tol = 1e-10;
  std::size_t max_fit_iters = 20000;
};

struct PBRBlock {
  std::size_t start = 0;  // first analysis trial of the block
  std::size_t len = 0;
  std::vector<double> weights;
  double logp_raw_end = 0.0;  // running sum of log2 factors after the block
  double logp_end = 0.0;      // max(0, raw)
};

struct PBRResult {
  double logp_raw = 0.0;
  double logp = 0.0;   // reported: max(0, logp_raw)
  double sigma = 0.0;
  std::vector<double> logp_curve;  // max(0, raw prefix) per analysis trial
  std::vector<PBRBlock> blocks;
  std::vector<std::string> labels;
};

/// Blockwise PBR: weights for each block are fit by maximizing the mean log2
/// mixture factor over training plus all earlier analysis trials, so every
/// per-trial factor is predictable and the running product keeps its p-value
/// guarantee.  Training trials never enter the product.
PBRResult pbr_run(const std::vector<PBRCandidate>& candidates,
                  const std::vector<PairValue>& training,
                  const std::vector<PairValue>& analysis,
                  const PBRConfig& cfg = {});

void write_pbr_csv(std::ostream& os, const PBRResult& result);

/// Accumulated bits of evidence -> one-sided normal sigma (0 bits -> 0).
double logp_to_sigma(double logp);
double sigma_to_logp(double sigma);

/// Martingale estimate of the total Bell value and its variance: each trial
/// contributes its innovation against the predictable per-pair mean plus the
/// predictable settings-averaged mean, which makes the total exactly unbiased;
/// the squared innovations overestimate the variance slightly.
struct SNRResult {
  double total = 0.0;    // estimate of the summed Bell expectation
  double variance = 0.0; // sum of squared innovations
  double snr = 0.0;      // -total/sqrt(variance): violation comes out positive
  std::size_t trials = 0;
};

struct SNRState {
  SettingsDistribution dist;
  std::array<RunningStats, kNumSettingsPairs> per_pair;
  double sum_contrib = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  explicit SNRState(const SettingsDistribution& d = SettingsDistribution::uniform())
      : dist(d) {}
  void seed(int pair_index, double bell_value);  // training, no contribution
  void add(int pair_index, double bell_value);   // analysis trial
  SNRResult result() const;
};

SNRResult estimate_snr(const std::vector<PairValue>& training_bell,
                       const std::vector<PairValue>& analysis_bell,
                       const SettingsDistribution& dist);

}  // namespace ttbell
