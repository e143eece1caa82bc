#pragma once
// Adversarial local-realistic source: mimics the one- and two-point
// statistics of a jittered Poisson pair source while generating all four
// timetag sequences before the settings are chosen, so no valid Bell
// function can find a true violation.  The apparent nonlocal signal is a PR
// box component realized by "hidden" 22 coincidences whose separations are
// too wide for any plausible coincidence window.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ttbell/core.hpp"
#include "ttbell/rng.hpp"
#include "ttbell/simsrc.hpp"

namespace ttbell {

/// Density of the separation of two tags both jittered by U[0, width]:
/// triangle on [-width, width] with peak 1/width at 0.
struct TriangleDensity {
  double width = 0.0;
};

double triangle_eval(const TriangleDensity& j, double x);
double triangle_sample(const TriangleDensity& j, Rng& rng);

/// p' = lambda_lr * p_lr + lambda_pr * p_pr with lambda_lr maximal, p_lr a
/// mixture of the 16 deterministic click strategies and p_pr the PR box that
/// is perfectly correlated except at 22, where it anticorrelates.  Among the
/// optimal decompositions, weight is steered onto the strategies whose
/// events can later be silently removed near hidden coincidences (B2 alone,
/// and A1 with B2).
struct PolytopeDecomposition {
  double lambda_lr = 0.0;
  double lambda_pr = 0.0;
  // Strategy index bits: a1*8 + a2*4 + b1*2 + b2, click = 1.
  std::array<double, 16> vertex_weight{};
  OutcomeProbabilities p_lr;  // vertex mixture / lambda_lr
};

OutcomeProbabilities pr_box();

/// Throws std::runtime_error if p_prime lies outside the LR + PR hull.
PolytopeDecomposition decompose_template(const OutcomeProbabilities& p_prime);

/// The 22 cells shifted by the coincidence adjustment: 11 and 00 up by
/// delta_c, 01 and 10 down.  Marginals are unchanged.  Throws if any cell
/// would go negative.
OutcomeProbabilities apply_coincidence_shift(const OutcomeProbabilities& p,
                                             double delta_c);

struct LRTemplate {
  OutcomeProbabilities p_target;  // the quantum statistics to mimic
  OutcomeProbabilities p_prime;   // template with the 22 adjustment
  double delta_c = 0.0;
  double jitter_width = 0.0;  // j_u of the mimicked uniform jitter
  PolytopeDecomposition decomp;

  // Rates per unit time (pair rate 1), derived from p_prime.
  std::array<double, 2> rate_a{};  // tag rate of A at setting 1, 2
  std::array<double, 2> rate_b{};  // tag rate of B at setting 1, 2
  std::array<double, kNumSettingsPairs> coincidence_rate{};  // p'(11|ab)

  double target_hidden = 0.0;  // lambda_pr / 2, hidden coincidences per time
  double pi_cap = 1.0;         // per-tag designation probability cap
  double lp_bound = 0.0;  // removable B2 mass: B2, A1B2, B1B2 weights
  double hidden_min = 0.0;     // hidden separations lie in ...
  double hidden_max = 0.0;     // ... [hidden_min, hidden_max), = 1.5 j, 3 j

  // Calibrated by Monte Carlo over the designation LP.
  double hidden_rate = 0.0;  // achieved mean rate of hidden coincidences
};

/// Derives every field except the calibrated rate.
LRTemplate make_lr_template(const OutcomeProbabilities& p_target,
                            double delta_c, double jitter_width);

struct LRConfig {
  double window = 200.0;
  double pad = 2.0;
  int calibration_trials = 160;
  double accept_fraction = 0.98;  // of target_hidden
};

struct CalibrationReport {
  bool feasible = false;
  double delta_c = 0.0;
  double delta_c_max = 0.0;
  double lambda_lr = 0.0;
  double lambda_pr = 0.0;
  double target_hidden = 0.0;
  double achieved_hidden = 0.0;
  std::vector<double> tried_delta_c;
  std::vector<double> tried_hidden;  // -1 marks an invalid template
};

/// Smallest delta_c in [0, min p(01|22), p(10|22)] whose designation LP can
/// supply at least accept_fraction of the needed hidden rate, measured by
/// Monte Carlo over calibration_trials windows.
CalibrationReport calibrate_delta_c(const OutcomeProbabilities& p_target,
                                    double jitter_width, const LRConfig& cfg,
                                    Rng& rng);

/// Calibrates and returns the ready-to-generate template.  Throws
/// std::runtime_error when calibration reports infeasibility.
LRTemplate calibrated_lr_template(const OutcomeProbabilities& p_target,
                                  double jitter_width, const LRConfig& cfg,
                                  Rng& rng, CalibrationReport* report = nullptr);

/// One trial: builds all four sequences from rng, then returns the pair
/// selected by the settings.  The draw sequence never depends on settings.
TrialRecord generate_lr_trial(const LRTemplate& tpl, const LRConfig& cfg,
                              SettingsPair ab, std::uint64_t id, Rng& rng);

void write_calibration_report(std::ostream& os, const CalibrationReport& rep);

}  // namespace ttbell
