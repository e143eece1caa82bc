#include "ttbell/diagnostics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include "ttbell/distance.hpp"

namespace ttbell {

namespace {
FunctionTuple equal_hard_window(double w) {
  if (!(w > 0.0)) throw std::invalid_argument("coincidence window must be > 0");
  return make_hard_window_unchecked({w, w, w, w});
}
}  // namespace

CoincidenceCount count_coincidences(const TimetagSequence& r,
                                    const TimetagSequence& t, double w) {
  const FunctionTuple f = equal_hard_window(w);
  const DistanceResult res = min_cost(f, kPair11, r, t);
  CoincidenceCount out;
  // Matches outside the window cost 1, same as a deletion, and the backtrack
  // prefers them on ties; only the in-window pairs are coincidences.
  for (const auto& [i, j] : res.matching.pairs)
    if (std::abs(t[j] - r[i]) <= w) out.pairs.push_back({i, j});
  out.count = out.pairs.size();
  assert(out.count == r.size() - static_cast<std::size_t>(std::lround(res.cost)));
  return out;
}

std::size_t coincidence_count_value(const TimetagSequence& r,
                                    const TimetagSequence& t, double w) {
  const FunctionTuple f = equal_hard_window(w);
  const double cost = min_cost_value_split(f, kPair11, r, t, w);
  return r.size() - static_cast<std::size_t>(std::lround(cost));
}

double conventional_trial_value(const TrialRecord& trial, double w,
                                const SettingsDistribution& dist) {
  const double na = static_cast<double>(trial.outcome_a.size());
  const double nb = static_cast<double>(trial.outcome_b.size());
  const double c = static_cast<double>(
      coincidence_count_value(trial.outcome_a, trial.outcome_b, w));
  const int idx = trial.settings.index();
  // Count-based CH costs after the standard non-signaling adjustments.
  double adjusted = 0.0;
  switch (idx) {
    case kPair11: adjusted = na / 2 + nb / 2 - c; break;
    case kPair12: adjusted = na / 2 - c; break;
    case kPair21: adjusted = nb / 2 - c; break;
    case kPair22: adjusted = -c; break;
    default: assert(false);
  }
  const double sign = idx == kPair22 ? -1.0 : 1.0;
  return sign * adjusted / settings_prob(dist, trial.settings);
}

std::vector<PairValue> conventional_values(const std::vector<TrialRecord>& trials,
                                           double w,
                                           const SettingsDistribution& dist) {
  std::vector<PairValue> out;
  out.reserve(trials.size());
  for (const TrialRecord& t : trials)
    out.push_back({t.settings.index(), conventional_trial_value(t, w, dist)});
  return out;
}

ConventionalReport conventional_analysis(const std::vector<TrialRecord>& training,
                                         const std::vector<TrialRecord>& analysis,
                                         double w,
                                         const SettingsDistribution& dist) {
  dist.validate();
  ConventionalReport rep;
  rep.window = w;
  rep.trials = analysis.size();
  const auto train_vals = conventional_values(training, w, dist);
  const auto ana_vals = conventional_values(analysis, w, dist);
  rep.snr = estimate_snr(train_vals, ana_vals, dist);
  double sum = 0.0;
  for (const PairValue& v : ana_vals) sum += v.value;
  rep.ch_estimate = analysis.empty() ? 0.0 : sum / double(analysis.size());
  return rep;
}

ConventionalReport conventional_analysis(const std::vector<TrialRecord>& trials,
                                         double w,
                                         const SettingsDistribution& dist) {
  return conventional_analysis({}, trials, w, dist);
}

void write_conventional_csv(std::ostream& os, const ConventionalReport& rep) {
  os << "window,ch_estimate,snr,total,variance,trials,loophole_free\n";
  os << rep.window << ',' << rep.ch_estimate << ',' << rep.snr.snr << ','
     << rep.snr.total << ',' << rep.snr.variance << ',' << rep.trials << ','
     << (rep.loophole_free ? "yes" : "no") << '\n';
}

namespace {
double training_snr(const std::vector<TrialRecord>& training, double w,
                    const SettingsDistribution& dist) {
  return estimate_snr({}, conventional_values(training, w, dist), dist).snr;
}

struct PlateauScan {
  double best = 0.0;
  std::size_t lo = 0, hi = 0;  // contiguous near-best run around the argmax
};

PlateauScan scan(const std::vector<double>& value) {
  PlateauScan s;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < value.size(); ++i)
    if (value[i] > value[arg]) arg = i;
  s.best = value[arg];
  const double tol = 1e-9 * std::max(1.0, std::abs(s.best));
  s.lo = s.hi = arg;
  while (s.lo > 0 && value[s.lo - 1] >= s.best - tol) --s.lo;
  while (s.hi + 1 < value.size() && value[s.hi + 1] >= s.best - tol) ++s.hi;
  return s;
}
}  // namespace

double optimize_window(const std::vector<TrialRecord>& training,
                       const SettingsDistribution& dist, double w_min,
                       double w_max) {
  if (training.empty())
    throw std::invalid_argument("optimize_window: empty training set");
  if (!(w_min > 0.0 && w_max > w_min))
    throw std::invalid_argument("optimize_window: bad window range");

  const int n_coarse = 49;
  std::vector<double> grid(n_coarse), value(n_coarse);
  for (int i = 0; i < n_coarse; ++i) {
    grid[i] = w_min * std::pow(w_max / w_min, double(i) / (n_coarse - 1));
    value[i] = training_snr(training, grid[i], dist);
  }
  const PlateauScan coarse = scan(value);
  const double lo = grid[coarse.lo > 0 ? coarse.lo - 1 : 0];
  const double hi = grid[std::min<std::size_t>(coarse.hi + 1, grid.size() - 1)];

  const int n_fine = 41;
  std::vector<double> fgrid(n_fine), fvalue(n_fine);
  for (int i = 0; i < n_fine; ++i) {
    fgrid[i] = lo + (hi - lo) * double(i) / (n_fine - 1);
    fvalue[i] = training_snr(training, fgrid[i], dist);
  }
  const PlateauScan fine = scan(fvalue);
  return 0.5 * (fgrid[fine.lo] + fgrid[fine.hi]);
}

bool CorrelationSelector::accepts(SettingsPair ab) const {
  switch (kind) {
    case Kind::AutoA: return ab.a == a;
    case Kind::AutoB: return ab.b == b;
    case Kind::Cross: return ab.a == a && ab.b == b;
  }
  return false;
}

std::string CorrelationSelector::label() const {
  switch (kind) {
    case Kind::AutoA: return "acf_a" + std::to_string(setting_value(a));
    case Kind::AutoB: return "acf_b" + std::to_string(setting_value(b));
    case Kind::Cross:
      return "ccf_" + std::to_string(setting_value(a)) +
             std::to_string(setting_value(b));
  }
  return "?";
}

namespace {
// Sparse bin histogram: bin index -> tag count.
using Bins = std::unordered_map<long, double>;

Bins bin_tags(const TimetagSequence& s, double w_b, long n_bins) {
  Bins b;
  for (double x : s) {
    const long k = static_cast<long>(std::floor(x / w_b));
    if (k >= 0 && k < n_bins) b[k] += 1.0;
  }
  return b;
}
}  // namespace

CorrelationEstimate correlation_estimate(const std::vector<TrialRecord>& trials,
                                         const CorrelationSelector& sel,
                                         double bin_width, int max_lag,
                                         double window) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be > 0");
  if (max_lag < 0) throw std::invalid_argument("max lag must be >= 0");
  const long n_bins = static_cast<long>(std::ceil(window / bin_width));

  CorrelationEstimate est;
  est.selector = sel;
  est.bin_width = bin_width;
  const bool cross = sel.kind == CorrelationSelector::Kind::Cross;
  const int lag_lo = cross ? -max_lag : 0;
  for (int d = lag_lo; d <= max_lag; ++d) est.lags.push_back(d);

  std::vector<RunningStats> acc(est.lags.size());
  for (const TrialRecord& trial : trials) {
    if (!sel.accepts(trial.settings)) continue;
    const TimetagSequence& r =
        sel.kind == CorrelationSelector::Kind::AutoB ? trial.outcome_b
                                                     : trial.outcome_a;
    const TimetagSequence& t =
        sel.kind == CorrelationSelector::Kind::AutoA ? trial.outcome_a
                                                     : trial.outcome_b;
    const Bins br = bin_tags(r, bin_width, n_bins);
    const Bins bt = bin_tags(t, bin_width, n_bins);
    std::vector<double> c(est.lags.size(), 0.0);
    for (const auto& [i, cnt] : br) {
      for (std::size_t k = 0; k < est.lags.size(); ++k) {
        const long j = i + est.lags[k];
        if (j < 0 || j >= n_bins) continue;
        const auto it = bt.find(j);
        if (it != bt.end()) c[k] += cnt * it->second;
      }
    }
    for (std::size_t k = 0; k < c.size(); ++k) acc[k].add(c[k]);
  }

  est.trials = acc.empty() ? 0 : acc[0].n;
  est.mean.resize(est.lags.size());
  est.std_err.resize(est.lags.size());
  for (std::size_t k = 0; k < est.lags.size(); ++k) {
    est.mean[k] = acc[k].mean;
    est.std_err[k] = acc[k].stderr_mean();
  }
  return est;
}

std::vector<CorrelationEstimate> correlation_panels(
    const std::vector<TrialRecord>& trials, double jitter_width, double window,
    int max_lag) {
  if (!(jitter_width > 0.0))
    throw std::invalid_argument("jitter width must be > 0");
  const double w_b = jitter_width / 4.0;
  std::vector<CorrelationEstimate> panels;
  using K = CorrelationSelector::Kind;
  for (Setting s : {Setting::S1, Setting::S2}) {
    panels.push_back(correlation_estimate(
        trials, {K::AutoA, s, Setting::S1}, w_b, max_lag, window));
    panels.push_back(correlation_estimate(
        trials, {K::AutoB, Setting::S1, s}, w_b, max_lag, window));
  }
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const SettingsPair ab = SettingsPair::from_index(idx);
    panels.push_back(
        correlation_estimate(trials, {K::Cross, ab.a, ab.b}, w_b, max_lag, window));
  }
  return panels;
}

void write_correlation_csv(std::ostream& os,
                           const std::vector<CorrelationEstimate>& panels) {
  os << "panel,lag,time,mean,stderr,trials\n";
  for (const CorrelationEstimate& p : panels) {
    const std::string label = p.selector.label();
    for (std::size_t k = 0; k < p.lags.size(); ++k)
      os << label << ',' << p.lags[k] << ',' << p.lags[k] * p.bin_width << ','
         << p.mean[k] << ',' << p.std_err[k] << ',' << p.trials << '\n';
  }
}

}  // namespace ttbell
