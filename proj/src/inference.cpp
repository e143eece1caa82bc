#include "ttbell/inference.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ttbell {

TruncationParams choose_truncation(
    const std::array<std::vector<double>, kNumSettingsPairs>& training_values,
    const std::array<double, kNumSettingsPairs>& width) {
  for (double w : width) {
    if (!(w >= 0.0)) {
      throw std::invalid_argument("choose_truncation: widths must be >= 0");
    }
  }
  std::array<double, kNumSettingsPairs> mean{};
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    if (training_values[idx].empty()) {
      throw std::invalid_argument("choose_truncation: empty settings class");
    }
    double s = 0.0;
    for (double x : training_values[idx]) s += x;
    mean[idx] = s / static_cast<double>(training_values[idx].size());
  }

  TruncationParams p;
  for (int idx : {kPair11, kPair12, kPair21}) {
    p.b[idx] = width[idx] - mean[idx];
  }
  // Exact by construction: the 22 offset is the computed sum of the others.
  p.b[kPair22] = p.b[kPair11] + p.b[kPair12] + p.b[kPair21];
  p.c = p.b[kPair22] + mean[kPair22] + width[kPair22];
  if (p.c < 0.0) {
    throw std::invalid_argument(
        "choose_truncation: negative clamp ceiling (pathological training data)");
  }

  // Means of the clamped, shifted values.  The clamping biases these away
  // from the raw means, so u must come from the clamped values or the
  // factor's per-pair centering is off by the size of that bias.
  std::array<double, kNumSettingsPairs> clamped_mean{};
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    double s = 0.0;
    for (double x : training_values[idx]) {
      s += std::min(std::max(x + p.b[idx], 0.0), p.c);
    }
    clamped_mean[idx] = s / static_cast<double>(training_values[idx].size());
  }

  const double s = clamped_mean[kPair11] + clamped_mean[kPair12] +
                   clamped_mean[kPair21] - clamped_mean[kPair22];
  p.v = -s / 4.0;
  p.helpful = p.v > 0.0;
  for (int idx : {kPair11, kPair12, kPair21}) {
    p.u[idx] = clamped_mean[idx] - s / 4.0;
  }
  // Exactness again: 22 centering is the computed sum, keeping the truncated
  // inequality's local bound intact.  Equivalently u_22 = sum of the clamped
  // non-22 means plus 3v, so u_22 >= 3v because clamped means are >= 0.
  p.u[kPair22] = p.u[kPair11] + p.u[kPair12] + p.u[kPair21];
  return p;
}

double TestFactor::value(int pair_index, double adjusted_cost) const {
  if (trivial) return 1.0;
  if (pair_index < 0 || pair_index >= kNumSettingsPairs) {
    throw std::invalid_argument("TestFactor::value: bad settings pair index");
  }
  const double g = trunc.apply(pair_index, adjusted_cost);
  const double sign = pair_index == kPair22 ? -1.0 : 1.0;
  const double bell = sign * g / dist.p[pair_index];
  const double r = (z - bell) / z;
  return r > 0.0 ? r : 0.0;  // exact-boundary rounding guard
}

TestFactor make_test_factor(const TruncationParams& trunc,
                            const SettingsDistribution& dist) {
  dist.validate();
  TestFactor f;
  f.trunc = trunc;
  f.dist = dist;
  // z = sup over settings pairs of the Bell value the factor can see.
  double z = 0.0;
  for (int idx : {kPair11, kPair12, kPair21}) {
    z = std::max(z, (trunc.c - trunc.u[idx]) / dist.p[idx]);
  }
  z = std::max(z, trunc.u[kPair22] / dist.p[kPair22]);
  f.z = z;
  if (!(z > 0.0)) f.trivial = true;
  return f;
}

TestFactor trivial_test_factor() {
  TestFactor f;
  f.dist = SettingsDistribution::uniform();
  f.trivial = true;
  f.z = 0.0;
  return f;
}

std::vector<PBRCandidate> make_pbr_candidates(
    const std::vector<PairValue>& training_adjusted,
    const SettingsDistribution& dist) {
  std::array<std::vector<double>, kNumSettingsPairs> values;
  std::array<RunningStats, kNumSettingsPairs> stats;
  for (const PairValue& pv : training_adjusted) {
    values[pv.pair_index].push_back(pv.value);
    stats[pv.pair_index].add(pv.value);
  }
  std::vector<PBRCandidate> out;
  for (double frac : {0.5, 1.0, 2.0, 4.0}) {
    std::array<double, kNumSettingsPairs> width{};
    for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
      width[idx] =
          frac * (stats[idx].n > 1 ? std::sqrt(stats[idx].variance()) : 0.0);
    }
    PBRCandidate c;
    try {
      c.factor = make_test_factor(choose_truncation(values, width), dist);
    } catch (const std::invalid_argument&) {
      continue;  // degenerate ceiling at this width; drop the candidate
    }
    c.label = "w" + std::to_string(frac).substr(0, 3) + "sd";
    out.push_back(std::move(c));
  }
  out.push_back(PBRCandidate{trivial_test_factor(), "trivial"});
  return out;
}

namespace {

// Maximizes the mean log2 of the weight mixture over the simplex with the
// fixed-point update w_i <- w_i * mean_t(R_it / mix_t); each step cannot
// decrease the objective and the optimum is its fixed point.
std::vector<double> fit_weights(const std::vector<std::vector<double>>& values,
                                const std::vector<std::size_t>& fit_rows,
                                const PBRConfig& cfg) {
  const std::size_t k = values.size();
  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  if (fit_rows.empty()) return w;
  const double n = static_cast<double>(fit_rows.size());
  std::vector<double> grad(k, 0.0);
  double prev_obj = -1e300;
  for (std::size_t it = 0; it < cfg.max_fit_iters; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double obj = 0.0;
    for (std::size_t t : fit_rows) {
      double mix = 0.0;
      for (std::size_t i = 0; i < k; ++i) mix += w[i] * values[i][t];
      if (mix <= 0.0) mix = 1e-300;
      obj += std::log2(mix);
      for (std::size_t i = 0; i < k; ++i) grad[i] += values[i][t] / mix;
    }
    obj /= n;
    double norm = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      w[i] *= grad[i] / n;
      norm += w[i];
    }
    for (auto& x : w) x /= norm;
    if (obj - prev_obj < cfg.fit_tol && it > 2) break;
    prev_obj = obj;
  }
  return w;
}

double mean_log2_mix(const std::vector<std::vector<double>>& values,
                     const std::vector<std::size_t>& rows,
                     const std::vector<double>& w) {
  if (rows.empty()) return 0.0;
  double obj = 0.0;
  for (std::size_t t : rows) {
    double mix = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) mix += w[i] * values[i][t];
    obj += std::log2(std::max(mix, 1e-300));
  }
  return obj / static_cast<double>(rows.size());
}

}  // namespace

PBRResult pbr_run(const std::vector<PBRCandidate>& candidates,
                  const std::vector<PairValue>& training,
                  const std::vector<PairValue>& analysis,
                  const PBRConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("pbr_run: no candidates");
  if (cfg.block_size == 0) throw std::invalid_argument("pbr_run: zero block size");
  const std::size_t k = candidates.size();
  const std::size_t n_train = training.size();
  const std::size_t n_ana = analysis.size();

  std::size_t trivial_idx = k;
  for (std::size_t i = 0; i < k; ++i) {
    if (candidates[i].factor.trivial) trivial_idx = i;
  }

  // Candidate factor values, training rows first.
  std::vector<std::vector<double>> values(
      k, std::vector<double>(n_train + n_ana, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t t = 0; t < n_train; ++t) {
      values[i][t] =
          candidates[i].factor.value(training[t].pair_index, training[t].value);
    }
    for (std::size_t t = 0; t < n_ana; ++t) {
      values[i][n_train + t] =
          candidates[i].factor.value(analysis[t].pair_index, analysis[t].value);
    }
  }

  PBRResult res;
  for (const auto& c : candidates) res.labels.push_back(c.label);
  res.logp_curve.reserve(n_ana);

  std::vector<std::size_t> fit_rows(n_train);
  for (std::size_t t = 0; t < n_train; ++t) fit_rows[t] = t;

  double raw = 0.0;
  std::size_t pos = 0;
  while (pos < n_ana) {
    const std::size_t len = std::min(cfg.block_size, n_ana - pos);

    std::vector<double> w = fit_weights(values, fit_rows, cfg);
    // Break near-ties toward the trivial factor: when the fitted mixture's
    // gain over all-trivial is below the fit tolerance, use the trivial
    // factor outright so featureless data reports exactly zero evidence.
    if (trivial_idx < k) {
      std::vector<double> triv(k, 0.0);
      triv[trivial_idx] = 1.0;
      if (mean_log2_mix(values, fit_rows, w) -
              mean_log2_mix(values, fit_rows, triv) <=
          cfg.fit_tol) {
        w = triv;
      }
    }

    PBRBlock block;
    block.start = pos;
    block.len = len;
    block.weights = w;
    for (std::size_t t = pos; t < pos + len; ++t) {
      double mix = 0.0;
      for (std::size_t i = 0; i < k; ++i) mix += w[i] * values[i][n_train + t];
      raw += std::log2(std::max(mix, 1e-300));
      res.logp_curve.push_back(std::max(0.0, raw));
      fit_rows.push_back(n_train + t);
    }
    block.logp_raw_end = raw;
    block.logp_end = std::max(0.0, raw);
    res.blocks.push_back(std::move(block));
    pos += len;
  }

  res.logp_raw = raw;
  res.logp = std::max(0.0, raw);
  res.sigma = logp_to_sigma(res.logp);
  return res;
}

void write_pbr_csv(std::ostream& os, const PBRResult& result) {
  os << "block,start,len,logp_raw_end,logp_end";
  for (const auto& l : result.labels) os << ",w_" << l;
  os << "\n";
  for (std::size_t b = 0; b < result.blocks.size(); ++b) {
    const auto& blk = result.blocks[b];
    os << b << "," << blk.start << "," << blk.len << "," << blk.logp_raw_end
       << "," << blk.logp_end;
    for (double w : blk.weights) os << "," << w;
    os << "\n";
  }
}

double logp_to_sigma(double logp) { return sigma_from_log2_tail(logp); }

double sigma_to_logp(double sigma) { return log2_tail_from_sigma(sigma); }

void SNRState::seed(int pair_index, double bell_value) {
  per_pair[pair_index].add(bell_value);
}

void SNRState::add(int pair_index, double bell_value) {
  double predicted = 0.0;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const double m = per_pair[idx].n > 0 ? per_pair[idx].mean : 0.0;
    predicted += dist.p[idx] * m;
  }
  const double base = per_pair[pair_index].n > 0 ? per_pair[pair_index].mean : 0.0;
  const double innovation = bell_value - base;
  sum_contrib += predicted + innovation;
  sum_sq += innovation * innovation;
  ++n;
  per_pair[pair_index].add(bell_value);
}

SNRResult SNRState::result() const {
  SNRResult r;
  r.total = sum_contrib;
  r.variance = sum_sq;
  r.snr = sum_sq > 0.0 ? -sum_contrib / std::sqrt(sum_sq) : 0.0;
  r.trials = n;
  return r;
}

SNRResult estimate_snr(const std::vector<PairValue>& training_bell,
                       const std::vector<PairValue>& analysis_bell,
                       const SettingsDistribution& dist) {
  dist.validate();
  SNRState st(dist);
  for (const auto& t : training_bell) st.seed(t.pair_index, t.value);
  for (const auto& t : analysis_bell) st.add(t.pair_index, t.value);
  return st.result();
}

}  // namespace ttbell
