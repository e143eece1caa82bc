#include "ttbell/simsrc.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "ttbell/nelder_mead.hpp"

namespace ttbell {

JitterModel JitterModel::uniform(double width) {
  if (!(width > 0.0)) throw std::invalid_argument("jitter: uniform width must be > 0");
  return {Kind::Uniform, width};
}

JitterModel JitterModel::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("jitter: exponential rate must be > 0");
  return {Kind::Exponential, rate};
}

double JitterModel::median() const {
  switch (kind) {
    case Kind::None:
      return 0.0;
    case Kind::Uniform:
      return param / 2.0;
    default:
      return std::log(2.0) / param;
  }
}

double JitterModel::sample(Rng& rng) const {
  switch (kind) {
    case Kind::None:
      return 0.0;
    case Kind::Uniform:
      return rng.uniform(0.0, param);
    default:
      return rng.exponential(param);
  }
}

JitterModel parse_jitter(const std::string& text) {
  if (text == "none") return JitterModel::none();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    double value = 0.0;
    try {
      std::size_t used = 0;
      value = std::stod(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("");
    } catch (...) {
      throw std::invalid_argument("jitter: bad numeric value in '" + text + "'");
    }
    if (head == "uniform") return JitterModel::uniform(value);
    if (head == "exp") return JitterModel::exponential(value);
  }
  throw std::invalid_argument(
      "jitter: expected none, uniform:<width>, or exp:<rate>, got '" + text + "'");
}

std::string format_jitter(const JitterModel& m) {
  switch (m.kind) {
    case JitterModel::Kind::None:
      return "none";
    case JitterModel::Kind::Uniform:
      return "uniform:" + std::to_string(m.param);
    default:
      return "exp:" + std::to_string(m.param);
  }
}

double OutcomeProbabilities::marginal_a(Setting a) const {
  const int idx = SettingsPair{a, Setting::S1}.index();
  return p[idx][2] + p[idx][3];
}

double OutcomeProbabilities::marginal_b(Setting b) const {
  const int idx = SettingsPair{Setting::S1, b}.index();
  return p[idx][1] + p[idx][3];
}

OutcomeProbabilities outcome_probabilities(double theta,
                                           const LRAssignment<double>& angles,
                                           double efficiency) {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw std::invalid_argument("outcome_probabilities: efficiency outside [0,1]");
  }
  const double ct = std::cos(theta), st = std::sin(theta);
  OutcomeProbabilities out;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const SettingsPair ab = SettingsPair::from_index(idx);
    const double alpha = angles.a(ab.a);
    const double beta = angles.b(ab.b);
    const double amp = ct * std::cos(alpha) * std::cos(beta) +
                       st * std::sin(alpha) * std::sin(beta);
    const double p_ab = amp * amp;
    const double p_a = ct * ct * std::cos(alpha) * std::cos(alpha) +
                       st * st * std::sin(alpha) * std::sin(alpha);
    const double p_b = ct * ct * std::cos(beta) * std::cos(beta) +
                       st * st * std::sin(beta) * std::sin(beta);
    const double e = efficiency;
    double p11 = e * e * p_ab;
    double p10 = e * p_a - p11;
    double p01 = e * p_b - p11;
    assert(p10 > -1e-12 && p01 > -1e-12);
    p10 = std::max(p10, 0.0);
    p01 = std::max(p01, 0.0);
    const double p00 = 1.0 - p11 - p10 - p01;
    assert(p00 > -1e-12);
    out.p[idx] = {std::max(p00, 0.0), p01, p10, p11};
  }
  return out;
}

namespace {
double chsh_no_click(double theta, const LRAssignment<double>& angles,
                     double efficiency) {
  const OutcomeProbabilities probs =
      outcome_probabilities(theta, angles, efficiency);
  // Correlators with click = +1, no click = -1.
  std::array<double, kNumSettingsPairs> corr{};
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const auto& p = probs.p[idx];
    corr[idx] = p[3] + p[0] - p[1] - p[2];
  }
  return corr[kPair22] - corr[kPair21] - corr[kPair11] - corr[kPair12];
}
}  // namespace

SourceOptimum optimize_source(double efficiency) {
  SourceOptimum best;
  best.chsh = 1e300;
  // Coarse scan; measurement angles have period pi, the state angle is
  // symmetric around pi/4.
  const int n_theta = 16, n_angle = 12;
  for (int it = 1; it <= n_theta; ++it) {
    const double theta = (M_PI / 4.0) * it / n_theta;
    for (int i1 = 0; i1 < n_angle; ++i1) {
      for (int i2 = 0; i2 < n_angle; ++i2) {
        for (int j1 = 0; j1 < n_angle; ++j1) {
          for (int j2 = 0; j2 < n_angle; ++j2) {
            const LRAssignment<double> ang{
                M_PI * i1 / n_angle, M_PI * i2 / n_angle,
                M_PI * j1 / n_angle, M_PI * j2 / n_angle};
            const double v = chsh_no_click(theta, ang, efficiency);
            if (v < best.chsh) {
              best.chsh = v;
              best.theta = theta;
              best.angles = ang;
            }
          }
        }
      }
    }
  }
  const auto objective = [efficiency](const std::vector<double>& x) {
    return chsh_no_click(x[0], {x[1], x[2], x[3], x[4]}, efficiency);
  };
  const auto refined = nelder_mead(
      objective,
      {best.theta, best.angles.a1, best.angles.a2, best.angles.b1, best.angles.b2},
      0.05, 1e-12, 4000);
  if (refined.value < best.chsh) {
    best.chsh = refined.value;
    best.theta = refined.x[0];
    best.angles = {refined.x[1], refined.x[2], refined.x[3], refined.x[4]};
  }
  return best;
}

TrialRecord generate_quantum_trial(const SourceConfig& cfg, SettingsPair ab,
                                   std::uint64_t id, Rng& rng) {
  assert(cfg.pair_rate > 0.0 && cfg.window > 0.0);
  const OutcomeProbabilities probs =
      outcome_probabilities(cfg.theta, cfg.angles, cfg.efficiency);
  const int idx = ab.index();
  TrialRecord trial;
  trial.id = id;
  trial.settings = ab;
  const double pad = 2.0;
  double s = -pad + rng.exponential(cfg.pair_rate);
  while (s < cfg.window + pad) {
    const double u = rng.uniform();
    const auto& cell = probs.p[idx];
    // Cell order: (0,0), (0,1), (1,0), (1,1).
    int click_a = 0, click_b = 0;
    if (u < cell[3]) {
      click_a = click_b = 1;
    } else if (u < cell[3] + cell[2]) {
      click_a = 1;
    } else if (u < cell[3] + cell[2] + cell[1]) {
      click_b = 1;
    }
    if (click_a) {
      const double t = s + cfg.jitter_a.sample(rng);
      if (t >= 0.0 && t < cfg.window) trial.outcome_a.push_back(t);
    }
    if (click_b) {
      const double t = s + cfg.jitter_b.sample(rng);
      if (t >= 0.0 && t < cfg.window) trial.outcome_b.push_back(t);
    }
    s += rng.exponential(cfg.pair_rate);
  }
  std::sort(trial.outcome_a.begin(), trial.outcome_a.end());
  std::sort(trial.outcome_b.begin(), trial.outcome_b.end());
  return trial;
}

TrialRecord generate_delta_shift_trial(const DeltaShiftConfig& cfg,
                                       SettingsPair ab, std::uint64_t id,
                                       Rng& rng) {
  assert(cfg.pair_rate > 0.0 && cfg.window > 0.0 && cfg.delta >= 0.0);
  TrialRecord trial;
  trial.id = id;
  trial.settings = ab;
  const double pad = 2.0;
  const double shift_a = ab.a == Setting::S2 ? cfg.delta : 0.0;
  const double shift_b = ab.b == Setting::S2 ? -cfg.delta : 0.0;
  double s = -pad + rng.exponential(cfg.pair_rate);
  while (s < cfg.window + pad) {
    const double ta = s + shift_a;
    if (ta >= 0.0 && ta < cfg.window) trial.outcome_a.push_back(ta);
    const double tb = s + shift_b;
    if (tb >= 0.0 && tb < cfg.window) trial.outcome_b.push_back(tb);
    s += rng.exponential(cfg.pair_rate);
  }
  return trial;
}

}  // namespace ttbell
