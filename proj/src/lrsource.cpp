#include "ttbell/lrsource.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "ttbell/simplex_lp.hpp"
#include "ttbell/stats.hpp"

namespace ttbell {
namespace {

// Strategy index bits.
constexpr int kA1 = 8, kA2 = 4, kB1 = 2, kB2 = 1;

std::vector<double> poisson_process(Rng& rng, double rate, double lo,
                                    double hi) {
  std::vector<double> tags;
  if (rate <= 0.0) return tags;
  double t = lo + rng.exponential(rate);
  while (t < hi) {
    tags.push_back(t);
    t += rng.exponential(rate);
  }
  return tags;
}

// Separation density of a hidden 22 partner: flat on +-[hidden_min,
// hidden_max).  Wide enough to escape any plausible coincidence window
// (training pushes the window below hidden_min, because captured partners
// weaken the violation being optimized), yet narrow enough that the split
// completions at the other settings stay within one jitter width.
double hidden_kernel(const LRTemplate& tpl, double x) {
  const double ax = std::abs(x);
  if (ax < tpl.hidden_min || ax >= tpl.hidden_max) return 0.0;
  return 0.5 / (tpl.hidden_max - tpl.hidden_min);
}

double sample_hidden_separation(const LRTemplate& tpl, Rng& rng) {
  const double mag = rng.uniform(tpl.hidden_min, tpl.hidden_max);
  return rng.bernoulli(0.5) ? mag : -mag;
}

struct Designation {
  std::vector<double> sigma;  // per-anchor designation probability, unscaled
  double total = 0.0;
};

// Per-cluster LP: maximize the designated mass subject to the per-anchor cap
// and to the expected hidden-partner density staying below the removable B2
// mass everywhere, so the carving near anchors never goes negative.
Designation designate(const LRTemplate& tpl, const std::vector<double>& anchors) {
  Designation d;
  d.sigma.assign(anchors.size(), 0.0);
  if (anchors.empty() || tpl.pi_cap <= 0.0 || tpl.lp_bound <= 0.0) return d;
  const double reach = tpl.hidden_max;
  const double peak = hidden_kernel(tpl, tpl.hidden_min);
  std::size_t begin = 0;
  while (begin < anchors.size()) {
    std::size_t end = begin + 1;
    while (end < anchors.size() && anchors[end] - anchors[end - 1] <= 2.0 * reach)
      ++end;
    const std::size_t m = end - begin;
    if (m == 1) {
      d.sigma[begin] = std::min(tpl.pi_cap, tpl.lp_bound / peak);
    } else {
      // The summed density is piecewise constant; breakpoints plus midpoints
      // make the bound exact, the uniform grid is kept as a guard.
      std::vector<double> pts;
      for (std::size_t j = begin; j < end; ++j) {
        pts.push_back(anchors[j] - tpl.hidden_max);
        pts.push_back(anchors[j] - tpl.hidden_min);
        pts.push_back(anchors[j] + tpl.hidden_min);
        pts.push_back(anchors[j] + tpl.hidden_max);
      }
      std::sort(pts.begin(), pts.end());
      const std::size_t nb = pts.size();
      for (std::size_t i = 0; i + 1 < nb; ++i)
        pts.push_back(0.5 * (pts[i] + pts[i + 1]));
      const double lo = anchors[begin] - reach;
      const double hi = anchors[end - 1] + reach;
      double step = tpl.jitter_width / 8.0;
      if ((hi - lo) / step > 4000.0) step = (hi - lo) / 4000.0;
      for (double s = lo; s < hi + 0.5 * step; s += step) pts.push_back(s);
      std::sort(pts.begin(), pts.end());
      LpProblem lp;
      lp.num_vars = static_cast<int>(m);
      lp.objective.assign(m, 1.0);
      lp.upper.assign(m, tpl.pi_cap);
      double last = pts.front() - 1.0;
      for (double s : pts) {
        if (s - last < 1e-12) continue;
        last = s;
        std::vector<double> row(m, 0.0);
        bool nonzero = false;
        for (std::size_t j = 0; j < m; ++j) {
          row[j] = hidden_kernel(tpl, s - anchors[begin + j]);
          nonzero |= row[j] > 0.0;
        }
        if (!nonzero) continue;
        lp.a_ub.push_back(std::move(row));
        lp.b_ub.push_back(tpl.lp_bound);
      }
      const LpResult res = solve_lp(lp);
      assert(res.feasible && res.bounded);
      for (std::size_t j = 0; j < m; ++j)
        d.sigma[begin + j] = std::max(0.0, res.x[j]);
    }
    begin = end;
  }
  for (double s : d.sigma) d.total += s;
  return d;
}

// Monte Carlo over anchor realizations; only the designation step matters.
double calibrate_hidden_rate(const LRTemplate& tpl, const LRConfig& cfg,
                             Rng& rng) {
  const double w = cfg.window + 2.0 * cfg.pad;
  RunningStats achieved;
  for (int i = 0; i < cfg.calibration_trials; ++i) {
    const auto anchors = poisson_process(rng, tpl.rate_a[1], 0.0, w);
    const Designation d = designate(tpl, anchors);
    achieved.add(std::min(tpl.target_hidden * w, d.total) / w);
  }
  return achieved.mean;
}

}  // namespace

double triangle_eval(const TriangleDensity& j, double x) {
  if (j.width <= 0.0)
    throw std::invalid_argument("triangle width must be positive");
  const double a = std::abs(x) / j.width;
  return a >= 1.0 ? 0.0 : (1.0 - a) / j.width;
}

double triangle_sample(const TriangleDensity& j, Rng& rng) {
  if (j.width <= 0.0)
    throw std::invalid_argument("triangle width must be positive");
  return rng.uniform(0.0, j.width) - rng.uniform(0.0, j.width);
}

OutcomeProbabilities pr_box() {
  OutcomeProbabilities p;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    if (idx == kPair22) {
      p.p[idx][1] = 0.5;
      p.p[idx][2] = 0.5;
    } else {
      p.p[idx][0] = 0.5;
      p.p[idx][3] = 0.5;
    }
  }
  return p;
}

OutcomeProbabilities apply_coincidence_shift(const OutcomeProbabilities& p,
                                             double delta_c) {
  if (delta_c < 0.0) throw std::invalid_argument("delta_c must be nonnegative");
  OutcomeProbabilities out = p;
  out.p[kPair22][3] += delta_c;
  out.p[kPair22][0] += delta_c;
  out.p[kPair22][1] -= delta_c;
  out.p[kPair22][2] -= delta_c;
  if (out.p[kPair22][1] < 0.0 || out.p[kPair22][2] < 0.0)
    throw std::invalid_argument("delta_c exceeds the anticorrelated 22 mass");
  return out;
}

PolytopeDecomposition decompose_template(const OutcomeProbabilities& p_prime) {
  const OutcomeProbabilities box = pr_box();
  LpProblem lp;
  lp.num_vars = 17;  // 16 deterministic strategies plus the PR weight
  lp.objective.assign(17, 1.0);
  lp.objective[16] = 0.0;
  // Tie-break toward removable strategies (every B2 co-click pattern without
  // A2): their B2 clicks are the mass the generator can carve near hidden
  // coincidences without touching any observable coincidence rate.
  lp.objective[kB2] += 1e-7;
  lp.objective[kA1 | kB2] += 1e-7;
  lp.objective[kB1 | kB2] += 1e-7;
  lp.objective[kA1 | kB1 | kB2] += 1e-7;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const SettingsPair ab = SettingsPair::from_index(idx);
    for (int cell = 0; cell < 4; ++cell) {
      std::vector<double> row(17, 0.0);
      for (int v = 0; v < 16; ++v) {
        const int ca = (ab.a == Setting::S1) ? (v & kA1) != 0 : (v & kA2) != 0;
        const int cb = (ab.b == Setting::S1) ? (v & kB1) != 0 : (v & kB2) != 0;
        row[v] = (ca * 2 + cb == cell) ? 1.0 : 0.0;
      }
      row[16] = box.p[idx][cell];
      lp.a_eq.push_back(std::move(row));
      lp.b_eq.push_back(p_prime.p[idx][cell]);
    }
  }
  const LpResult res = solve_lp(lp);
  if (!res.feasible)
    throw std::runtime_error("statistics lie outside the local + PR-box polytope");
  assert(res.bounded);
  PolytopeDecomposition d;
  d.lambda_pr = std::max(0.0, res.x[16]);
  for (int v = 0; v < 16; ++v) {
    d.vertex_weight[v] = std::max(0.0, res.x[v]);
    d.lambda_lr += d.vertex_weight[v];
  }
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    const SettingsPair ab = SettingsPair::from_index(idx);
    for (int cell = 0; cell < 4; ++cell) {
      if (d.lambda_lr <= 1e-12) {
        d.p_lr.p[idx][cell] = 0.25;  // placeholder, the weight is zero
        continue;
      }
      double sum = 0.0;
      for (int v = 0; v < 16; ++v) {
        const int ca = (ab.a == Setting::S1) ? (v & kA1) != 0 : (v & kA2) != 0;
        const int cb = (ab.b == Setting::S1) ? (v & kB1) != 0 : (v & kB2) != 0;
        if (ca * 2 + cb == cell) sum += d.vertex_weight[v];
      }
      d.p_lr.p[idx][cell] = sum / d.lambda_lr;
    }
  }
  return d;
}

LRTemplate make_lr_template(const OutcomeProbabilities& p_target,
                            double delta_c, double jitter_width) {
  if (jitter_width <= 0.0)
    throw std::invalid_argument("jitter width must be positive");
  LRTemplate tpl;
  tpl.p_target = p_target;
  tpl.delta_c = delta_c;
  tpl.jitter_width = jitter_width;
  tpl.p_prime = apply_coincidence_shift(p_target, delta_c);
  tpl.decomp = decompose_template(tpl.p_prime);
  tpl.rate_a = {tpl.p_prime.marginal_a(Setting::S1),
                tpl.p_prime.marginal_a(Setting::S2)};
  tpl.rate_b = {tpl.p_prime.marginal_b(Setting::S1),
                tpl.p_prime.marginal_b(Setting::S2)};
  for (int idx = 0; idx < kNumSettingsPairs; ++idx)
    tpl.coincidence_rate[idx] = tpl.p_prime.p[idx][3];
  tpl.target_hidden = 0.5 * tpl.decomp.lambda_pr;
  tpl.hidden_min = 1.5 * jitter_width;
  tpl.hidden_max = 3.0 * jitter_width;
  tpl.pi_cap = 1.0;
  tpl.lp_bound = tpl.decomp.vertex_weight[kB2] +
                 tpl.decomp.vertex_weight[kA1 | kB2] +
                 tpl.decomp.vertex_weight[kB1 | kB2] +
                 tpl.decomp.vertex_weight[kA1 | kB1 | kB2];
  return tpl;
}

CalibrationReport calibrate_delta_c(const OutcomeProbabilities& p_target,
                                    double jitter_width, const LRConfig& cfg,
                                    Rng& rng) {
  CalibrationReport rep;
  rep.delta_c_max = std::min(p_target.p[kPair22][1], p_target.p[kPair22][2]);
  // Common anchor ensemble across candidates: the acceptance indicator is
  // then monotone in delta_c (larger shift lowers the target and frees
  // removable mass), so the smallest feasible shift can be bisected.
  const std::uint64_t ensemble = rng.next_u64();
  const auto evaluate = [&](double dc, bool* ok) -> double {
    LRTemplate tpl;
    try {
      tpl = make_lr_template(p_target, dc, jitter_width);
    } catch (const std::exception&) {
      rep.tried_delta_c.push_back(dc);
      rep.tried_hidden.push_back(-1.0);
      *ok = false;
      return -1.0;
    }
    Rng eval(Rng::substream(ensemble, 0));
    const double achieved = calibrate_hidden_rate(tpl, cfg, eval);
    rep.tried_delta_c.push_back(dc);
    rep.tried_hidden.push_back(achieved);
    *ok = achieved >= cfg.accept_fraction * tpl.target_hidden;
    return achieved;
  };
  double lo = 0.0, hi = 0.0;
  bool found = false;
  std::vector<double> grid = {0.0};
  for (int i = 1; i <= 16; ++i)
    grid.push_back(0.999 * rep.delta_c_max * i / 16.0);
  for (double dc : grid) {
    bool ok = false;
    evaluate(dc, &ok);
    if (ok) {
      hi = dc;
      found = true;
      break;
    }
    lo = dc;
  }
  if (!found) return rep;
  for (int it = 0; it < 20 && hi - lo > 1e-6 * std::max(rep.delta_c_max, 1e-9);
       ++it) {
    const double mid = 0.5 * (lo + hi);
    bool ok = false;
    evaluate(mid, &ok);
    (ok ? hi : lo) = mid;
  }
  bool ok = false;
  const double achieved = evaluate(hi, &ok);
  assert(ok);
  const LRTemplate tpl = make_lr_template(p_target, hi, jitter_width);
  rep.feasible = true;
  rep.delta_c = hi;
  rep.lambda_lr = tpl.decomp.lambda_lr;
  rep.lambda_pr = tpl.decomp.lambda_pr;
  rep.target_hidden = tpl.target_hidden;
  rep.achieved_hidden = std::min(achieved, tpl.target_hidden);
  return rep;
}

LRTemplate calibrated_lr_template(const OutcomeProbabilities& p_target,
                                  double jitter_width, const LRConfig& cfg,
                                  Rng& rng, CalibrationReport* report) {
  CalibrationReport rep = calibrate_delta_c(p_target, jitter_width, cfg, rng);
  if (report) *report = rep;
  if (!rep.feasible)
    throw std::runtime_error(
        "no coincidence shift in range makes the mimic construction feasible");
  LRTemplate tpl = make_lr_template(p_target, rep.delta_c, jitter_width);
  tpl.hidden_rate = rep.achieved_hidden;
  return tpl;
}

// Every trial realizes the decomposition as independent strategy-event
// streams.  Strategies containing an A2 click are realized by classifying
// the tags of a single Poisson A2 sequence, which also hosts the hidden
// coincidences; strategies without A2 run as free Poisson streams.  Same
// party co-clicks share one physical click time, cross party separations are
// jitter triangles.  This makes every marginal and every coincidence rate of
// the template exact by construction, including the same-party overlaps no
// independent per-pair bookkeeping can satisfy.
TrialRecord generate_lr_trial(const LRTemplate& tpl, const LRConfig& cfg,
                              SettingsPair ab, std::uint64_t id, Rng& rng) {
  const double lo = -cfg.pad;
  const double hi = cfg.window + cfg.pad;
  const double w = hi - lo;
  const auto& q = tpl.decomp.vertex_weight;
  const TriangleDensity jit{tpl.jitter_width};

  std::vector<double> a1, b1, b2;
  std::vector<double> a2 = poisson_process(rng, tpl.rate_a[1], lo, hi);

  const Designation des = designate(tpl, a2);
  const double target = tpl.target_hidden * w;
  const double phi = (des.total > target && des.total > 0.0) ? target / des.total : 1.0;

  const auto rho = [&](double s) {
    double dens = 0.0;
    auto it = std::lower_bound(a2.begin(), a2.end(), s - tpl.hidden_max);
    for (; it != a2.end() && *it <= s + tpl.hidden_max; ++it)
      dens += phi * des.sigma[it - a2.begin()] * hidden_kernel(tpl, s - *it);
    return dens;
  };

  double a2_weight = 0.0;
  for (int v = 0; v < 16; ++v)
    if (v & kA2) a2_weight += q[v];
  assert(std::abs(a2_weight - (tpl.rate_a[1] - tpl.target_hidden)) < 1e-6);

  for (std::size_t j = 0; j < a2.size(); ++j) {
    const double t = a2[j];
    if (rng.uniform() < phi * des.sigma[j]) {
      // Hidden coincidence: wide 22 partner, completions at the other
      // settings split the separation into three plausible jumps.
      const double x = sample_hidden_separation(tpl, rng);
      b2.push_back(t + x);
      b1.push_back(t + x / 3.0);
      a1.push_back(t + 2.0 * x / 3.0);
      continue;
    }
    if (a2_weight <= 0.0) continue;
    double r = rng.uniform() * a2_weight;
    int v = 0;
    for (int c = 0; c < 16; ++c) {
      if (!(c & kA2)) continue;
      r -= q[c];
      if (r < 0.0) {
        v = c;
        break;
      }
    }
    if (v & kA1) a1.push_back(t);
    if (v & (kB1 | kB2)) {
      const double tau = t + triangle_sample(jit, rng);
      if (v & kB1) b1.push_back(tau);
      if (v & kB2) b2.push_back(tau);
    }
  }

  // Free streams without A2 or B2; nothing here is carved.
  for (int v : {kB1, kA1, kA1 | kB1}) {
    for (double s : poisson_process(rng, q[v], lo, hi)) {
      if (v & kA1) a1.push_back(s);
      if (v & kB1) b1.push_back((v & kA1) ? s + triangle_sample(jit, rng) : s);
    }
  }
  // Carvable streams: their B2 clicks are thinned by the expected
  // hidden-partner density, then the carved mass is returned homogeneously,
  // so the B2 process stays flat even conditioned on this trial's
  // designation.  A B1B2 event keeps its B1 click (nothing observable pairs
  // a B1 with a B2); carved A1B2 and A1B1B2 events are removed and re-added
  // whole so every apparent coincidence rate is untouched.
  for (double s : poisson_process(rng, q[kB2], lo, hi)) {
    if (rng.uniform() * tpl.lp_bound < rho(s)) continue;
    b2.push_back(s);
  }
  for (double s : poisson_process(rng, q[kB1 | kB2], lo, hi)) {
    b1.push_back(s);
    if (rng.uniform() * tpl.lp_bound < rho(s)) continue;
    b2.push_back(s);
  }
  for (int v : {kA1 | kB2, kA1 | kB1 | kB2}) {
    for (double s : poisson_process(rng, q[v], lo, hi)) {
      const double tau = s + triangle_sample(jit, rng);
      if (rng.uniform() * tpl.lp_bound < rho(tau)) continue;
      a1.push_back(s);
      if (v & kB1) b1.push_back(tau);
      b2.push_back(tau);
    }
  }
  if (tpl.lp_bound > 0.0) {
    const double single_rate =
        tpl.hidden_rate * (q[kB2] + q[kB1 | kB2]) / tpl.lp_bound;
    for (double s : poisson_process(rng, single_rate, lo, hi))
      b2.push_back(s);
    for (int v : {kA1 | kB2, kA1 | kB1 | kB2}) {
      const double rate = tpl.hidden_rate * q[v] / tpl.lp_bound;
      for (double s : poisson_process(rng, rate, lo, hi)) {
        a1.push_back(s);
        const double tau = s + triangle_sample(jit, rng);
        if (v & kB1) b1.push_back(tau);
        b2.push_back(tau);
      }
    }
  }

  const auto finish = [&cfg](std::vector<double>& v) {
    v.erase(std::remove_if(v.begin(), v.end(),
                           [&cfg](double x) { return x < 0.0 || x >= cfg.window; }),
            v.end());
    std::sort(v.begin(), v.end());
  };
  finish(a1);
  finish(a2);
  finish(b1);
  finish(b2);

  TrialRecord rec;
  rec.id = id;
  rec.settings = ab;
  rec.outcome_a = (ab.a == Setting::S1) ? std::move(a1) : std::move(a2);
  rec.outcome_b = (ab.b == Setting::S1) ? std::move(b1) : std::move(b2);
  return rec;
}

void write_calibration_report(std::ostream& os, const CalibrationReport& rep) {
  os << "feasible " << (rep.feasible ? "yes" : "no") << "\n";
  os << "delta_c " << rep.delta_c << " of max " << rep.delta_c_max << "\n";
  os << "lambda_lr " << rep.lambda_lr << " lambda_pr " << rep.lambda_pr << "\n";
  os << "hidden_rate target " << rep.target_hidden << " achieved "
     << rep.achieved_hidden << "\n";
  for (std::size_t i = 0; i < rep.tried_delta_c.size(); ++i)
    os << "tried " << rep.tried_delta_c[i] << " hidden " << rep.tried_hidden[i]
       << "\n";
}

}  // namespace ttbell
