#include "ttbell/pipeline.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "json.hpp"
#include "ttbell/bell.hpp"
#include "ttbell/distance.hpp"
#include "ttbell/lrsource.hpp"
#include "ttbell/nelder_mead.hpp"
#include "ttbell/parallel.hpp"
#include "ttbell/rng.hpp"
#include "ttbell/stats.hpp"

namespace ttbell {

namespace {

// Stream ids clear of the per-trial ids 0 .. N_t + N_a - 1.
constexpr std::uint64_t kCalibrationStream = 0xCA11B8A7E0ULL;
constexpr std::uint64_t kSweepStream = 0x5EED9B1D00ULL;

const char* pair_label(int idx) {
  static const char* labels[kNumSettingsPairs] = {"11", "12", "21", "22"};
  return labels[idx];
}

}  // namespace

SourceKind parse_source(const std::string& name) {
  if (name == "quantum") return SourceKind::Quantum;
  if (name == "lr") return SourceKind::LocalMimic;
  if (name == "delta-shift") return SourceKind::DeltaShift;
  throw std::invalid_argument("unknown source kind: " + name);
}

std::string format_source(SourceKind kind) {
  switch (kind) {
    case SourceKind::Quantum: return "quantum";
    case SourceKind::LocalMimic: return "lr";
    case SourceKind::DeltaShift: return "delta-shift";
  }
  throw std::logic_error("unreachable source kind");
}

ProtocolConfig ProtocolConfig::desk_scale() { return {}; }

ProtocolConfig ProtocolConfig::paper_scale() {
  ProtocolConfig cfg;
  cfg.training_trials = 10000;
  cfg.analysis_trials = 200000;
  cfg.window = 1000.0;
  return cfg;
}

void ProtocolConfig::validate() const {
  if (training_trials == 0 || analysis_trials == 0) {
    throw std::invalid_argument("trial counts must be positive");
  }
  if (!(window > 0.0)) throw std::invalid_argument("trial window must be positive");
  if (!(pair_rate > 0.0)) throw std::invalid_argument("pair rate must be positive");
  if (!(efficiency > 0.0) || efficiency > 1.0) {
    throw std::invalid_argument("efficiency must be in (0, 1]");
  }
  if (!(compression_lambda > 0.0)) {
    throw std::invalid_argument("compression slope must be positive");
  }
  if (pbr_block == 0) throw std::invalid_argument("PBR block size must be positive");
  for (double f : candidate_fractions) {
    if (!(f > 0.0)) throw std::invalid_argument("candidate fractions must be positive");
  }
  if (source == SourceKind::LocalMimic) {
    if (jitter.kind != JitterModel::Kind::Uniform) {
      throw std::invalid_argument("the local mimic source needs uniform jitter");
    }
    if (pair_rate != 1.0) {
      throw std::invalid_argument("the local mimic source fixes the pair rate at 1");
    }
  }
  if (source == SourceKind::DeltaShift && !(delta_shift > 0.0)) {
    throw std::invalid_argument("delta-shift offset must be positive");
  }
}

namespace {

// Per-run source state, built once so the local-mimic calibration is not
// repeated per generated chunk.
struct SourcePlan {
  SourceKind kind = SourceKind::Quantum;
  SourceConfig quantum;
  DeltaShiftConfig delta;
  LRTemplate lr;
  LRConfig lr_cfg;
};

SourcePlan make_plan(const ProtocolConfig& cfg) {
  SourcePlan plan;
  plan.kind = cfg.source;
  switch (cfg.source) {
    case SourceKind::Quantum: {
      const SourceOptimum opt = optimize_source(cfg.efficiency);
      plan.quantum.theta = opt.theta;
      plan.quantum.angles = opt.angles;
      plan.quantum.efficiency = cfg.efficiency;
      plan.quantum.pair_rate = cfg.pair_rate;
      plan.quantum.window = cfg.window;
      plan.quantum.jitter_a = cfg.jitter;
      plan.quantum.jitter_b = cfg.jitter;
      break;
    }
    case SourceKind::DeltaShift: {
      plan.delta.pair_rate = cfg.pair_rate;
      plan.delta.window = cfg.window;
      plan.delta.delta = cfg.delta_shift;
      break;
    }
    case SourceKind::LocalMimic: {
      const SourceOptimum opt = optimize_source(cfg.efficiency);
      const OutcomeProbabilities p =
          outcome_probabilities(opt.theta, opt.angles, cfg.efficiency);
      plan.lr_cfg.window = cfg.window;
      Rng rng = Rng::substream(cfg.seed, kCalibrationStream);
      plan.lr = calibrated_lr_template(p, cfg.jitter.param, plan.lr_cfg, rng);
      break;
    }
  }
  return plan;
}

TrialRecord generate_one(const ProtocolConfig& cfg, const SourcePlan& plan,
                         std::uint64_t id) {
  Rng rng = Rng::substream(cfg.seed, id);
  const SettingsPair ab = SettingsPair::from_index(static_cast<int>(rng.below(4)));
  switch (plan.kind) {
    case SourceKind::Quantum:
      return generate_quantum_trial(plan.quantum, ab, id, rng);
    case SourceKind::DeltaShift:
      return generate_delta_shift_trial(plan.delta, ab, id, rng);
    case SourceKind::LocalMimic:
      return generate_lr_trial(plan.lr, plan.lr_cfg, ab, id, rng);
  }
  throw std::logic_error("unreachable source kind");
}

std::vector<TrialRecord> generate_with_plan(const ProtocolConfig& cfg,
                                            const SourcePlan& plan,
                                            std::size_t first,
                                            std::size_t count) {
  std::vector<TrialRecord> out(count);
  parallel_for(count, [&](std::size_t i) {
    out[i] = generate_one(cfg, plan, static_cast<std::uint64_t>(first + i));
  });
  return out;
}

}  // namespace

std::vector<TrialRecord> generate_trials(const ProtocolConfig& cfg,
                                         std::size_t first, std::size_t count) {
  cfg.validate();
  return generate_with_plan(cfg, make_plan(cfg), first, count);
}

DifferencePools collect_difference_pools(
    const std::vector<TrialRecord>& training, double compression_lambda) {
  if (!(compression_lambda > 0.0)) {
    throw std::invalid_argument("compression slope must be positive");
  }
  const FunctionTuple comp = make_compression(compression_lambda);
  DifferencePools pools;
  for (const TrialRecord& rec : training) {
    const int idx = rec.settings.index();
    const TimetagSequence& r = idx == kPair11 ? rec.outcome_b : rec.outcome_a;
    const TimetagSequence& t = idx == kPair11 ? rec.outcome_a : rec.outcome_b;
    pools.deletable[idx] += static_cast<double>(r.size());
    const DistanceResult res = min_cost(comp, idx, r, t);
    for (const auto& [i, j] : res.matching.pairs) {
      const double x = t[j] - r[i];
      // A match at the saturation cost is bookkeeping-identical to deleting
      // the tag; keeping it would seed the pool with unexplainable
      // differences.
      if (comp.eval(idx, x) < 1.0) pools.diffs[idx].push_back(x);
    }
  }
  return pools;
}

double approximate_bell(const DifferencePools& pools,
                        const LinearEdgeWindowParams& params) {
  const FunctionTuple g = make_linear_edge_window(params);
  double total = 0.0;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    double cost =
        pools.deletable[idx] - static_cast<double>(pools.diffs[idx].size());
    for (double x : pools.diffs[idx]) cost += g.eval(idx, x);
    total += idx == kPair22 ? -cost : cost;
  }
  return total;
}

TupleTrainResult optimize_tuple_params(const std::vector<TrialRecord>& training,
                                       double compression_lambda) {
  if (training.empty()) {
    throw std::invalid_argument("tuple training needs a nonempty training set");
  }
  const DifferencePools pools =
      collect_difference_pools(training, compression_lambda);
  std::string empty;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    if (pools.diffs[idx].empty()) {
      if (!empty.empty()) empty += ", ";
      empty += pair_label(idx);
    }
  }
  if (!empty.empty()) {
    throw std::invalid_argument("empty difference pool at settings pair " + empty);
  }

  const auto objective = [&pools](double t, double m) {
    return approximate_bell(pools, LinearEdgeWindowParams::symmetric(t, m));
  };

  const double t_lo = 1e-3, t_hi = 0.5;
  double best_t = t_lo, best_m = 0.5 / t_lo;
  double best_v = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 32; ++i) {
    const double t = t_lo * std::pow(t_hi / t_lo, i / 31.0);
    // Slopes scaled to the threshold: edge lengths 1/m from 2t down to t/10.
    for (double k : {0.5, 1.0, 2.0, 5.0, 10.0}) {
      const double m = k / t;
      const double v = objective(t, m);
      if (v < best_v) {
        best_v = v;
        best_t = t;
        best_m = m;
      }
    }
  }

  const auto log_objective = [&objective](const std::vector<double>& x) {
    return objective(std::exp(x[0]), std::exp(x[1]));
  };
  const NelderMeadResult refined = nelder_mead(
      log_objective, {std::log(best_t), std::log(best_m)}, 0.35, 1e-10, 200);
  if (refined.value < best_v) {
    best_t = std::exp(refined.x[0]);
    best_m = std::exp(refined.x[1]);
    best_v = refined.value;
  }

  TupleTrainResult out;
  out.threshold = best_t;
  out.slope = best_m;
  out.approx_bell = best_v;
  out.params = LinearEdgeWindowParams::symmetric(best_t, best_m);
  return out;
}

namespace {

nlohmann::json pair_values_to_json(const std::vector<PairValue>& values) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PairValue& pv : values) {
    arr.push_back(nlohmann::json::array({pv.pair_index, pv.value}));
  }
  return arr;
}

std::vector<PairValue> pair_values_from_json(const nlohmann::json& arr,
                                             const char* key) {
  if (!arr.is_array()) {
    throw std::invalid_argument(std::string("parameter field ") + key +
                                " must be an array");
  }
  std::vector<PairValue> out;
  out.reserve(arr.size());
  for (const auto& entry : arr) {
    if (!entry.is_array() || entry.size() != 2) {
      throw std::invalid_argument(std::string("parameter field ") + key +
                                  " entries must be [pair, value]");
    }
    PairValue pv;
    pv.pair_index = entry[0].get<int>();
    pv.value = entry[1].get<double>();
    if (pv.pair_index < 0 || pv.pair_index >= kNumSettingsPairs) {
      throw std::invalid_argument(std::string("parameter field ") + key +
                                  " has a settings index out of range");
    }
    out.push_back(pv);
  }
  return out;
}

}  // namespace

std::string TrainedParams::to_json_string() const {
  nlohmann::json j;
  j["window"] = window;
  j["threshold"] = threshold;
  j["slope"] = slope;
  j["candidate_fractions"] = candidate_fractions;
  j["conventional_training"] = pair_values_to_json(conventional_training);
  j["timetag_training"] = pair_values_to_json(timetag_training);
  j["adjusted_training"] = pair_values_to_json(adjusted_training);
  return j.dump();
}

TrainedParams TrainedParams::from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  TrainedParams out;
  out.window = j.at("window").get<double>();
  out.threshold = j.at("threshold").get<double>();
  out.slope = j.at("slope").get<double>();
  out.candidate_fractions =
      j.at("candidate_fractions").get<std::vector<double>>();
  out.conventional_training =
      pair_values_from_json(j.at("conventional_training"), "conventional_training");
  out.timetag_training =
      pair_values_from_json(j.at("timetag_training"), "timetag_training");
  out.adjusted_training =
      pair_values_from_json(j.at("adjusted_training"), "adjusted_training");
  return out;
}

namespace {

// Adjusted cost and signed Bell value per trial under the trained tuple.  The
// cost is evaluated once; the Bell value only rescales it.
std::pair<std::vector<PairValue>, std::vector<PairValue>> tuple_values(
    const std::vector<TrialRecord>& trials, const LinearEdgeWindowParams& params,
    const SettingsDistribution& dist) {
  const CHFunction<TimetagSequence> ch = apply_ns_adjustment(
      ch_from_tuple_distance(make_linear_edge_window(params)),
      standard_ns_adjustment<TimetagSequence>(timetag_count()));
  std::vector<PairValue> bell(trials.size());
  std::vector<PairValue> adjusted(trials.size());
  parallel_for(trials.size(), [&](std::size_t i) {
    const TrialRecord& rec = trials[i];
    const int idx = rec.settings.index();
    const double cost = idx == kPair11
                            ? ch.term(idx, rec.outcome_b, rec.outcome_a)
                            : ch.term(idx, rec.outcome_a, rec.outcome_b);
    adjusted[i] = PairValue{idx, cost};
    const double sign = idx == kPair22 ? -1.0 : 1.0;
    assert(dist.p[idx] > 0.0);
    bell[i] = PairValue{idx, sign * cost / dist.p[idx]};
  });
  return {std::move(bell), std::move(adjusted)};
}

}  // namespace

TrainedParams train_protocol(const ProtocolConfig& cfg,
                             const std::vector<TrialRecord>& training) {
  cfg.validate();
  if (training.empty()) throw std::invalid_argument("training set is empty");
  const SettingsDistribution dist = SettingsDistribution::uniform();
  TrainedParams tp;
  tp.window = optimize_window(training, dist);
  const TupleTrainResult tuple =
      optimize_tuple_params(training, cfg.compression_lambda);
  tp.threshold = tuple.threshold;
  tp.slope = tuple.slope;
  tp.candidate_fractions = cfg.candidate_fractions;
  tp.conventional_training = conventional_values(training, tp.window, dist);
  auto [bell, adjusted] = tuple_values(training, tp.tuple(), dist);
  tp.timetag_training = std::move(bell);
  tp.adjusted_training = std::move(adjusted);
  return tp;
}

ProtocolReport run_analyses(const TrainedParams& trained,
                            const std::vector<TrialRecord>& analysis,
                            std::size_t pbr_block) {
  if (analysis.empty()) throw std::invalid_argument("analysis set is empty");
  if (!(trained.window > 0.0) || !(trained.threshold > 0.0) ||
      !(trained.slope > 0.0)) {
    throw std::invalid_argument("trained parameters are incomplete");
  }
  if (pbr_block == 0) throw std::invalid_argument("PBR block size must be positive");
  const SettingsDistribution dist = SettingsDistribution::uniform();

  ProtocolReport rep;
  rep.trained = trained;

  std::vector<PairValue> conv(analysis.size());
  parallel_for(analysis.size(), [&](std::size_t i) {
    conv[i] = PairValue{
        analysis[i].settings.index(),
        conventional_trial_value(analysis[i], trained.window, dist)};
  });
  RunningStats conv_mean;
  for (const PairValue& pv : conv) conv_mean.add(pv.value);
  rep.conventional.window = trained.window;
  rep.conventional.ch_estimate = conv_mean.mean;
  rep.conventional.snr = estimate_snr(trained.conventional_training, conv, dist);
  rep.conventional.trials = analysis.size();
  rep.conventional.loophole_free = false;

  auto [bell, adjusted] = tuple_values(analysis, trained.tuple(), dist);
  rep.timetag = estimate_snr(trained.timetag_training, bell, dist);

  std::array<std::vector<double>, kNumSettingsPairs> adj_values;
  std::array<RunningStats, kNumSettingsPairs> adj_stats;
  for (const PairValue& pv : trained.adjusted_training) {
    adj_values[pv.pair_index].push_back(pv.value);
    adj_stats[pv.pair_index].add(pv.value);
  }
  std::vector<PBRCandidate> candidates;
  for (double frac : trained.candidate_fractions) {
    std::array<double, kNumSettingsPairs> width{};
    for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
      width[idx] =
          frac * (adj_stats[idx].n > 1 ? std::sqrt(adj_stats[idx].variance())
                                       : 0.0);
    }
    PBRCandidate c;
    try {
      c.factor = make_test_factor(choose_truncation(adj_values, width), dist);
    } catch (const std::invalid_argument&) {
      continue;  // degenerate ceiling at this width; drop the candidate
    }
    c.label = "w" + std::to_string(frac).substr(0, 3) + "sd";
    candidates.push_back(std::move(c));
  }
  candidates.push_back(PBRCandidate{trivial_test_factor(), "trivial"});
  PBRConfig pcfg;
  pcfg.block_size = pbr_block;
  rep.pbr = pbr_run(candidates, trained.adjusted_training, adjusted, pcfg);

  rep.row.conventional_snr = rep.conventional.snr.snr;
  rep.row.timetag_snr = rep.timetag.snr;
  rep.row.pbr_logp = rep.pbr.logp;
  rep.row.equivalent_sigma = rep.pbr.sigma;
  return rep;
}

namespace {

double reported_jitter(const JitterModel& jitter) {
  switch (jitter.kind) {
    case JitterModel::Kind::None: return 0.0;
    case JitterModel::Kind::Uniform: return jitter.param;
    case JitterModel::Kind::Exponential: return jitter.median();
  }
  throw std::logic_error("unreachable jitter kind");
}

}  // namespace

ProtocolReport run_protocol(const ProtocolConfig& cfg) {
  cfg.validate();
  const SourcePlan plan = make_plan(cfg);
  const std::vector<TrialRecord> training =
      generate_with_plan(cfg, plan, 0, cfg.training_trials);
  const std::vector<TrialRecord> analysis =
      generate_with_plan(cfg, plan, cfg.training_trials, cfg.analysis_trials);
  const TrainedParams trained = train_protocol(cfg, training);
  ProtocolReport rep = run_analyses(trained, analysis, cfg.pbr_block);
  rep.row.jitter_param = reported_jitter(cfg.jitter);
  return rep;
}

std::vector<SweepRow> sweep(const ProtocolConfig& base,
                            const std::vector<double>& jitter_grid) {
  base.validate();
  if (jitter_grid.empty()) {
    throw std::invalid_argument("sweep needs a nonempty jitter grid");
  }
  std::vector<SweepRow> rows(jitter_grid.size());
  for (std::size_t i = 0; i < jitter_grid.size(); ++i) {
    const double g = jitter_grid[i];
    if (!(g >= 0.0)) throw std::invalid_argument("jitter grid values must be >= 0");
    ProtocolConfig cfg = base;
    cfg.seed = Rng::substream(base.seed, kSweepStream + i).next_u64();
    if (g == 0.0) {
      cfg.jitter = JitterModel::none();
    } else {
      switch (base.jitter.kind) {
        case JitterModel::Kind::Uniform:
          cfg.jitter = JitterModel::uniform(g);
          break;
        case JitterModel::Kind::Exponential:
          cfg.jitter = JitterModel::exponential(std::log(2.0) / g);
          break;
        case JitterModel::Kind::None:
          throw std::invalid_argument(
              "a nonzero sweep point needs a jitter kind in the base config");
      }
    }
    rows[i] = run_protocol(cfg).row;
    rows[i].jitter_param = g;
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "jitter,conventional_snr,timetag_snr,pbr_logp,equivalent_sigma\n";
  for (const SweepRow& r : rows) {
    os << r.jitter_param << ',' << r.conventional_snr << ',' << r.timetag_snr
       << ',' << r.pbr_logp << ',' << r.equivalent_sigma << '\n';
  }
}

std::optional<double> largest_violating_jitter(
    const std::vector<SweepRow>& rows) {
  std::optional<double> best;
  for (const SweepRow& r : rows) {
    if (r.pbr_logp > 0.0 && (!best || r.jitter_param > *best)) {
      best = r.jitter_param;
    }
  }
  return best;
}

void write_report_json(std::ostream& os, const ProtocolReport& rep) {
  nlohmann::json j;
  j["trained"]["window"] = rep.trained.window;
  j["trained"]["threshold"] = rep.trained.threshold;
  j["trained"]["slope"] = rep.trained.slope;
  j["conventional"]["window"] = rep.conventional.window;
  j["conventional"]["ch_estimate"] = rep.conventional.ch_estimate;
  j["conventional"]["snr"] = rep.conventional.snr.snr;
  j["conventional"]["loophole_free"] = rep.conventional.loophole_free;
  j["timetag"]["total"] = rep.timetag.total;
  j["timetag"]["variance"] = rep.timetag.variance;
  j["timetag"]["snr"] = rep.timetag.snr;
  j["pbr"]["logp_raw"] = rep.pbr.logp_raw;
  j["pbr"]["logp"] = rep.pbr.logp;
  j["pbr"]["sigma"] = rep.pbr.sigma;
  j["summary"]["jitter"] = rep.row.jitter_param;
  j["summary"]["conventional_snr"] = rep.row.conventional_snr;
  j["summary"]["timetag_snr"] = rep.row.timetag_snr;
  j["summary"]["pbr_logp"] = rep.row.pbr_logp;
  j["summary"]["equivalent_sigma"] = rep.row.equivalent_sigma;
  os << j.dump(2) << '\n';
}

}  // namespace ttbell
