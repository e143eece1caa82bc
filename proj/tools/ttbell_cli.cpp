// Command-line front end: simulate trial files, train analysis parameters,
// run the three analyses, sweep jitter grids, emit correlation panels, and
// self-check the core engines.  All outputs are plain CSV or JSON.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ttbell/bell.hpp"
#include "ttbell/core.hpp"
#include "ttbell/diagnostics.hpp"
#include "ttbell/distance.hpp"
#include "ttbell/inference.hpp"
#include "ttbell/pipeline.hpp"
#include "ttbell/rng.hpp"
#include "ttbell/simsrc.hpp"
#include "ttbell/tuples.hpp"

namespace {

using namespace ttbell;

int with_output(const std::string& path,
                const std::function<void(std::ostream&)>& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return 0;
  }
  std::ofstream os(path);
  if (!os) {
    std::cerr << "cannot open output file: " << path << "\n";
    return 1;
  }
  fn(os);
  return os.good() ? 0 : 1;
}

std::vector<TrialRecord> load_trials(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open trial file: " + path);
  return read_trials(is);
}

std::string load_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

// Options shared by simulate and sweep.
struct SourceOpts {
  std::string source = "quantum";
  std::string jitter = "none";
  double efficiency = 0.8;
  double delta = 0.1;
  double pair_rate = 1.0;
  std::uint64_t seed = 1;
  bool paper = false;
  bool desk = false;
};

void add_source_opts(CLI::App* sub, SourceOpts& o) {
  sub->add_option("--source", o.source, "quantum | lr | delta-shift")
      ->capture_default_str();
  sub->add_option("--jitter", o.jitter, "uniform:J | exp:G | none")
      ->capture_default_str();
  sub->add_option("--efficiency", o.efficiency, "detector efficiency")
      ->capture_default_str();
  sub->add_option("--delta", o.delta, "delta-shift source offset")
      ->capture_default_str();
  sub->add_option("--pair-rate", o.pair_rate, "emitted pairs per unit time")
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "master seed")->capture_default_str();
  sub->add_flag("--paper-scale", o.paper, "10000/200000 trials, window 1000");
  sub->add_flag("--desk-scale", o.desk, "2000/20000 trials, window 200 (default)");
}

ProtocolConfig config_from(const SourceOpts& o) {
  ProtocolConfig cfg = o.paper ? ProtocolConfig::paper_scale()
                               : ProtocolConfig::desk_scale();
  cfg.source = parse_source(o.source);
  cfg.jitter = parse_jitter(o.jitter);
  cfg.efficiency = o.efficiency;
  cfg.delta_shift = o.delta;
  cfg.pair_rate = o.pair_rate;
  cfg.seed = o.seed;
  return cfg;
}

int run_simulate(const SourceOpts& src, std::size_t trials, bool trials_set,
                 std::size_t first, double window, bool window_set,
                 const std::string& out) {
  ProtocolConfig cfg = config_from(src);
  if (window_set) cfg.window = window;
  const std::size_t count =
      trials_set ? trials : cfg.training_trials + cfg.analysis_trials;
  const auto records = generate_trials(cfg, first, count);
  return with_output(out, [&](std::ostream& os) { write_trials(os, records); });
}

int run_train(const std::string& in, double lambda,
              const std::vector<double>& fractions, const std::string& out) {
  ProtocolConfig cfg;
  cfg.compression_lambda = lambda;
  if (!fractions.empty()) cfg.candidate_fractions = fractions;
  const auto training = load_trials(in);
  const TrainedParams tp = train_protocol(cfg, training);
  std::cerr << "trained on " << training.size() << " trials: window "
            << tp.window << ", threshold " << tp.threshold << ", slope "
            << tp.slope << "\n";
  return with_output(
      out, [&](std::ostream& os) { os << tp.to_json_string() << "\n"; });
}

int run_analyze(const std::string& in, const std::string& params,
                const std::string& mode, std::size_t block,
                const std::string& out) {
  const auto analysis = load_trials(in);
  const TrainedParams tp = TrainedParams::from_json_string(load_text(params));
  const ProtocolReport rep = run_analyses(tp, analysis, block);
  return with_output(out, [&](std::ostream& os) {
    if (mode == "all") {
      write_report_json(os, rep);
    } else if (mode == "conventional") {
      write_conventional_csv(os, rep.conventional);
    } else if (mode == "timetag") {
      os << "total,variance,snr,trials\n";
      os << rep.timetag.total << ',' << rep.timetag.variance << ','
         << rep.timetag.snr << ',' << rep.timetag.trials << '\n';
    } else if (mode == "pbr") {
      write_pbr_csv(os, rep.pbr);
    } else {
      throw std::invalid_argument("unknown analyze mode: " + mode);
    }
  });
}

int run_sweep(const SourceOpts& src, const std::vector<double>& grid,
              std::size_t n_train, bool n_train_set, std::size_t n_ana,
              bool n_ana_set, double window, bool window_set,
              std::size_t block, double lambda, bool threshold,
              const std::string& out) {
  // The grid carries the jitter magnitudes; the --jitter option only needs
  // to pick the kind, so a bare "uniform" or "exp" is accepted too.
  SourceOpts norm = src;
  if (norm.jitter == "uniform") norm.jitter = "uniform:1";
  if (norm.jitter == "exp") norm.jitter = "exp:1";
  ProtocolConfig cfg = config_from(norm);
  if (n_train_set) cfg.training_trials = n_train;
  if (n_ana_set) cfg.analysis_trials = n_ana;
  if (window_set) cfg.window = window;
  cfg.pbr_block = block;
  cfg.compression_lambda = lambda;
  const auto rows = sweep(cfg, grid);
  return with_output(out, [&](std::ostream& os) {
    write_sweep_csv(os, rows);
    if (threshold) {
      const auto t = largest_violating_jitter(rows);
      os << "# largest_violating_jitter,";
      if (t) {
        os << *t << "\n";
      } else {
        os << "none\n";
      }
    }
  });
}

int run_correlate(const std::string& in, const std::string& jitter,
                  double window, int max_lag, const std::string& out) {
  const JitterModel m = parse_jitter(jitter);
  double scale = 0.0;
  switch (m.kind) {
    case JitterModel::Kind::Uniform: scale = m.param; break;
    case JitterModel::Kind::Exponential: scale = m.median(); break;
    case JitterModel::Kind::None:
      throw std::invalid_argument(
          "correlate needs a jitter scale; pass --jitter uniform:J or exp:G");
  }
  const auto trials = load_trials(in);
  const auto panels = correlation_panels(trials, scale, window, max_lag);
  return with_output(
      out, [&](std::ostream& os) { write_correlation_csv(os, panels); });
}

// Built-in consistency battery: cheap deterministic checks of the engines
// underneath the analyses.  The full oracle suites live in the test binaries;
// this is the field diagnostic.
int run_verify(std::uint64_t seed) {
  int checks = 0, failures = 0;
  const auto report = [&](const std::string& name, bool ok) {
    ++checks;
    if (!ok) ++failures;
    std::cout << (ok ? "PASS  " : "FAIL  ") << name << "\n";
  };

  {
    const FunctionTuple g =
        make_linear_edge_window(LinearEdgeWindowParams::symmetric(0.08, 25.0));
    const double u = g.unit_radius();
    Rng rng = Rng::substream(seed, 1);
    bool ok = true;
    for (int it = 0; it < 200 && ok; ++it) {
      const int idx = it % kNumSettingsPairs;
      const auto draw = [&rng](std::size_t n) {
        TimetagSequence s(n);
        for (double& x : s) x = rng.uniform(0.0, 10.0);
        std::sort(s.begin(), s.end());
        return s;
      };
      const TimetagSequence r = draw(rng.below(9));
      const TimetagSequence t = draw(rng.below(9));
      const DistanceResult full = min_cost(g, idx, r, t);
      const double value = min_cost_value(g, idx, r, t);
      const double split = min_cost_value_split(g, idx, r, t, u);
      const double back = matching_cost(g, idx, full.matching, r, t);
      ok = std::abs(full.cost - value) <= 1e-9 &&
           std::abs(value - split) <= 1e-9 &&
           std::abs(back - full.cost) <= 1e-9;
    }
    report("distance evaluations agree (full, value-only, split, backtrack)",
           ok);
  }

  {
    const double w = 0.1;
    const bool win =
        verify_t4(make_hard_window({w, w, w, 3 * w}), -2.0, 2.0, 20000, seed)
            .pass;
    const bool edge = verify_t4(make_linear_edge_window(
                                    LinearEdgeWindowParams::symmetric(0.1, 20.0)),
                                -2.0, 2.0, 20000, seed)
                          .pass;
    const bool comp = verify_t4(make_compression(1.0), -2.0, 2.0, 20000, seed).pass;
    report("distance tuples satisfy the validity inequality", win && edge && comp);
    const bool equal_rejected =
        !verify_t4(make_hard_window_unchecked({w, w, w, w}), -2.0, 2.0, 20000,
                   seed)
             .pass;
    report("equal-width window is rejected by the validity check",
           equal_rejected);
  }

  {
    Rng rng = Rng::substream(seed, 2);
    std::vector<TrialRecord> trials(50);
    for (std::size_t i = 0; i < trials.size(); ++i) {
      trials[i].id = i;
      trials[i].settings =
          SettingsPair::from_index(static_cast<int>(rng.below(4)));
      const auto draw = [&rng](std::size_t n) {
        TimetagSequence s(n);
        for (double& x : s) x = rng.uniform(0.0, 200.0);
        std::sort(s.begin(), s.end());
        return s;
      };
      trials[i].outcome_a = draw(rng.below(6));
      trials[i].outcome_b = draw(rng.below(6));
    }
    std::stringstream buf;
    write_trials(buf, trials);
    const auto back = read_trials(buf);
    bool ok = back.size() == trials.size();
    for (std::size_t i = 0; ok && i < trials.size(); ++i) {
      ok = back[i].id == trials[i].id &&
           back[i].settings == trials[i].settings &&
           back[i].outcome_a == trials[i].outcome_a &&
           back[i].outcome_b == trials[i].outcome_b;
    }
    report("trial files round-trip bit exactly", ok);
  }

  {
    const auto binary = lr_oracle(binary_max_diff_ch(), std::vector<int>{0, 1});
    bool ok = binary.value >= -1e-12;

    std::vector<TimetagSequence> outcomes = {
        {}, {0.1}, {0.45}, {0.1, 0.45}};
    const FunctionTuple g = make_hard_window({0.1, 0.1, 0.1, 0.3});
    const auto raw = lr_oracle(ch_from_tuple_distance(g), outcomes);
    ok = ok && raw.value >= -1e-9;
    const auto adjusted = lr_oracle(
        apply_ns_adjustment(ch_from_tuple_distance(g),
                            standard_ns_adjustment<TimetagSequence>(
                                timetag_count())),
        outcomes);
    ok = ok && adjusted.value >= -1e-9;
    report("local strategies cannot push the Bell sum negative", ok);
  }

  {
    ProtocolConfig cfg;
    cfg.jitter = JitterModel::uniform(0.05);
    cfg.training_trials = 120;
    cfg.analysis_trials = 400;
    cfg.window = 30.0;
    cfg.seed = seed;
    const ProtocolReport a = run_protocol(cfg);
    const ProtocolReport b = run_protocol(cfg);
    report("protocol runs are deterministic in the seed",
           a.row.conventional_snr == b.row.conventional_snr &&
               a.row.timetag_snr == b.row.timetag_snr &&
               a.row.pbr_logp == b.row.pbr_logp &&
               a.trained.threshold == b.trained.threshold);
  }

  std::cout << checks << " checks, " << failures << " failures\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distance-based Bell tests for continuously emitting sources"};
  app.require_subcommand(1);
  int rc = 0;

  auto* sim = app.add_subcommand("simulate", "generate a trial file");
  static SourceOpts sim_src;
  static std::size_t sim_trials = 0, sim_first = 0;
  static double sim_window = 200.0;
  static std::string sim_out;
  add_source_opts(sim, sim_src);
  auto* sim_trials_opt =
      sim->add_option("--trials", sim_trials,
                      "number of trials (default: scale training + analysis)");
  sim->add_option("--first", sim_first, "index of the first trial")
      ->capture_default_str();
  auto* sim_window_opt =
      sim->add_option("--window", sim_window, "trial duration");
  sim->add_option("--out", sim_out, "output file (default stdout)");
  sim->callback([&]() {
    rc = run_simulate(sim_src, sim_trials, sim_trials_opt->count() > 0,
                      sim_first, sim_window, sim_window_opt->count() > 0,
                      sim_out);
  });

  auto* train = app.add_subcommand("train", "fit analysis parameters");
  static std::string train_in, train_out;
  static double train_lambda = 1.0;
  static std::vector<double> train_fractions;
  train->add_option("--in", train_in, "training trial file")->required();
  train->add_option("--lambda", train_lambda, "compression slope")
      ->capture_default_str();
  train->add_option("--fractions", train_fractions,
                    "truncation half-widths in training sds")
      ->delimiter(',');
  train->add_option("--out", train_out, "parameter file (default stdout)");
  train->callback(
      [&]() { rc = run_train(train_in, train_lambda, train_fractions, train_out); });

  auto* ana = app.add_subcommand("analyze", "run the analyses on a trial file");
  static std::string ana_in, ana_params, ana_mode = "all", ana_out;
  static std::size_t ana_block = 1000;
  ana->add_option("--in", ana_in, "analysis trial file")->required();
  ana->add_option("--params", ana_params, "trained parameter file")->required();
  ana->add_option("--mode", ana_mode, "all | conventional | timetag | pbr")
      ->capture_default_str();
  ana->add_option("--block", ana_block, "PBR block size")->capture_default_str();
  ana->add_option("--out", ana_out, "report file (default stdout)");
  ana->callback([&]() {
    rc = run_analyze(ana_in, ana_params, ana_mode, ana_block, ana_out);
  });

  auto* sw = app.add_subcommand("sweep", "one full protocol per jitter value");
  static SourceOpts sw_src;
  static std::vector<double> sw_grid;
  static std::size_t sw_train = 0, sw_ana = 0, sw_block = 1000;
  static double sw_window = 200.0, sw_lambda = 1.0;
  static bool sw_threshold = false;
  static std::string sw_out;
  add_source_opts(sw, sw_src);
  sw->add_option("--grid", sw_grid,
                 "jitter values: widths (uniform) or medians (exp); 0 = none")
      ->delimiter(',')
      ->required();
  auto* sw_train_opt = sw->add_option("--training-trials", sw_train);
  auto* sw_ana_opt = sw->add_option("--trials", sw_ana, "analysis trials");
  auto* sw_window_opt = sw->add_option("--window", sw_window, "trial duration");
  sw->add_option("--block", sw_block, "PBR block size")->capture_default_str();
  sw->add_option("--lambda", sw_lambda, "compression slope")
      ->capture_default_str();
  sw->add_flag("--threshold", sw_threshold,
               "append the largest violating jitter as a comment row");
  sw->add_option("--out", sw_out, "CSV file (default stdout)");
  sw->callback([&]() {
    rc = run_sweep(sw_src, sw_grid, sw_train, sw_train_opt->count() > 0, sw_ana,
                   sw_ana_opt->count() > 0, sw_window,
                   sw_window_opt->count() > 0, sw_block, sw_lambda,
                   sw_threshold, sw_out);
  });

  auto* corr = app.add_subcommand("correlate", "correlation panels of a trial file");
  static std::string corr_in, corr_jitter = "uniform:0.05", corr_out;
  static double corr_window = 200.0;
  static int corr_lag = 24;
  corr->add_option("--in", corr_in, "trial file")->required();
  corr->add_option("--jitter", corr_jitter,
                   "jitter spec fixing the bin scale (uniform:J | exp:G)")
      ->capture_default_str();
  corr->add_option("--window", corr_window, "trial duration")
      ->capture_default_str();
  corr->add_option("--max-lag", corr_lag, "largest lag in bins")
      ->capture_default_str();
  corr->add_option("--out", corr_out, "CSV file (default stdout)");
  corr->callback([&]() {
    rc = run_correlate(corr_in, corr_jitter, corr_window, corr_lag, corr_out);
  });

  auto* ver = app.add_subcommand("verify", "built-in engine consistency checks");
  static std::uint64_t ver_seed = 1;
  ver->add_option("--seed", ver_seed, "seed")->capture_default_str();
  ver->callback([&]() { rc = run_verify(ver_seed); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
