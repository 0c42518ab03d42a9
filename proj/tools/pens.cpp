// Command-line front end: generate streams, run experiments, summarize metrics.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 1 anything else.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pens/datagen.hpp"
#include "pens/eval.hpp"
#include "pens/mci.hpp"
#include "pens/serialize.hpp"

namespace {

using namespace pens;

struct GenOptions {
  std::string kind;
  std::optional<std::int64_t> n;
  std::uint64_t seed = 1;
  double noise = 0.0;
  std::optional<std::int64_t> drift_start;
  int d = 4;
  double minority = 0.25;
  std::string out;
};

struct RunOptionsCli {
  std::string data;
  std::string gen;
  std::optional<std::int64_t> n;
  std::string mode = "holdout";
  int folds = 10;
  std::optional<int> chunk;
  std::optional<std::int64_t> stamps, train, test;
  std::string base = "axis";
  double theta = 0.7;
  bool al_conjunction = false;
  double delta_rel = 0.02;
  std::optional<double> delta_abs;
  double alpha_warn = 0.005;
  double alpha_drift = 0.001;
  double p = 0.5;
  int ofs_b = 0;
  std::uint64_t seed = 1;
  std::uint64_t data_seed = 0;
  double noise = 0.0;
  std::string metrics;
  std::string snapshot;
  bool no_timing = false;
  std::optional<double> al_budget;
  bool al_imbalance = false;
  bool quiet = false;
};

struct ReportOptions {
  std::string metrics;
  bool summary = false;
};

std::unique_ptr<SampleSource> make_generator(const std::string& kind, std::optional<std::int64_t> n,
                                             std::uint64_t seed, double noise,
                                             std::optional<std::int64_t> drift_start, int d,
                                             double minority) {
  if (kind == "sea") {
    SeaConfig c;
    if (n) c.n_total = *n;
    c.seed = seed;
    c.noise_frac = noise;
    c.minority_frac = minority;
    return std::make_unique<SeaSource>(c);
  }
  if (kind == "hyperplane") {
    HyperplaneConfig c;
    if (n) c.n_total = *n;
    c.seed = seed;
    c.noise_frac = noise;
    c.d = d;
    if (drift_start)
      c.drift_start = *drift_start;
    else if (n)
      c.drift_start = *n / 3;
    return std::make_unique<HyperplaneSource>(c);
  }
  throw config_error("unknown generator '" + kind + "' (expected sea or hyperplane)");
}

int cmd_gen(const GenOptions& o) {
  auto src = make_generator(o.kind, o.n, o.seed, o.noise, o.drift_start, o.d, o.minority);
  const auto rows = write_csv(o.out, *src);
  std::cerr << "wrote " << rows << " samples to " << o.out << '\n';
  return 0;
}

int cmd_run(const RunOptionsCli& o) {
  if (o.al_budget) throw config_error("--al-budget: budget-constrained active learning is not supported");
  if (o.al_imbalance) throw config_error("--al-imbalance: class-imbalance active learning is not supported");
  if (o.data.empty() == o.gen.empty()) throw config_error("give exactly one of --data or --gen");
  if (o.mode != "holdout" && o.mode != "cv") throw config_error("--mode must be holdout or cv");

  // Per-source protocol defaults; explicit flags win.
  int chunk = 250;
  std::int64_t train = 250, test = 250, stamps = 0;
  if (o.gen == "hyperplane") {
    chunk = 1000;
    train = 1000;
  }
  if (o.chunk) chunk = *o.chunk;
  if (o.train) train = *o.train;
  if (o.test) test = *o.test;

  std::unique_ptr<SampleSource> source;
  std::vector<Sample> rows;
  int u = 0, O = 2;
  std::int64_t total = 0;
  if (!o.data.empty()) {
    rows = load_csv(o.data, &O);
    if (rows.empty()) throw data_error(o.data + ": no samples");
    u = static_cast<int>(rows.front().x.size());
    total = static_cast<std::int64_t>(rows.size());
  } else {
    const std::uint64_t data_seed = o.data_seed ? o.data_seed : o.seed;
    source = make_generator(o.gen, o.n, data_seed, o.noise, std::nullopt, 4, 0.25);
    u = source->num_features();
    O = source->num_classes();
    total = o.n ? *o.n : (o.gen == "sea" ? 100000 : 120000);
  }
  stamps = o.stamps ? *o.stamps : total / (train + test);

  auto cfg = LearnerConfig::defaults(u, O, chunk);
  cfg.stream.theta = o.theta;
  cfg.stream.al_conjunction = o.al_conjunction;
  cfg.stream.delta_rel = o.delta_rel;
  cfg.stream.delta_abs = o.delta_abs;
  cfg.stream.alpha_w = o.alpha_warn;
  cfg.stream.alpha_d = o.alpha_drift;
  cfg.stream.p = o.p;
  cfg.stream.B = o.ofs_b;
  cfg.stream.seed = o.seed;
  cfg.stream.base_kind = base_kind_from_string(o.base);
  cfg.validate();

  RunOptions ro;
  ro.chunk = static_cast<std::size_t>(chunk);
  ro.timing = !o.no_timing;
  if (!o.quiet)
    ro.on_stamp = [](const StampMetrics& s) {
      if ((s.index + 1) % 20 == 0)
        std::cerr << "stamp " << (s.index + 1) << " cr " << s.cr << " rules " << s.fr
                  << " members " << s.bc << '\n';
    };

  RunMetrics metrics;
  std::optional<Ensemble> final_model;
  if (o.mode == "cv") {
    if (rows.empty())
      while (auto s = source->next()) rows.push_back(std::move(*s));
    metrics = run_cv(rows, o.folds, [cfg] { return Ensemble(cfg); }, ro);
  } else {
    EvalProtocol proto;
    proto.stamps = stamps;
    proto.train_per_stamp = train;
    proto.test_per_stamp = test;
    VectorSource file_source(rows, O);
    SampleSource& src = source ? *source : static_cast<SampleSource&>(file_source);
    Ensemble ens(cfg);
    metrics = run_holdout(ens, src, proto, ro);
    final_model = std::move(ens);
  }

  if (!o.metrics.empty()) write_metrics(o.metrics, metrics);
  if (!o.snapshot.empty()) {
    if (!final_model) throw config_error("--snapshot needs --mode holdout");
    save_snapshot(*final_model, o.snapshot);
  }
  std::cout << summary_json(metrics).dump() << '\n';
  return 0;
}

int cmd_report(const ReportOptions& o) {
  const RunMetrics m = read_metrics(o.metrics);
  std::cout << std::fixed << std::setprecision(4);
  if (!o.summary) {
    std::cout << "stamp      cr      fr      bc        np      ts  drift  mask\n";
    for (const auto& s : m.series) {
      std::cout << std::setw(5) << s.index << ' ' << std::setw(7) << s.cr << ' ' << std::setw(7)
                << std::setprecision(1) << s.fr << ' ' << std::setw(7) << s.bc << ' '
                << std::setw(9) << s.np << ' ' << std::setw(7) << s.ts << ' ' << std::setw(6)
                << s.drift_events << "  ";
      for (std::size_t k = 0; k < s.mask.size(); ++k) std::cout << (k ? "," : "") << s.mask[k];
      std::cout << std::setprecision(4) << '\n';
    }
  }
  std::cout << "cr " << m.cr << " +- " << m.cr_std << '\n'
            << "fr " << m.fr << " +- " << m.fr_std << '\n'
            << "bc " << m.bc << " +- " << m.bc_std << '\n'
            << "np " << m.np << " +- " << m.np_std << '\n'
            << "ts " << m.ts << " +- " << m.ts_std << '\n'
            << "rt " << m.rt << '\n'
            << "accepted " << m.accept_rate() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolving ensemble fuzzy classifier for drifting streams"};
  app.set_config("--config", "", "TOML file mirroring the flags; flags override it");
  app.require_subcommand(1);

  GenOptions g;
  auto* gen = app.add_subcommand("gen", "Write a synthetic stream as CSV");
  gen->add_option("kind", g.kind, "sea or hyperplane")->required();
  gen->add_option("--n", g.n, "Number of samples");
  gen->add_option("--seed", g.seed, "Random seed");
  gen->add_option("--noise", g.noise, "Label noise share");
  gen->add_option("--drift-start", g.drift_start, "Hyperplane: first drifting sample");
  gen->add_option("--dims", g.d, "Hyperplane: input dimension");
  gen->add_option("--minority", g.minority, "SEA: target class-2 share (0 disables)");
  gen->add_option("--out", g.out, "Output CSV")->required();

  RunOptionsCli r;
  auto* run = app.add_subcommand("run", "Train and evaluate on a stream");
  auto* data_opt = run->add_option("--data", r.data, "CSV file (header, features, class)");
  auto* gen_opt = run->add_option("--gen", r.gen, "Synthetic source: sea or hyperplane");
  data_opt->excludes(gen_opt);
  run->add_option("--n", r.n, "Generated stream length");
  run->add_option("--noise", r.noise, "Generated label noise share");
  run->add_option("--data-seed", r.data_seed, "Generator seed (defaults to --seed)");
  run->add_option("--mode", r.mode, "holdout or cv");
  run->add_option("--folds", r.folds, "CV folds");
  run->add_option("--chunk", r.chunk, "Training chunk size P");
  run->add_option("--stamps", r.stamps, "Hold-out stamps");
  run->add_option("--train", r.train, "Training samples per stamp");
  run->add_option("--test", r.test, "Test samples per stamp");
  run->add_option("--base", r.base, "Rule shape: axis or multivariate");
  run->add_option("--theta", r.theta, "Initial conflict threshold");
  run->add_flag("--al-conjunction", r.al_conjunction, "Require both conflict tests");
  run->add_option("--delta-rel", r.delta_rel, "Relative merge threshold");
  run->add_option("--delta-abs", r.delta_abs, "Absolute merge threshold");
  run->add_option("--alpha-warn", r.alpha_warn, "Warning significance");
  run->add_option("--alpha-drift", r.alpha_drift, "Drift significance");
  run->add_option("--p", r.p, "Penalty/reward factor");
  run->add_option("--ofs-b", r.ofs_b, "Features kept by online selection (0 = all)");
  run->add_option("--seed", r.seed, "Seed");
  run->add_option("--metrics", r.metrics, "JSONL metrics output");
  run->add_option("--snapshot", r.snapshot, "Write the final model as JSON");
  run->add_flag("--no-timing", r.no_timing, "Report rt = 0 for byte-stable metrics");
  run->add_option("--al-budget", r.al_budget, "Not supported");
  run->add_flag("--al-imbalance", r.al_imbalance, "Not supported");
  run->add_flag("--quiet", r.quiet, "No progress on stderr");

  ReportOptions rep;
  auto* report = app.add_subcommand("report", "Summarize a metrics file");
  report->add_option("--metrics", rep.metrics, "JSONL metrics file")->required();
  report->add_flag("--summary", rep.summary, "Summary only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_gen(g);
    if (*run) return cmd_run(r);
    if (*report) return cmd_report(rep);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const insufficient_data& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
