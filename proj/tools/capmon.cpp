#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "capmon/comparison.hpp"
#include "capmon/errors.hpp"
#include "capmon/grading.hpp"
#include "capmon/hidden_record.hpp"
#include "capmon/indicators.hpp"
#include "capmon/lexicon.hpp"
#include "capmon/matcher.hpp"
#include "capmon/metrics.hpp"
#include "capmon/policy_config.hpp"
#include "capmon/probe.hpp"
#include "capmon/proxy.hpp"
#include "capmon/synth.hpp"
#include "capmon/tokenizer.hpp"
#include "capmon/trace.hpp"
#include "capmon/trajectory.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using namespace capmon;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  if (auto dir = fs::path(path).parent_path(); !dir.empty()) fs::create_directories(dir);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

std::shared_ptr<const Matcher> load_matcher(const std::string& lexicon_path) {
  if (lexicon_path.empty()) return std::make_shared<const Matcher>(default_lexicon());
  return std::make_shared<const Matcher>(load_lexicon_file(lexicon_path));
}

// Synthetic corpus options shared by synth, sweep and compare.
struct SynthOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_solvable, n_unsolvable, hidden_dim;
  std::optional<double> overlap, separation;

  void attach(CLI::App* app) {
    app->add_option("--synth-config", config_path, "SynthConfig JSON file");
    app->add_option("--seed", seed, "corpus seed");
    app->add_option("--n-solvable", n_solvable);
    app->add_option("--n-unsolvable", n_unsolvable);
    app->add_option("--hidden-dim", hidden_dim);
    app->add_option("--overlap", overlap, "0 separates the classes, 1 makes them identical");
    app->add_option("--separation", separation, "class mean offset along the latent factor");
  }

  SynthConfig resolve() const {
    SynthConfig cfg = config_path.empty() ? SynthConfig{} : synth_config_from_json(slurp(config_path));
    if (seed) cfg.seed = *seed;
    if (n_solvable) cfg.n_solvable = *n_solvable;
    if (n_unsolvable) cfg.n_unsolvable = *n_unsolvable;
    if (hidden_dim) cfg.hidden_dim = *hidden_dim;
    if (overlap) cfg.overlap = *overlap;
    if (separation) cfg.separation = *separation;
    cfg.validate();
    return cfg;
  }
};

struct IndicatorOptions {
  std::size_t num_stages = kDefaultStages;
  double alpha = 0.5, beta = 0.5;
  std::size_t smoothing_window = 5;
  std::string scheme = "central", sign = "negative";

  void attach(CLI::App* app) {
    app->add_option("--num-stages", num_stages, "stages per trace")->capture_default_str();
    app->add_option("--alpha", alpha, "ConfDiff threshold")->capture_default_str();
    app->add_option("--beta", beta, "ConfCurv threshold")->capture_default_str();
    app->add_option("--smoothing-window", smoothing_window)->capture_default_str();
    app->add_option("--curvature-scheme", scheme)->check(CLI::IsMember({"central", "forward"}))->capture_default_str();
    app->add_option("--curvature-sign", sign)->check(CLI::IsMember({"negative", "positive"}))->capture_default_str();
  }

  IndicatorConfig resolve(double stage_percent = 100.0) const {
    IndicatorConfig c;
    c.stage_percent = stage_percent;
    c.alpha = alpha;
    c.beta = beta;
    c.smoothing_window = smoothing_window;
    c.curvature_scheme = scheme == "forward" ? CurvatureScheme::Forward : CurvatureScheme::Central;
    c.curvature_sign = sign == "positive" ? CurvatureSign::Positive : CurvatureSign::Negative;
    c.validate();
    if (num_stages < 2) throw ConfigError("--num-stages must be at least 2");
    return c;
  }
};

struct TraceFeatures {
  std::size_t tokens = 0;
  std::size_t confident = 0, uncertain = 0;
  std::optional<TrajectoryPair> trajectories;  // unset when tokens < stages
};

TraceFeatures features_of(const ReasoningTrace& t, const Matcher& m, std::size_t stages) {
  TraceFeatures f;
  const auto toks = tokenize(t.reasoning_text);
  const auto evs = m.match(toks);
  f.tokens = toks.size();
  for (const auto& e : evs) (e.polarity == Polarity::Confident ? f.confident : f.uncertain)++;
  if (toks.size() >= stages) f.trajectories = build_trajectories(evs, toks.size(), stages);
  return f;
}

std::string opt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(6) << *v;
  return os.str();
}

std::vector<ReasoningTrace> load_traces(const std::vector<std::string>& paths) {
  std::vector<ReasoningTrace> all;
  for (const auto& p : paths) {
    auto part = read_traces_file(p);
    all.insert(all.end(), part.begin(), part.end());
  }
  if (all.empty()) throw ValidationError("no traces in the given files");
  return all;
}

// ---------------------------------------------------------------------------

struct SynthCmd {
  SynthOptions synth;
  std::string out_dir;
  std::size_t budget = 4096;
  bool jsonl_records = false;

  void attach(CLI::App* app) {
    synth.attach(app);
    app->add_option("--out-dir", out_dir, "output directory")->required();
    app->add_option("--budget", budget, "context budget of the Original-arm traces")->capture_default_str();
    app->add_flag("--jsonl-records", jsonl_records, "write hidden states as JSON lines instead of binary");
  }

  int run() const {
    const SynthConfig cfg = synth.resolve();
    if (budget == 0) throw ConfigError("--budget must be positive");
    const SynthCorpus corpus = synth_corpus(cfg);
    fs::create_directories(out_dir);
    open_out(out_dir + "/config.json") << synth_config_to_json(cfg) << "\n";
    if (jsonl_records) {
      auto out = open_out(out_dir + "/records.jsonl");
      for (const auto& r : corpus.records) out << record_to_json_line(r) << "\n";
    } else {
      write_records_file(out_dir + "/records.cmhs", corpus.records);
    }
    InterventionPolicy none;
    auto traces = simulate_arm(corpus, Strategy::Original, budget, none, nullptr,
                               std::make_shared<const Matcher>(default_lexicon()));
    write_traces_file(out_dir + "/traces.jsonl", traces);
    std::cout << "wrote " << corpus.items.size() << " items (" << cfg.n_solvable << " solvable, " << cfg.n_unsolvable
              << " unsolvable) to " << out_dir << "\n";
    return 0;
  }
};

struct AnalyzeCmd {
  std::vector<std::string> traces;
  std::string lexicon;
  IndicatorOptions ind;
  double stage_percent = 100.0;
  std::string out, trajectories_out;

  void attach(CLI::App* app) {
    app->add_option("--traces", traces, "trace JSONL files")->required();
    app->add_option("--lexicon", lexicon, "lexicon JSON (default: built-in)");
    app->add_option("--stage-percent", stage_percent, "decision stage s")->capture_default_str();
    app->add_option("--out", out, "per-trace report TSV");
    app->add_option("--trajectories-out", trajectories_out, "per-stage densities TSV");
    ind.attach(app);
  }

  int run() const {
    const auto corpus = load_traces(traces);
    const auto matcher = load_matcher(lexicon);
    const IndicatorConfig cfg = ind.resolve(stage_percent);

    std::ofstream rep, trj;
    if (!out.empty()) {
      rep = open_out(out);
      rep << "trace_id\ttokens\tconfident\tuncertain\tgrade\tconf_diff\tconf_diff_decision\tconf_curv\tconf_curv_decision\n";
    }
    if (!trajectories_out.empty()) {
      trj = open_out(trajectories_out);
      trj << "trace_id\tstage\td_confident\td_uncertain\n";
    }
    std::size_t beyond_diff = 0, beyond_curv = 0, short_traces = 0;
    std::vector<CanCannotItem> cc;
    for (const auto& t : corpus) {
      const auto f = features_of(t, *matcher, ind.num_stages);
      const Grade g = trace_grade(t);
      cc.push_back({f.confident, f.uncertain, g == Grade::Correct});
      std::string sd, dd, sc, dc;
      if (f.trajectories) {
        auto try_eval = [&](Detector d, std::string& score, std::string& dec, std::size_t& count) {
          try {
            auto v = evaluate(d, *f.trajectories, cfg);
            score = opt(v.score);
            dec = std::string(to_string(v.decision));
            count += v.decision == Decision::Beyond;
          } catch (const InsufficientData&) {
          }
        };
        try_eval(Detector::ConfDiff, sd, dd, beyond_diff);
        try_eval(Detector::ConfCurv, sc, dc, beyond_curv);
        if (trj.is_open())
          for (std::size_t s = 0; s < ind.num_stages; ++s)
            trj << t.trace_id << "\t" << s + 1 << "\t" << f.trajectories->confident.stages[s] << "\t"
                << f.trajectories->uncertain.stages[s] << "\n";
      } else {
        ++short_traces;
      }
      if (rep.is_open())
        rep << t.trace_id << "\t" << f.tokens << "\t" << f.confident << "\t" << f.uncertain << "\t" << to_string(g)
            << "\t" << sd << "\t" << dd << "\t" << sc << "\t" << dc << "\n";
    }
    const CanCannot r = can_cannot(cc);
    std::cout << "traces\t" << corpus.size() << "\n"
              << "too_short\t" << short_traces << "\n"
              << "conf_diff_beyond\t" << beyond_diff << "\n"
              << "conf_curv_beyond\t" << beyond_curv << "\n"
              << "can_percent\t" << opt(r.can) << "\n"
              << "cannot_percent\t" << opt(r.cannot) << "\n"
              << "confident_dominant\t" << r.confident_dominant << "\n"
              << "uncertain_dominant\t" << r.uncertain_dominant << "\n"
              << "ties\t" << r.ties << "\n";
    return 0;
  }
};

ProbeSpec make_spec(const std::string& kind, double shrinkage, double C) {
  ProbeSpec s;
  s.kind = probe_kind_from_string(kind);
  s.shrinkage = shrinkage;
  s.C = C;
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw ConfigError("--shrinkage must lie in [0, 1]");
  if (!(C > 0.0)) throw ConfigError("--C must be positive");
  return s;
}

struct ProbeTrainCmd {
  std::string records, out, projection_out;
  std::string kind = "lda";
  double shrinkage = 0.5, C = 1.0, train_fraction = 0.8;
  std::uint64_t seed = 1;

  void attach(CLI::App* app) {
    app->add_option("--records", records, "hidden-state records (binary or JSONL)")->required();
    app->add_option("--out", out, "probe JSON")->required();
    app->add_option("--kind", kind)->check(CLI::IsMember({"lda", "logreg"}))->capture_default_str();
    app->add_option("--shrinkage", shrinkage, "LDA shrinkage")->capture_default_str();
    app->add_option("--C", C, "LogReg inverse regularization")->capture_default_str();
    app->add_option("--train-fraction", train_fraction)->capture_default_str();
    app->add_option("--split-seed", seed)->capture_default_str();
    app->add_option("--projection-out", projection_out, "2-D projection TSV of all records");
  }

  int run() const {
    const auto recs = load_records(records);
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw ConfigError("--train-fraction must lie in (0, 1]");
    const ProbeSpec spec = make_spec(kind, shrinkage, C);
    const Split sp = stratified_split(recs, train_fraction, seed);
    const auto train = subset(recs, sp.train);
    ProbeModel m = fit_probe(train, spec);
    m.meta.dataset_hash = dataset_hash(recs);
    m.meta.split_seed = seed;
    m.meta.train_size = train.size();
    save_probe_file(out, m);
    std::cout << "kind\t" << to_string(m.kind) << "\n"
              << "train_size\t" << train.size() << "\n"
              << "train_accuracy\t" << accuracy(m, train) << "\n";
    if (!sp.test.empty()) std::cout << "test_accuracy\t" << accuracy(m, subset(recs, sp.test)) << "\n";
    if (!m.converged) std::cout << "warning\tsolver did not converge\n";
    if (!projection_out.empty()) {
      auto pts = project_2d(m, recs);
      auto os = open_out(projection_out);
      os << "trace_id\tlabel\tu\tv\n";
      for (std::size_t i = 0; i < recs.size(); ++i)
        os << recs[i].trace_id << "\t" << to_string(recs[i].label) << "\t" << pts[i].u << "\t" << pts[i].v << "\n";
    }
    return 0;
  }
};

struct ProbeEvalCmd {
  std::string records, probe, out;
  std::string kind = "lda";
  double shrinkage = 0.5, C = 1.0, train_fraction = 0.8;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  void attach(CLI::App* app) {
    app->add_option("--records", records, "hidden-state records (binary or JSONL)")->required();
    app->add_option("--probe", probe, "evaluate this saved probe instead of retraining");
    app->add_option("--kind", kind)->check(CLI::IsMember({"lda", "logreg"}))->capture_default_str();
    app->add_option("--shrinkage", shrinkage)->capture_default_str();
    app->add_option("--C", C)->capture_default_str();
    app->add_option("--train-fraction", train_fraction)->capture_default_str();
    app->add_option("--seeds", seeds, "split seeds for repeated evaluation");
    app->add_option("--out", out, "per-seed accuracy TSV");
  }

  int run() const {
    const auto recs = load_records(records);
    if (!probe.empty()) {
      const ProbeModel m = load_probe_file(probe);
      std::cout << "accuracy\t" << accuracy(m, recs) << "\n";
      const auto ratio = token_usage_ratio(recs, m);
      if (ratio.used > 0)
        std::cout << "token_usage_ratio\t" << ratio.ratio << "\n"
                  << "near_mean_tokens\t" << ratio.near_mean << "\n"
                  << "far_mean_tokens\t" << ratio.far_mean << "\n";
      if (ratio.skipped_missing) std::cout << "records_without_usage\t" << ratio.skipped_missing << "\n";
      return 0;
    }
    if (seeds.empty()) throw ConfigError("--seeds must not be empty");
    const ProbeEvaluation ev = evaluate_probe(recs, make_spec(kind, shrinkage, C), seeds, train_fraction);
    std::cout << "kind\t" << kind << "\n"
              << "mean_accuracy\t" << ev.mean << "\n"
              << "sd_accuracy\t" << ev.sd << "\n";
    if (!out.empty()) {
      auto os = open_out(out);
      os << "seed\taccuracy\n";
      for (std::size_t i = 0; i < seeds.size(); ++i) os << seeds[i] << "\t" << ev.accuracies[i] << "\n";
    }
    return 0;
  }
};

struct SweepCmd {
  std::vector<std::string> traces;
  SynthOptions synth;
  std::string lexicon, out, best_out;
  std::vector<std::string> detectors{"conf_diff", "conf_curv"};
  IndicatorOptions ind;
  bool label_from_grade = false;
  std::size_t budget = 4096;

  void attach(CLI::App* app) {
    app->add_option("--traces", traces, "labelled trace JSONL files (default: synthetic corpus)");
    synth.attach(app);
    app->add_option("--budget", budget, "budget of the synthetic traces")->capture_default_str();
    app->add_option("--lexicon", lexicon);
    app->add_option("--detectors", detectors)->check(CLI::IsMember({"conf_diff", "conf_curv"}));
    app->add_flag("--label-from-grade", label_from_grade, "treat incorrect traces as unsolvable when unlabelled");
    app->add_option("--out", out, "sweep TSV, one row per (detector, s, threshold)")->required();
    app->add_option("--best-out", best_out, "best threshold per stage TSV");
    ind.attach(app);
  }

  int run() const {
    const auto matcher = load_matcher(lexicon);
    std::vector<ReasoningTrace> corpus;
    if (traces.empty()) {
      const auto sc = synth_corpus(synth.resolve());
      InterventionPolicy none;
      corpus = simulate_arm(sc, Strategy::Original, budget, none, nullptr, matcher);
    } else {
      corpus = load_traces(traces);
    }
    std::vector<SweepItem> items;
    std::size_t unlabeled = 0, short_traces = 0;
    for (const auto& t : corpus) {
      bool uns;
      if (t.label != SolvabilityLabel::Unknown) {
        uns = t.label == SolvabilityLabel::Unsolvable;
      } else if (label_from_grade) {
        uns = trace_grade(t) != Grade::Correct;
      } else {
        ++unlabeled;
        continue;
      }
      auto f = features_of(t, *matcher, ind.num_stages);
      if (!f.trajectories) {
        ++short_traces;
        continue;
      }
      items.push_back({std::move(*f.trajectories), uns, t.trace_id});
    }
    if (unlabeled) throw ValidationError(std::to_string(unlabeled) + " traces have no label (see --label-from-grade)");
    if (items.empty()) throw ValidationError("no trace is long enough for the stage grid");

    const IndicatorConfig base = ind.resolve();
    auto os = open_out(out);
    os << "detector\tstage_percent\tthreshold\taccuracy\ttpr\tfpr\tevaluated\tskipped\n";
    std::ofstream best;
    if (!best_out.empty()) {
      best = open_out(best_out);
      best << "detector\tstage_percent\tthreshold\taccuracy\ttpr\tfpr\tevaluated\tskipped\n";
    }
    // Stages where no trace could be scored leave the rate columns blank.
    auto row = [](std::ostream& o, const SweepRow& r) {
      o << to_string(r.detector) << "\t" << r.stage_percent << "\t" << r.threshold << "\t";
      if (r.evaluated) o << r.accuracy << "\t" << r.tpr << "\t" << r.fpr;
      else o << "\t\t";
      o << "\t" << r.evaluated << "\t" << r.skipped << "\n";
    };
    for (const auto& d : detectors) {
      const SweepResult res = stage_sweep(items, detector_from_string(d), default_stage_grid(),
                                          default_threshold_grid(), base);
      if (res.degenerate_labels) std::cerr << "warning: only one class present\n";
      for (const auto& r : res.rows) row(os, r);
      if (best.is_open())
        for (const auto& r : res.best_per_stage)
          if (r.evaluated) row(best, r);
      for (const auto& r : res.fixed_threshold)
        if (r.stage_percent == 2.0 || r.stage_percent == 10.0 || r.stage_percent == 50.0 || r.stage_percent == 100.0)
          std::cout << d << "\ts=" << r.stage_percent << "\taccuracy="
                    << (r.evaluated ? std::to_string(r.accuracy) : std::string("n/a")) << "\n";
    }
    if (short_traces) std::cout << "skipped_short_traces\t" << short_traces << "\n";
    return 0;
  }
};

struct CompareCmd {
  std::vector<std::string> traces;
  SynthOptions synth;
  std::vector<std::size_t> budgets{2048, 4096};
  std::vector<std::string> strategies{"Original", "BoostAbstention", "MonitorExpress", "MonitorHidden"};
  std::string detector = "conf_diff";
  std::vector<double> decision_stages{2, 5, 10, 20};
  IndicatorOptions ind;
  std::string probe, probe_kind = "lda", lexicon;
  std::string table_out, tsv_out, traces_out;

  void attach(CLI::App* app) {
    app->add_option("--traces", traces, "recorded traces to score instead of simulating");
    synth.attach(app);
    app->add_option("--budgets", budgets)->capture_default_str();
    app->add_option("--strategies", strategies)->capture_default_str();
    app->add_option("--detector", detector)->check(CLI::IsMember({"conf_diff", "conf_curv"}))->capture_default_str();
    app->add_option("--decision-stages", decision_stages)->capture_default_str();
    app->add_option("--probe", probe, "probe JSON for MonitorHidden (default: trained on a fresh draw)");
    app->add_option("--probe-kind", probe_kind)->check(CLI::IsMember({"lda", "logreg"}))->capture_default_str();
    app->add_option("--lexicon", lexicon);
    app->add_option("--table-out", table_out, "fixed-width table file");
    app->add_option("--tsv-out", tsv_out, "metrics TSV");
    app->add_option("--traces-out", traces_out, "simulated traces JSONL");
    ind.attach(app);
  }

  int run() const {
    const auto matcher = load_matcher(lexicon);
    EvalReport report;
    if (!traces.empty()) {
      report = compare_recorded(load_traces(traces), matcher.get());
    } else {
      const SynthCorpus corpus = synth_corpus(synth.resolve());
      ComparisonConfig cc;
      cc.budgets = budgets;
      cc.strategies.clear();
      for (const auto& s : strategies) cc.strategies.push_back(strategy_from_string(s));
      cc.detector = detector_from_string(detector);
      cc.indicator = ind.resolve();
      cc.num_stages = ind.num_stages;
      cc.decision_stage_percents = decision_stages;
      cc.probe_spec.kind = probe_kind_from_string(probe_kind);
      cc.validate();
      std::shared_ptr<const ProbeModel> pm;
      if (!probe.empty()) pm = std::make_shared<const ProbeModel>(load_probe_file(probe));
      auto res = run_comparison(corpus, cc, &corpus.records, pm, matcher);
      report = std::move(res.report);
      if (!traces_out.empty()) write_traces_file(traces_out, res.traces);
    }
    write_comparison_table(std::cout, report);
    if (!table_out.empty()) {
      auto os = open_out(table_out);
      write_comparison_table(os, report);
    }
    if (!tsv_out.empty()) {
      auto os = open_out(tsv_out);
      write_report_tsv(os, report);
    }
    return 0;
  }
};

struct ServeCmd {
  std::string listen = "127.0.0.1:8080";
  std::string backend = "http://127.0.0.1:8000";
  std::string policy, sidecar, trace_dir, lexicon;
  int upstream_timeout = 300;

  void attach(CLI::App* app) {
    app->add_option("--listen", listen, "host:port to bind")->envname("CAPMON_LISTEN")->capture_default_str();
    app->add_option("--backend", backend, "chat-completions backend base URL")
        ->envname("CAPMON_BACKEND")
        ->capture_default_str();
    app->add_option("--policy", policy, "policy JSON file")->envname("CAPMON_POLICY");
    app->add_option("--sidecar", sidecar, "hidden-state extractor base URL")->envname("CAPMON_SIDECAR");
    app->add_option("--trace-dir", trace_dir, "directory for per-session trace files")->envname("CAPMON_TRACE_DIR");
    app->add_option("--lexicon", lexicon);
    app->add_option("--upstream-timeout", upstream_timeout, "seconds")->capture_default_str();
  }

  int run() const {
    ProxyConfig pc;
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw ConfigError("--listen must be host:port");
    pc.listen_host = listen.substr(0, colon);
    try {
      pc.listen_port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("--listen has a bad port");
    }
    if (pc.listen_port < 0 || pc.listen_port > 65535) throw ConfigError("--listen has a bad port");
    pc.backend_url = backend;
    pc.sidecar_url = sidecar;
    pc.trace_dir = trace_dir;
    pc.upstream_timeout_s = upstream_timeout;
    if (!policy.empty()) pc.policy = load_policy_file(policy);
    ProxyServer server(pc, load_matcher(lexicon));
    const int port = server.bind();
    std::cout << "capmon " << kVersion << " listening on " << pc.listen_host << ":" << port << " (policy "
              << to_string(pc.policy.policy.mode) << ", backend " << backend << ")" << std::endl;
    server.run();
    return 0;
  }
};

struct PlotCmd {
  std::string input, out;
  cli::PlotSpec spec;
  std::vector<std::string> filters;

  void attach(CLI::App* app) {
    app->add_option("--input", input, "TSV produced by another subcommand")->required();
    app->add_option("--out", out, "SVG file")->required();
    app->add_option("--x", spec.x, "x column")->required();
    app->add_option("--y", spec.y, "y column")->required();
    app->add_option("--group", spec.group, "one series per value of this column");
    app->add_option("--where", filters, "keep rows with column=value");
    app->add_option("--title", spec.title);
    app->add_flag("--scatter", spec.scatter, "points instead of lines");
  }

  int run() {
    for (const auto& f : filters) {
      auto eq = f.find('=');
      if (eq == std::string::npos) throw ConfigError("--where expects column=value");
      spec.filter[f.substr(0, eq)] = f.substr(eq + 1);
    }
    const auto table = cli::read_tsv(input);
    open_out(out) << cli::render_svg(table, spec);
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capmon: capability-boundary monitoring toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "TOML file; options of a subcommand go under its [section]");
  app.require_subcommand(1);

  SynthCmd synth;
  AnalyzeCmd analyze;
  ProbeTrainCmd probe_train;
  ProbeEvalCmd probe_eval;
  SweepCmd sweep;
  CompareCmd compare;
  ServeCmd serve;
  PlotCmd plot;

  std::function<int()> action;
  auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    cmd.attach(sub);
    sub->callback([&] { action = [&] { return cmd.run(); }; });
  };
  add("synth", "generate a synthetic corpus, hidden states and Original-arm traces", synth);
  add("analyze", "expression counts, trajectories and indicator verdicts for traces", analyze);
  add("probe-train", "fit a linear solvability probe on hidden-state records", probe_train);
  add("probe-eval", "held-out accuracy over seeds, or score a saved probe", probe_eval);
  add("sweep", "indicator accuracy against the decision stage", sweep);
  add("compare", "strategy comparison report", compare);
  add("serve", "run the monitoring proxy", serve);
  add("plot", "render TSV columns as an SVG chart", plot);

  CLI11_PARSE(app, argc, argv);
  try {
    return action();
  } catch (const capmon::Error& e) {
    std::cerr << "capmon: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "capmon: " << e.what() << "\n";
    return 1;
  }
}
