#pragma once

// Command-line front end. `run_cli` parses argv, runs one subcommand and maps
// failures to exit codes: 0 ok, 1 usage, 2 data, 3 pipeline.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ntssl/common.hpp"
#include "ntssl/config.hpp"
#include "ntssl/detect.hpp"
#include "ntssl/evalkit.hpp"
#include "ntssl/features.hpp"
#include "ntssl/gbdt.hpp"
#include "ntssl/netsim.hpp"
#include "ntssl/pipeline.hpp"
#include "ntssl/txcluster.hpp"
#include "ntssl/wiremsg.hpp"

namespace ntssl::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kPipeline = 3 };

namespace fs = std::filesystem;

struct Context {
  config::ExperimentConfig cfg;
  std::optional<std::uint64_t> seed;
  fs::path out = ".";
  bool verbose = false;
  std::ostream* stdout_ = &std::cout;
  std::ostream* stderr_ = &std::cerr;

  std::uint64_t require_seed(std::string_view mode) const {
    if (!seed) throw UsageError(std::string(mode) + " is stochastic: --seed is required");
    return *seed;
  }
  std::string file(const std::string& name) const { return (out / name).string(); }
  void log(const std::string& msg) const {
    if (verbose) *stderr_ << msg << '\n';
  }
  void warn(const std::string& msg) const { *stderr_ << "warning: " << msg << '\n'; }
};

// cov025 for 0.25
inline std::string coverage_tag(double cov) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "cov%03lld", static_cast<long long>(std::llround(cov * 100)));
  return buf;
}

inline std::string cell_tag(double cov, std::size_t repeat) {
  return coverage_tag(cov) + "_r" + std::to_string(repeat);
}

inline std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

inline std::vector<int> truth_labels_checked(const features::FeatureMatrix& m, const netsim::GroundTruth& truth) {
  std::vector<int> labels(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!truth.index.count(m[i].tx_hash)) throw DataError("no ground truth for tx " + m[i].tx_hash.hex());
    labels[i] = truth.is_target_origin(m[i].tx_hash) ? 1 : 0;
  }
  return labels;
}

inline std::vector<pipeline::Prediction> predictions_for(const features::FeatureMatrix& m,
                                                         std::span<const std::size_t> rows,
                                                         std::span<const int> pred, std::span<const double> proba) {
  std::vector<pipeline::Prediction> out;
  out.reserve(rows.size());
  for (auto i : rows) out.push_back({m[i].tx_hash, pred[i], proba[i]});
  return out;
}

// ---------------------------------------------------------------------------
// simulate

inline netsim::SimResult simulate_into(const Context& ctx, std::uint64_t seed, bool include_outbound) {
  auto net_cfg = ctx.cfg.network;
  net_cfg.seed = seed;
  ctx.log("building network: " + std::to_string(net_cfg.n_nodes) + " background nodes");
  const auto net = netsim::build_network(net_cfg);
  ctx.log("simulating");
  auto sim = netsim::run(net, ctx.cfg.workload);
  for (const auto& w : sim.stats.warnings) ctx.warn(w);
  wiremsg::write_trace(sim.traces.records, ctx.file("trace_full.txt"));
  netsim::write_ground_truth(sim.truth, ctx.file("truth.txt"));
  txcluster::write_chain_txs(sim.chain, ctx.file("chain.txt"));

  std::ofstream manifest(ctx.file("manifest.txt"), std::ios::binary);
  if (!manifest) throw DataError("cannot write manifest in " + ctx.out.string());
  for (std::size_t ci = 0; ci < ctx.cfg.coverages.size(); ++ci) {
    for (std::size_t r = 0; r < ctx.cfg.repeats; ++r) {
      const double cov = ctx.cfg.coverages[ci];
      const auto cs = evalkit::cell_seed(seed, ci, r);
      const auto sub = netsim::subsample_probes(sim.traces, cov, cs, include_outbound);
      const auto name = "trace_" + cell_tag(cov, r) + ".txt";
      wiremsg::write_trace(sub.records, ctx.file(name));
      manifest << "trace=" << name << " cov=" << format_double(cov) << " repeat=" << r << " seed=" << cs << '\n';
    }
  }
  *ctx.stdout_ << "simulated " << sim.truth.origins.size() << " transactions, " << sim.traces.records.size()
               << " captured records, " << sim.stats.events << " events\n";
  return sim;
}

// ---------------------------------------------------------------------------
// extract

inline void write_fold_files(const Context& ctx, const features::FeatureMatrix& m, const evalkit::Folds& folds,
                             const std::string& stem) {
  for (std::size_t f = 0; f < folds.test.size(); ++f) {
    features::write_features(m.subset(folds.train(f, m.size())),
                             ctx.file(stem + "_fold" + std::to_string(f) + "_train.csv"));
    features::write_features(m.subset(folds.test[f]), ctx.file(stem + "_fold" + std::to_string(f) + "_test.csv"));
  }
}

// ---------------------------------------------------------------------------
// detect / train / predict

inline pipeline::NtsslParams seeded(const Context& ctx, std::uint64_t seed) {
  auto p = ctx.cfg.ntssl;
  p.seed = seed;
  return p;
}

inline detect::AnomalyScores run_detector(const features::FeatureMatrix& m, detect::Detector d,
                                          const pipeline::NtsslParams& p) {
  switch (d) {
    case detect::Detector::iforest: return detect::iforest_fit_score(m, pipeline::forest_params(p, 1));
    case detect::Detector::autoencoder: {
      auto ae = p.detect.autoencoder;
      ae.seed = p.seed * 0x100000001B3ULL + 2;
      return detect::autoencoder_fit_score(m, ae);
    }
    case detect::Detector::ocsvm: return detect::ocsvm_fit_score(m, p.detect.ocsvm, p.detect.contamination);
  }
  throw UsageError("unknown detector");
}

inline features::FeatureMatrix require_dim(features::FeatureMatrix m, std::size_t dim, const std::string& what) {
  if (m.dim() != dim) throw DataError(what + ": expected " + std::to_string(dim) + " feature columns");
  return m;
}

// ---------------------------------------------------------------------------
// collab / eval

inline std::vector<pipeline::Prediction> collab_file(const std::vector<pipeline::Prediction>& preds,
                                                     const txcluster::Predictions& merged,
                                                     std::span<const txcluster::TxCluster> clusters) {
  const auto corrected = txcluster::collab_correct(merged, clusters);
  std::vector<pipeline::Prediction> out = preds;
  for (auto& p : out) p.pred = corrected.at(p.tx);
  return out;
}

inline evalkit::MetricsReport eval_files(const std::vector<std::string>& files, const netsim::GroundTruth& truth,
                                         evalkit::Method method, double coverage) {
  std::vector<evalkit::MetricsReport> per_file;
  for (const auto& path : files) {
    const auto preds = pipeline::read_predictions(path);
    std::unordered_map<Hash32, int, Hash32Hasher> labels;
    for (const auto& p : preds) {
      if (!truth.index.count(p.tx)) throw DataError(path + ": no ground truth for tx " + p.tx.hex());
      labels.emplace(p.tx, truth.is_target_origin(p.tx) ? 1 : 0);
    }
    per_file.push_back(evalkit::metrics(evalkit::confusion(preds, labels)));
  }
  auto r = evalkit::average(per_file);
  r.method = method;
  r.coverage = coverage;
  r.runs = files.size();
  return r;
}

// ---------------------------------------------------------------------------
// crossnode

struct CrossNodeResult {
  evalkit::MetricsReport in_node;
  evalkit::MetricsReport cross_node;
};

inline CrossNodeResult crossnode(const Context& ctx, std::uint64_t seed, bool write_files) {
  auto a_cfg = ctx.cfg.network;
  a_cfg.seed = seed;
  auto b_cfg = ctx.cfg.node_b();
  b_cfg.seed = netsim::detail::mix_seed(seed, 0xB);
  ctx.log("simulating node A");
  const auto sim_a = netsim::run(netsim::build_network(a_cfg), ctx.cfg.workload);
  ctx.log("simulating node B");
  const auto sim_b = netsim::run(netsim::build_network(b_cfg), ctx.cfg.workload_b());

  const auto fa = features::aggregate(netsim::subsample_probes(sim_a.traces, 1.0, seed).records);
  const auto fb = features::aggregate(netsim::subsample_probes(sim_b.traces, 1.0, seed).records);
  const auto ya = truth_labels_checked(fa, sim_a.truth);
  const auto yb = truth_labels_checked(fb, sim_b.truth);
  const auto [b_train, b_test] = evalkit::stratified_split(yb, ctx.cfg.crossnode.test_fraction, seed);

  const auto test = fb.subset(b_test);
  std::vector<int> y_test, y_train;
  for (auto i : b_test) y_test.push_back(yb[i]);
  for (auto i : b_train) y_train.push_back(yb[i]);
  const auto& gp = ctx.cfg.ntssl.gbdt;

  const auto model_in = gbdt::fit(fb.subset(b_train), y_train, gp);
  const auto model_cross = gbdt::fit(fa, ya, gp);
  CrossNodeResult r;
  r.in_node = evalkit::metrics(evalkit::confusion(gbdt::predict(model_in, test, gp.decision_threshold), y_test));
  r.cross_node =
      evalkit::metrics(evalkit::confusion(gbdt::predict(model_cross, test, gp.decision_threshold), y_test));
  r.in_node.method = evalkit::Method::supervised_in;
  r.cross_node.method = evalkit::Method::supervised_cross;
  r.in_node.seeds = r.cross_node.seeds = {seed};
  if (write_files) {
    features::write_features(fa, ctx.file("features_node_a.csv"));
    features::write_features(fb, ctx.file("features_node_b.csv"));
    const std::vector<evalkit::MetricsReport> reports{r.in_node, r.cross_node};
    evalkit::write_report(reports, std::nullopt, ctx.file("report_crossnode.txt"), false);
  }
  return r;
}

// ---------------------------------------------------------------------------
// pipeline

inline evalkit::SweepResult run_pipeline(const Context& ctx, std::uint64_t seed) {
  const auto sim = simulate_into(ctx, seed, false);
  const auto clusters = evalkit::windowed_clusters(sim.chain, ctx.cfg.window, ctx.cfg.mixing);
  txcluster::write_clusters(clusters, ctx.file("clusters.txt"));

  const auto params = ctx.cfg.sweep(seed);
  auto on_cell = [&](const evalkit::SweepCell& cell, const netsim::TraceSet&, const features::FeatureMatrix& m) {
    const auto tag = cell_tag(cell.coverage, cell.repeat);
    ctx.log("finished cell " + tag);
    features::write_features(m, ctx.file("features_" + tag + ".csv"));
    auto write_rows = [&](const std::string& name, std::span<const std::size_t> rows) {
      pipeline::write_predictions(predictions_for(m, rows, cell.predicted, cell.proba), ctx.file(name + ".txt"));
      if (!cell.corrected.empty()) {
        pipeline::write_predictions(predictions_for(m, rows, cell.corrected, cell.proba),
                                    ctx.file(name + ".collab.txt"));
      }
    };
    if (cell.folds.test.empty()) {
      std::vector<std::size_t> all(m.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      write_rows("pred_" + tag, all);
    } else {
      for (std::size_t f = 0; f < cell.folds.test.size(); ++f) {
        write_rows("pred_" + tag + "_f" + std::to_string(f), cell.folds.test[f]);
      }
    }
  };
  auto result = evalkit::coverage_sweep(sim.traces, sim.truth, sim.chain, params, on_cell);
  for (const auto& w : result.warnings) ctx.warn(w);
  for (auto& r : result.reports) r.seeds = {seed};
  evalkit::write_report(result.reports, evalkit::ProtocolRecord{params.protocol, params.folds, params.repeats, seed},
                        ctx.file("report.txt"));
  std::ofstream(ctx.file("config_effective.cfg"), std::ios::binary) << config::dump(ctx.cfg);
  for (const auto& r : result.reports) *ctx.stdout_ << evalkit::format_report_line(r) << '\n';
  return result;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Origin-transaction identification lab: simulate, extract, detect, learn, cluster, evaluate"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool verbose = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Config file (sectioned key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Seed for stochastic modes");
  app.add_option("--out", out_dir, "Output directory");
  app.add_flag("--verbose", verbose, "Progress on stderr");
  app.add_option("--set", overrides, "Override a config key: section.key=value (repeatable)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate the network and write traces, ground truth and chain data");
  bool include_outbound = false;
  sim->add_flag("--include-outbound", include_outbound, "Also keep the target's outbound links in coverage traces");

  // extract
  auto* ext = app.add_subcommand("extract", "Aggregate a trace into per-transaction features");
  std::string ext_trace, ext_output, ext_truth;
  std::size_t ext_folds = 0;
  ext->add_option("--trace", ext_trace, "Trace file")->required()->check(CLI::ExistingFile);
  ext->add_option("--output", ext_output, "Feature file (default <out>/features.csv)");
  ext->add_option("--truth", ext_truth, "Ground truth, needed for --folds")->check(CLI::ExistingFile);
  ext->add_option("--folds", ext_folds, "Also write stratified k-fold train/test feature files");

  // detect
  auto* det = app.add_subcommand("detect", "Score rows with one unsupervised detector");
  std::string det_features, det_output, det_name = "iforest";
  det->add_option("--features", det_features, "Feature file")->required()->check(CLI::ExistingFile);
  det->add_option("--detector", det_name, "iforest | autoencoder | ocsvm")
      ->check(CLI::IsMember({"iforest", "autoencoder", "ocsvm"}));
  det->add_option("--output", det_output, "Score file (default <out>/scores_<detector>.txt)");

  // train
  auto* trn = app.add_subcommand("train", "Pseudo-label training rows and fit the boosted-tree model");
  std::string trn_features, trn_output, trn_labels;
  trn->add_option("--features", trn_features, "4-column feature file")->required()->check(CLI::ExistingFile);
  trn->add_option("--output", trn_output, "Model file (default <out>/model.txt)");
  trn->add_option("--labels", trn_labels, "Also write the pseudo-labels here");

  // predict
  auto* prd = app.add_subcommand("predict", "Predict origin transactions with a trained model");
  std::string prd_model, prd_features, prd_output, prd_train;
  prd->add_option("--model", prd_model, "Model file")->required()->check(CLI::ExistingFile);
  prd->add_option("--features", prd_features, "Feature file")->required()->check(CLI::ExistingFile);
  prd->add_option("--train-features", prd_train, "Training rows, needed with ntssl.reuse_train_forest")
      ->check(CLI::ExistingFile);
  prd->add_option("--output", prd_output, "Prediction file (default <out>/predictions.txt)");

  // cluster
  auto* clu = app.add_subcommand("cluster", "Multi-input clustering with mixing filter and time-window split");
  std::string clu_chain, clu_output;
  clu->add_option("--chain", clu_chain, "Chain transaction file")->required()->check(CLI::ExistingFile);
  clu->add_option("--output", clu_output, "Cluster file (default <out>/clusters.txt)");

  // collab
  auto* col = app.add_subcommand("collab", "Correct predictions by majority vote inside clusters");
  std::vector<std::string> col_preds;
  std::string col_clusters;
  col->add_option("--predictions", col_preds, "Prediction files, corrected jointly")
      ->required()
      ->check(CLI::ExistingFile);
  col->add_option("--clusters", col_clusters, "Cluster file")->required()->check(CLI::ExistingFile);

  // eval
  auto* evl = app.add_subcommand("eval", "Metrics of prediction files against ground truth (mean over files)");
  std::vector<std::string> evl_preds;
  std::string evl_truth, evl_output, evl_method = "ntssl";
  double evl_cov = 1.0;
  evl->add_option("--predictions", evl_preds, "Prediction files")->required()->check(CLI::ExistingFile);
  evl->add_option("--truth", evl_truth, "Ground truth file")->required()->check(CLI::ExistingFile);
  evl->add_option("--method", evl_method, "Method name recorded in the report")
      ->check(CLI::IsMember({"ntssl", "ntssl_plus", "supervised_in", "supervised_cross"}));
  evl->add_option("--coverage", evl_cov, "Coverage recorded in the report");
  evl->add_option("--output", evl_output, "Report file (default <out>/report.txt)");

  // pipeline / crossnode
  auto* pip = app.add_subcommand("pipeline", "simulate -> extract -> NTSSL -> cluster -> collab -> eval");
  auto* crs = app.add_subcommand("crossnode", "Supervised model trained on node A, evaluated on node B");

  for (auto* s : {sim, ext, det, trn, prd, clu, col, evl, pip, crs}) s->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    Context ctx;
    if (!config_path.empty()) ctx.cfg = config::load(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects section.key=value, got '" + o + "'");
      config::set(ctx.cfg, trim(std::string_view(o).substr(0, eq)), std::string_view(o).substr(eq + 1));
    }
    ctx.cfg.validate();
    ctx.seed = seed;
    ctx.out = out_dir;
    ctx.verbose = verbose;
    ctx.stdout_ = &out;
    ctx.stderr_ = &err;
    fs::create_directories(ctx.out);

    if (*sim) {
      simulate_into(ctx, ctx.require_seed("simulate"), include_outbound);
    } else if (*ext) {
      const auto m = features::aggregate(wiremsg::read_trace(ext_trace));
      const auto path = ext_output.empty() ? ctx.file("features.csv") : ext_output;
      features::write_features(m, path);
      out << "extracted " << m.size() << " rows\n";
      if (ext_folds > 0) {
        if (ext_truth.empty()) throw UsageError("extract --folds needs --truth");
        const auto labels = truth_labels_checked(m, netsim::read_ground_truth(ext_truth));
        const auto folds = evalkit::stratified_folds(labels, ext_folds, ctx.require_seed("extract --folds"));
        for (const auto& w : folds.warnings) ctx.warn(w);
        write_fold_files(ctx, m, folds, stem_of(path));
      }
    } else if (*det) {
      const auto m = require_dim(features::read_features(det_features), 4, det_features);
      const auto d = det_name == "iforest"       ? detect::Detector::iforest
                     : det_name == "autoencoder" ? detect::Detector::autoencoder
                                                 : detect::Detector::ocsvm;
      const auto s = d == detect::Detector::ocsvm ? 0 : ctx.require_seed("detect");
      const auto scores = run_detector(m, d, seeded(ctx, s));
      detect::write_scores(m, scores, det_output.empty() ? ctx.file("scores_" + det_name + ".txt") : det_output);
      const auto flags = detect::flag_anomalies(scores.scores, ctx.cfg.ntssl.detect.contamination);
      out << "flagged " << std::count(flags.begin(), flags.end(), true) << " of " << m.size() << " rows\n";
    } else if (*trn) {
      const auto m = require_dim(features::read_features(trn_features), 4, trn_features);
      const auto trained = pipeline::train(m, seeded(ctx, ctx.require_seed("train")));
      gbdt::save_model(trained.model, trn_output.empty() ? ctx.file("model.txt") : trn_output);
      if (!trn_labels.empty()) {
        std::ofstream lf(trn_labels, std::ios::binary);
        if (!lf) throw DataError("cannot write " + trn_labels);
        const auto labels = trained.expanded.as_labels(m.size());
        std::vector<int> initial = trained.initial.as_labels(m.size());
        for (std::size_t i = 0; i < m.size(); ++i) {
          lf << "tx=" << m[i].tx_hash.hex() << " label=" << labels[i] << " initial=" << initial[i] << '\n';
        }
      }
      out << "initial positives " << trained.initial.positive.size() << ", expanded positives "
          << trained.expanded.positive.size() << " (min inv " << trained.thresholds.min_inv << ", min getdata "
          << trained.thresholds.min_getdata << ", min score " << format_double(trained.thresholds.min_score)
          << ")\n";
    } else if (*prd) {
      const auto model = gbdt::load_model(prd_model);
      auto m = features::read_features(prd_features);
      if (m.dim() == 4) {
        const auto p = seeded(ctx, ctx.require_seed("predict"));
        std::optional<pipeline::TrainedModel> trained;
        if (p.reuse_train_forest) {
          if (prd_train.empty()) throw UsageError("ntssl.reuse_train_forest needs --train-features");
          trained.emplace();
          trained->train_forest.fit(require_dim(features::read_features(prd_train), 4, prd_train),
                                    pipeline::forest_params(p, 3));
        }
        m = pipeline::score_test(m, p, trained ? &trained->train_forest : nullptr);
      }
      if (model.n_features != m.dim()) throw DataError("model expects " + std::to_string(model.n_features) + " features");
      const auto proba = gbdt::predict_proba(model, m);
      const auto pred = gbdt::threshold_labels(proba, ctx.cfg.ntssl.gbdt.decision_threshold);
      std::vector<std::size_t> rows(m.size());
      std::iota(rows.begin(), rows.end(), std::size_t{0});
      pipeline::write_predictions(predictions_for(m, rows, pred, proba),
                                  prd_output.empty() ? ctx.file("predictions.txt") : prd_output);
      out << "predicted " << std::count(pred.begin(), pred.end(), 1) << " origin of " << m.size() << " rows\n";
    } else if (*clu) {
      const auto chain = txcluster::read_chain_txs(clu_chain);
      const auto clusters = evalkit::windowed_clusters(chain, ctx.cfg.window, ctx.cfg.mixing);
      txcluster::write_clusters(clusters, clu_output.empty() ? ctx.file("clusters.txt") : clu_output);
      std::size_t largest = 0;
      for (const auto& c : clusters) largest = std::max(largest, c.members.size());
      out << clusters.size() << " clusters, largest " << largest << '\n';
    } else if (*col) {
      const auto clusters = txcluster::read_clusters(col_clusters);
      std::vector<std::vector<pipeline::Prediction>> files;
      txcluster::Predictions merged;
      for (const auto& path : col_preds) {
        files.push_back(pipeline::read_predictions(path));
        for (const auto& p : files.back()) {
          if (!merged.emplace(p.tx, p.pred).second) throw DataError("tx " + p.tx.hex() + " predicted twice");
        }
      }
      for (std::size_t i = 0; i < col_preds.size(); ++i) {
        pipeline::write_predictions(collab_file(files[i], merged, clusters),
                                    ctx.file(stem_of(col_preds[i]) + ".collab.txt"));
      }
    } else if (*evl) {
      const auto truth = netsim::read_ground_truth(evl_truth);
      const auto r = eval_files(evl_preds, truth, *evalkit::method_from_string(evl_method), evl_cov);
      const std::vector<evalkit::MetricsReport> reports{r};
      evalkit::write_report(reports, std::nullopt, evl_output.empty() ? ctx.file("report.txt") : evl_output, false);
      out << evalkit::format_report_line(r) << '\n';
    } else if (*pip) {
      run_pipeline(ctx, ctx.require_seed("pipeline"));
    } else if (*crs) {
      const auto r = crossnode(ctx, ctx.require_seed("crossnode"), true);
      out << evalkit::format_report_line(r.in_node) << '\n' << evalkit::format_report_line(r.cross_node) << '\n';
    }
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code();
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace ntssl::cli
