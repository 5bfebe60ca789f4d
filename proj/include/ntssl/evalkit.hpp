#pragma once

// Confusion-matrix metrics, stratified k-fold cross-validation and the
// coverage sweep that drives NTSSL and NTSSL+ over subsampled probe sets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ntssl/common.hpp"
#include "ntssl/features.hpp"
#include "ntssl/netsim.hpp"
#include "ntssl/pipeline.hpp"
#include "ntssl/txcluster.hpp"

namespace ntssl::evalkit {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fn_ = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    tp += o.tp;
    fn_ += o.fn_;
    fp += o.fp;
    tn += o.tn;
    return *this;
  }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline ConfusionMatrix confusion(std::span<const int> preds, std::span<const int> truth) {
  if (preds.size() != truth.size()) {
    throw UsageError("confusion: " + std::to_string(preds.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] != 0;
    const bool t = truth[i] != 0;
    if (p && t) ++cm.tp;
    else if (!p && t) ++cm.fn_;
    else if (p) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

// Keyed form: every prediction must name a transaction of the evaluated set,
// and every transaction of the set must be predicted exactly once.
inline ConfusionMatrix confusion(std::span<const pipeline::Prediction> preds,
                                 const std::unordered_map<Hash32, int, Hash32Hasher>& truth) {
  std::unordered_map<Hash32, int, Hash32Hasher> seen;
  ConfusionMatrix cm;
  for (const auto& p : preds) {
    const auto it = truth.find(p.tx);
    if (it == truth.end()) throw DataError("prediction for unknown transaction " + p.tx.hex());
    if (!seen.emplace(p.tx, 1).second) throw DataError("duplicate prediction for " + p.tx.hex());
    const int pred = p.pred;
    const int t = it->second;
    cm += confusion(std::span<const int>(&pred, 1), std::span<const int>(&t, 1));
  }
  if (seen.size() != truth.size()) {
    throw DataError("predictions cover " + std::to_string(seen.size()) + " of " + std::to_string(truth.size()) +
                    " transactions");
  }
  return cm;
}

enum class Method { perimeter_ref, ntssl_ref, ntssl_plus_ref, ntssl, ntssl_plus, supervised_in, supervised_cross };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::perimeter_ref: return "perimeter_ref";
    case Method::ntssl_ref: return "ntssl_ref";
    case Method::ntssl_plus_ref: return "ntssl_plus_ref";
    case Method::ntssl: return "ntssl";
    case Method::ntssl_plus: return "ntssl_plus";
    case Method::supervised_in: return "supervised_in";
    case Method::supervised_cross: return "supervised_cross";
  }
  return "?";
}

inline std::optional<Method> method_from_string(std::string_view s) {
  for (auto m : {Method::perimeter_ref, Method::ntssl_ref, Method::ntssl_plus_ref, Method::ntssl, Method::ntssl_plus,
                 Method::supervised_in, Method::supervised_cross}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct MetricsReport {
  double recall = 0;
  double fpr = 0;
  double precision = 0;
  double f1 = 0;
  double coverage = 1;
  Method method = Method::ntssl;
  std::vector<std::uint64_t> seeds;
  std::size_t runs = 1;
};

inline double safe_ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }

inline MetricsReport metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  const auto tp = static_cast<double>(cm.tp);
  r.recall = safe_ratio(tp, tp + static_cast<double>(cm.fn_));
  r.fpr = safe_ratio(static_cast<double>(cm.fp), static_cast<double>(cm.fp + cm.tn));
  r.precision = safe_ratio(tp, tp + static_cast<double>(cm.fp));
  r.f1 = safe_ratio(2 * r.precision * r.recall, r.precision + r.recall);
  return r;
}

// Arithmetic mean of the four metrics; method and coverage come from the first
// report, seeds are concatenated and runs summed.
inline MetricsReport average(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw UsageError("average of zero reports");
  MetricsReport out;
  out.method = reports.front().method;
  out.coverage = reports.front().coverage;
  out.runs = 0;
  for (const auto& r : reports) {
    out.recall += r.recall;
    out.fpr += r.fpr;
    out.precision += r.precision;
    out.f1 += r.f1;
    out.runs += r.runs;
    for (auto s : r.seeds) {
      if (std::find(out.seeds.begin(), out.seeds.end(), s) == out.seeds.end()) out.seeds.push_back(s);
    }
  }
  const auto n = static_cast<double>(reports.size());
  out.recall /= n;
  out.fpr /= n;
  out.precision /= n;
  out.f1 /= n;
  return out;
}

// ---------------------------------------------------------------------------
// Folds

struct Folds {
  std::vector<std::vector<std::size_t>> test;  // ascending row indices per fold
  bool stratified = true;
  std::vector<std::string> warnings;

  std::vector<std::size_t> train(std::size_t fold, std::size_t n) const {
    std::vector<char> held(n, 0);
    for (auto i : test[fold]) held[i] = 1;
    std::vector<std::size_t> rows;
    rows.reserve(n - test[fold].size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!held[i]) rows.push_back(i);
    }
    return rows;
  }
};

// Positives and negatives are shuffled separately and dealt round-robin, so
// each fold gets floor or ceil of its share of both classes.
inline Folds stratified_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw UsageError("k-fold needs k >= 2");
  if (labels.size() < k) throw UsageError("k-fold needs at least k rows");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);

  Folds folds;
  folds.test.resize(k);
  if (pos.size() < k) {
    folds.stratified = false;
    folds.warnings.push_back("only " + std::to_string(pos.size()) + " positives for " + std::to_string(k) +
                             " folds; using unstratified folds");
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::shuffle(all.begin(), all.end(), rng);
    for (std::size_t j = 0; j < all.size(); ++j) folds.test[j % k].push_back(all[j]);
  } else {
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::size_t slot = 0;
    for (auto i : pos) folds.test[slot++ % k].push_back(i);
    for (auto i : neg) folds.test[slot++ % k].push_back(i);
  }
  for (auto& f : folds.test) std::sort(f.begin(), f.end());
  return folds;
}

// Shuffles each class and holds out round(test_fraction * class size) rows of
// it, so both halves keep the class balance.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(std::span<const int> labels,
                                                                                      double test_fraction,
                                                                                      std::uint64_t seed) {
  if (!(test_fraction > 0 && test_fraction < 1)) throw UsageError("test fraction must be in (0,1)");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pos, neg, train, test;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  for (auto* cls : {&pos, &neg}) {
    std::shuffle(cls->begin(), cls->end(), rng);
    const auto held = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(cls->size())));
    test.insert(test.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(held));
    train.insert(train.end(), cls->begin() + static_cast<std::ptrdiff_t>(held), cls->end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

// Test-row labels, plus probabilities when the pipeline has them.
struct FoldOutput {
  std::vector<int> pred;
  std::vector<double> proba;
};

// A fold pipeline maps (train rows, test rows) to test-row predictions.
using FoldPipeline =
    std::function<FoldOutput(const features::FeatureMatrix& train, const features::FeatureMatrix& test)>;

struct KFoldPredictions {
  Folds folds;
  std::vector<int> out_of_fold;  // aligned with dataset rows
  std::vector<double> proba;     // equals out_of_fold when the pipeline gives no probabilities
};

inline KFoldPredictions kfold_predict(const features::FeatureMatrix& dataset, std::span<const int> labels,
                                      std::size_t k, const FoldPipeline& run, std::uint64_t seed) {
  if (labels.size() != dataset.size()) throw UsageError("kfold: label count differs from row count");
  KFoldPredictions out;
  out.folds = stratified_folds(labels, k, seed);
  out.out_of_fold.assign(dataset.size(), 0);
  out.proba.assign(dataset.size(), 0.0);
  for (std::size_t f = 0; f < k; ++f) {
    const auto& test_rows = out.folds.test[f];
    const auto train_rows = out.folds.train(f, dataset.size());
    const auto res = run(dataset.subset(train_rows), dataset.subset(test_rows));
    if (res.pred.size() != test_rows.size() || (!res.proba.empty() && res.proba.size() != test_rows.size())) {
      throw PipelineError("fold pipeline returned the wrong number of predictions");
    }
    for (std::size_t j = 0; j < test_rows.size(); ++j) {
      out.out_of_fold[test_rows[j]] = res.pred[j];
      out.proba[test_rows[j]] = res.proba.empty() ? res.pred[j] : res.proba[j];
    }
  }
  return out;
}

// Mean of per-fold metrics for a given out-of-fold prediction vector.
inline MetricsReport fold_average(const Folds& folds, std::span<const int> preds, std::span<const int> labels) {
  std::vector<MetricsReport> per_fold;
  for (const auto& rows : folds.test) {
    std::vector<int> p, t;
    for (auto i : rows) {
      p.push_back(preds[i]);
      t.push_back(labels[i]);
    }
    per_fold.push_back(metrics(confusion(p, t)));
  }
  return average(per_fold);
}

inline MetricsReport kfold_eval(const features::FeatureMatrix& dataset, std::span<const int> labels, std::size_t k,
                                const FoldPipeline& run, std::uint64_t seed) {
  const auto kp = kfold_predict(dataset, labels, k, run, seed);
  auto report = fold_average(kp.folds, kp.out_of_fold, labels);
  report.seeds = {seed};
  return report;
}

inline std::vector<int> truth_labels(const features::FeatureMatrix& m, const netsim::GroundTruth& truth) {
  std::vector<int> labels(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) labels[i] = truth.is_target_origin(m[i].tx_hash) ? 1 : 0;
  return labels;
}

// Clusters used by NTSSL+: mixing filter, multi-input union, time-window split.
inline std::vector<txcluster::TxCluster> windowed_clusters(std::span<const txcluster::ChainTx> chain, double window,
                                                           const txcluster::MixingFilter& filter = {}) {
  const auto kept = txcluster::filter_mixing(chain, filter);
  return txcluster::window_split_all(txcluster::multi_input_cluster(kept), window);
}

inline std::vector<int> collab_labels(const features::FeatureMatrix& m, std::span<const int> preds,
                                      std::span<const txcluster::TxCluster> clusters) {
  txcluster::Predictions map;
  for (std::size_t i = 0; i < m.size(); ++i) map.emplace(m[i].tx_hash, preds[i]);
  const auto corrected = txcluster::collab_correct(map, clusters);
  std::vector<int> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = corrected.at(m[i].tx_hash);
  return out;
}

// ---------------------------------------------------------------------------
// Coverage sweep

enum class Protocol {
  cv_per_repeat,  // k-fold CV inside every repeat: repeats x k evaluations
  repeats_only,   // NTSSL trained and scored on all rows of each repeat
};

inline std::string_view to_string(Protocol p) {
  return p == Protocol::cv_per_repeat ? "cv_per_repeat" : "repeats_only";
}

struct SweepParams {
  std::vector<double> coverages{0.25, 0.5, 0.75, 1.0};
  std::size_t repeats = 5;
  std::size_t folds = 5;
  Protocol protocol = Protocol::cv_per_repeat;
  pipeline::NtsslParams ntssl;
  double window = 600;
  txcluster::MixingFilter mixing;
  std::uint64_t seed = 1;
};

struct SweepCell {
  double coverage = 1;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;  // subsample, fold and NTSSL seed of this cell
  MetricsReport ntssl;
  std::optional<MetricsReport> ntssl_plus;
  Folds folds;                 // empty under repeats_only
  std::vector<int> predicted;  // NTSSL labels aligned with the cell's feature rows
  std::vector<double> proba;
  std::vector<int> corrected;  // NTSSL+ labels, empty without chain data
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::vector<MetricsReport> reports;  // per (method, coverage), in coverage order
  std::vector<std::string> warnings;
};

inline std::uint64_t cell_seed(std::uint64_t seed, std::size_t coverage_index, std::size_t repeat) {
  return netsim::detail::mix_seed(seed, 1000 * (coverage_index + 1) + repeat);
}

inline pipeline::NtsslParams with_seed(pipeline::NtsslParams p, std::uint64_t seed) {
  p.seed = seed;
  return p;
}

inline FoldPipeline ntssl_fold_pipeline(const pipeline::NtsslParams& params) {
  return [params](const features::FeatureMatrix& train, const features::FeatureMatrix& test) {
    auto r = pipeline::run_ntssl(train, test, params);
    return FoldOutput{std::move(r.predictions), std::move(r.proba)};
  };
}

// One sweep cell: NTSSL predictions on one subsampled trace, plus NTSSL+ when
// clusters are supplied. Returns NTSSL and NTSSL+ reports.
inline SweepCell evaluate_cell(const features::FeatureMatrix& m, std::span<const int> labels,
                               const std::vector<txcluster::TxCluster>* clusters, const SweepParams& params,
                               std::uint64_t seed, std::vector<std::string>& warnings) {
  SweepCell cell;
  const auto p = with_seed(params.ntssl, seed);
  if (params.protocol == Protocol::cv_per_repeat) {
    auto kp = kfold_predict(m, labels, params.folds, ntssl_fold_pipeline(p), seed);
    for (const auto& w : kp.folds.warnings) warnings.push_back(w);
    cell.ntssl = fold_average(kp.folds, kp.out_of_fold, labels);
    if (clusters) {
      cell.corrected = collab_labels(m, kp.out_of_fold, *clusters);
      cell.ntssl_plus = fold_average(kp.folds, cell.corrected, labels);
    }
    cell.folds = std::move(kp.folds);
    cell.predicted = std::move(kp.out_of_fold);
    cell.proba = std::move(kp.proba);
  } else {
    auto r = pipeline::run_ntssl(m, m, p);
    cell.ntssl = metrics(confusion(r.predictions, labels));
    if (clusters) {
      cell.corrected = collab_labels(m, r.predictions, *clusters);
      cell.ntssl_plus = metrics(confusion(cell.corrected, labels));
    }
    cell.predicted = std::move(r.predictions);
    cell.proba = std::move(r.proba);
  }
  cell.seed = seed;
  cell.ntssl.method = Method::ntssl;
  cell.ntssl.seeds = {seed};
  if (cell.ntssl_plus) {
    cell.ntssl_plus->method = Method::ntssl_plus;
    cell.ntssl_plus->seeds = {seed};
  }
  return cell;
}

// Called once per finished cell with its subsampled trace and feature rows.
using CellHook =
    std::function<void(const SweepCell&, const netsim::TraceSet& subsample, const features::FeatureMatrix& rows)>;

inline SweepResult coverage_sweep(const netsim::TraceSet& full, const netsim::GroundTruth& truth,
                                  std::span<const txcluster::ChainTx> chain, const SweepParams& params,
                                  const CellHook& on_cell = {}) {
  if (params.coverages.empty() || params.repeats == 0) throw UsageError("sweep needs coverages and repeats");
  std::optional<std::vector<txcluster::TxCluster>> clusters;
  if (!chain.empty()) clusters = windowed_clusters(chain, params.window, params.mixing);

  SweepResult result;
  for (std::size_t ci = 0; ci < params.coverages.size(); ++ci) {
    const double cov = params.coverages[ci];
    std::vector<MetricsReport> plain, plus;
    for (std::size_t r = 0; r < params.repeats; ++r) {
      const auto seed = cell_seed(params.seed, ci, r);
      const auto sub = netsim::subsample_probes(full, cov, seed);
      const auto m = features::aggregate(sub.records);
      const auto labels = truth_labels(m, truth);
      auto cell = evaluate_cell(m, labels, clusters ? &*clusters : nullptr, params, seed, result.warnings);
      cell.coverage = cov;
      cell.repeat = r;
      cell.ntssl.coverage = cov;
      plain.push_back(cell.ntssl);
      if (cell.ntssl_plus) {
        cell.ntssl_plus->coverage = cov;
        plus.push_back(*cell.ntssl_plus);
      }
      if (on_cell) on_cell(cell, sub, m);
      result.cells.push_back(std::move(cell));
    }
    result.reports.push_back(average(plain));
    if (!plus.empty()) result.reports.push_back(average(plus));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Published comparison figures (recall, FPR, precision as fractions).

struct Reference {
  Method method;
  double coverage;
  double recall, fpr, precision, f1;
};

inline constexpr Reference kReferences[] = {
    {Method::perimeter_ref, 0.25, 0.391, 0.0035, 0.394, 0.40},
    {Method::perimeter_ref, 0.50, 0.404, 0.0032, 0.440, 0.42},
    {Method::perimeter_ref, 0.75, 0.504, 0.0028, 0.499, 0.50},
    {Method::perimeter_ref, 1.00, 0.538, 0.0027, 0.533, 0.53},
    {Method::ntssl_ref, 0.25, 0.568, 0.0035, 0.498, 0.50},
    {Method::ntssl_ref, 0.50, 0.525, 0.0023, 0.567, 0.50},
    {Method::ntssl_ref, 0.75, 0.593, 0.0024, 0.601, 0.59},
    {Method::ntssl_ref, 1.00, 0.702, 0.0012, 0.790, 0.74},
    {Method::ntssl_plus_ref, 0.25, 0.727, 0.0029, 0.593, 0.64},
    {Method::ntssl_plus_ref, 0.50, 0.728, 0.0021, 0.677, 0.70},
    {Method::ntssl_plus_ref, 0.75, 0.809, 0.0022, 0.690, 0.74},
    {Method::ntssl_plus_ref, 1.00, 0.900, 0.0011, 0.845, 0.87},
};

inline std::optional<MetricsReport> reference(Method method, double coverage) {
  for (const auto& r : kReferences) {
    if (r.method == method && std::abs(r.coverage - coverage) < 1e-9) {
      MetricsReport m;
      m.method = method;
      m.coverage = coverage;
      m.recall = r.recall;
      m.fpr = r.fpr;
      m.precision = r.precision;
      m.f1 = r.f1;
      m.runs = 0;
      return m;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Report files

struct ProtocolRecord {
  Protocol protocol = Protocol::cv_per_repeat;
  std::size_t folds = 5;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
};

inline std::string format_report_line(const MetricsReport& r) {
  std::ostringstream os;
  os << "method=" << to_string(r.method) << " cov=" << format_double(r.coverage) << " recall=" << format_double(r.recall)
     << " fpr=" << format_double(r.fpr) << " precision=" << format_double(r.precision)
     << " f1=" << format_double(r.f1) << " runs=" << r.runs;
  return os.str();
}

inline void write_report(std::span<const MetricsReport> reports, const std::optional<ProtocolRecord>& protocol,
                         const std::string& path, bool with_references = true) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + path);
  if (protocol) {
    out << "protocol=" << to_string(protocol->protocol) << " folds=" << protocol->folds
        << " repeats=" << protocol->repeats << " seed=" << protocol->seed << '\n';
  }
  for (const auto& r : reports) out << format_report_line(r) << '\n';
  if (with_references) {
    for (const auto& ref : kReferences) out << format_report_line(*reference(ref.method, ref.coverage)) << '\n';
  }
}

struct ReportFile {
  std::optional<ProtocolRecord> protocol;
  std::vector<MetricsReport> reports;
};

inline ReportFile read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report: " + path);
  ReportFile file;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = parse_fields(line);
    auto fail = [&] { return DataError(path + ":" + std::to_string(line_no) + ": malformed report line"); };
    if (!f || f->empty()) throw fail();
    if ((*f)[0].first == "protocol") {
      if (f->size() != 4) throw fail();
      ProtocolRecord p;
      if ((*f)[0].second == "cv_per_repeat") p.protocol = Protocol::cv_per_repeat;
      else if ((*f)[0].second == "repeats_only") p.protocol = Protocol::repeats_only;
      else throw fail();
      const auto folds = parse_u64((*f)[1].second);
      const auto repeats = parse_u64((*f)[2].second);
      const auto seed = parse_u64((*f)[3].second);
      if (!folds || !repeats || !seed) throw fail();
      p.folds = *folds;
      p.repeats = *repeats;
      p.seed = *seed;
      file.protocol = p;
      continue;
    }
    static constexpr std::string_view keys[] = {"method", "cov", "recall", "fpr", "precision", "f1", "runs"};
    if (f->size() != 7) throw fail();
    for (std::size_t i = 0; i < 7; ++i) {
      if ((*f)[i].first != keys[i]) throw fail();
    }
    MetricsReport r;
    const auto m = method_from_string((*f)[0].second);
    const auto cov = parse_double((*f)[1].second);
    const auto rec = parse_double((*f)[2].second);
    const auto fpr = parse_double((*f)[3].second);
    const auto prec = parse_double((*f)[4].second);
    const auto f1 = parse_double((*f)[5].second);
    const auto runs = parse_u64((*f)[6].second);
    if (!m || !cov || !rec || !fpr || !prec || !f1 || !runs) throw fail();
    r.method = *m;
    r.coverage = *cov;
    r.recall = *rec;
    r.fpr = *fpr;
    r.precision = *prec;
    r.f1 = *f1;
    r.runs = *runs;
    file.reports.push_back(r);
  }
  return file;
}

}  // namespace ntssl::evalkit
