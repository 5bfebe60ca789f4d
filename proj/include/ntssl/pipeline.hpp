#pragma once

// NTSSL: pseudo-label origin transactions with three unsupervised detectors,
// widen the label set by a dominance rule, append the Isolation Forest score
// as a fifth feature, then train boosted trees on the pseudo-labels.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ntssl/common.hpp"
#include "ntssl/detect.hpp"
#include "ntssl/features.hpp"
#include "ntssl/gbdt.hpp"
#include "ntssl/wiremsg.hpp"

namespace ntssl::pipeline {

class NoConfidentAnomalies : public PipelineError {
 public:
  NoConfidentAnomalies()
      : PipelineError("no confident anomalies: the three detectors share no flagged row; "
                      "raise detect.contamination or check that the target originated transactions") {}
};

enum class Stage { initial, expanded };

struct LabelSets {
  std::vector<std::size_t> positive;  // ascending row indices
  std::vector<std::size_t> negative;
  Stage stage = Stage::initial;

  std::vector<int> as_labels(std::size_t n) const {
    std::vector<int> labels(n, 0);
    for (auto i : positive) labels[i] = 1;
    return labels;
  }
};

struct ExpansionThresholds {
  double min_score = 0;
  std::uint32_t min_inv = 0;
  std::uint32_t min_getdata = 0;
};

inline LabelSets phase1_intersect(const std::vector<bool>& a, const std::vector<bool>& b, const std::vector<bool>& c) {
  if (a.size() != b.size() || a.size() != c.size()) throw UsageError("phase 1: flag lists differ in length");
  LabelSets sets;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i] && c[i]) sets.positive.push_back(i);
  }
  if (sets.positive.empty()) throw NoConfidentAnomalies();
  return sets;
}

inline ExpansionThresholds expansion_thresholds(const features::FeatureMatrix& x, std::span<const std::size_t> p) {
  if (p.empty()) throw UsageError("expansion thresholds need a nonempty positive set");
  if (x.dim() != 5) throw UsageError("expansion needs the score column");
  ExpansionThresholds t{std::numeric_limits<double>::infinity(), std::numeric_limits<std::uint32_t>::max(),
                        std::numeric_limits<std::uint32_t>::max()};
  for (auto i : p) {
    t.min_score = std::min(t.min_score, *x[i].score);
    t.min_inv = std::min(t.min_inv, x[i].inv_num);
    t.min_getdata = std::min(t.min_getdata, x[i].getdata_num);
  }
  return t;
}

inline bool dominates(const features::FeatureRow& row, const ExpansionThresholds& t) {
  return *row.score >= t.min_score && row.inv_num >= t.min_inv && row.getdata_num >= t.min_getdata;
}

// A row is positive iff it reaches all three minima of the initial positives.
inline LabelSets phase2_expand(const features::FeatureMatrix& x_with_score, const LabelSets& initial) {
  const auto t = expansion_thresholds(x_with_score, initial.positive);
  LabelSets out;
  out.stage = Stage::expanded;
  for (std::size_t i = 0; i < x_with_score.size(); ++i) {
    (dominates(x_with_score[i], t) ? out.positive : out.negative).push_back(i);
  }
  return out;
}

// Repeats positive rows (cycling in order) until positives >= ratio * negatives.
inline std::vector<std::size_t> oversample_positives(std::span<const int> labels, double ratio) {
  std::vector<std::size_t> rows(labels.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) pos.push_back(i);
  }
  const double negatives = static_cast<double>(labels.size() - pos.size());
  double have = static_cast<double>(pos.size());
  for (std::size_t k = 0; !pos.empty() && have < ratio * negatives; ++k, have += 1) {
    rows.push_back(pos[k % pos.size()]);
  }
  return rows;
}

struct NtsslParams {
  detect::DetectorParams detect;
  gbdt::GbdtParams gbdt;
  bool oversample = false;
  double oversample_ratio = 0.1;  // positives : negatives after duplication
  bool reuse_train_forest = false;  // score test rows with the train forest instead of a refit
  bool high_side_only = true;       // drop intersected rows below the median Inv or Getdata count
  std::uint64_t seed = 1;
};

struct NtsslResult {
  std::vector<int> predictions;  // aligned with test rows
  std::vector<double> proba;
  LabelSets initial;
  LabelSets expanded;
  ExpansionThresholds thresholds;
  gbdt::GbdtModel model;
};

struct TrainedModel {
  gbdt::GbdtModel model;
  LabelSets initial;
  LabelSets expanded;
  ExpansionThresholds thresholds;
  detect::IsolationForest train_forest;
};

inline detect::IForestParams forest_params(const NtsslParams& p, std::uint64_t stream) {
  auto f = p.detect.iforest;
  f.seed = p.seed * 0x100000001B3ULL + stream;
  return f;
}

// Detectors flag both tails; origin rows sit on the high tail of the counts.
inline LabelSets keep_high_side(const features::FeatureMatrix& x, LabelSets sets) {
  std::vector<std::uint32_t> inv, gd;
  for (const auto& r : x.rows()) {
    inv.push_back(r.inv_num);
    gd.push_back(r.getdata_num);
  }
  const auto mid = inv.size() / 2;
  std::nth_element(inv.begin(), inv.begin() + static_cast<std::ptrdiff_t>(mid), inv.end());
  std::nth_element(gd.begin(), gd.begin() + static_cast<std::ptrdiff_t>(mid), gd.end());
  const auto inv_median = inv[mid];
  const auto gd_median = gd[mid];
  std::erase_if(sets.positive, [&](std::size_t i) { return x[i].inv_num < inv_median || x[i].getdata_num < gd_median; });
  if (sets.positive.empty()) throw NoConfidentAnomalies();
  return sets;
}

// Phases 1-4 on the training rows.
inline TrainedModel train(const features::FeatureMatrix& train4, const NtsslParams& params) {
  if (train4.dim() != 4) throw UsageError("NTSSL training expects the 4-column feature matrix");
  const double c = params.detect.contamination;
  auto ae = params.detect.autoencoder;
  ae.seed = params.seed * 0x100000001B3ULL + 2;

  const auto s_if = detect::iforest_fit_score(train4, forest_params(params, 1));
  const auto s_ae = detect::autoencoder_fit_score(train4, ae);
  const auto s_svm = detect::ocsvm_fit_score(train4, params.detect.ocsvm, c);
  const auto f_if = detect::flag_anomalies(s_if.scores, c);
  const auto f_ae = detect::flag_anomalies(s_ae.scores, c);
  const auto f_svm = detect::flag_anomalies(s_svm.scores, c);

  TrainedModel out;
  out.initial = phase1_intersect(f_if, f_ae, f_svm);
  if (params.high_side_only) out.initial = keep_high_side(train4, std::move(out.initial));

  out.train_forest.fit(train4, forest_params(params, 3));
  const auto train5 = features::augment(train4, out.train_forest.score(train4));
  out.expanded = phase2_expand(train5, out.initial);
  out.thresholds = expansion_thresholds(train5, out.initial.positive);

  auto labels = out.expanded.as_labels(train5.size());
  if (params.oversample) {
    const auto rows = oversample_positives(labels, params.oversample_ratio);
    const auto dense = train5.dense();
    std::vector<double> x;
    std::vector<int> y;
    x.reserve(rows.size() * 5);
    for (auto r : rows) {
      x.insert(x.end(), dense.begin() + static_cast<std::ptrdiff_t>(r * 5),
               dense.begin() + static_cast<std::ptrdiff_t>(r * 5 + 5));
      y.push_back(labels[r]);
    }
    out.model = gbdt::fit(x, 5, y, params.gbdt);
  } else {
    out.model = gbdt::fit(train5, labels, params.gbdt);
  }
  return out;
}

// Phase 3 on the test rows: Isolation Forest refit on the test matrix (or the
// train forest when configured), then prediction.
inline features::FeatureMatrix score_test(const features::FeatureMatrix& test4, const NtsslParams& params,
                                          const detect::IsolationForest* train_forest) {
  if (test4.dim() != 4) throw UsageError("NTSSL prediction expects the 4-column feature matrix");
  if (params.reuse_train_forest && train_forest) return features::augment(test4, train_forest->score(test4));
  if (test4.size() < 2) {
    // A forest needs two rows; a lone row gets the neutral score.
    return features::augment(test4, std::vector<double>(test4.size(), 0.5));
  }
  detect::IsolationForest forest;
  forest.fit(test4, forest_params(params, 4));
  return features::augment(test4, forest.score(test4));
}

inline NtsslResult run_ntssl(const features::FeatureMatrix& train4, const features::FeatureMatrix& test4,
                             const NtsslParams& params) {
  auto trained = train(train4, params);
  const auto test5 = score_test(test4, params, &trained.train_forest);
  NtsslResult r;
  r.proba = gbdt::predict_proba(trained.model, test5);
  r.predictions = gbdt::threshold_labels(r.proba, params.gbdt.decision_threshold);
  r.initial = std::move(trained.initial);
  r.expanded = std::move(trained.expanded);
  r.thresholds = trained.thresholds;
  r.model = std::move(trained.model);
  return r;
}

inline NtsslResult run_ntssl(std::span<const wiremsg::TraceRecord> train_trace,
                             std::span<const wiremsg::TraceRecord> test_trace, const NtsslParams& params) {
  return run_ntssl(features::aggregate(train_trace), features::aggregate(test_trace), params);
}

// ---------------------------------------------------------------------------
// Prediction files: `tx=<hex> pred=<0|1> proba=<decimal>`

struct Prediction {
  Hash32 tx;
  int pred = 0;
  double proba = 0;

  bool operator==(const Prediction&) const = default;
};

inline void write_predictions(std::span<const Prediction> preds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write prediction file: " + path);
  for (const auto& p : preds) {
    out << "tx=" << p.tx.hex() << " pred=" << p.pred << " proba=" << format_double(p.proba) << '\n';
  }
}

inline std::vector<Prediction> read_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prediction file: " + path);
  std::vector<Prediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = parse_fields(line);
    auto fail = [&] { return DataError(path + ":" + std::to_string(line_no) + ": malformed prediction"); };
    if (!f || f->size() != 3 || (*f)[0].first != "tx" || (*f)[1].first != "pred" || (*f)[2].first != "proba") {
      throw fail();
    }
    const auto h = Hash32::from_hex((*f)[0].second);
    const auto proba = parse_double((*f)[2].second);
    const auto pred = (*f)[1].second;
    if (!h || !proba || (pred != "0" && pred != "1")) throw fail();
    out.push_back({*h, pred == "1" ? 1 : 0, *proba});
  }
  return out;
}

}  // namespace ntssl::pipeline
