#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "ntssl/evalkit.hpp"
#include "support.hpp"

using namespace ntssl;
using namespace ntssl::evalkit;

namespace {

ConfusionMatrix cm_of(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
  ConfusionMatrix c;
  c.tp = tp;
  c.fp = fp;
  c.fn_ = fn;
  c.tn = tn;
  return c;
}

features::FeatureMatrix rows_of(std::size_t n) {
  features::FeatureMatrix m(4);
  for (std::size_t i = 0; i < n; ++i) {
    m.push_back(features::FeatureRow::from_counts(testing_support::hash_of(i), static_cast<std::uint32_t>(i % 7), 1));
  }
  return m;
}

}  // namespace

TEST(Confusion, CountsEachCell) {
  const std::vector<int> p{1, 1, 0, 0, 1}, t{1, 0, 1, 0, 1};
  EXPECT_EQ(confusion(p, t), cm_of(2, 1, 1, 1));
  EXPECT_EQ(confusion(std::vector<int>{}, std::vector<int>{}), cm_of(0, 0, 0, 0));
  EXPECT_THROW(confusion(std::vector<int>{1}, std::vector<int>{1, 0}), UsageError);
}

TEST(Confusion, KeyedFormChecksCoverage) {
  std::unordered_map<Hash32, int, Hash32Hasher> truth{{testing_support::hash_of(1), 1},
                                                      {testing_support::hash_of(2), 0}};
  const std::vector<pipeline::Prediction> ok{{testing_support::hash_of(1), 1, 0.9}, {testing_support::hash_of(2), 1, 0.6}};
  EXPECT_EQ(confusion(ok, truth), cm_of(1, 1, 0, 0));
  const std::vector<pipeline::Prediction> unknown{{testing_support::hash_of(3), 1, 0.9}};
  const std::vector<pipeline::Prediction> dup{{testing_support::hash_of(1), 1, 0.9}, {testing_support::hash_of(1), 1, 0.9}};
  const std::vector<pipeline::Prediction> partial{{testing_support::hash_of(1), 1, 0.9}};
  EXPECT_THROW(confusion(unknown, truth), DataError);
  EXPECT_THROW(confusion(dup, truth), DataError);
  EXPECT_THROW(confusion(partial, truth), DataError);
}

TEST(Metrics, WorkedExample) {
  const auto r = metrics(cm_of(61, 17, 26, 14896));
  EXPECT_NEAR(r.precision, 0.782, 1e-3);
  EXPECT_NEAR(r.recall, 0.701, 1e-3);
  EXPECT_NEAR(r.f1, 0.739, 1e-3);
  EXPECT_NEAR(r.fpr, 17.0 / 14913, 1e-12);
}

TEST(Metrics, PerfectAndEmptyCases) {
  const auto one = metrics(cm_of(1, 0, 0, 0));
  EXPECT_EQ(one.precision, 1.0);
  EXPECT_EQ(one.recall, 1.0);
  EXPECT_EQ(one.f1, 1.0);
  EXPECT_EQ(one.fpr, 0.0);

  const auto none = metrics(cm_of(0, 0, 0, 10));
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
  EXPECT_EQ(metrics(cm_of(0, 0, 0, 0)).fpr, 0.0);
}

TEST(Metrics, RecountAndHarmonicMeanProperty) {
  std::mt19937_64 rng(1);
  for (int iter = 0; iter < 500; ++iter) {
    const std::size_t n = testing_support::uniform(rng, 0, 300);
    std::vector<int> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() % 2);
      t[i] = rng() % 4 == 0;
    }
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p[i] && t[i]) ++tp;
      if (p[i] && !t[i]) ++fp;
      if (!p[i] && t[i]) ++fn;
      if (!p[i] && !t[i]) ++tn;
    }
    const auto c = confusion(p, t);
    ASSERT_EQ(c, cm_of(tp, fp, fn, tn));
    const auto r = metrics(c);
    for (double v : {r.precision, r.recall, r.f1, r.fpr}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (tp > 0) {
      EXPECT_NEAR(r.f1, 2.0 / (1.0 / r.precision + 1.0 / r.recall), 1e-12);
      EXPECT_NEAR(r.f1, 2.0 * tp / (2.0 * tp + fp + fn), 1e-12);
    } else {
      EXPECT_EQ(r.f1, 0.0);
    }
  }
}

TEST(Average, IsArithmeticMean) {
  std::mt19937_64 rng(2);
  std::vector<MetricsReport> reports;
  double sum = 0;
  for (int i = 0; i < 7; ++i) {
    MetricsReport r;
    r.f1 = std::uniform_real_distribution<double>(0, 1)(rng);
    r.recall = 0.5;
    r.coverage = 0.25;
    r.seeds = {static_cast<std::uint64_t>(i % 3)};
    sum += r.f1;
    reports.push_back(r);
  }
  const auto a = average(reports);
  EXPECT_NEAR(a.f1, sum / 7, 1e-12);
  EXPECT_DOUBLE_EQ(a.recall, 0.5);
  EXPECT_EQ(a.coverage, 0.25);
  EXPECT_EQ(a.runs, 7u);
  EXPECT_EQ(a.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_THROW(average(std::vector<MetricsReport>{}), UsageError);
}

TEST(Folds, StratifiedPartition) {
  std::mt19937_64 rng(3);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t k = testing_support::uniform(rng, 2, 10);
    const std::size_t n = testing_support::uniform(rng, k * 3, 500);
    std::vector<int> y(n, 0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 6 == 0) {
        y[i] = 1;
        ++pos;
      }
    }
    const auto f = stratified_folds(y, k, iter);
    ASSERT_EQ(f.test.size(), k);
    std::vector<std::size_t> all;
    for (std::size_t j = 0; j < k; ++j) {
      EXPECT_TRUE(std::is_sorted(f.test[j].begin(), f.test[j].end()));
      all.insert(all.end(), f.test[j].begin(), f.test[j].end());
      const auto train = f.train(j, n);
      EXPECT_EQ(train.size() + f.test[j].size(), n);
      std::vector<std::size_t> overlap;
      std::set_intersection(train.begin(), train.end(), f.test[j].begin(), f.test[j].end(),
                            std::back_inserter(overlap));
      EXPECT_TRUE(overlap.empty());
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i], i);

    if (pos >= k) {
      EXPECT_TRUE(f.stratified);
      for (const auto& rows : f.test) {
        std::size_t p = 0;
        for (auto i : rows) p += y[i];
        EXPECT_GE(p, pos / k);
        EXPECT_LE(p, (pos + k - 1) / k);
        const auto neg = rows.size() - p;
        EXPECT_GE(neg, (n - pos) / k);
        EXPECT_LE(neg, (n - pos + k - 1) / k);
      }
    }
  }
}

TEST(Folds, FallsBackWithWarningWhenPositivesAreScarce) {
  std::vector<int> y(50, 0);
  y[3] = y[7] = 1;
  const auto f = stratified_folds(y, 5, 9);
  EXPECT_FALSE(f.stratified);
  ASSERT_EQ(f.warnings.size(), 1u);
  for (const auto& rows : f.test) EXPECT_EQ(rows.size(), 10u);
  EXPECT_THROW(stratified_folds(y, 1, 9), UsageError);
  EXPECT_THROW(stratified_folds(std::vector<int>{1, 0}, 3, 9), UsageError);
}

TEST(Folds, DeterministicPerSeed) {
  std::vector<int> y(200, 0);
  for (std::size_t i = 0; i < 200; i += 9) y[i] = 1;
  EXPECT_EQ(stratified_folds(y, 5, 11).test, stratified_folds(y, 5, 11).test);
  EXPECT_NE(stratified_folds(y, 5, 11).test, stratified_folds(y, 5, 12).test);
}

TEST(Split, KeepsClassBalance) {
  std::vector<int> y(100, 0);
  for (std::size_t i = 0; i < 20; ++i) y[i * 5] = 1;
  const auto [train, test] = stratified_split(y, 0.25, 4);
  EXPECT_EQ(test.size(), 25u);
  EXPECT_EQ(train.size(), 75u);
  std::size_t pos = 0;
  for (auto i : test) pos += y[i];
  EXPECT_EQ(pos, 5u);
  EXPECT_THROW(stratified_split(y, 1.0, 4), UsageError);
}

TEST(KFold, ConstantAndOraclePipelines) {
  const auto m = rows_of(120);
  std::vector<int> y(120, 0);
  for (std::size_t i = 0; i < 120; i += 6) y[i] = 1;
  std::unordered_map<Hash32, int, Hash32Hasher> truth;
  for (std::size_t i = 0; i < m.size(); ++i) truth[m[i].tx_hash] = y[i];

  const FoldPipeline all_negative = [](const features::FeatureMatrix&, const features::FeatureMatrix& test) {
    return FoldOutput{std::vector<int>(test.size(), 0), {}};
  };
  const auto neg = kfold_eval(m, y, 5, all_negative, 1);
  EXPECT_EQ(neg.f1, 0.0);
  EXPECT_EQ(neg.recall, 0.0);
  EXPECT_EQ(neg.fpr, 0.0);
  EXPECT_EQ(neg.runs, 5u);
  EXPECT_EQ(neg.seeds, (std::vector<std::uint64_t>{1}));

  const FoldPipeline all_positive = [](const features::FeatureMatrix&, const features::FeatureMatrix& test) {
    return FoldOutput{std::vector<int>(test.size(), 1), {}};
  };
  const auto pos = kfold_eval(m, y, 5, all_positive, 1);
  EXPECT_EQ(pos.recall, 1.0);
  EXPECT_EQ(pos.fpr, 1.0);
  EXPECT_NEAR(pos.precision, 20.0 / 120, 1e-12);

  const FoldPipeline oracle = [&](const features::FeatureMatrix& train, const features::FeatureMatrix& test) {
    EXPECT_EQ(train.size() + test.size(), 120u);
    FoldOutput out;
    for (const auto& r : test.rows()) out.pred.push_back(truth.at(r.tx_hash));
    return out;
  };
  const auto perfect = kfold_eval(m, y, 5, oracle, 1);
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_EQ(perfect.fpr, 0.0);

  const FoldPipeline short_output = [](const features::FeatureMatrix&, const features::FeatureMatrix&) {
    return FoldOutput{{1}, {}};
  };
  EXPECT_THROW(kfold_eval(m, y, 5, short_output, 1), PipelineError);
  EXPECT_THROW(kfold_eval(m, std::vector<int>(3, 0), 5, all_negative, 1), UsageError);
}

TEST(KFold, OutOfFoldPredictionsLandOnTheirRows) {
  const auto m = rows_of(60);
  std::vector<int> y(60, 0);
  for (std::size_t i = 0; i < 60; i += 5) y[i] = 1;
  // Predicts the row's own index parity, so each slot is checkable.
  const FoldPipeline parity = [](const features::FeatureMatrix&, const features::FeatureMatrix& test) {
    FoldOutput out;
    for (const auto& r : test.rows()) {
      const int bit = r.tx_hash.bytes[31] & 1;
      out.pred.push_back(bit);
      out.proba.push_back(bit ? 0.75 : 0.25);
    }
    return out;
  };
  const auto kp = kfold_predict(m, y, 4, parity, 3);
  for (std::size_t i = 0; i < 60; ++i) {
    EXPECT_EQ(kp.out_of_fold[i], static_cast<int>(i & 1));
    EXPECT_EQ(kp.proba[i], (i & 1) ? 0.75 : 0.25);
  }
}

TEST(References, PublishedFigures) {
  const auto perimeter = reference(Method::perimeter_ref, 1.0);
  ASSERT_TRUE(perimeter);
  EXPECT_EQ(perimeter->recall, 0.538);
  EXPECT_EQ(perimeter->precision, 0.533);
  EXPECT_EQ(perimeter->f1, 0.53);
  const auto plus = reference(Method::ntssl_plus_ref, 0.25);
  ASSERT_TRUE(plus);
  EXPECT_EQ(plus->recall, 0.727);
  EXPECT_EQ(plus->f1, 0.64);
  EXPECT_FALSE(reference(Method::ntssl, 1.0));
  EXPECT_FALSE(reference(Method::ntssl_ref, 0.3));
  EXPECT_EQ(std::size(kReferences), 12u);
}

TEST(ReportFile, RoundTrip) {
  testing_support::ScratchDir dir("report");
  std::mt19937_64 rng(5);
  std::vector<MetricsReport> reports;
  for (auto m : {Method::ntssl, Method::ntssl_plus, Method::supervised_in, Method::supervised_cross}) {
    MetricsReport r;
    r.method = m;
    r.coverage = 0.75;
    r.recall = std::uniform_real_distribution<double>(0, 1)(rng);
    r.fpr = std::uniform_real_distribution<double>(0, 0.01)(rng);
    r.precision = std::uniform_real_distribution<double>(0, 1)(rng);
    r.f1 = std::uniform_real_distribution<double>(0, 1)(rng);
    r.runs = 25;
    reports.push_back(r);
  }
  const ProtocolRecord proto{Protocol::repeats_only, 5, 3, 42};
  write_report(reports, proto, dir.file("r.txt"));
  const auto back = read_report(dir.file("r.txt"));
  ASSERT_TRUE(back.protocol);
  EXPECT_EQ(back.protocol->protocol, Protocol::repeats_only);
  EXPECT_EQ(back.protocol->repeats, 3u);
  EXPECT_EQ(back.protocol->seed, 42u);
  ASSERT_EQ(back.reports.size(), reports.size() + std::size(kReferences));
  for (std::size_t i = 0; i < reports.size(); ++i) {
    EXPECT_EQ(back.reports[i].method, reports[i].method);
    EXPECT_EQ(back.reports[i].coverage, reports[i].coverage);
    EXPECT_EQ(back.reports[i].recall, reports[i].recall);
    EXPECT_EQ(back.reports[i].fpr, reports[i].fpr);
    EXPECT_EQ(back.reports[i].precision, reports[i].precision);
    EXPECT_EQ(back.reports[i].f1, reports[i].f1);
    EXPECT_EQ(back.reports[i].runs, 25u);
  }

  write_report(reports, std::nullopt, dir.file("plain.txt"), false);
  const auto plain = read_report(dir.file("plain.txt"));
  EXPECT_FALSE(plain.protocol);
  EXPECT_EQ(plain.reports.size(), reports.size());

  testing_support::spit(dir.file("bad.txt"), "method=ntssl cov=1 recall=0.5\n");
  testing_support::spit(dir.file("bad_method.txt"), "method=magic cov=1 recall=0 fpr=0 precision=0 f1=0 runs=1\n");
  EXPECT_THROW(read_report(dir.file("bad.txt")), DataError);
  EXPECT_THROW(read_report(dir.file("bad_method.txt")), DataError);
}
