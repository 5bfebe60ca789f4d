#pragma once

// Unsupervised anomaly scorers used to seed pseudo-labels: Isolation Forest,
// a small autoencoder, and a one-class SVM. All scores are oriented so that
// larger means more anomalous.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ntssl/common.hpp"
#include "ntssl/features.hpp"

namespace ntssl::detect {

enum class Detector { iforest, autoencoder, ocsvm };

inline std::string_view to_string(Detector d) {
  switch (d) {
    case Detector::iforest: return "iforest";
    case Detector::autoencoder: return "autoencoder";
    case Detector::ocsvm: return "ocsvm";
  }
  return "?";
}

struct AnomalyScores {
  std::vector<double> scores;
  Detector detector = Detector::iforest;
};

struct IForestParams {
  std::size_t n_trees = 100;
  std::size_t subsample_size = 256;  // capped at n
  std::uint64_t seed = 1;
};

struct AutoencoderParams {
  std::size_t hidden_dim = 2;
  std::size_t epochs = 200;
  double learning_rate = 0.01;
  std::uint64_t seed = 1;
  // Independent initializations; the one with the lowest mean training
  // reconstruction error is kept. Plain SGD on a 2-unit tanh bottleneck lands
  // in a saturated minimum for roughly one seed in ten.
  std::size_t restarts = 3;
};

struct OcsvmParams {
  double nu = 0;     // 0 selects 2 * contamination
  double gamma = 0;  // 0 selects 1 / (d * pooled variance)
  double tolerance = 1e-3;
  std::size_t max_iter = 1'000'000;
};

struct DetectorParams {
  IForestParams iforest;
  AutoencoderParams autoencoder;
  OcsvmParams ocsvm;
  double contamination = 0.01;
};

// Average unsuccessful-search path length in a binary search tree of n points.
inline double avg_path_normalizer(std::size_t n) {
  if (n <= 1) return 0.0;
  if (n == 2) return 1.0;
  constexpr double kEulerGamma = 0.5772156649;
  const double nd = static_cast<double>(n);
  return 2.0 * (std::log(nd - 1.0) + kEulerGamma) - 2.0 * (nd - 1.0) / nd;
}

namespace detail {

// Row-major view over a dense matrix.
struct Dense {
  std::vector<double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  static Dense from(const features::FeatureMatrix& m) { return {m.dense(), m.size(), m.dim()}; }
  std::span<const double> row(std::size_t i) const { return std::span<const double>(data).subspan(i * cols, cols); }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline void require_finite(const Dense& x) {
  for (double v : x.data) {
    if (!std::isfinite(v)) throw DataError("feature matrix contains non-finite values");
  }
}

// Column z-scores; zero-variance columns map to 0.
inline Dense standardize(const Dense& x) {
  Dense out = x;
  for (std::size_t j = 0; j < x.cols; ++j) {
    double mean = 0;
    for (std::size_t i = 0; i < x.rows; ++i) mean += x.at(i, j);
    mean /= static_cast<double>(x.rows);
    double var = 0;
    for (std::size_t i = 0; i < x.rows; ++i) var += (x.at(i, j) - mean) * (x.at(i, j) - mean);
    var /= static_cast<double>(x.rows);
    const double sd = std::sqrt(var);
    for (std::size_t i = 0; i < x.rows; ++i) {
      out.data[i * x.cols + j] = sd > 0 ? (x.at(i, j) - mean) / sd : 0.0;
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Isolation Forest

class IsolationForest {
 public:
  void fit(const features::FeatureMatrix& x, const IForestParams& params) {
    fit(detail::Dense::from(x), params);
  }

  void fit(const detail::Dense& x, const IForestParams& params) {
    if (x.rows < 2) throw DataError("isolation forest needs at least 2 rows");
    detail::require_finite(x);
    cols_ = x.cols;
    psi_ = std::min(params.subsample_size, x.rows);
    const auto height_limit = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(psi_))));
    std::mt19937_64 rng(params.seed);
    std::vector<std::size_t> all(x.rows);
    std::iota(all.begin(), all.end(), std::size_t{0});
    trees_.assign(params.n_trees, {});
    for (auto& tree : trees_) {
      // Partial Fisher-Yates for a sample without replacement.
      for (std::size_t i = 0; i < psi_; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, x.rows - 1);
        std::swap(all[i], all[pick(rng)]);
      }
      std::vector<std::size_t> sample(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(psi_));
      grow(tree, x, sample, 0, height_limit, rng);
    }
  }

  double path_length(std::span<const double> row) const {
    double total = 0;
    for (const auto& tree : trees_) total += tree_path(tree, row);
    return total / static_cast<double>(trees_.size());
  }

  // s(x) = 2^(-E[h(x)] / c(psi))
  std::vector<double> score(const features::FeatureMatrix& x) const { return score(detail::Dense::from(x)); }

  std::vector<double> score(const detail::Dense& x) const {
    if (x.cols != cols_) throw UsageError("isolation forest: column count mismatch");
    detail::require_finite(x);
    const double norm = avg_path_normalizer(psi_);
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = std::exp2(-path_length(x.row(i)) / norm);
    return out;
  }

 private:
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t size = 0;
  };
  using Tree = std::vector<Node>;

  static std::uint32_t grow(Tree& tree, const detail::Dense& x, std::vector<std::size_t>& idx, std::size_t depth,
                            std::size_t limit, std::mt19937_64& rng) {
    const auto id = static_cast<std::uint32_t>(tree.size());
    tree.push_back({});
    tree[id].size = static_cast<std::uint32_t>(idx.size());
    if (idx.size() <= 1 || depth >= limit) return id;

    std::vector<std::size_t> splittable;
    std::vector<std::pair<double, double>> range(x.cols);
    for (std::size_t j = 0; j < x.cols; ++j) {
      double lo = x.at(idx[0], j), hi = lo;
      for (auto i : idx) {
        lo = std::min(lo, x.at(i, j));
        hi = std::max(hi, x.at(i, j));
      }
      range[j] = {lo, hi};
      if (hi > lo) splittable.push_back(j);
    }
    if (splittable.empty()) return id;

    const auto f = splittable[std::uniform_int_distribution<std::size_t>(0, splittable.size() - 1)(rng)];
    double t = std::uniform_real_distribution<double>(range[f].first, range[f].second)(rng);
    if (t <= range[f].first) t = std::nextafter(range[f].first, range[f].second);
    std::vector<std::size_t> left, right;
    for (auto i : idx) (x.at(i, f) < t ? left : right).push_back(i);

    tree[id].feature = static_cast<std::int32_t>(f);
    tree[id].threshold = t;
    const auto l = grow(tree, x, left, depth + 1, limit, rng);
    const auto r = grow(tree, x, right, depth + 1, limit, rng);
    tree[id].left = l;
    tree[id].right = r;
    return id;
  }

  static double tree_path(const Tree& tree, std::span<const double> row) {
    std::uint32_t node = 0;
    double depth = 0;
    while (tree[node].feature >= 0) {
      node = row[static_cast<std::size_t>(tree[node].feature)] < tree[node].threshold ? tree[node].left
                                                                                       : tree[node].right;
      depth += 1;
    }
    return depth + avg_path_normalizer(tree[node].size);
  }

  std::vector<Tree> trees_;
  std::size_t psi_ = 0;
  std::size_t cols_ = 0;
};

inline AnomalyScores iforest_fit_score(const features::FeatureMatrix& x, const IForestParams& params) {
  IsolationForest forest;
  forest.fit(x, params);
  return {forest.score(x), Detector::iforest};
}

// ---------------------------------------------------------------------------
// Autoencoder: d -> hidden (tanh) -> d (linear), squared loss, per-sample SGD.

inline double reconstruction_error(std::span<const double> x, std::span<const double> x_hat) {
  if (x.size() != x_hat.size() || x.empty()) throw UsageError("reconstruction_error: size mismatch");
  double sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += (x[i] - x_hat[i]) * (x[i] - x_hat[i]);
  return sum / static_cast<double>(x.size());
}

class Autoencoder {
 public:
  Autoencoder(std::size_t dim, std::size_t hidden, std::uint64_t seed) : d_(dim), h_(hidden) {
    std::mt19937_64 rng(seed);
    const double a1 = std::sqrt(6.0 / static_cast<double>(d_ + h_));
    std::uniform_real_distribution<double> init(-a1, a1);
    w1_.resize(h_ * d_);
    w2_.resize(d_ * h_);
    for (auto& w : w1_) w = init(rng);
    for (auto& w : w2_) w = init(rng);
    b1_.assign(h_, 0.0);
    b2_.assign(d_, 0.0);
  }

  std::vector<double> reconstruct(std::span<const double> x) const {
    std::vector<double> hidden(h_), out(d_);
    forward(x, hidden, out);
    return out;
  }

  void train(const detail::Dense& x, std::size_t epochs, double lr, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> hidden(h_), out(d_), d_out(d_), d_hidden(h_);
    for (std::size_t e = 0; e < epochs; ++e) {
      std::shuffle(order.begin(), order.end(), rng);
      for (auto i : order) {
        const auto row = x.row(i);
        forward(row, hidden, out);
        // dL/dout for L = mean squared error
        for (std::size_t k = 0; k < d_; ++k) d_out[k] = 2.0 * (out[k] - row[k]) / static_cast<double>(d_);
        for (std::size_t j = 0; j < h_; ++j) {
          double g = 0;
          for (std::size_t k = 0; k < d_; ++k) g += w2_[k * h_ + j] * d_out[k];
          d_hidden[j] = g * (1.0 - hidden[j] * hidden[j]);
        }
        for (std::size_t k = 0; k < d_; ++k) {
          for (std::size_t j = 0; j < h_; ++j) w2_[k * h_ + j] -= lr * d_out[k] * hidden[j];
          b2_[k] -= lr * d_out[k];
        }
        for (std::size_t j = 0; j < h_; ++j) {
          for (std::size_t c = 0; c < d_; ++c) w1_[j * d_ + c] -= lr * d_hidden[j] * row[c];
          b1_[j] -= lr * d_hidden[j];
        }
      }
    }
  }

 private:
  void forward(std::span<const double> x, std::vector<double>& hidden, std::vector<double>& out) const {
    for (std::size_t j = 0; j < h_; ++j) {
      double z = b1_[j];
      for (std::size_t c = 0; c < d_; ++c) z += w1_[j * d_ + c] * x[c];
      hidden[j] = std::tanh(z);
    }
    for (std::size_t k = 0; k < d_; ++k) {
      double z = b2_[k];
      for (std::size_t j = 0; j < h_; ++j) z += w2_[k * h_ + j] * hidden[j];
      out[k] = z;
    }
  }

  std::size_t d_, h_;
  std::vector<double> w1_, b1_, w2_, b2_;
};

inline AnomalyScores autoencoder_fit_score(const features::FeatureMatrix& m, const AutoencoderParams& params) {
  const auto raw = detail::Dense::from(m);
  detail::require_finite(raw);
  AnomalyScores result{{}, Detector::autoencoder};
  if (raw.rows == 0) return result;
  if (params.restarts == 0) throw UsageError("autoencoder: restarts must be at least 1");
  const auto x = detail::standardize(raw);
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> errors(x.rows);
  for (std::size_t r = 0; r < params.restarts; ++r) {
    const std::uint64_t seed = params.seed + r * 0x9E3779B97F4A7C15ULL;
    Autoencoder net(x.cols, params.hidden_dim, seed);
    net.train(x, params.epochs, params.learning_rate, seed);
    double loss = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      errors[i] = reconstruction_error(x.row(i), net.reconstruct(x.row(i)));
      loss += errors[i];
    }
    if (r == 0 || loss < best_loss) {
      best_loss = loss;
      result.scores = errors;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// One-class SVM (nu formulation, RBF kernel).

inline double rbf_kernel(std::span<const double> u, std::span<const double> v, double gamma) {
  double d2 = 0;
  for (std::size_t i = 0; i < u.size(); ++i) d2 += (u[i] - v[i]) * (u[i] - v[i]);
  return std::exp(-gamma * d2);
}

class ConvergenceError : public PipelineError {
 public:
  ConvergenceError(double gap, std::size_t iterations)
      : PipelineError("one-class SVM did not converge after " + std::to_string(iterations) +
                      " iterations (last gap " + format_double(gap) + ")"),
        gap_(gap) {}
  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

class OneClassSvm {
 public:
  // Solves  min 1/2 a'Ka  s.t. sum a = 1, 0 <= a_i <= 1/(nu n)  by pairwise
  // coordinate ascent on the maximal violating pair. Identical rows are merged
  // into one point whose box bound is scaled by its multiplicity.
  void fit(const detail::Dense& x, double nu, double gamma, double tolerance, std::size_t max_iter) {
    if (!(nu > 0 && nu <= 1)) throw UsageError("ocsvm: nu must be in (0,1]");
    if (x.rows == 0) throw DataError("ocsvm: empty training set");
    gamma_ = gamma;
    cols_ = x.cols;

    std::map<std::vector<double>, std::size_t> unique;
    std::vector<double> weight;
    points_.clear();
    for (std::size_t i = 0; i < x.rows; ++i) {
      std::vector<double> key(x.row(i).begin(), x.row(i).end());
      const auto [it, inserted] = unique.try_emplace(std::move(key), weight.size());
      if (inserted) {
        points_.insert(points_.end(), x.row(i).begin(), x.row(i).end());
        weight.push_back(0);
      }
      weight[it->second] += 1;
    }
    const std::size_t m = weight.size();
    const double unit = 1.0 / (nu * static_cast<double>(x.rows));
    std::vector<double> cap(m);
    for (std::size_t j = 0; j < m; ++j) cap[j] = weight[j] * unit;

    alpha_.assign(m, 0.0);
    double remaining = 1.0;
    for (std::size_t j = 0; j < m && remaining > 0; ++j) {
      alpha_[j] = std::min(cap[j], remaining);
      remaining -= alpha_[j];
    }

    auto point = [&](std::size_t j) { return std::span<const double>(points_).subspan(j * cols_, cols_); };
    std::vector<double> grad(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (alpha_[j] == 0) continue;
      for (std::size_t k = 0; k < m; ++k) grad[k] += alpha_[j] * rbf_kernel(point(j), point(k), gamma_);
    }

    std::vector<double> col_i(m), col_j(m);
    double gap = 0;
    std::size_t iter = 0;
    for (;; ++iter) {
      // i: may grow, smallest gradient; j: may shrink, largest gradient.
      std::size_t i = m, j = m;
      for (std::size_t k = 0; k < m; ++k) {
        if (alpha_[k] < cap[k] && (i == m || grad[k] < grad[i])) i = k;
        if (alpha_[k] > 0 && (j == m || grad[k] > grad[j])) j = k;
      }
      gap = (i == m || j == m) ? 0.0 : grad[j] - grad[i];
      if (gap < tolerance) break;
      if (iter >= max_iter) throw ConvergenceError(gap, iter);

      for (std::size_t k = 0; k < m; ++k) {
        col_i[k] = rbf_kernel(point(i), point(k), gamma_);
        col_j[k] = rbf_kernel(point(j), point(k), gamma_);
      }
      const double curvature = std::max(col_i[i] + col_j[j] - 2.0 * col_i[j], 1e-12);
      double step = gap / curvature;
      step = std::min({step, cap[i] - alpha_[i], alpha_[j]});
      alpha_[i] += step;
      alpha_[j] -= step;
      for (std::size_t k = 0; k < m; ++k) grad[k] += step * (col_i[k] - col_j[k]);
    }
    last_gap_ = gap;
    iterations_ = iter;

    // Offset: mean gradient over free multipliers, else midpoint of the KKT bounds.
    double free_sum = 0;
    std::size_t free_n = 0;
    double up = std::numeric_limits<double>::infinity(), low = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
      if (alpha_[k] > 0 && alpha_[k] < cap[k]) {
        free_sum += grad[k];
        ++free_n;
      }
      if (alpha_[k] < cap[k]) up = std::min(up, grad[k]);
      if (alpha_[k] > 0) low = std::max(low, grad[k]);
    }
    rho_ = free_n > 0 ? free_sum / static_cast<double>(free_n) : 0.5 * (up + low);

    // Keep only support vectors.
    std::vector<double> sv_points, sv_alpha;
    for (std::size_t k = 0; k < m; ++k) {
      if (alpha_[k] > 0) {
        sv_points.insert(sv_points.end(), point(k).begin(), point(k).end());
        sv_alpha.push_back(alpha_[k]);
      }
    }
    points_ = std::move(sv_points);
    alpha_ = std::move(sv_alpha);
  }

  double decision(std::span<const double> x) const {
    double f = 0;
    for (std::size_t k = 0; k < alpha_.size(); ++k) {
      f += alpha_[k] * rbf_kernel(std::span<const double>(points_).subspan(k * cols_, cols_), x, gamma_);
    }
    return f - rho_;
  }

  double rho() const { return rho_; }
  double last_gap() const { return last_gap_; }
  std::size_t iterations() const { return iterations_; }
  std::size_t support_vectors() const { return alpha_.size(); }

 private:
  std::vector<double> points_;
  std::vector<double> alpha_;
  std::size_t cols_ = 0;
  double gamma_ = 1;
  double rho_ = 0;
  double last_gap_ = 0;
  std::size_t iterations_ = 0;
};

// sklearn's "scale" heuristic on the standardized data.
inline double default_gamma(const detail::Dense& standardized) {
  const double n = static_cast<double>(standardized.data.size());
  if (n == 0) return 1.0;
  double mean = 0;
  for (double v : standardized.data) mean += v;
  mean /= n;
  double var = 0;
  for (double v : standardized.data) var += (v - mean) * (v - mean);
  var /= n;
  return var > 0 ? 1.0 / (static_cast<double>(standardized.cols) * var) : 1.0;
}

inline AnomalyScores ocsvm_fit_score(const features::FeatureMatrix& m, const OcsvmParams& params,
                                     double contamination) {
  const auto raw = detail::Dense::from(m);
  detail::require_finite(raw);
  AnomalyScores result{{}, Detector::ocsvm};
  if (raw.rows == 0) return result;
  const auto x = detail::standardize(raw);
  const double nu = params.nu > 0 ? params.nu : std::min(1.0, 2.0 * contamination);
  const double gamma = params.gamma > 0 ? params.gamma : default_gamma(x);
  OneClassSvm svm;
  svm.fit(x, nu, gamma, params.tolerance, params.max_iter);
  result.scores.resize(x.rows);
  for (std::size_t i = 0; i < x.rows; ++i) result.scores[i] = -svm.decision(x.row(i));
  return result;
}

// ---------------------------------------------------------------------------

// Flags exactly ceil(contamination * n) rows: the top scores, ties to the lower index.
inline std::vector<bool> flag_anomalies(std::span<const double> scores, double contamination) {
  if (!(contamination > 0 && contamination < 1)) throw UsageError("contamination must be in (0,1)");
  const std::size_t n = scores.size();
  // The 1e-9 guard keeps e.g. 0.01 * 15000 at 150 despite binary rounding.
  const auto k = std::min(
      n, static_cast<std::size_t>(std::ceil(contamination * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<bool> flags(n, false);
  for (std::size_t i = 0; i < k; ++i) flags[order[i]] = true;
  return flags;
}

inline void write_scores(const features::FeatureMatrix& m, const AnomalyScores& s, const std::string& path) {
  if (s.scores.size() != m.size()) throw UsageError("write_scores: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write score file: " + path);
  for (std::size_t i = 0; i < m.size(); ++i) {
    out << "tx=" << m[i].tx_hash.hex() << " score=" << format_double(s.scores[i]) << '\n';
  }
}

inline std::vector<std::pair<Hash32, double>> read_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score file: " + path);
  std::vector<std::pair<Hash32, double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = parse_fields(line);
    if (!f || f->size() != 2 || (*f)[0].first != "tx" || (*f)[1].first != "score") {
      throw DataError("score line " + std::to_string(line_no) + ": malformed");
    }
    const auto h = Hash32::from_hex((*f)[0].second);
    const auto v = parse_double((*f)[1].second);
    if (!h || !v) throw DataError("score line " + std::to_string(line_no) + ": malformed");
    out.emplace_back(*h, *v);
  }
  return out;
}

}  // namespace ntssl::detect
