#pragma once

// Gradient-boosted decision trees for binary labels: logistic loss, Newton
// leaf values, exact greedy split search with second-order gain.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ntssl/common.hpp"
#include "ntssl/features.hpp"

namespace ntssl::gbdt {

struct GbdtParams {
  std::size_t n_rounds = 100;
  std::size_t max_depth = 4;
  double learning_rate = 0.3;
  double reg_lambda = 1.0;
  double gamma_complexity = 0.0;
  double min_child_weight = 1.0;
  double decision_threshold = 0.5;

  void validate() const {
    if (!(learning_rate > 0 && learning_rate <= 1)) throw UsageError("gbdt: learning_rate must be in (0,1]");
    if (n_rounds < 1) throw UsageError("gbdt: n_rounds must be at least 1");
    if (reg_lambda < 0 || gamma_complexity < 0 || min_child_weight < 0) {
      throw UsageError("gbdt: regularization parameters must be non-negative");
    }
  }
};

struct TreeNode {
  std::int32_t feature = -1;  // -1: leaf
  double threshold = 0;       // x[feature] < threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double value = 0;  // leaf output

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

using Tree = std::vector<TreeNode>;  // node 0 is the root

struct GbdtModel {
  std::vector<Tree> trees;
  double base_score = 0;
  std::size_t n_features = 0;

  bool operator==(const GbdtModel&) const = default;
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Loss of one example with raw score z and label y in {0,1}.
inline double logistic_loss(double z, int y) {
  // log(1 + exp(z)) - y z, computed stably
  const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - y * z;
}

inline double split_gain(double gl, double hl, double gr, double hr, double reg_lambda, double gamma_complexity) {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) - g * g / (h + reg_lambda)) -
         gamma_complexity;
}

struct SplitCandidate {
  std::int32_t feature = -1;
  double threshold = 0;
  double gain = 0;
};

namespace detail {

struct Builder {
  const std::vector<double>& x;  // row-major
  std::size_t cols;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  const GbdtParams& params;
  std::vector<std::uint8_t> goes_left;

  double at(std::uint32_t i, std::size_t f) const { return x[i * cols + f]; }

  // Best split over all features; `sorted[f]` lists the node's rows ordered by feature f.
  SplitCandidate best_split(const std::vector<std::vector<std::uint32_t>>& sorted, double g_sum,
                            double h_sum) const {
    SplitCandidate best;
    for (std::size_t f = 0; f < cols; ++f) {
      const auto& rows = sorted[f];
      double gl = 0, hl = 0;
      for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        gl += grad[rows[k]];
        hl += hess[rows[k]];
        const double here = at(rows[k], f);
        const double next = at(rows[k + 1], f);
        if (next <= here) continue;
        const double gr = g_sum - gl;
        const double hr = h_sum - hl;
        if (hl < params.min_child_weight || hr < params.min_child_weight) continue;
        const double gain = split_gain(gl, hl, gr, hr, params.reg_lambda, params.gamma_complexity);
        if (gain > best.gain) best = {static_cast<std::int32_t>(f), here + (next - here) / 2, gain};
      }
    }
    return best;
  }

  std::uint32_t grow(Tree& tree, std::vector<std::vector<std::uint32_t>> sorted, std::size_t depth) {
    const auto id = static_cast<std::uint32_t>(tree.size());
    tree.emplace_back();
    double g_sum = 0, h_sum = 0;
    for (auto i : sorted[0]) {
      g_sum += grad[i];
      h_sum += hess[i];
    }
    const auto leaf = [&] {
      tree[id].value = -g_sum / (h_sum + params.reg_lambda) * params.learning_rate;
      return id;
    };
    if (depth >= params.max_depth || sorted[0].size() < 2) return leaf();
    const auto split = best_split(sorted, g_sum, h_sum);
    if (split.feature < 0 || split.gain <= 0) return leaf();

    for (auto i : sorted[0]) goes_left[i] = at(i, static_cast<std::size_t>(split.feature)) < split.threshold;
    std::vector<std::vector<std::uint32_t>> left(cols), right(cols);
    for (std::size_t f = 0; f < cols; ++f) {
      for (auto i : sorted[f]) (goes_left[i] ? left[f] : right[f]).push_back(i);
    }
    sorted.clear();
    tree[id].feature = split.feature;
    tree[id].threshold = split.threshold;
    const auto l = grow(tree, std::move(left), depth + 1);
    const auto r = grow(tree, std::move(right), depth + 1);
    tree[id].left = l;
    tree[id].right = r;
    return id;
  }
};

inline double tree_output(const Tree& tree, std::span<const double> row) {
  std::uint32_t node = 0;
  while (!tree[node].is_leaf()) {
    node = row[static_cast<std::size_t>(tree[node].feature)] < tree[node].threshold ? tree[node].left
                                                                                    : tree[node].right;
  }
  return tree[node].value;
}

}  // namespace detail

// Dense entry point: `x` is row-major with `cols` columns.
inline GbdtModel fit(const std::vector<double>& x, std::size_t cols, std::span<const int> labels,
                     const GbdtParams& params) {
  params.validate();
  const std::size_t n = labels.size();
  if (cols == 0 || x.size() != n * cols) throw UsageError("gbdt: labels not aligned with rows");
  const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives + static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 0)) != n) {
    throw UsageError("gbdt: labels must be 0 or 1");
  }
  if (positives == 0 || positives == n) {
    throw PipelineError("gbdt: training labels contain a single class");
  }

  GbdtModel model;
  model.n_features = cols;
  const double prevalence = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(prevalence / (1.0 - prevalence));

  std::vector<std::vector<std::uint32_t>> presorted(cols, std::vector<std::uint32_t>(n));
  for (std::size_t f = 0; f < cols; ++f) {
    auto& order = presorted[f];
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return x[a * cols + f] < x[b * cols + f]; });
  }

  std::vector<double> raw(n, model.base_score), grad(n), hess(n);
  detail::Builder builder{x, cols, grad, hess, params, std::vector<std::uint8_t>(n, 0)};
  for (std::size_t round = 0; round < params.n_rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(raw[i]);
      grad[i] = p - labels[i];
      hess[i] = p * (1.0 - p);
    }
    Tree tree;
    builder.grow(tree, presorted, 0);
    for (std::size_t i = 0; i < n; ++i) {
      raw[i] += detail::tree_output(tree, std::span<const double>(x).subspan(i * cols, cols));
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

inline GbdtModel fit(const features::FeatureMatrix& x, std::span<const int> labels, const GbdtParams& params) {
  if (labels.size() != x.size()) throw UsageError("gbdt: labels not aligned with rows");
  return fit(x.dense(), x.dim(), labels, params);
}

inline double raw_score(const GbdtModel& model, std::span<const double> row) {
  double z = model.base_score;
  for (const auto& tree : model.trees) z += detail::tree_output(tree, row);
  return z;
}

inline std::vector<double> predict_proba(const GbdtModel& model, const std::vector<double>& x, std::size_t cols) {
  if (cols != model.n_features) {
    throw UsageError("gbdt: model expects " + std::to_string(model.n_features) + " features, got " +
                     std::to_string(cols));
  }
  const std::size_t n = x.size() / cols;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid(raw_score(model, std::span<const double>(x).subspan(i * cols, cols)));
  return out;
}

inline std::vector<double> predict_proba(const GbdtModel& model, const features::FeatureMatrix& x) {
  return predict_proba(model, x.dense(), x.dim());
}

inline std::vector<int> threshold_labels(std::span<const double> proba, double threshold) {
  std::vector<int> out(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) out[i] = proba[i] >= threshold ? 1 : 0;
  return out;
}

inline std::vector<int> predict(const GbdtModel& model, const features::FeatureMatrix& x, double threshold) {
  return threshold_labels(predict_proba(model, x), threshold);
}

// ---------------------------------------------------------------------------
// Text serialization

inline std::string serialize(const GbdtModel& model) {
  std::ostringstream out;
  out << "base=" << format_double(model.base_score) << " features=" << model.n_features << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    for (std::size_t j = 0; j < model.trees[t].size(); ++j) {
      const auto& node = model.trees[t][j];
      out << "tree=" << t << " node=" << j;
      if (node.is_leaf()) {
        out << " leaf v=" << format_double(node.value) << '\n';
      } else {
        out << " split f=" << node.feature << " t=" << format_double(node.threshold) << " l=" << node.left
            << " r=" << node.right << '\n';
      }
    }
  }
  return out.str();
}

inline GbdtModel deserialize(std::istream& in) {
  GbdtModel model;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) { return DataError("model line " + std::to_string(line_no) + ": " + why); };
  auto value_of = [&](std::string_view token, std::string_view key) {
    if (token.substr(0, key.size() + 1) != std::string(key) + "=") throw fail("expected " + std::string(key) + "=");
    return token.substr(key.size() + 1);
  };
  if (!std::getline(in, line)) throw DataError("model: empty input");
  ++line_no;
  {
    const auto tokens = split(trim(line), ' ');
    if (tokens.size() != 2) throw fail("bad header");
    const auto base = parse_double(value_of(tokens[0], "base"));
    const auto nf = parse_u64(value_of(tokens[1], "features"));
    if (!base || !nf) throw fail("bad header");
    model.base_score = *base;
    model.n_features = *nf;
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tokens = split(trim(line), ' ');
    if (tokens.size() < 4) throw fail("too few fields");
    const auto t = parse_u64(value_of(tokens[0], "tree"));
    const auto j = parse_u64(value_of(tokens[1], "node"));
    if (!t || !j) throw fail("bad tree/node index");
    if (*t == model.trees.size()) model.trees.emplace_back();
    if (*t + 1 != model.trees.size() || *j != model.trees.back().size()) throw fail("nodes out of order");
    TreeNode node;
    if (tokens[2] == "leaf" && tokens.size() == 4) {
      const auto v = parse_double(value_of(tokens[3], "v"));
      if (!v) throw fail("bad leaf value");
      node.value = *v;
    } else if (tokens[2] == "split" && tokens.size() == 7) {
      const auto f = parse_u64(value_of(tokens[3], "f"));
      const auto th = parse_double(value_of(tokens[4], "t"));
      const auto l = parse_u64(value_of(tokens[5], "l"));
      const auto r = parse_u64(value_of(tokens[6], "r"));
      if (!f || !th || !l || !r || *f >= model.n_features) throw fail("bad split");
      node.feature = static_cast<std::int32_t>(*f);
      node.threshold = *th;
      node.left = static_cast<std::uint32_t>(*l);
      node.right = static_cast<std::uint32_t>(*r);
    } else {
      throw fail("expected 'leaf v=' or 'split f= t= l= r='");
    }
    model.trees.back().push_back(node);
  }
  for (const auto& tree : model.trees) {
    for (std::size_t j = 0; j < tree.size(); ++j) {
      const auto& node = tree[j];
      if (!node.is_leaf() && (node.left <= j || node.right <= j || node.left >= tree.size() ||
                              node.right >= tree.size())) {
        throw DataError("model: child index out of range");
      }
    }
  }
  return model;
}

inline void save_model(const GbdtModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out << serialize(model);
}

inline GbdtModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  return deserialize(in);
}

}  // namespace ntssl::gbdt
