#pragma once

// Experiment configuration: one flat file with `[section]` headers and
// `key = value` lines. `#` starts a comment. Unknown keys are errors.

#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ntssl/common.hpp"
#include "ntssl/evalkit.hpp"
#include "ntssl/netsim.hpp"
#include "ntssl/pipeline.hpp"
#include "ntssl/txcluster.hpp"

namespace ntssl::config {

// Node B of a cross-node experiment starts from node A's network settings;
// zero means "same as node A" except for the inbound capacity, where zero
// means a third of A's.
struct CrossNodeConfig {
  std::size_t inbound_capacity = 0;
  std::size_t target_outbound = 0;
  double background_tx_rate = 0;
  double test_fraction = 0.5;  // share of node B rows held out for testing
};

struct ExperimentConfig {
  netsim::NetworkConfig network;
  netsim::Workload workload;
  pipeline::NtsslParams ntssl;
  double window = 600;
  txcluster::MixingFilter mixing;
  std::vector<double> coverages{0.25, 0.5, 0.75, 1.0};
  std::size_t repeats = 1;
  std::size_t folds = 5;
  evalkit::Protocol protocol = evalkit::Protocol::cv_per_repeat;
  CrossNodeConfig crossnode;

  netsim::NetworkConfig node_b() const {
    auto b = network;
    b.target_inbound_capacity =
        crossnode.inbound_capacity ? crossnode.inbound_capacity : std::max<std::size_t>(1, network.target_inbound_capacity / 3);
    if (crossnode.target_outbound) b.target_outbound = crossnode.target_outbound;
    return b;
  }
  netsim::Workload workload_b() const {
    auto w = workload;
    if (crossnode.background_tx_rate > 0) w.background_tx_rate = crossnode.background_tx_rate;
    return w;
  }

  evalkit::SweepParams sweep(std::uint64_t seed) const {
    evalkit::SweepParams p;
    p.coverages = coverages;
    p.repeats = repeats;
    p.folds = folds;
    p.protocol = protocol;
    p.ntssl = ntssl;
    p.window = window;
    p.mixing = mixing;
    p.seed = seed;
    return p;
  }

  void validate() const {
    network.validate();
    workload.validate(window);
    ntssl.gbdt.validate();
    const double c = ntssl.detect.contamination;
    if (!(c > 0 && c < 1)) throw UsageError("detect.contamination must be in (0,1)");
    if (!(window > 0)) throw UsageError("cluster.window must be positive");
    if (mixing.k_min < 2) throw UsageError("cluster.mixing_k_min must be at least 2");
    if (folds < 2) throw UsageError("eval.folds must be at least 2");
    if (repeats < 1) throw UsageError("eval.repeats must be at least 1");
    if (coverages.empty()) throw UsageError("eval.coverages must not be empty");
    for (double cov : coverages) {
      if (!(cov > 0 && cov <= 1)) throw UsageError("eval.coverages entries must be in (0,1]");
    }
    if (!(crossnode.test_fraction > 0 && crossnode.test_fraction < 1)) {
      throw UsageError("crossnode.test_fraction must be in (0,1)");
    }
  }
};

namespace detail {

inline double to_double(std::string_view key, std::string_view v) {
  const auto d = parse_double(v);
  if (!d) throw UsageError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  return *d;
}

inline std::uint64_t to_u64(std::string_view key, std::string_view v) {
  const auto u = parse_u64(v);
  if (!u) throw UsageError(std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
  return *u;
}

inline bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError(std::string(key) + ": expected true or false, got '" + std::string(v) + "'");
}

using Setter = std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)>;

struct Key {
  std::string_view name;
  Setter set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define NTSSL_NUM(NAME, FIELD)                                                                       \
  Key {                                                                                              \
    NAME, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.FIELD = to_double(k, v); }, \
        [](const ExperimentConfig& c) { return format_double(c.FIELD); }                             \
  }
#define NTSSL_INT(NAME, FIELD)                                                                     \
  Key {                                                                                            \
    NAME,                                                                                          \
        [](ExperimentConfig& c, std::string_view k, std::string_view v) {                          \
          c.FIELD = static_cast<decltype(c.FIELD)>(to_u64(k, v));                                  \
        },                                                                                         \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }                          \
  }
#define NTSSL_BOOL(NAME, FIELD)                                                                    \
  Key {                                                                                            \
    NAME, [](ExperimentConfig& c, std::string_view k, std::string_view v) { c.FIELD = to_bool(k, v); }, \
        [](const ExperimentConfig& c) { return std::string(c.FIELD ? "true" : "false"); }          \
  }

inline const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      NTSSL_INT("network.n_nodes", network.n_nodes),
      NTSSL_INT("network.target_outbound", network.target_outbound),
      NTSSL_INT("network.target_inbound_capacity", network.target_inbound_capacity),
      NTSSL_NUM("network.probe_fraction", network.probe_fraction),
      NTSSL_INT("network.background_out_degree", network.background_out_degree),
      NTSSL_INT("network.probe_out_degree", network.probe_out_degree),
      NTSSL_BOOL("network.fill_inbound", network.fill_inbound),
      NTSSL_NUM("network.mean_delay_out", network.mean_delay_out),
      NTSSL_NUM("network.mean_delay_in", network.mean_delay_in),
      NTSSL_NUM("network.getdata_inbound_delay", network.getdata_inbound_delay),
      NTSSL_NUM("network.horizon", network.horizon),
      NTSSL_NUM("network.capture_tail", network.capture_tail),

      NTSSL_NUM("workload.background_tx_rate", workload.background_tx_rate),
      NTSSL_INT("workload.target_origin_count", workload.target_origin_count),
      Key{"workload.schedule",
          [](ExperimentConfig& c, std::string_view k, std::string_view v) {
            if (v == "uniform") c.workload.schedule = netsim::Schedule::uniform;
            else if (v == "clustered") c.workload.schedule = netsim::Schedule::clustered;
            else throw UsageError(std::string(k) + ": expected uniform or clustered");
          },
          [](const ExperimentConfig& c) {
            return std::string(c.workload.schedule == netsim::Schedule::uniform ? "uniform" : "clustered");
          }},
      NTSSL_INT("workload.n_clusters", workload.n_clusters),
      NTSSL_NUM("workload.intra_gap", workload.intra_gap),
      NTSSL_NUM("workload.background_burst_mean", workload.background_burst_mean),
      NTSSL_NUM("workload.background_wallet_ratio", workload.background_wallet_ratio),
      NTSSL_NUM("workload.coinjoin_fraction", workload.coinjoin_fraction),

      NTSSL_NUM("detect.contamination", ntssl.detect.contamination),
      NTSSL_INT("detect.iforest_trees", ntssl.detect.iforest.n_trees),
      NTSSL_INT("detect.iforest_subsample", ntssl.detect.iforest.subsample_size),
      NTSSL_INT("detect.ae_hidden", ntssl.detect.autoencoder.hidden_dim),
      NTSSL_INT("detect.ae_epochs", ntssl.detect.autoencoder.epochs),
      NTSSL_NUM("detect.ae_learning_rate", ntssl.detect.autoencoder.learning_rate),
      NTSSL_INT("detect.ae_restarts", ntssl.detect.autoencoder.restarts),
      NTSSL_NUM("detect.ocsvm_nu", ntssl.detect.ocsvm.nu),
      NTSSL_NUM("detect.ocsvm_gamma", ntssl.detect.ocsvm.gamma),
      NTSSL_NUM("detect.ocsvm_tolerance", ntssl.detect.ocsvm.tolerance),
      NTSSL_INT("detect.ocsvm_max_iter", ntssl.detect.ocsvm.max_iter),

      NTSSL_INT("gbdt.n_rounds", ntssl.gbdt.n_rounds),
      NTSSL_INT("gbdt.max_depth", ntssl.gbdt.max_depth),
      NTSSL_NUM("gbdt.learning_rate", ntssl.gbdt.learning_rate),
      NTSSL_NUM("gbdt.reg_lambda", ntssl.gbdt.reg_lambda),
      NTSSL_NUM("gbdt.gamma", ntssl.gbdt.gamma_complexity),
      NTSSL_NUM("gbdt.min_child_weight", ntssl.gbdt.min_child_weight),
      NTSSL_NUM("gbdt.threshold", ntssl.gbdt.decision_threshold),

      NTSSL_BOOL("ntssl.oversample", ntssl.oversample),
      NTSSL_NUM("ntssl.oversample_ratio", ntssl.oversample_ratio),
      NTSSL_BOOL("ntssl.reuse_train_forest", ntssl.reuse_train_forest),
      NTSSL_BOOL("ntssl.high_side_only", ntssl.high_side_only),

      NTSSL_NUM("cluster.window", window),
      NTSSL_INT("cluster.mixing_k_min", mixing.k_min),
      NTSSL_INT("cluster.mixing_value_tol", mixing.value_tol),

      Key{"eval.coverages",
          [](ExperimentConfig& c, std::string_view k, std::string_view v) {
            c.coverages.clear();
            for (auto item : split(v, ',')) c.coverages.push_back(to_double(k, trim(item)));
          },
          [](const ExperimentConfig& c) {
            std::string s;
            for (std::size_t i = 0; i < c.coverages.size(); ++i) s += (i ? "," : "") + format_double(c.coverages[i]);
            return s;
          }},
      NTSSL_INT("eval.repeats", repeats),
      NTSSL_INT("eval.folds", folds),
      Key{"eval.protocol",
          [](ExperimentConfig& c, std::string_view k, std::string_view v) {
            if (v == "cv_per_repeat") c.protocol = evalkit::Protocol::cv_per_repeat;
            else if (v == "repeats_only") c.protocol = evalkit::Protocol::repeats_only;
            else throw UsageError(std::string(k) + ": expected cv_per_repeat or repeats_only");
          },
          [](const ExperimentConfig& c) { return std::string(evalkit::to_string(c.protocol)); }},

      NTSSL_INT("crossnode.inbound_capacity", crossnode.inbound_capacity),
      NTSSL_INT("crossnode.target_outbound", crossnode.target_outbound),
      NTSSL_NUM("crossnode.background_tx_rate", crossnode.background_tx_rate),
      NTSSL_NUM("crossnode.test_fraction", crossnode.test_fraction),
  };
  return table;
}

#undef NTSSL_NUM
#undef NTSSL_INT
#undef NTSSL_BOOL

}  // namespace detail

// `name` is `section.key`.
inline void set(ExperimentConfig& config, std::string_view name, std::string_view value) {
  for (const auto& k : detail::keys()) {
    if (k.name == name) {
      k.set(config, name, trim(value));
      return;
    }
  }
  throw UsageError("unknown config key: " + std::string(name));
}

inline void parse(ExperimentConfig& config, std::istream& in, const std::string& origin) {
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
    if (view.front() == '[') {
      if (view.back() != ']' || view.size() < 3) throw UsageError(where() + "malformed section header");
      section = std::string(trim(view.substr(1, view.size() - 2)));
      continue;
    }
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw UsageError(where() + "expected key = value");
    if (section.empty()) throw UsageError(where() + "key outside of a [section]");
    const auto key = section + "." + std::string(trim(view.substr(0, eq)));
    try {
      set(config, key, view.substr(eq + 1));
    } catch (const UsageError& e) {
      throw UsageError(where() + e.what());
    }
  }
}

inline ExperimentConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  ExperimentConfig config;
  parse(config, in, path);
  return config;
}

// Effective configuration in the same format `parse` reads.
inline std::string dump(const ExperimentConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : detail::keys()) {
    const auto dot = k.name.find('.');
    const auto sec = std::string(k.name.substr(0, dot));
    if (sec != section) {
      out << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
      section = sec;
    }
    out << k.name.substr(dot + 1) << " = " << k.get(config) << '\n';
  }
  return out.str();
}

}  // namespace ntssl::config
