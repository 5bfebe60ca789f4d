#pragma once

// Transaction-layer clustering: CoinJoin filter, multi-input union, time-window
// sessionization, and the majority-vote correction applied on top of NTSSL.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ntssl/common.hpp"

namespace ntssl::txcluster {

struct ChainTx {
  Hash32 txid;
  std::vector<std::string> inputs;  // source addresses, resolved from outpoints
  std::vector<std::pair<std::string, std::uint64_t>> outputs;  // (address, satoshis)
  double first_seen = 0;

  bool operator==(const ChainTx&) const = default;
};

struct Member {
  Hash32 txid;
  double first_seen = 0;

  bool operator==(const Member&) const = default;
};

struct TxCluster {
  std::vector<Member> members;  // ordered by first_seen
  std::size_t wallet_id = 0;

  bool operator==(const TxCluster&) const = default;
};

struct MixingFilter {
  std::size_t k_min = 3;
  std::uint64_t value_tol = 1;  // satoshis
};

// Largest group of output values that are pairwise within `tol` of each other.
inline std::size_t largest_equal_output_group(const ChainTx& tx, std::uint64_t tol) {
  std::vector<std::uint64_t> values;
  values.reserve(tx.outputs.size());
  for (const auto& [addr, sats] : tx.outputs) values.push_back(sats);
  std::sort(values.begin(), values.end());
  std::size_t best = 0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < values.size(); ++hi) {
    while (values[hi] - values[lo] > tol) ++lo;
    best = std::max(best, hi - lo + 1);
  }
  return best;
}

inline bool looks_like_coinjoin(const ChainTx& tx, const MixingFilter& rule) {
  return tx.inputs.size() >= rule.k_min && tx.outputs.size() >= rule.k_min &&
         largest_equal_output_group(tx, rule.value_tol) >= rule.k_min;
}

inline std::vector<ChainTx> filter_mixing(std::span<const ChainTx> txs, const MixingFilter& rule = {}) {
  if (rule.k_min < 2) throw UsageError("mixing filter: k_min must be at least 2");
  std::vector<ChainTx> kept;
  kept.reserve(txs.size());
  for (const auto& tx : txs) {
    if (!looks_like_coinjoin(tx, rule)) kept.push_back(tx);
  }
  return kept;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

namespace detail {

inline bool by_time(const Member& a, const Member& b) {
  if (a.first_seen != b.first_seen) return a.first_seen < b.first_seen;
  return a.txid < b.txid;
}

}  // namespace detail

// Multi-input heuristic: txs sharing any input address belong to one wallet,
// transitively. Clusters are numbered by their earliest member.
inline std::vector<TxCluster> multi_input_cluster(std::span<const ChainTx> txs) {
  DisjointSets sets(txs.size());
  std::unordered_map<std::string, std::size_t> owner;
  for (std::size_t i = 0; i < txs.size(); ++i) {
    for (const auto& addr : txs[i].inputs) {
      const auto [it, inserted] = owner.try_emplace(addr, i);
      if (!inserted) sets.unite(it->second, i);
    }
  }

  std::unordered_map<std::size_t, std::size_t> slot_of_root;
  std::vector<TxCluster> clusters;
  for (std::size_t i = 0; i < txs.size(); ++i) {
    const auto root = sets.find(i);
    const auto [it, inserted] = slot_of_root.try_emplace(root, clusters.size());
    if (inserted) clusters.emplace_back();
    clusters[it->second].members.push_back({txs[i].txid, txs[i].first_seen});
  }
  for (auto& c : clusters) std::sort(c.members.begin(), c.members.end(), detail::by_time);
  std::sort(clusters.begin(), clusters.end(), [](const TxCluster& a, const TxCluster& b) {
    return detail::by_time(a.members.front(), b.members.front());
  });
  for (std::size_t i = 0; i < clusters.size(); ++i) clusters[i].wallet_id = i;
  return clusters;
}

// Splits wherever consecutive first_seen values are more than `window` apart.
inline std::vector<TxCluster> window_split(const TxCluster& cluster, double window) {
  std::vector<TxCluster> out;
  for (std::size_t i = 0; i < cluster.members.size(); ++i) {
    if (i == 0 || cluster.members[i].first_seen - cluster.members[i - 1].first_seen > window) {
      out.push_back(TxCluster{{}, cluster.wallet_id});
    }
    out.back().members.push_back(cluster.members[i]);
  }
  return out;
}

inline std::vector<TxCluster> window_split_all(std::span<const TxCluster> clusters, double window) {
  std::vector<TxCluster> out;
  for (const auto& c : clusters) {
    auto parts = window_split(c, window);
    out.insert(out.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
  }
  return out;
}

using Predictions = std::unordered_map<Hash32, int, Hash32Hasher>;

// Strict-majority vote within each cluster, read from a frozen snapshot of
// `preds`. Ties and clusters with fewer than two predicted members are left alone.
inline Predictions collab_correct(const Predictions& preds, std::span<const TxCluster> clusters) {
  Predictions corrected = preds;
  for (const auto& cluster : clusters) {
    std::size_t ones = 0;
    std::size_t present = 0;
    for (const auto& m : cluster.members) {
      const auto it = preds.find(m.txid);
      if (it == preds.end()) continue;
      ++present;
      ones += it->second == 1 ? 1 : 0;
    }
    if (present < 2) continue;
    const std::size_t zeros = present - ones;
    if (ones == zeros) continue;
    const int majority = ones > zeros ? 1 : 0;
    for (const auto& m : cluster.members) {
      if (auto it = corrected.find(m.txid); it != corrected.end()) it->second = majority;
    }
  }
  return corrected;
}

// ---------------------------------------------------------------------------
// Files

inline std::string format_chain_tx(const ChainTx& tx) {
  std::string line = "tx=" + tx.txid.hex() + " t=" + format_double(tx.first_seen) + " in=";
  for (std::size_t i = 0; i < tx.inputs.size(); ++i) {
    if (i) line += ',';
    line += tx.inputs[i];
  }
  line += " out=";
  for (std::size_t i = 0; i < tx.outputs.size(); ++i) {
    if (i) line += ',';
    line += tx.outputs[i].first + ':' + std::to_string(tx.outputs[i].second);
  }
  return line;
}

inline ChainTx parse_chain_tx(std::string_view line, std::size_t line_no) {
  auto fail = [&](const std::string& why) {
    return DataError("chain-tx line " + std::to_string(line_no) + ": " + why);
  };
  const auto fields = parse_fields(line);
  if (!fields || fields->size() != 4 || (*fields)[0].first != "tx" || (*fields)[1].first != "t" ||
      (*fields)[2].first != "in" || (*fields)[3].first != "out") {
    throw fail("expected fields tx= t= in= out=");
  }
  ChainTx tx;
  const auto id = Hash32::from_hex((*fields)[0].second);
  if (!id) throw fail("bad tx hash");
  tx.txid = *id;
  const auto t = parse_double((*fields)[1].second);
  if (!t) throw fail("bad t");
  tx.first_seen = *t;
  if (!(*fields)[2].second.empty()) {
    for (auto addr : split((*fields)[2].second, ',')) {
      if (addr.empty()) throw fail("empty input address");
      tx.inputs.emplace_back(addr);
    }
  }
  if (!(*fields)[3].second.empty()) {
    for (auto out : split((*fields)[3].second, ',')) {
      const auto colon = out.rfind(':');
      if (colon == std::string_view::npos || colon == 0) throw fail("output must be addr:sats");
      const auto sats = parse_u64(out.substr(colon + 1));
      if (!sats) throw fail("bad output value");
      tx.outputs.emplace_back(std::string(out.substr(0, colon)), *sats);
    }
  }
  return tx;
}

inline std::vector<ChainTx> read_chain_txs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open chain-tx file: " + path);
  std::vector<ChainTx> txs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    txs.push_back(parse_chain_tx(line, line_no));
  }
  return txs;
}

inline void write_chain_txs(std::span<const ChainTx> txs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write chain-tx file: " + path);
  for (const auto& tx : txs) out << format_chain_tx(tx) << '\n';
}

inline void write_clusters(std::span<const TxCluster> clusters, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write cluster file: " + path);
  for (const auto& c : clusters) {
    out << "wallet=" << c.wallet_id << " members=";
    for (std::size_t i = 0; i < c.members.size(); ++i) out << (i ? "," : "") << c.members[i].txid.hex();
    out << '\n';
  }
}

// Membership only; first-seen times are not stored in cluster files.
inline std::vector<TxCluster> read_clusters(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cluster file: " + path);
  std::vector<TxCluster> clusters;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fail = [&] { return DataError(path + ":" + std::to_string(line_no) + ": malformed cluster line"); };
    const auto f = parse_fields(line);
    if (!f || f->size() != 2 || (*f)[0].first != "wallet" || (*f)[1].first != "members") throw fail();
    const auto wallet = parse_u64((*f)[0].second);
    if (!wallet || (*f)[1].second.empty()) throw fail();
    TxCluster c;
    c.wallet_id = *wallet;
    for (auto hex : split((*f)[1].second, ',')) {
      const auto h = Hash32::from_hex(hex);
      if (!h) throw fail();
      c.members.push_back({*h, 0.0});
    }
    clusters.push_back(std::move(c));
  }
  return clusters;
}

}  // namespace ntssl::txcluster
