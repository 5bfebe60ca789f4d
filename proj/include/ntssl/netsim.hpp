#pragma once

// Discrete-event simulator of diffusion transaction relay around a target
// node whose inbound slots are occupied by probe nodes. Produces the traffic
// a capture on the target's links would record, plus ground-truth origins.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ntssl/common.hpp"
#include "ntssl/txcluster.hpp"
#include "ntssl/wiremsg.hpp"

namespace ntssl::netsim {

using NodeId = std::uint32_t;
inline constexpr NodeId kTarget = 0;

struct NetworkConfig {
  std::size_t n_nodes = 1000;  // background nodes; target and probes come on top
  std::size_t target_outbound = 10;
  std::size_t target_inbound_capacity = 114;
  double probe_fraction = 1.0;
  std::size_t background_out_degree = 8;
  std::size_t probe_out_degree = 8;
  bool fill_inbound = true;  // background dialers take the slots probes leave free
  double mean_delay_out = 2.5;
  double mean_delay_in = 5.0;
  double getdata_inbound_delay = 2.0;
  double horizon = 21600;       // transactions are created in [0, horizon)
  double capture_tail = 600;    // capture stays open this long after the horizon
  std::uint64_t seed = 1;

  // round-half-up
  std::size_t probe_count() const {
    return static_cast<std::size_t>(std::floor(probe_fraction * static_cast<double>(target_inbound_capacity) + 0.5));
  }

  void validate() const {
    if (!(probe_fraction >= 0 && probe_fraction <= 1)) throw UsageError("probe_fraction must be in [0,1]");
    if (!(mean_delay_out >= 0 && mean_delay_in >= 0 && getdata_inbound_delay >= 0)) {
      throw UsageError("delays must be non-negative");
    }
    if (!(horizon > 0)) throw UsageError("horizon must be positive");
    if (!(capture_tail >= 0)) throw UsageError("capture_tail must be non-negative");
    if (n_nodes == 0) throw UsageError("n_nodes must be positive");
    if (target_outbound > n_nodes) throw UsageError("target_outbound exceeds background node count");
  }
};

struct Connection {
  NodeId a = 0;  // dialer
  NodeId b = 0;  // acceptor
  bool is_probe = false;
};

enum class LinkKind { outbound, inbound };

class Network {
 public:
  struct Slot {
    NodeId peer;
    std::uint32_t link;
    std::uint32_t reverse;  // index of the peer's slot for the same link
    bool outbound;          // this node dialed the link
  };

  Network(NetworkConfig config, std::size_t n_total, std::vector<Connection> links)
      : config_(std::move(config)), n_total_(n_total), links_(std::move(links)) {
    std::vector<std::uint32_t> degree(n_total_, 0);
    for (const auto& c : links_) {
      ++degree[c.a];
      ++degree[c.b];
    }
    offsets_.assign(n_total_ + 1, 0);
    for (std::size_t i = 0; i < n_total_; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
    slots_.resize(offsets_.back());
    std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::uint32_t id = 0; id < links_.size(); ++id) {
      const auto& c = links_[id];
      const auto sa = fill[c.a]++;
      const auto sb = fill[c.b]++;
      slots_[sa] = {c.b, id, sb, true};
      slots_[sb] = {c.a, id, sa, false};
    }
  }

  const NetworkConfig& config() const { return config_; }
  std::size_t node_count() const { return n_total_; }
  std::span<const Connection> links() const { return links_; }
  std::span<const Slot> slots() const { return slots_; }
  std::uint32_t slot_begin(NodeId n) const { return offsets_[n]; }
  std::uint32_t slot_end(NodeId n) const { return offsets_[n + 1]; }
  std::span<const Slot> slots_of(NodeId n) const {
    return std::span<const Slot>(slots_).subspan(offsets_[n], offsets_[n + 1] - offsets_[n]);
  }

  NodeId first_background() const { return 1; }
  NodeId last_background() const { return static_cast<NodeId>(config_.n_nodes); }
  bool is_probe_node(NodeId n) const { return n > last_background(); }

 private:
  NetworkConfig config_;
  std::size_t n_total_;
  std::vector<Connection> links_;
  std::vector<std::uint32_t> offsets_;
  std::vector<Slot> slots_;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return std::uint64_t{words[0]} << 32 | words[1];
}

inline std::uint64_t link_key(NodeId x, NodeId y) {
  if (x > y) std::swap(x, y);
  return std::uint64_t{x} << 32 | y;
}

}  // namespace detail

// Node 0 is the target, 1..n_nodes are background nodes, then probes.
inline Network build_network(const NetworkConfig& config) {
  config.validate();
  std::mt19937_64 rng(detail::mix_seed(config.seed, 1));
  const std::size_t n_bg = config.n_nodes;
  const std::size_t n_probe = config.probe_count();
  const std::size_t n_total = 1 + n_bg + n_probe;

  std::vector<Connection> links;
  std::unordered_set<std::uint64_t> present;
  auto add = [&](NodeId a, NodeId b, bool probe) {
    if (a == b || !present.insert(detail::link_key(a, b)).second) return false;
    links.push_back({a, b, probe});
    return true;
  };
  std::uniform_int_distribution<NodeId> pick_bg(1, static_cast<NodeId>(n_bg));

  // Background graph: every node dials up to out_degree distinct peers.
  const std::size_t bg_degree = std::min(config.background_out_degree, n_bg - 1);
  for (NodeId v = 1; v <= n_bg; ++v) {
    std::size_t dialed = 0;
    std::size_t attempts = 0;
    while (dialed < bg_degree && attempts < 64 * (bg_degree + 1)) {
      ++attempts;
      if (add(v, pick_bg(rng), false)) ++dialed;
    }
  }
  // Join stray components onto the component of node 1.
  if (n_bg > 1) {
    txcluster::DisjointSets comps(n_bg + 1);
    for (const auto& c : links) comps.unite(c.a, c.b);
    for (NodeId v = 2; v <= n_bg; ++v) {
      if (comps.find(v) != comps.find(1)) {
        NodeId anchor = pick_bg(rng);
        while (comps.find(anchor) != comps.find(1)) anchor = pick_bg(rng);
        add(v, anchor, false);
        comps.unite(v, anchor);
      }
    }
  }

  std::vector<NodeId> bg(n_bg);
  std::iota(bg.begin(), bg.end(), NodeId{1});
  std::shuffle(bg.begin(), bg.end(), rng);
  const std::size_t n_out = std::min(config.target_outbound, n_bg);
  for (std::size_t i = 0; i < n_out; ++i) add(kTarget, bg[i], false);

  for (std::size_t p = 0; p < n_probe; ++p) {
    const auto probe = static_cast<NodeId>(1 + n_bg + p);
    add(probe, kTarget, true);
    const std::size_t want = std::min(config.probe_out_degree, n_bg);
    std::size_t dialed = 0;
    while (dialed < want) {
      if (add(probe, pick_bg(rng), false)) ++dialed;
    }
  }

  if (config.fill_inbound) {
    std::size_t free_slots = config.target_inbound_capacity - std::min(n_probe, config.target_inbound_capacity);
    for (std::size_t i = n_out; i < bg.size() && free_slots > 0; ++i) {
      if (add(bg[i], kTarget, false)) --free_slots;
    }
  }

  Network net(config, n_total, std::move(links));
  if (net.slots_of(kTarget).empty()) throw UsageError("target node has no connections");
  return net;
}

inline double sample_announce_delay(LinkKind kind, const NetworkConfig& config, std::mt19937_64& rng) {
  const double mean = kind == LinkKind::outbound ? config.mean_delay_out : config.mean_delay_in;
  if (mean <= 0) return 0.0;
  return std::exponential_distribution<double>(1.0 / mean)(rng);
}

// ---------------------------------------------------------------------------
// Workload

enum class Schedule { uniform, clustered };

struct Workload {
  double background_tx_rate = 0.69;  // network-wide Poisson, tx/s
  std::size_t target_origin_count = 90;
  Schedule schedule = Schedule::uniform;
  std::size_t n_clusters = 15;
  double intra_gap = 60;  // max seconds between consecutive txs of one burst
  // Clustered schedule only: background wallets also transact in bursts of
  // geometrically distributed size with this mean.
  double background_burst_mean = 3;
  // transaction-layer synthesis
  double background_wallet_ratio = 0.8;  // wallets per background tx
  double coinjoin_fraction = 0.01;

  void validate(double window) const {
    if (!(background_tx_rate >= 0)) throw UsageError("background_tx_rate must be non-negative");
    if (schedule == Schedule::clustered) {
      if (n_clusters == 0 && target_origin_count > 0) throw UsageError("clustered schedule needs n_clusters > 0");
      if (!(intra_gap > 0 && intra_gap < window)) throw UsageError("intra_gap must be in (0, window)");
      if (!(background_burst_mean >= 1)) throw UsageError("background_burst_mean must be >= 1");
    }
  }
};

struct TargetLink {
  std::uint32_t conn_id = 0;
  NodeId peer = 0;
  bool is_probe = false;
  bool target_outbound = false;
};

struct TraceSet {
  std::vector<wiremsg::TraceRecord> records;  // full capture, time-ordered
  std::vector<TargetLink> links;              // every link incident to the target

  std::vector<wiremsg::TraceRecord> link_trace(std::uint32_t conn_id) const {
    std::vector<wiremsg::TraceRecord> out;
    for (const auto& r : records) {
      if (r.conn_id == conn_id) out.push_back(r);
    }
    return out;
  }
};

struct GroundTruth {
  std::vector<std::pair<Hash32, NodeId>> origins;  // creation order
  std::unordered_map<Hash32, NodeId, Hash32Hasher> index;

  void add(const Hash32& tx, NodeId origin) {
    index.emplace(tx, origin);
    origins.emplace_back(tx, origin);
  }
  bool is_target_origin(const Hash32& tx) const {
    const auto it = index.find(tx);
    return it != index.end() && it->second == kTarget;
  }
};

struct RunStats {
  std::uint64_t events = 0;
  std::uint64_t out_of_order_pops = 0;
  std::uint64_t duplicate_getdata = 0;  // a node requesting the same tx twice
  std::size_t unpropagated = 0;         // txs that never reached the target's links
  std::vector<std::string> warnings;
};

struct SimResult {
  TraceSet traces;
  GroundTruth truth;
  std::vector<txcluster::ChainTx> chain;
  RunStats stats;
};

namespace detail {

struct PlannedTx {
  Hash32 hash;
  NodeId origin;
  double t0;
  std::size_t wallet;
  bool coinjoin = false;
};

struct Event {
  double t;
  std::uint64_t seq;
  std::uint32_t node;
  std::uint32_t slot;
  bool getdata;  // otherwise an Inv send
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    return a.seq > b.seq;
  }
};

inline Hash32 random_hash(std::mt19937_64& rng) {
  Hash32 h;
  for (std::size_t i = 0; i < 32; i += 8) {
    const auto v = rng();
    for (std::size_t j = 0; j < 8; ++j) h.bytes[i + j] = static_cast<std::uint8_t>(v >> (8 * j));
  }
  return h;
}

inline std::string random_address(std::mt19937_64& rng) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(40, '0');
  for (std::size_t i = 0; i < 40; i += 16) {
    auto v = rng();
    for (std::size_t j = 0; j < 16 && i + j < 40; ++j, v >>= 4) out[i + j] = digits[v & 0xF];
  }
  return out;
}

}  // namespace detail

// Runs the diffusion relay protocol for every transaction of the workload.
// Transactions do not interact, so each one is propagated by its own event
// loop; records are merged by (timestamp, creation order).
inline SimResult run(const Network& net, const Workload& workload) {
  const auto& cfg = net.config();
  std::mt19937_64 plan_rng(detail::mix_seed(cfg.seed, 2));
  std::mt19937_64 delay_rng(detail::mix_seed(cfg.seed, 3));
  std::mt19937_64 chain_rng(detail::mix_seed(cfg.seed, 4));

  // Plan: background arrivals (Poisson) plus target-origin transactions.
  std::vector<detail::PlannedTx> plan;
  const NodeId n_bg = net.last_background();
  std::uniform_int_distribution<NodeId> pick_bg(1, n_bg);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t n_wallets = 1;
  if (workload.schedule == Schedule::uniform) {
    if (workload.background_tx_rate > 0) {
      std::exponential_distribution<double> gap(workload.background_tx_rate);
      for (double t = gap(plan_rng); t < cfg.horizon; t += gap(plan_rng)) {
        plan.push_back({detail::random_hash(plan_rng), 0, t, 0});
      }
    }
    // Background wallets live on one node each.
    n_wallets = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(workload.background_wallet_ratio * static_cast<double>(plan.size()))));
    std::vector<NodeId> wallet_home(n_wallets);
    for (auto& h : wallet_home) h = pick_bg(plan_rng);
    std::uniform_int_distribution<std::size_t> pick_wallet(0, n_wallets - 1);
    for (auto& tx : plan) {
      tx.wallet = pick_wallet(plan_rng);
      tx.origin = wallet_home[tx.wallet];
    }
  } else if (workload.background_tx_rate > 0) {
    // Sessions arrive as a Poisson process; each is one wallet on one node
    // sending a geometric number of transactions a few seconds apart.
    const double mean = workload.background_burst_mean;
    std::exponential_distribution<double> session_gap(workload.background_tx_rate / mean);
    std::geometric_distribution<std::size_t> extra(1.0 / mean);
    std::uniform_real_distribution<double> gap(workload.intra_gap * 0.1, workload.intra_gap);
    std::size_t wallet = 0;
    for (double t0 = session_gap(plan_rng); t0 < cfg.horizon; t0 += session_gap(plan_rng), ++wallet) {
      const NodeId home = pick_bg(plan_rng);
      const std::size_t size = 1 + extra(plan_rng);
      double t = t0;
      for (std::size_t i = 0; i < size && t < cfg.horizon; ++i, t += gap(plan_rng)) {
        plan.push_back({detail::random_hash(plan_rng), home, t, wallet});
      }
    }
    n_wallets = std::max<std::size_t>(wallet, 1);
  }
  for (auto& tx : plan) tx.coinjoin = unit(plan_rng) < workload.coinjoin_fraction;

  if (workload.schedule == Schedule::uniform) {
    std::uniform_real_distribution<double> when(0.0, cfg.horizon);
    for (std::size_t i = 0; i < workload.target_origin_count; ++i) {
      plan.push_back({detail::random_hash(plan_rng), kTarget, when(plan_rng), n_wallets + i});
    }
  } else {
    const std::size_t k = std::max<std::size_t>(workload.n_clusters, 1);
    const std::size_t base = workload.target_origin_count / k;
    const std::size_t extra = workload.target_origin_count % k;
    for (std::size_t c = 0; c < k; ++c) {
      const std::size_t size = base + (c < extra ? 1 : 0);
      const double span = workload.intra_gap * static_cast<double>(size);
      std::uniform_real_distribution<double> start_at(0.0, std::max(cfg.horizon - span, 0.0));
      std::uniform_real_distribution<double> gap(workload.intra_gap * 0.1, workload.intra_gap);
      double t = start_at(plan_rng);
      for (std::size_t i = 0; i < size; ++i) {
        if (i > 0) t += gap(plan_rng);
        plan.push_back({detail::random_hash(plan_rng), kTarget, t, n_wallets + c});
      }
    }
  }
  std::stable_sort(plan.begin(), plan.end(),
                   [](const detail::PlannedTx& a, const detail::PlannedTx& b) { return a.t0 < b.t0; });

  // Which links are captured, from the target's side.
  SimResult result;
  std::vector<std::int32_t> captured(net.links().size(), -1);
  for (const auto& s : net.slots_of(kTarget)) {
    captured[s.link] = static_cast<std::int32_t>(result.traces.links.size());
    result.traces.links.push_back({s.link, s.peer, net.links()[s.link].is_probe, s.outbound});
  }

  struct Stamped {
    wiremsg::TraceRecord rec;
    std::uint64_t order;
  };
  std::vector<Stamped> captured_records;
  std::uint64_t order = 0;

  const std::size_t n_total = net.node_count();
  const auto slots = net.slots();
  // Per-tx state, versioned by epoch to avoid clearing between transactions.
  std::vector<std::uint32_t> requested(n_total, 0), has(n_total, 0), known(slots.size(), 0);
  std::priority_queue<detail::Event, std::vector<detail::Event>, detail::EventLater> queue;
  std::uint32_t epoch = 0;
  std::vector<double> first_seen(plan.size(), -1.0);

  for (std::size_t txi = 0; txi < plan.size(); ++txi) {
    const auto& tx = plan[txi];
    ++epoch;
    std::uint64_t seq = 0;
    double last_pop = -1;
    bool touched_target_links = false;

    auto record = [&](double t, std::uint32_t link, NodeId sender, NodeId receiver, wiremsg::MsgKind msg) {
      const bool from_target = sender == kTarget;
      captured_records.push_back(
          {{t, link, from_target ? receiver : sender,
            from_target ? wiremsg::Direction::sent_by_target : wiremsg::Direction::received_by_target, msg,
            tx.hash},
           order++});
      touched_target_links = true;
      if (first_seen[txi] < 0) first_seen[txi] = t;
    };
    auto learn = [&](NodeId node, double t) {
      has[node] = epoch;
      requested[node] = epoch;
      for (std::uint32_t s = net.slot_begin(node); s < net.slot_end(node); ++s) {
        if (known[s] == epoch) continue;
        const auto kind = slots[s].outbound ? LinkKind::outbound : LinkKind::inbound;
        queue.push({t + sample_announce_delay(kind, cfg, delay_rng), seq++, node, s, false});
      }
    };

    learn(tx.origin, tx.t0);
    while (!queue.empty()) {
      const auto ev = queue.top();
      queue.pop();
      if (ev.t > cfg.horizon + cfg.capture_tail) {
        // Everything left is past the end of the capture.
        while (!queue.empty()) queue.pop();
        break;
      }
      ++result.stats.events;
      if (ev.t < last_pop) ++result.stats.out_of_order_pops;
      last_pop = ev.t;

      const auto& slot = slots[ev.slot];
      const NodeId peer = slot.peer;
      if (!ev.getdata) {
        if (known[ev.slot] == epoch) continue;  // peer announced it to us meanwhile
        known[ev.slot] = epoch;
        known[slot.reverse] = epoch;
        if (captured[slot.link] >= 0) record(ev.t, slot.link, ev.node, peer, wiremsg::MsgKind::inv);
        if (requested[peer] != epoch) {
          requested[peer] = epoch;
          const bool inbound_for_peer = !slots[slot.reverse].outbound;
          const double wait = inbound_for_peer ? cfg.getdata_inbound_delay : 0.0;
          queue.push({ev.t + wait, seq++, peer, slot.reverse, true});
        }
      } else {
        // ev.node asks `peer` (who announced) for the body; answered at once.
        if (has[ev.node] == epoch) {
          ++result.stats.duplicate_getdata;
          continue;
        }
        if (captured[slot.link] >= 0) {
          record(ev.t, slot.link, ev.node, peer, wiremsg::MsgKind::getdata);
          record(ev.t, slot.link, peer, ev.node, wiremsg::MsgKind::tx);
        }
        learn(ev.node, ev.t);
      }
    }
    if (!touched_target_links) ++result.stats.unpropagated;
  }
  if (result.stats.unpropagated == plan.size() && !plan.empty()) {
    result.stats.warnings.push_back("horizon too short: no transaction reached the target's links");
  }

  std::stable_sort(captured_records.begin(), captured_records.end(), [](const Stamped& a, const Stamped& b) {
    if (a.rec.ts != b.rec.ts) return a.rec.ts < b.rec.ts;
    return a.order < b.order;
  });
  result.traces.records.reserve(captured_records.size());
  for (const auto& s : captured_records) result.traces.records.push_back(s.rec);

  // Ground truth and the transaction-layer view.
  std::vector<std::vector<std::string>> wallet_addrs(n_wallets + std::max<std::size_t>(workload.n_clusters, 1) +
                                                     workload.target_origin_count);
  auto wallet_anchor = [&](std::size_t w) -> const std::string& {
    auto& addrs = wallet_addrs[w];
    if (addrs.empty()) addrs.push_back(detail::random_address(chain_rng));
    return addrs.front();
  };
  std::uniform_int_distribution<std::uint64_t> sats(1000, 50'000'000);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& tx = plan[i];
    result.truth.add(tx.hash, tx.origin);
    txcluster::ChainTx ctx;
    ctx.txid = tx.hash;
    ctx.first_seen = first_seen[i] >= 0 ? first_seen[i] : tx.t0;
    if (tx.coinjoin) {
      // Equal-output mix over inputs from several unrelated wallets.
      const std::size_t parties = 5;
      const auto amount = sats(chain_rng);
      ctx.inputs.push_back(wallet_anchor(tx.wallet));
      std::uniform_int_distribution<std::size_t> pick_wallet(0, n_wallets - 1);
      for (std::size_t p = 1; p < parties; ++p) ctx.inputs.push_back(wallet_anchor(pick_wallet(chain_rng)));
      for (std::size_t p = 0; p < parties; ++p) ctx.outputs.emplace_back(detail::random_address(chain_rng), amount);
    } else {
      ctx.inputs.push_back(wallet_anchor(tx.wallet));
      if (unit(chain_rng) < 0.5) ctx.inputs.push_back(detail::random_address(chain_rng));
      ctx.outputs.emplace_back(detail::random_address(chain_rng), sats(chain_rng));
      if (unit(chain_rng) < 0.7) ctx.outputs.emplace_back(detail::random_address(chain_rng), sats(chain_rng));
    }
    result.chain.push_back(std::move(ctx));
  }
  return result;
}

// Keeps the records of a uniformly chosen subset of probe (inbound) links.
// `include_outbound` additionally keeps the target's outbound links.
inline TraceSet subsample_probes(const TraceSet& full, double fraction, std::uint64_t seed,
                                 bool include_outbound = false) {
  if (!(fraction > 0 && fraction <= 1)) throw UsageError("coverage fraction must be in (0,1]");
  std::vector<std::uint32_t> probe_links;
  for (const auto& l : full.links) {
    if (l.is_probe) probe_links.push_back(l.conn_id);
  }
  const auto keep = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(probe_links.size()) + 0.5));
  if (keep == 0) throw UsageError("coverage selects zero probe links");
  std::mt19937_64 rng(detail::mix_seed(seed, 5));
  std::shuffle(probe_links.begin(), probe_links.end(), rng);
  std::unordered_set<std::uint32_t> chosen(probe_links.begin(), probe_links.begin() + static_cast<std::ptrdiff_t>(keep));

  TraceSet out;
  for (const auto& l : full.links) {
    if (chosen.count(l.conn_id) || (include_outbound && l.target_outbound)) out.links.push_back(l);
  }
  std::unordered_set<std::uint32_t> kept_links;
  for (const auto& l : out.links) kept_links.insert(l.conn_id);
  for (const auto& r : full.records) {
    if (kept_links.count(r.conn_id)) out.records.push_back(r);
  }
  return out;
}

inline void write_ground_truth(const GroundTruth& truth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write ground-truth file: " + path);
  for (const auto& [tx, origin] : truth.origins) out << "tx=" << tx.hex() << " origin=" << origin << '\n';
}

inline GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open ground-truth file: " + path);
  GroundTruth truth;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = parse_fields(line);
    auto fail = [&] { return DataError("ground-truth line " + std::to_string(line_no) + ": malformed"); };
    if (!fields || fields->size() != 2 || (*fields)[0].first != "tx" || (*fields)[1].first != "origin") throw fail();
    const auto h = Hash32::from_hex((*fields)[0].second);
    const auto origin = parse_u64((*fields)[1].second);
    if (!h || !origin) throw fail();
    truth.add(*h, static_cast<NodeId>(*origin));
  }
  return truth;
}

}  // namespace ntssl::netsim
