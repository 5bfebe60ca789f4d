#include <gtest/gtest.h>

#include <map>
#include <queue>
#include <set>

#include "ntssl/netsim.hpp"
#include "support.hpp"

using namespace ntssl;
using namespace ntssl::netsim;
using wiremsg::Direction;
using wiremsg::MsgKind;

namespace {

NetworkConfig small_network(std::uint64_t seed) {
  NetworkConfig c;
  c.n_nodes = 150;
  c.target_inbound_capacity = 20;
  c.probe_out_degree = 4;
  c.horizon = 1500;
  c.capture_tail = 300;
  c.seed = seed;
  return c;
}

Workload small_workload() {
  Workload w;
  w.background_tx_rate = 0.2;
  w.target_origin_count = 12;
  return w;
}

const SimResult& shared_run() {
  static const SimResult r = run(build_network(small_network(4)), small_workload());
  return r;
}

std::set<std::uint32_t> probe_links(const TraceSet& t) {
  std::set<std::uint32_t> out;
  for (const auto& l : t.links) {
    if (l.is_probe) out.insert(l.conn_id);
  }
  return out;
}

}  // namespace

TEST(Delays, MeansWithinFivePercent) {
  NetworkConfig cfg;
  std::mt19937_64 rng(2024);
  double out_sum = 0, in_sum = 0;
  for (int i = 0; i < 10000; ++i) {
    const double o = sample_announce_delay(LinkKind::outbound, cfg, rng);
    const double n = sample_announce_delay(LinkKind::inbound, cfg, rng);
    ASSERT_GE(o, 0);
    ASSERT_GE(n, 0);
    out_sum += o;
    in_sum += n;
  }
  EXPECT_NEAR(out_sum / 10000, 2.5, 0.125);
  EXPECT_NEAR(in_sum / 10000, 5.0, 0.25);
}

TEST(Delays, ZeroMeanGivesZero) {
  NetworkConfig cfg;
  cfg.mean_delay_out = 0;
  std::mt19937_64 rng(1);
  EXPECT_EQ(sample_announce_delay(LinkKind::outbound, cfg, rng), 0.0);
}

TEST(BuildNetwork, ProbeCountRoundsHalfUp) {
  NetworkConfig c;
  c.probe_fraction = 0.25;
  EXPECT_EQ(c.probe_count(), 29u);
  c.probe_fraction = 1.0;
  EXPECT_EQ(c.probe_count(), 114u);
  c.target_inbound_capacity = 2;
  c.probe_fraction = 0.25;  // 0.5 rounds up
  EXPECT_EQ(c.probe_count(), 1u);
}

TEST(BuildNetwork, TwoNodesOneLink) {
  NetworkConfig c;
  c.n_nodes = 2;
  c.background_out_degree = 1;
  c.target_outbound = 1;
  c.target_inbound_capacity = 0;
  const auto net = build_network(c);
  std::size_t background_links = 0;
  for (const auto& l : net.links()) {
    if (l.a != kTarget && l.b != kTarget) ++background_links;
  }
  EXPECT_EQ(background_links, 1u);
}

TEST(BuildNetwork, TargetDegreesAndConnectivity) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = small_network(seed);
    c.probe_fraction = 0.5;
    const auto net = build_network(c);
    std::size_t outbound = 0, probes = 0;
    for (const auto& s : net.slots_of(kTarget)) {
      if (s.outbound) {
        ++outbound;
        EXPECT_FALSE(net.is_probe_node(s.peer));
      }
      if (net.links()[s.link].is_probe) {
        ++probes;
        EXPECT_FALSE(s.outbound);
      }
    }
    EXPECT_EQ(outbound, c.target_outbound);
    EXPECT_EQ(probes, c.probe_count());
    EXPECT_LE(net.slots_of(kTarget).size() - outbound, c.target_inbound_capacity);

    for (const auto& l : net.links()) EXPECT_NE(l.a, l.b);

    // Background nodes form one component.
    std::vector<bool> seen(net.node_count(), false);
    std::queue<NodeId> q;
    q.push(1);
    seen[1] = true;
    std::size_t reached = 0;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      ++reached;
      for (const auto& s : net.slots_of(v)) {
        if (s.peer == kTarget || net.is_probe_node(s.peer) || seen[s.peer]) continue;
        seen[s.peer] = true;
        q.push(s.peer);
      }
    }
    EXPECT_EQ(reached, c.n_nodes);
  }
}

TEST(BuildNetwork, RejectsBadConfig) {
  NetworkConfig c;
  c.probe_fraction = 1.5;
  EXPECT_THROW(build_network(c), UsageError);
  c = NetworkConfig{};
  c.horizon = 0;
  EXPECT_THROW(build_network(c), UsageError);
  c = NetworkConfig{};
  c.mean_delay_in = -1;
  EXPECT_THROW(build_network(c), UsageError);
  c = NetworkConfig{};
  c.n_nodes = 5;
  c.target_outbound = 0;
  c.target_inbound_capacity = 0;
  EXPECT_THROW(build_network(c), UsageError);  // isolated target
}

TEST(Run, OriginatedTxFloodsAllFiveProbes) {
  NetworkConfig c;
  c.n_nodes = 20;
  c.target_outbound = 0;
  c.target_inbound_capacity = 5;
  c.probe_out_degree = 0;
  c.horizon = 100;
  Workload w;
  w.background_tx_rate = 0;
  w.target_origin_count = 1;
  const auto r = run(build_network(c), w);
  ASSERT_EQ(r.truth.origins.size(), 1u);
  const auto h = r.truth.origins[0].first;
  std::set<std::uint32_t> links_with_inv;
  std::size_t invs = 0;
  for (const auto& rec : r.traces.records) {
    if (rec.tx_hash == h && rec.direction == Direction::sent_by_target && rec.msg == MsgKind::inv) {
      ++invs;
      links_with_inv.insert(rec.conn_id);
    }
  }
  EXPECT_EQ(invs, 5u);
  EXPECT_EQ(links_with_inv.size(), 5u);
}

TEST(Run, NoInvBackToFirstAnnouncer) {
  const auto& r = shared_run();
  // First R-inv per tx marks the first announcer's link.
  std::map<Hash32, std::uint32_t> first_announcer;
  std::set<std::pair<Hash32, std::uint32_t>> sent;
  for (const auto& rec : r.traces.records) {
    if (rec.msg != MsgKind::inv) continue;
    if (rec.direction == Direction::received_by_target) first_announcer.try_emplace(rec.tx_hash, rec.conn_id);
    else sent.emplace(rec.tx_hash, rec.conn_id);
  }
  ASSERT_FALSE(first_announcer.empty());
  for (const auto& [h, link] : first_announcer) EXPECT_FALSE(sent.count({h, link}));
}

TEST(Run, AtMostOneInvPerLinkAndTx) {
  const auto& r = shared_run();
  std::set<std::pair<Hash32, std::uint32_t>> seen;
  for (const auto& rec : r.traces.records) {
    if (rec.msg != MsgKind::inv) continue;
    EXPECT_TRUE(seen.emplace(rec.tx_hash, rec.conn_id).second);
  }
}

TEST(Run, GetdataOffsets) {
  const auto& r = shared_run();
  const auto probes = probe_links(r.traces);
  std::map<std::pair<Hash32, std::uint32_t>, double> inv_at;
  std::size_t inbound_checked = 0, outbound_checked = 0;
  for (const auto& rec : r.traces.records) {
    const auto key = std::make_pair(rec.tx_hash, rec.conn_id);
    if (rec.msg == MsgKind::inv) inv_at[key] = rec.ts;
    if (rec.msg != MsgKind::getdata || !probes.count(rec.conn_id)) continue;
    ASSERT_TRUE(inv_at.count(key));
    if (rec.direction == Direction::sent_by_target) {
      // Probe dialed the target, so the link is inbound for the target.
      EXPECT_NEAR(rec.ts - inv_at[key], 2.0, 1e-9);
      ++inbound_checked;
    } else {
      EXPECT_EQ(rec.ts, inv_at[key]);
      ++outbound_checked;
    }
  }
  EXPECT_GT(inbound_checked, 0u);
  EXPECT_GT(outbound_checked, 0u);
}

TEST(Run, GetdataPrecededByOppositeInv) {
  const auto& r = shared_run();
  std::set<std::tuple<Hash32, std::uint32_t, Direction>> invs;
  for (const auto& rec : r.traces.records) {
    if (rec.msg == MsgKind::inv) invs.emplace(rec.tx_hash, rec.conn_id, rec.direction);
    if (rec.msg == MsgKind::getdata) {
      const auto opposite =
          rec.direction == Direction::sent_by_target ? Direction::received_by_target : Direction::sent_by_target;
      EXPECT_TRUE(invs.count({rec.tx_hash, rec.conn_id, opposite}));
    }
  }
}

TEST(Run, OneGetdataPerNodeAndTx) {
  const auto& r = shared_run();
  EXPECT_EQ(r.stats.duplicate_getdata, 0u);
  EXPECT_EQ(r.stats.out_of_order_pops, 0u);
  std::set<Hash32> target_requests;
  for (const auto& rec : r.traces.records) {
    if (rec.msg == MsgKind::getdata && rec.direction == Direction::sent_by_target) {
      EXPECT_TRUE(target_requests.insert(rec.tx_hash).second);
    }
  }
}

TEST(Run, RecordsTimeOrderedAndLabelled) {
  const auto& r = shared_run();
  for (std::size_t i = 1; i < r.traces.records.size(); ++i) {
    EXPECT_LE(r.traces.records[i - 1].ts, r.traces.records[i].ts);
  }
  for (const auto& rec : r.traces.records) EXPECT_TRUE(r.truth.index.count(rec.tx_hash));
  std::size_t origin = 0;
  for (const auto& [h, node] : r.truth.origins) origin += node == kTarget;
  EXPECT_EQ(origin, 12u);
  EXPECT_EQ(r.chain.size(), r.truth.origins.size());
}

TEST(Run, TargetOriginInvNeverExceedsProbeCount) {
  const auto& r = shared_run();
  const auto probes = probe_links(r.traces);
  std::map<Hash32, std::size_t> invs;
  for (const auto& rec : r.traces.records) {
    if (rec.direction == Direction::sent_by_target && rec.msg == MsgKind::inv && probes.count(rec.conn_id)) {
      ++invs[rec.tx_hash];
    }
  }
  for (const auto& [h, n] : invs) EXPECT_LE(n, probes.size());
}

TEST(Run, Deterministic) {
  const auto a = run(build_network(small_network(9)), small_workload());
  const auto b = run(build_network(small_network(9)), small_workload());
  EXPECT_EQ(a.traces.records, b.traces.records);
  EXPECT_EQ(a.truth.origins, b.truth.origins);
  const auto c = run(build_network(small_network(10)), small_workload());
  EXPECT_NE(a.traces.records, c.traces.records);
}

TEST(Run, ShortHorizonWarnsInsteadOfThrowing) {
  auto c = small_network(3);
  c.horizon = 1e-4;
  c.capture_tail = 0;
  Workload w;
  w.background_tx_rate = 0;
  w.target_origin_count = 1;
  SimResult r;
  ASSERT_NO_THROW(r = run(build_network(c), w));
  EXPECT_TRUE(r.traces.records.empty());
  EXPECT_FALSE(r.stats.warnings.empty());
}

TEST(Run, ClusteredScheduleKeepsBurstGaps) {
  auto w = small_workload();
  w.schedule = Schedule::clustered;
  w.n_clusters = 3;
  w.intra_gap = 60;
  EXPECT_NO_THROW(w.validate(600));
  EXPECT_THROW(w.validate(30), UsageError);
  const auto r = run(build_network(small_network(6)), w);
  std::size_t origin = 0;
  for (const auto& [h, node] : r.truth.origins) origin += node == kTarget;
  EXPECT_EQ(origin, 12u);
}

TEST(Subsample, SizesAndDeterminism) {
  auto c = small_network(5);
  c.target_inbound_capacity = 8;
  c.fill_inbound = false;
  const auto r = run(build_network(c), small_workload());
  ASSERT_EQ(probe_links(r.traces).size(), 8u);

  const auto quarter = subsample_probes(r.traces, 0.25, 77);
  EXPECT_EQ(quarter.links.size(), 2u);
  std::set<std::uint32_t> used;
  for (const auto& rec : quarter.records) used.insert(rec.conn_id);
  EXPECT_LE(used.size(), 2u);
  EXPECT_EQ(subsample_probes(r.traces, 0.25, 77).records, quarter.records);

  const auto full = subsample_probes(r.traces, 1.0, 77);
  std::vector<wiremsg::TraceRecord> expected;
  const auto probes = probe_links(r.traces);
  for (const auto& rec : r.traces.records) {
    if (probes.count(rec.conn_id)) expected.push_back(rec);
  }
  EXPECT_EQ(full.records, expected);

  EXPECT_THROW(subsample_probes(r.traces, 0.01, 1), UsageError);
  EXPECT_THROW(subsample_probes(r.traces, 0, 1), UsageError);
  EXPECT_THROW(subsample_probes(r.traces, 1.5, 1), UsageError);
}

TEST(Subsample, IncludeOutboundAddsTargetOutboundLinks) {
  const auto& r = shared_run();
  const auto with = subsample_probes(r.traces, 1.0, 1, true);
  std::size_t outbound = 0;
  for (const auto& l : with.links) outbound += l.target_outbound;
  EXPECT_EQ(outbound, 10u);
}

TEST(GroundTruthFile, RoundTripAndErrors) {
  testing_support::ScratchDir dir("truth");
  const auto& r = shared_run();
  write_ground_truth(r.truth, dir.file("truth.txt"));
  const auto back = read_ground_truth(dir.file("truth.txt"));
  EXPECT_EQ(back.origins, r.truth.origins);
  testing_support::spit(dir.file("bad.txt"), "tx=zz origin=1\n");
  EXPECT_THROW(read_ground_truth(dir.file("bad.txt")), DataError);
  EXPECT_THROW(read_ground_truth(dir.file("missing.txt")), DataError);
}
