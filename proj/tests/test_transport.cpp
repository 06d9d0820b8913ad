#include <cmath>

#include "doctest.h"
#include "saginmp/metrics.hpp"
#include "saginmp/transport.hpp"

using namespace saginmp;

namespace {

ScenarioConfig tiny_scenario(int ues = 1, int paths = 1) {
  ScenarioConfig s;
  s.num_ues = ues;
  s.num_paths = paths;
  s.uav_speed_mps = 0.0;
  s.sat_track_amplitude_m = 0.0;
  s.snr_noise_db = 0.0;
  s.random_loss_prob = 0.0;
  s.switch_burst_slots = 0;
  s.paths.assign(paths, PathConfig{});
  for (auto& p : s.paths) p.handover_duration_slots = 0;
  return s;
}

LinkState clean_link(double cap = 1e12, double prop = 0.004, double loss = 0.0) {
  LinkState l;
  l.up = true;
  l.capacity_bps = cap;
  l.prop_delay_s = prop;
  l.loss_prob = loss;
  return l;
}

void force_links(WorldState& w, const LinkState& tmpl) {
  for (int n = 0; n < w.num_ues; ++n) {
    for (int m = 0; m < w.num_paths; ++m) {
      LinkState l = tmpl;
      l.ue = n;
      l.path = m;
      w.link(n, m) = l;
    }
  }
}

}  // namespace

TEST_SUITE("transport") {

TEST_CASE("try_send is gated by the congestion window") {
  const ScenarioConfig scen = tiny_scenario();
  TransportConfig tc;
  TransportEngine eng(scen, tc, 1);
  const LinkState link = clean_link();
  FeatureVec f{};

  Subflow& sf = eng.subflow(0, 0);
  sf.cwnd = 4.0;
  sf.in_flight = 4;
  CHECK(eng.try_send(0, 0, link, 0.0, -1, f) == 0);

  sf.in_flight = 1;
  CHECK(eng.try_send(0, 0, link, 0.0, -1, f) == 3);
  CHECK(sf.in_flight == 4);

  LinkState down = link;
  down.up = false;
  sf.in_flight = 0;
  CHECK(eng.try_send(0, 0, down, 0.0, -1, f) == 0);
  CHECK(sf.in_flight == 0);
}

TEST_CASE("lossless idle-queue delivery yields RTT of twice the propagation delay") {
  const ScenarioConfig scen = tiny_scenario();
  TransportConfig tc;
  TransportEngine eng(scen, tc, 1);
  const LinkState link = clean_link(1e12, 0.004, 0.0);
  WorldState w = make_world(scen);
  force_links(w, link);

  FeatureVec f{};
  eng.subflow(0, 0).cwnd = 1.0;
  REQUIRE(eng.try_send(0, 0, link, 0.0, -1, f) == 1);
  const auto res = eng.deliver_step(w, 0);
  REQUIRE(res.acks.size() == 1);
  CHECK(res.acks[0].rtt_s == doctest::Approx(0.008).epsilon(1e-4));
  CHECK(res.losses.empty());
}

TEST_CASE("loss probability one marks every due packet lost") {
  const ScenarioConfig scen = tiny_scenario();
  TransportConfig tc;
  TransportEngine eng(scen, tc, 1);
  const LinkState link = clean_link(1e12, 0.004, 1.0);
  WorldState w = make_world(scen);
  force_links(w, link);

  FeatureVec f{};
  eng.subflow(0, 0).cwnd = 5.0;
  REQUIRE(eng.try_send(0, 0, link, 0.0, -1, f) == 5);
  const auto res = eng.deliver_step(w, 0);
  CHECK(res.acks.empty());
  CHECK(res.losses.size() == 5);
  CHECK(eng.total_lost() == 5);
  CHECK(eng.subflow(0, 0).in_flight == 0);
}

TEST_CASE("FIFO drain of one packet per slot separates the RTTs by one slot") {
  ScenarioConfig scen = tiny_scenario();
  TransportConfig tc;
  // service time of exactly one slot per packet
  const double cap = scen.mss_bytes * 8.0 / scen.slot_length_s;
  TransportEngine eng(scen, tc, 1);
  const LinkState link = clean_link(cap, 0.004, 0.0);
  WorldState w = make_world(scen);
  force_links(w, link);

  FeatureVec f{};
  eng.subflow(0, 0).cwnd = 2.0;
  REQUIRE(eng.try_send(0, 0, link, 0.0, -1, f) == 2);
  std::vector<double> rtts;
  for (int slot = 0; slot < 6 && rtts.size() < 2; ++slot) {
    const auto res = eng.deliver_step(w, slot);
    for (const auto& a : res.acks) rtts.push_back(a.rtt_s);
  }
  REQUIRE(rtts.size() == 2);
  CHECK(rtts[1] - rtts[0] == doctest::Approx(scen.slot_length_s).epsilon(1e-6));
}

TEST_CASE("on_ack emits positive feedback and handles duplicates") {
  const ScenarioConfig scen = tiny_scenario();
  TransportConfig tc;
  TransportEngine eng(scen, tc, 1);
  const LinkState link = clean_link();
  FeatureVec f{};
  f[0] = 0.25;
  eng.subflow(0, 0).cwnd = 3.0;
  REQUIRE(eng.try_send(0, 0, link, 0.0, -1, f) == 3);

  Packet p;
  p.ue = 0;
  p.path = 0;
  p.seq = 1;
  p.size_bytes = 1500;
  p.features = f;

  std::vector<Feedback> out;
  CHECK(eng.subflow(0, 0).in_flight == 3);
  CHECK(eng.on_ack(p, 0.080, &out));
  REQUIRE(out.size() == 1);
  CHECK(out[0].c == 1);
  CHECK(out[0].t_tilde_s == doctest::Approx(0.080));
  CHECK(out[0].features[0] == doctest::Approx(0.25));
  CHECK(eng.subflow(0, 0).in_flight == 2);

  // duplicate: no state change, counted
  CHECK_FALSE(eng.on_ack(p, 0.080, &out));
  CHECK(out.size() == 1);
  CHECK(eng.arrival_log(0).dup_acks == 1);
  CHECK(eng.subflow(0, 0).in_flight == 2);
}

TEST_CASE("on_timeout emits negative feedback with response time T_max") {
  const ScenarioConfig scen = tiny_scenario();
  TransportConfig tc;
  TransportEngine eng(scen, tc, 1);
  Packet p;
  p.ue = 0;
  p.path = 0;
  p.size_bytes = 1500;
  eng.subflow(0, 0).in_flight = 1;

  std::vector<Feedback> out;
  CHECK(eng.on_timeout(p, 1.0, &out));
  REQUIRE(out.size() == 1);
  CHECK(out[0].c == -1);
  CHECK(out[0].t_tilde_s == doctest::Approx(1.0));
  CHECK(p.status == PacketStatus::Lost);

  // already resolved: no-op
  Packet acked;
  acked.status = PacketStatus::Acked;
  CHECK_FALSE(eng.on_timeout(acked, 1.0, &out));
  CHECK(out.size() == 1);
}

TEST_CASE("queue-stuck packets time out against T_max") {
  ScenarioConfig scen = tiny_scenario();
  TransportConfig tc;
  tc.timeout_max_s = 0.1;  // tight ceiling, no RTT samples yet
  TransportEngine eng(scen, tc, 1);
  const LinkState link = clean_link(0.0, 0.004, 0.0);  // zero capacity: nothing drains
  WorldState w = make_world(scen);
  force_links(w, link);

  FeatureVec f{};
  eng.subflow(0, 0).cwnd = 2.0;
  REQUIRE(eng.try_send(0, 0, link, 0.0, -1, f) == 2);
  int lost = 0;
  for (int slot = 0; slot < 10; ++slot) lost += static_cast<int>(eng.deliver_step(w, slot).losses.size());
  CHECK(lost == 2);
  CHECK(eng.total_in_flight() == 0);
}

TEST_CASE("conservation: sent equals acked plus lost plus in flight at slot boundaries") {
  ScenarioConfig scen = tiny_scenario(2, 2);
  TransportConfig tc;
  tc.timeout_max_s = 0.3;
  TransportEngine eng(scen, tc, 3);
  WorldState w = make_world(scen);
  LinkState l = clean_link(2e6, 0.01, 0.15);
  force_links(w, l);

  FeatureVec f{};
  for (int slot = 0; slot < 60; ++slot) {
    for (int n = 0; n < 2; ++n) {
      for (int m = 0; m < 2; ++m) {
        eng.subflow(n, m).cwnd = 6.0;
        eng.try_send(n, m, w.link(n, m), slot * scen.slot_length_s, -1, f);
      }
    }
    eng.deliver_step(w, slot);
    CHECK(eng.total_sent() == eng.total_acked() + eng.total_lost() + eng.total_in_flight());
  }
  CHECK(eng.total_acked() > 0);
  CHECK(eng.total_lost() > 0);
}

TEST_CASE("arrival ranks form a permutation prefix and preserve single-path order") {
  ScenarioConfig scen = tiny_scenario();
  TransportConfig tc;
  TransportEngine eng(scen, tc, 5);
  WorldState w = make_world(scen);
  force_links(w, clean_link(5e6, 0.005, 0.0));

  FeatureVec f{};
  for (int slot = 0; slot < 40; ++slot) {
    eng.subflow(0, 0).cwnd = 8.0;
    eng.try_send(0, 0, w.link(0, 0), slot * scen.slot_length_s, -1, f);
    eng.deliver_step(w, slot);
  }
  const ArrivalLog& log = eng.arrival_log(0);
  REQUIRE(log.acked > 0);
  std::vector<bool> seen(log.seq_ranks.size() + 1, false);
  for (const auto& [seq, rank] : log.seq_ranks) {
    REQUIRE(rank >= 1);
    REQUIRE(rank <= static_cast<int>(log.seq_ranks.size()));
    REQUIRE_FALSE(seen[rank]);
    seen[rank] = true;
  }
  // single lossless path: arrival order equals send order
  const auto m = summarize(eng.packet_samples(), 1, 40 * scen.slot_length_s, 5e6, MetricsConfig{});
  CHECK(m.f_ofo == doctest::Approx(0.0));
}

}  // TEST_SUITE
