#include "saginmp/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace saginmp {

TransportEngine::TransportEngine(const ScenarioConfig& scen, const TransportConfig& tc,
                                 std::uint64_t seed)
    : num_ues_(scen.num_ues),
      num_paths_(scen.num_paths),
      mss_bytes_(scen.mss_bytes),
      slot_len_s_(scen.slot_length_s),
      tc_(tc),
      rng_(Rng::derive_seed(seed, 0x7a115ULL)) {
  subflows_.resize(static_cast<size_t>(num_ues_) * num_paths_);
  for (int n = 0; n < num_ues_; ++n) {
    for (int m = 0; m < num_paths_; ++m) {
      Subflow& sf = subflow(n, m);
      sf.ue = n;
      sf.path = m;
    }
  }
  logs_.resize(num_ues_);
  next_seq_.assign(num_ues_, 1);
  queue_free_time_.assign(num_paths_, 0.0);
}

double TransportEngine::t_max(const Subflow& sf) const {
  if (!sf.has_rtt) return tc_.timeout_max_s;
  const double v = tc_.timeout_srtt_factor * sf.srtt_s;
  return std::min(tc_.timeout_max_s, std::max(tc_.timeout_min_s, v));
}

int TransportEngine::try_send(int n, int m, const LinkState& link, double now, int app_budget,
                              const FeatureVec& features) {
  if (!link.up) return 0;
  Subflow& sf = subflow(n, m);
  int room = static_cast<int>(std::floor(sf.cwnd)) - sf.in_flight;
  if (app_budget >= 0) room = std::min(room, app_budget);
  if (room <= 0) return 0;

  for (int k = 0; k < room; ++k) {
    auto p = std::make_unique<Packet>();
    p->seq = next_seq_[n]++;
    p->ue = n;
    p->path = m;
    p->size_bytes = mss_bytes_;
    p->send_time = now;
    p->features = features;

    // drop-tail relay FIFO shared by all UEs on this path
    const double backlog_pkts = link.capacity_bps > 0.0
                                    ? std::max(0.0, queue_free_time_[m] - now) *
                                          link.capacity_bps / (8.0 * mss_bytes_)
                                    : std::numeric_limits<double>::infinity();
    if (backlog_pkts >= tc_.queue_limit_packets) {
      // dropped at the relay; the sender discovers the gap one RTT later
      p->phys_dropped = true;
      p->arrival_resolved = true;
      p->arrive_time = now + link.prop_delay_s;
      p->ack_time = now + 2.0 * link.prop_delay_s;
    } else {
      const double service_s = link.capacity_bps > 0.0
                                   ? 8.0 * p->size_bytes / link.capacity_bps
                                   : std::numeric_limits<double>::infinity();
      const double start = std::max(now, queue_free_time_[m]);
      queue_free_time_[m] = start + service_s;
      p->arrive_time = queue_free_time_[m] + link.prop_delay_s;
      p->ack_time = p->arrive_time + link.prop_delay_s;  // symmetric, loss-free return
    }

    ++sf.in_flight;
    ++logs_[n].sent;
    ++total_sent_;
    if (tracing_)
      trace_.push_back({static_cast<int>(now / slot_len_s_ + 1e-9), n, m, p->seq, "send", 0.0,
                        p->size_bytes});
    if (p->arrival_resolved) {
      sender_events_.push({p->ack_time, n, p->seq, packets_.size()});  // tail drop
    } else if (std::isfinite(p->arrive_time)) {
      arrivals_.push({p->arrive_time, n, p->seq, packets_.size()});
    }
    packets_.push_back(std::move(p));
  }
  return room;
}

void TransportEngine::resolve_arrival(Packet& p, const WorldState& world) {
  p.arrival_resolved = true;
  if (p.status != PacketStatus::InFlight) {
    // the sender already declared this packet lost; the receiver drops it
    ++logs_[p.ue].late_arrivals;
    return;
  }
  const LinkState& l = world.link(p.ue, p.path);
  if (!l.up || rng_.bernoulli(l.loss_prob)) {
    p.phys_dropped = true;
    return;  // detection happens at the would-be ACK time
  }
  p.deliver_time = p.arrive_time;
  p.arrival_rank = logs_[p.ue].next_rank++;
  logs_[p.ue].seq_ranks.push_back({p.seq, p.arrival_rank});
}

bool TransportEngine::on_ack(Packet& p, double rtt_s, std::vector<Feedback>* out) {
  if (p.status != PacketStatus::InFlight) {
    ++logs_[p.ue].dup_acks;
    return false;
  }
  p.status = PacketStatus::Acked;
  p.sender_resolved = true;
  Subflow& sf = subflow(p.ue, p.path);
  --sf.in_flight;
  ++sf.acked_packets;
  ++logs_[p.ue].acked;
  ++total_acked_;
  // SRTT, standard 7/8 smoothing
  if (!sf.has_rtt) {
    sf.srtt_s = rtt_s;
    sf.has_rtt = true;
  } else {
    sf.srtt_s = 0.875 * sf.srtt_s + 0.125 * rtt_s;
  }
  if (out)
    out->push_back({p.ue, p.path, p.features, +1, rtt_s, rtt_s, p.size_bytes});
  return true;
}

bool TransportEngine::on_timeout(Packet& p, double t_max_s, std::vector<Feedback>* out) {
  if (p.status != PacketStatus::InFlight) return false;
  p.status = PacketStatus::Lost;
  p.sender_resolved = true;
  Subflow& sf = subflow(p.ue, p.path);
  --sf.in_flight;
  ++sf.lost_packets;
  ++logs_[p.ue].lost;
  ++total_lost_;
  if (out)
    out->push_back({p.ue, p.path, p.features, -1, t_max_s, 0.0, p.size_bytes});
  return true;
}

TransportEngine::SlotResult TransportEngine::deliver_step(const WorldState& world, int slot) {
  SlotResult res;
  const double t_end = (slot + 1) * slot_len_s_;

  // receiver arrivals due this slot, in arrival order
  while (!arrivals_.empty() && arrivals_.top().time < t_end) {
    const EventRef ev = arrivals_.top();
    arrivals_.pop();
    Packet& p = *packets_[ev.idx];
    resolve_arrival(p, world);
    sender_events_.push({p.ack_time, p.ue, p.seq, ev.idx});
  }

  // sender-side detections (ACKs and would-be-ACK loss discoveries)
  while (!sender_events_.empty() && sender_events_.top().time < t_end) {
    const EventRef ev = sender_events_.top();
    sender_events_.pop();
    Packet& p = *packets_[ev.idx];
    if (p.sender_resolved) continue;  // a timeout sweep got there first
    if (p.phys_dropped) {
      const double tm = t_max(subflow(p.ue, p.path));
      if (on_timeout(p, tm, &res.losses) && tracing_)
        trace_.push_back({slot, p.ue, p.path, p.seq, "lost", 0.0, p.size_bytes});
    } else {
      const double rtt = p.ack_time - p.send_time;
      if (on_ack(p, rtt, &res.acks) && tracing_)
        trace_.push_back({slot, p.ue, p.path, p.seq, "ack", rtt, p.size_bytes});
    }
  }

  // timeout sweep: packets stuck past T_max (deep queues, dead links).
  // A packet that already reached the receiver intact is not swept; its
  // ACK is on the way back and will resolve it.
  for (auto& up : packets_) {
    Packet& p = *up;
    if (p.status != PacketStatus::InFlight) continue;
    if (p.arrival_resolved && !p.phys_dropped) continue;
    const double tm = t_max(subflow(p.ue, p.path));
    if (t_end - p.send_time > tm) {
      if (on_timeout(p, tm, &res.losses) && tracing_)
        trace_.push_back({slot, p.ue, p.path, p.seq, "lost", 0.0, p.size_bytes});
    }
  }
  return res;
}

void TransportEngine::record_window_history(int n, int m, bool active) {
  if (!active) return;
  Subflow& sf = subflow(n, m);
  sf.window_history.push_back(sf.cwnd);
  while (static_cast<int>(sf.window_history.size()) > tc_.window_history_len)
    sf.window_history.pop_front();
}

std::vector<PacketSample> TransportEngine::packet_samples() const {
  std::vector<PacketSample> out;
  out.reserve(packets_.size());
  for (const auto& up : packets_) {
    const Packet& p = *up;
    PacketSample s;
    s.ue = p.ue;
    s.seq = p.seq;
    // receiver-side view: an arrived packet whose ACK is still in flight at
    // the horizon counts as delivered (it holds an arrival rank)
    s.delivered = p.status == PacketStatus::Acked ||
                  (p.status == PacketStatus::InFlight && p.arrival_resolved && !p.phys_dropped);
    s.lost = p.status == PacketStatus::Lost;
    s.arrival_rank = p.arrival_rank;
    s.delay_s = s.delivered ? p.deliver_time - p.send_time : 0.0;
    s.bytes = p.size_bytes;
    out.push_back(s);
  }
  return out;
}

long long TransportEngine::total_in_flight() const {
  long long n = 0;
  for (const auto& sf : subflows_) n += sf.in_flight;
  return n;
}

double TransportEngine::queue_backlog_s(int m, double now) const {
  return std::max(0.0, queue_free_time_[m] - now);
}

}  // namespace saginmp
