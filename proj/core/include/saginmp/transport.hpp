#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <memory>
#include <queue>
#include <vector>

#include "saginmp/config.hpp"
#include "saginmp/metrics.hpp"
#include "saginmp/rng.hpp"
#include "saginmp/scenario.hpp"

namespace saginmp {

constexpr int kPathFeatureDim = 7;  // d_S
using FeatureVec = std::array<double, kPathFeatureDim>;

enum class PacketStatus { InFlight, Acked, Lost };

struct Packet {
  long long seq = 0;  // per-UE, 1-based, assigned at send
  int ue = 0;
  int path = 0;
  int size_bytes = 0;
  double send_time = 0.0;
  double deliver_time = -1.0;  // receiver arrival, set iff delivered
  PacketStatus status = PacketStatus::InFlight;
  FeatureVec features{};  // link feature snapshot at send

  // event schedule (engine internal)
  double arrive_time = 0.0;
  double ack_time = 0.0;
  bool phys_dropped = false;
  bool arrival_resolved = false;
  bool sender_resolved = false;
  int arrival_rank = 0;  // set iff delivered
};

struct Subflow {
  int ue = 0;
  int path = 0;
  double cwnd = 4.0;  // MSS units; floor(cwnd) gates sending
  double sst = 64.0;
  int in_flight = 0;
  double srtt_s = 0.0;
  bool has_rtt = false;
  std::deque<double> window_history;  // W_n^m, one cwnd sample per active slot
  long long acked_packets = 0;
  long long lost_packets = 0;
  bool was_up = true;  // tracks down->up transitions (reconnect)
};

struct ArrivalLog {
  std::vector<std::pair<long long, int>> seq_ranks;  // (seq, arrival rank)
  long long sent = 0;
  long long acked = 0;
  long long lost = 0;
  long long dup_acks = 0;
  long long late_arrivals = 0;  // arrived after the sender declared them lost
  int next_rank = 1;
};

// One sender-side event surfaced to schedulers/CC: an ACK (c=+1) or a loss
// detection (c=-1, response time T_max).
struct Feedback {
  int ue = 0;
  int path = 0;
  FeatureVec features{};
  int c = 0;
  double t_tilde_s = 0.0;
  double rtt_s = 0.0;  // valid when c = +1
  long long bytes = 0;
};

struct TraceRow {
  int slot = 0;
  int ue = 0;
  int path = 0;
  long long seq = 0;
  const char* event = "";  // send | ack | lost
  double rtt_s = 0.0;
  long long bytes = 0;
};

class TransportEngine {
 public:
  TransportEngine(const ScenarioConfig& scen, const TransportConfig& tc, std::uint64_t seed);

  Subflow& subflow(int n, int m) { return subflows_[static_cast<size_t>(n) * num_paths_ + m]; }
  const Subflow& subflow(int n, int m) const {
    return subflows_[static_cast<size_t>(n) * num_paths_ + m];
  }

  // Emits up to min(app_budget, floor(cwnd) - in_flight) packets on (n, m).
  // Link down: nothing is sent and no state changes. Returns packets emitted.
  int try_send(int n, int m, const LinkState& link, double now, int app_budget,
               const FeatureVec& features);

  struct SlotResult {
    std::vector<Feedback> acks;
    std::vector<Feedback> losses;
  };

  // Resolves all packet events that fall inside slot `slot`:
  // receiver arrivals (loss realization with the link's current loss
  // probability, FIFO-queued delivery) and sender-side ACK/loss detections,
  // then sweeps timeouts against T_max at the slot end.
  SlotResult deliver_step(const WorldState& world, int slot);

  // Sender reaction to a delivered ACK. Duplicate calls are counted, ignored.
  bool on_ack(Packet& p, double rtt_s, std::vector<Feedback>* out);
  // Sender reaction to a timeout/loss detection; uses t_tilde = T_max.
  bool on_timeout(Packet& p, double t_max_s, std::vector<Feedback>* out);

  // T_max for a subflow: factor * srtt clamped, or the clamp ceiling before
  // the first RTT sample.
  double t_max(const Subflow& sf) const;

  void record_window_history(int n, int m, bool active);

  const ArrivalLog& arrival_log(int n) const { return logs_[n]; }
  std::vector<PacketSample> packet_samples() const;
  const std::vector<TraceRow>& trace() const { return trace_; }
  void set_tracing(bool on) { tracing_ = on; }

  long long total_sent() const { return total_sent_; }
  long long total_acked() const { return total_acked_; }
  long long total_lost() const { return total_lost_; }
  long long total_in_flight() const;

  double queue_backlog_s(int m, double now) const;  // current FIFO depth in seconds

 private:
  struct EventRef {
    double time;
    int ue;
    long long seq;
    size_t idx;  // into packets_
  };
  struct Later {
    bool operator()(const EventRef& a, const EventRef& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.ue != b.ue) return a.ue > b.ue;
      return a.seq > b.seq;
    }
  };

  void resolve_arrival(Packet& p, const WorldState& world);

  int num_ues_;
  int num_paths_;
  int mss_bytes_;
  double slot_len_s_;
  TransportConfig tc_;
  Rng rng_;

  std::vector<Subflow> subflows_;
  std::vector<ArrivalLog> logs_;
  std::vector<long long> next_seq_;
  std::vector<double> queue_free_time_;  // per path
  std::vector<std::unique_ptr<Packet>> packets_;
  std::priority_queue<EventRef, std::vector<EventRef>, Later> arrivals_;
  std::priority_queue<EventRef, std::vector<EventRef>, Later> sender_events_;
  std::vector<TraceRow> trace_;
  bool tracing_ = false;

  long long total_sent_ = 0;
  long long total_acked_ = 0;
  long long total_lost_ = 0;
};

}  // namespace saginmp
