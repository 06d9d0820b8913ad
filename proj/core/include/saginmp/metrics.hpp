#pragma once

#include <string>
#include <vector>

#include "saginmp/config.hpp"

namespace saginmp {

// Per-episode results. PLR/PDR are over resolved packets (acked + lost) so
// PDR = 1 - PLR holds exactly even when the horizon leaves packets in flight.
struct EpisodeMetrics {
  std::vector<long long> delivered_per_ue;  // x_n
  std::vector<double> ofo_per_ue;           // F^ofo per UE
  double f_ofo = 0.0;      // delivered-weighted aggregate OFO degree
  double ofo_rate = 0.0;   // fraction of delivered packets with an inversion
  long long throughput_packets = 0;  // D = sum_n x_n
  double goodput_bps = 0.0;          // D^G
  double plr = 0.0;
  double pdr = 0.0;
  double mean_delay_s = 0.0;
  double jitter_s = 0.0;  // std of one-way delay
  double objective = 0.0;
  bool empty = false;  // no resolved packets

  std::string csv_row() const;
  static std::string csv_header();
  std::string to_json() const;
};

// Reorder severity of one delivered sequence: each packet contributes
// rank_i - rank_{i+1} when its successor (in send order) arrived earlier,
// else 0, with the final packet contributing 0; the degree is the mean
// contribution and the rate the fraction of packets with a drop. `ranks`
// must be a permutation of 1..n (throws std::invalid_argument otherwise).
struct OfoResult {
  double degree = 0.0;
  double rate = 0.0;
};
OfoResult ofo_degree(const std::vector<int>& ranks);

// omega1 * normalized goodput - omega2 * aggregate OFO degree.
double objective_value(double goodput_bps, double capacity_bound_bps, double f_ofo,
                       double omega1, double omega2);

// Raw per-packet sample as logged by the transport.
struct PacketSample {
  int ue = 0;
  long long seq = 0;
  bool delivered = false;
  bool lost = false;  // neither => still in flight at horizon
  int arrival_rank = 0;
  double delay_s = 0.0;  // one-way, delivered only
  long long bytes = 0;
};

EpisodeMetrics summarize(const std::vector<PacketSample>& samples, int num_ues,
                         double episode_duration_s, double capacity_bound_bps,
                         const MetricsConfig& mc);

}  // namespace saginmp
