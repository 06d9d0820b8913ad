#include "saginmp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace saginmp {

OfoResult ofo_degree(const std::vector<int>& ranks) {
  const int n = static_cast<int>(ranks.size());
  if (n < 1) throw std::invalid_argument("ofo_degree: empty sequence");
  std::vector<bool> seen(n, false);
  for (int r : ranks) {
    if (r < 1 || r > n || seen[r - 1])
      throw std::invalid_argument("ofo_degree: ranks are not a permutation of 1..n");
    seen[r - 1] = true;
  }
  long long total = 0;
  int inversions = 0;
  for (int i = 0; i + 1 < n; ++i) {
    if (ranks[i] > ranks[i + 1]) {
      total += ranks[i] - ranks[i + 1];
      ++inversions;
    }
  }
  OfoResult out;
  out.degree = static_cast<double>(total) / n;
  out.rate = static_cast<double>(inversions) / n;
  return out;
}

double objective_value(double goodput_bps, double capacity_bound_bps, double f_ofo,
                       double omega1, double omega2) {
  const double norm = capacity_bound_bps > 0.0 ? goodput_bps / capacity_bound_bps : 0.0;
  return omega1 * norm - omega2 * f_ofo;
}

EpisodeMetrics summarize(const std::vector<PacketSample>& samples, int num_ues,
                         double episode_duration_s, double capacity_bound_bps,
                         const MetricsConfig& mc) {
  EpisodeMetrics em;
  em.delivered_per_ue.assign(num_ues, 0);
  em.ofo_per_ue.assign(num_ues, 0.0);

  long long acked = 0, lost = 0, delivered_bytes = 0;
  std::vector<std::vector<std::pair<long long, int>>> seq_rank(num_ues);  // (seq, rank)
  std::vector<double> delays;
  for (const auto& s : samples) {
    if (s.delivered) {
      ++acked;
      delivered_bytes += s.bytes;
      seq_rank[s.ue].push_back({s.seq, s.arrival_rank});
      delays.push_back(s.delay_s);
    } else if (s.lost) {
      ++lost;
    }
  }

  if (acked + lost == 0) {
    em.empty = true;
    return em;
  }

  long long total_inversion = 0, total_inverted = 0, total_delivered = 0;
  for (int n = 0; n < num_ues; ++n) {
    auto& v = seq_rank[n];
    std::sort(v.begin(), v.end());  // send order
    em.delivered_per_ue[n] = static_cast<long long>(v.size());
    total_delivered += em.delivered_per_ue[n];
    if (v.empty()) continue;
    std::vector<int> ranks;
    ranks.reserve(v.size());
    for (auto& p : v) ranks.push_back(p.second);
    const OfoResult r = ofo_degree(ranks);
    em.ofo_per_ue[n] = r.degree;
    // re-accumulate exact counts for the delivered-weighted aggregate
    for (size_t i = 0; i + 1 < ranks.size(); ++i) {
      if (ranks[i] > ranks[i + 1]) {
        total_inversion += ranks[i] - ranks[i + 1];
        ++total_inverted;
      }
    }
  }
  em.throughput_packets = total_delivered;
  em.f_ofo = total_delivered > 0 ? static_cast<double>(total_inversion) / total_delivered : 0.0;
  em.ofo_rate = total_delivered > 0 ? static_cast<double>(total_inverted) / total_delivered : 0.0;
  em.goodput_bps =
      episode_duration_s > 0.0 ? 8.0 * static_cast<double>(delivered_bytes) / episode_duration_s : 0.0;
  em.plr = static_cast<double>(lost) / static_cast<double>(acked + lost);
  em.pdr = 1.0 - em.plr;
  if (!delays.empty()) {
    double sum = 0.0;
    for (double d : delays) sum += d;
    em.mean_delay_s = sum / delays.size();
    double var = 0.0;
    for (double d : delays) var += (d - em.mean_delay_s) * (d - em.mean_delay_s);
    em.jitter_s = std::sqrt(var / delays.size());
  }
  em.objective =
      objective_value(em.goodput_bps, capacity_bound_bps, em.f_ofo, mc.omega1, mc.omega2);
  return em;
}

std::string EpisodeMetrics::csv_header() {
  return "delivered,f_ofo,ofo_rate,goodput_bps,plr,pdr,mean_delay_s,jitter_s,objective,empty";
}

static void put_num(std::ostringstream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  os << buf;
}

std::string EpisodeMetrics::csv_row() const {
  std::ostringstream os;
  os << throughput_packets << ",";
  put_num(os, f_ofo);
  os << ",";
  put_num(os, ofo_rate);
  os << ",";
  put_num(os, goodput_bps);
  os << ",";
  put_num(os, plr);
  os << ",";
  put_num(os, pdr);
  os << ",";
  put_num(os, mean_delay_s);
  os << ",";
  put_num(os, jitter_s);
  os << ",";
  put_num(os, objective);
  os << "," << (empty ? 1 : 0);
  return os.str();
}

std::string EpisodeMetrics::to_json() const {
  nlohmann::json j;
  j["delivered"] = throughput_packets;
  j["f_ofo"] = f_ofo;
  j["ofo_rate"] = ofo_rate;
  j["goodput_bps"] = goodput_bps;
  j["plr"] = plr;
  j["pdr"] = pdr;
  j["mean_delay_s"] = mean_delay_s;
  j["jitter_s"] = jitter_s;
  j["objective"] = objective;
  j["empty"] = empty;
  j["delivered_per_ue"] = delivered_per_ue;
  j["ofo_per_ue"] = ofo_per_ue;
  return j.dump();
}

}  // namespace saginmp
