#include "saginmp/cc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace saginmp {

double ema_window(const std::deque<double>& hist, double newest_factor) {
  if (hist.empty()) return 0.0;
  double e = hist.front();
  for (size_t i = 1; i < hist.size(); ++i)
    e = (1.0 - newest_factor) * e + newest_factor * hist[i];
  return e;
}

double init_window(const std::deque<double>& own_hist,
                   const std::vector<const std::deque<double>*>& sibling_hists,
                   double bdp_cap_mss, double newest_factor) {
  double w_hat = 0.0;
  if (!own_hist.empty()) {
    w_hat = ema_window(own_hist, newest_factor);
  } else {
    double sum = 0.0;
    int cnt = 0;
    for (const auto* h : sibling_hists) {
      if (h && !h->empty()) {
        sum += ema_window(*h, newest_factor);
        ++cnt;
      }
    }
    w_hat = cnt > 0 ? sum / cnt : 4.0;
  }
  return std::max(1.0, std::min(bdp_cap_mss, w_hat));
}

double edbss_growth_raw(double w, double sst, double a, double b, double gamma_boost,
                        double varrho) {
  const double xi = 1.0 / (1.0 + std::exp(a * (w / sst - b)));
  const double zeta = 1.0 + gamma_boost * std::exp(-w / varrho);
  return 1.0 + xi * zeta;
}

double edbss_step(double w, double sst, double a, double b, double gamma_boost, double varrho,
                  double m_max) {
  return w * std::min(edbss_growth_raw(w, sst, a, b, gamma_boost, varrho), m_max);
}

double classify_loss(bool con1, bool con2, bool con3, double w, double gamma) {
  double w_next;
  if (con1 && con2 && con3) {
    w_next = w / 2.0;  // genuine congestion during a handover
  } else if (con1) {
    w_next = gamma * w;  // handover-induced loss, conservative reduction
  } else {
    w_next = w / 2.0;  // non-handover loss treated as congestion
  }
  return std::max(1.0, std::floor(w_next));
}

CaResult ca_increase(double w, double tau_own, double t_win_max, double snr_db,
                     double snr_max_db, double sigma, double rho_cap, double lambda_prev,
                     const std::vector<std::pair<double, double>>& rates) {
  double ratio = snr_max_db != 0.0 ? snr_db / snr_max_db : 0.0;
  ratio = std::clamp(ratio, 0.0, 1.0);
  double lambda = sigma * ratio + (1.0 - sigma) * lambda_prev;
  lambda = std::clamp(lambda, 0.0, std::min(1.0, rho_cap));

  double sum = 0.0, best = 0.0;
  for (const auto& [wi, ti] : rates) {
    if (ti <= 0.0) continue;
    const double r = wi / ti;
    sum += r;
    best = std::max(best, r);
  }
  CaResult out{w, lambda};
  if (sum <= 0.0 || tau_own <= 0.0) return out;  // no rate information: no increase
  const double inc =
      lambda * (3.0 * best * best * std::sqrt(t_win_max)) / (2.0 * tau_own * std::pow(sum, 2.5));
  out.w = w + inc;
  return out;
}

void CcEstimators::update(int slot, double slot_len_s, long long acked_bytes,
                          const std::vector<double>& rtts, double subflow_srtt,
                          int window_slots, double ewma_old) {
  // roll predictions forward: what we report as C(t-1)/D(t-1) next slot
  c_prev_bps = has_tp ? c_bps : 0.0;

  if (acked_bytes > 0) {
    tp_bps = 8.0 * static_cast<double>(acked_bytes) / slot_len_s;
    c_bps = has_tp ? ewma_old * c_bps + (1.0 - ewma_old) * tp_bps : tp_bps;
    if (!has_tp) c_prev_bps = c_bps;  // first sample: prediction seeded from it
    has_tp = true;
  }

  if (!rtts.empty()) {
    double lo = rtts.front(), hi = rtts.front();
    for (double r : rtts) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    rtt_lo.push_back({slot, lo});
    rtt_hi.push_back({slot, hi});
    has_rtt = true;
  }
  while (!rtt_lo.empty() && rtt_lo.front().first <= slot - window_slots) rtt_lo.pop_front();
  while (!rtt_hi.empty() && rtt_hi.front().first <= slot - window_slots) rtt_hi.pop_front();

  if (has_rtt) {
    srtt_s = subflow_srtt;
    double dmin = std::numeric_limits<double>::infinity();
    double tmax = 0.0;
    for (const auto& [s, v] : rtt_lo) dmin = std::min(dmin, v);
    for (const auto& [s, v] : rtt_hi) tmax = std::max(tmax, v);
    if (!rtt_lo.empty()) d_prev_s = dmin;
    if (!rtt_hi.empty()) t_win_max_s = tmax;
  }
}

// ---------------- PHACC ----------------

PhaccController::PhaccController(const CcConfig& cc, const TransportConfig& tc,
                                 const ScenarioConfig& scen, int num_paths)
    : cfg_(cc),
      tcfg_(tc),
      slot_len_s_(scen.slot_length_s),
      mss_bytes_(scen.mss_bytes),
      est_(num_paths),
      lambda_(num_paths, 1.0),
      lambda_init_(num_paths, false),
      next_growth_time_(num_paths, 0.0),
      recovery_until_(num_paths, 0.0) {
  cfg_.validate();
}

void PhaccController::on_slot_ue(int slot, double now, std::vector<Subflow*>& subflows,
                                 const std::vector<SubflowSlotObs>& obs,
                                 std::vector<CcTraceEvent>* events) {
  const int M = static_cast<int>(subflows.size());
  if (events) events->assign(M, CcTraceEvent{});

  for (int m = 0; m < M; ++m) {
    Subflow& sf = *subflows[m];
    const SubflowSlotObs& o = obs[m];
    CcTraceEvent ev;
    ev.phase = sf.cwnd < sf.sst ? "SS" : "CA";
    ev.event = "none";

    // Con_2 / Con_3 use this slot's TP against last slot's predictions.
    const double tp_now = o.acked_bytes > 0 ? 8.0 * static_cast<double>(o.acked_bytes) / slot_len_s_
                                            : est_[m].tp_bps;
    const bool con2 = est_[m].has_tp && tp_now < est_[m].c_prev_bps;
    const bool con3 =
        est_[m].has_rtt && o.acked > 0 &&
        *std::max_element(o.rtts.begin(), o.rtts.end()) > est_[m].d_prev_s + cfg_.delta_r_s;

    if (sf.cwnd < sf.sst) {
      if (o.reconnected) {
        // cross-flow historical slow start
        std::vector<const std::deque<double>*> siblings;
        for (int i = 0; i < M; ++i)
          if (i != m) siblings.push_back(&subflows[i]->window_history);
        double bdp = std::numeric_limits<double>::infinity();
        if (est_[m].has_tp && est_[m].d_prev_s > 0.0)
          bdp = est_[m].c_prev_bps * est_[m].d_prev_s / (8.0 * mss_bytes_);
        sf.cwnd = init_window(sf.window_history, siblings, bdp, cfg_.w_ema_newest);
        ev.event = "init";
      } else if (o.link_up && o.acked > 0 && now >= next_growth_time_[m]) {
        // EDBSS fires once per RTT while ACKs are returning
        sf.cwnd = edbss_step(sf.cwnd, sf.sst, cfg_.edbss_a, cfg_.edbss_b, cfg_.edbss_gamma,
                             cfg_.edbss_rho, cfg_.edbss_mmax);
        next_growth_time_[m] = now + (sf.has_rtt ? sf.srtt_s : slot_len_s_);
        ev.event = "edbss";
      }
    } else {
      if (o.loss_event && now >= recovery_until_[m]) {
        // one reduction per RTT: further losses inside the recovery round
        // belong to the same congestion/handover event
        const bool full_congestion = o.con1 && con2 && con3;
        sf.cwnd = classify_loss(o.con1, con2, con3, sf.cwnd, cfg_.gamma);
        sf.sst = sf.cwnd;
        recovery_until_[m] = now + (sf.has_rtt ? sf.srtt_s : slot_len_s_);
        ev.event = full_congestion || !o.con1 ? "loss_half" : "loss_gamma";
      } else if (!o.loss_event && o.link_up && o.acked > 0) {
        std::vector<std::pair<double, double>> rates;
        rates.reserve(M);
        for (int i = 0; i < M; ++i) {
          const Subflow& s2 = *subflows[i];
          if (s2.has_rtt && obs[i].link_up) rates.push_back({s2.cwnd, s2.srtt_s});
        }
        if (sf.has_rtt) {
          const double lam0 = lambda_init_[m] ? lambda_[m]
                                              : std::clamp(o.snr_db / std::max(1e-9, o.snr_max_db),
                                                           0.0, 1.0);
          const CaResult r =
              ca_increase(sf.cwnd, sf.srtt_s, est_[m].t_win_max_s, o.snr_db, o.snr_max_db,
                          cfg_.sigma, cfg_.rho, lam0, rates);
          sf.cwnd = r.w;
          lambda_[m] = r.lambda;
          lambda_init_[m] = true;
          ev.event = "ca";
        }
      }
    }
    sf.cwnd = std::max(1.0, sf.cwnd);

    est_[m].update(slot, slot_len_s_, o.acked_bytes, o.rtts, sf.srtt_s, tcfg_.rtt_window_slots,
                   cfg_.tp_ewma_old);
    if (events) (*events)[m] = ev;
  }
}

void PhaccController::on_subflow_activated(std::vector<Subflow*>& subflows, int m, double now) {
  (void)now;
  // cross-flow historical (re)initialization, BDP-capped
  Subflow& sf = *subflows[m];
  std::vector<const std::deque<double>*> siblings;
  for (size_t i = 0; i < subflows.size(); ++i)
    if (static_cast<int>(i) != m) siblings.push_back(&subflows[i]->window_history);
  double bdp = std::numeric_limits<double>::infinity();
  if (est_[m].has_tp && est_[m].d_prev_s > 0.0)
    bdp = est_[m].c_prev_bps * est_[m].d_prev_s / (8.0 * mss_bytes_);
  const double w = init_window(sf.window_history, siblings, bdp, cfg_.w_ema_newest);
  sf.cwnd = std::min(sf.cwnd, w);
  sf.sst = std::max(sf.sst, sf.cwnd);
}

// ---------------- OLIA ----------------

OliaController::OliaController(const CcConfig& cc, int num_paths)
    : cfg_(cc), l1_mss_(num_paths, 0.0), l2_mss_(num_paths, 0.0),
      recovery_until_(num_paths, 0.0) {}

void OliaController::on_slot_ue(int slot, double now, std::vector<Subflow*>& subflows,
                                const std::vector<SubflowSlotObs>& obs,
                                std::vector<CcTraceEvent>* events) {
  (void)slot;
  (void)now;
  const int M = static_cast<int>(subflows.size());
  if (events) events->assign(M, CcTraceEvent{});

  // path sets for the epsilon shifts
  double best_score = -1.0, max_w = -1.0;
  for (int m = 0; m < M; ++m) {
    const Subflow& sf = *subflows[m];
    if (!obs[m].link_up) continue;
    const double l = std::max(l1_mss_[m], l2_mss_[m]);
    const double rtt = sf.has_rtt ? sf.srtt_s : 1.0;
    best_score = std::max(best_score, l * l / rtt);
    max_w = std::max(max_w, sf.cwnd);
  }
  std::vector<bool> in_best(M, false), in_maxw(M, false);
  int n_best_not_max = 0, n_maxw = 0;
  for (int m = 0; m < M; ++m) {
    const Subflow& sf = *subflows[m];
    if (!obs[m].link_up) continue;
    const double l = std::max(l1_mss_[m], l2_mss_[m]);
    const double rtt = sf.has_rtt ? sf.srtt_s : 1.0;
    in_best[m] = l * l / rtt >= best_score - 1e-12;
    in_maxw[m] = sf.cwnd >= max_w - 1e-12;
    if (in_maxw[m]) ++n_maxw;
    if (in_best[m] && !in_maxw[m]) ++n_best_not_max;
  }

  // cross-flow rate sum from the slot-start windows, so symmetric paths see
  // identical increments
  double denom = 0.0;
  for (int i = 0; i < M; ++i) {
    const Subflow& s2 = *subflows[i];
    if (s2.has_rtt && obs[i].link_up) denom += s2.cwnd / s2.srtt_s;
  }

  for (int m = 0; m < M; ++m) {
    Subflow& sf = *subflows[m];
    const SubflowSlotObs& o = obs[m];
    CcTraceEvent ev;
    ev.phase = sf.cwnd < sf.sst ? "SS" : "CA";
    ev.event = "none";

    if (o.reconnected) {
      sf.cwnd = 10.0;  // deployed-standard initial window (RFC 6928)
      ev.event = "init";
    }

    l1_mss_[m] += o.acked;

    if (o.loss_event && now >= recovery_until_[m]) {
      sf.cwnd = std::max(1.0, std::floor(sf.cwnd / 2.0));
      sf.sst = sf.cwnd;
      l2_mss_[m] = l1_mss_[m];
      l1_mss_[m] = 0.0;
      recovery_until_[m] = now + (sf.has_rtt ? sf.srtt_s : 0.02);
      ev.event = "loss_half";
    } else if (!o.loss_event && o.acked > 0) {
      if (sf.cwnd < sf.sst) {
        sf.cwnd += o.acked;  // classic slow start, +1 MSS per ACK
        ev.event = "ss";
      } else {
        double alpha = 0.0;
        if (n_best_not_max > 0) {
          if (in_best[m] && !in_maxw[m])
            alpha = 1.0 / (M * n_best_not_max);
          else if (in_maxw[m])
            alpha = -1.0 / (M * n_maxw);
        }
        if (denom > 0.0 && sf.has_rtt && sf.srtt_s > 0.0) {
          for (int k = 0; k < o.acked; ++k) {
            const double inc =
                (sf.cwnd / (sf.srtt_s * sf.srtt_s)) / (denom * denom) + alpha / sf.cwnd;
            sf.cwnd = std::max(1.0, sf.cwnd + inc);
          }
          ev.event = "ca";
        }
      }
    }
    sf.cwnd = std::max(1.0, sf.cwnd);
    if (events) (*events)[m] = ev;
  }
}

void OliaController::on_subflow_activated(std::vector<Subflow*>& subflows, int m, double now) {
  (void)now;
  // standard restart after idle: fall back to the initial window
  Subflow& sf = *subflows[m];
  sf.cwnd = std::min(sf.cwnd, 10.0);
}

std::unique_ptr<CongestionController> make_controller(const std::string& name, const CcConfig& cc,
                                                      const TransportConfig& tc,
                                                      const ScenarioConfig& scen) {
  CcConfig local = cc;
  local.name = name;
  if (name == "phacc" || name == "phacc_no_gpasp")
    return std::make_unique<PhaccController>(local, tc, scen, scen.num_paths);
  if (name == "olia") return std::make_unique<OliaController>(local, scen.num_paths);
  throw std::invalid_argument("unknown congestion controller '" + name +
                              "' (valid: phacc, phacc_no_gpasp, olia)");
}

}  // namespace saginmp
