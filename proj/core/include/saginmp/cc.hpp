#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "saginmp/config.hpp"
#include "saginmp/transport.hpp"

namespace saginmp {

// ---- PHACC primitive steps (pure, unit-testable) ----

// EMA over a window-history queue, oldest first, weight `newest_factor` on
// each newer sample.
double ema_window(const std::deque<double>& hist, double newest_factor);

// Slow-start (re)initialization: own-history EMA, else mean of sibling EMAs,
// else 4 MSS; capped by the BDP estimate, floored at 1 MSS.
double init_window(const std::deque<double>& own_hist,
                   const std::vector<const std::deque<double>*>& sibling_hists,
                   double bdp_cap_mss, double newest_factor);

// Raw EDBSS gain 1 + xi(w) * zeta(w) before the M_max clamp.
double edbss_growth_raw(double w, double sst, double a, double b, double gamma_boost,
                        double varrho);
// One EDBSS update: w * min(1 + xi*zeta, M_max).
double edbss_step(double w, double sst, double a, double b, double gamma_boost, double varrho,
                  double m_max);

// Multi-metric loss differentiation. Handover-only losses (Con_1 without
// both congestion signals) shrink by gamma; everything else halves.
// Result is floored to whole MSS, minimum 1.
double classify_loss(bool con1, bool con2, bool con3, double w, double gamma);

struct CaResult {
  double w = 0.0;
  double lambda = 0.0;
};

// SNR-aware congestion-avoidance increase. `rates` holds (w_i, tau_i) for
// every sibling subflow including this one.
// lambda <- sigma * SNR/SNR_max + (1-sigma) * lambda_prev, capped by rho.
CaResult ca_increase(double w, double tau_own, double t_win_max, double snr_db,
                     double snr_max_db, double sigma, double rho_cap, double lambda_prev,
                     const std::vector<std::pair<double, double>>& rates);

// ---- estimator block (TP, C, tau, D, T) ----

struct CcEstimators {
  double tp_bps = 0.0;      // TP(t): measured throughput
  double c_prev_bps = 0.0;  // C(t-1): prediction visible to Con_2
  double c_bps = 0.0;       // running EWMA (rolls into c_prev next slot)
  bool has_tp = false;
  double srtt_s = 0.0;        // tau
  double d_prev_s = 0.0;      // D(t-1): propagation estimate visible to Con_3
  double t_win_max_s = 0.0;   // T(t): max RTT over the window
  bool has_rtt = false;
  std::deque<std::pair<int, double>> rtt_lo;  // (slot, per-slot min rtt)
  std::deque<std::pair<int, double>> rtt_hi;  // (slot, per-slot max rtt)

  // Applies one slot of ACK samples. Empty slots retain previous values.
  // Returns the refreshed tuple implicitly via the public fields.
  void update(int slot, double slot_len_s, long long acked_bytes,
              const std::vector<double>& rtts, double subflow_srtt, int window_slots,
              double ewma_old);
};

// ---- controllers ----

struct SubflowSlotObs {
  int acked = 0;
  long long acked_bytes = 0;
  std::vector<double> rtts;
  bool loss_event = false;  // coalesced: any loss detected on the subflow this slot
  bool con1 = false;        // handover signal (scheduler switch or distance)
  bool link_up = false;
  bool reconnected = false;  // down -> up transition this slot
  double snr_db = 0.0;
  double snr_max_db = 1.0;
};

struct CcTraceEvent {
  const char* phase = "";  // SS | CA
  const char* event = "";  // none | init | edbss | ca | loss_half | loss_gamma
};

class CongestionController {
 public:
  virtual ~CongestionController() = default;
  virtual const char* name() const = 0;
  // Per-slot update of all of one UE's subflows (cross-flow coupling needs
  // them together). obs[m] corresponds to subflows[m].
  virtual void on_slot_ue(int slot, double now, std::vector<Subflow*>& subflows,
                          const std::vector<SubflowSlotObs>& obs,
                          std::vector<CcTraceEvent>* events) = 0;
  // Called right before the first send after an idle stretch: windows are
  // revalidated (idle restart) before they gate a new burst.
  virtual void on_subflow_activated(std::vector<Subflow*>& subflows, int m, double now) = 0;
};

class PhaccController : public CongestionController {
 public:
  PhaccController(const CcConfig& cc, const TransportConfig& tc, const ScenarioConfig& scen,
                  int num_paths);
  const char* name() const override { return cfg_.name.c_str(); }
  void on_slot_ue(int slot, double now, std::vector<Subflow*>& subflows,
                  const std::vector<SubflowSlotObs>& obs,
                  std::vector<CcTraceEvent>* events) override;
  void on_subflow_activated(std::vector<Subflow*>& subflows, int m, double now) override;
  const CcEstimators& estimators(int m) const { return est_[m]; }

 private:
  CcConfig cfg_;
  TransportConfig tcfg_;
  double slot_len_s_;
  int mss_bytes_;
  std::vector<CcEstimators> est_;        // per path
  std::vector<double> lambda_;           // per path
  std::vector<bool> lambda_init_;
  std::vector<double> next_growth_time_;  // EDBSS RTT pacing
  std::vector<double> recovery_until_;    // one window reduction per RTT
};

class OliaController : public CongestionController {
 public:
  OliaController(const CcConfig& cc, int num_paths);
  const char* name() const override { return "olia"; }
  void on_slot_ue(int slot, double now, std::vector<Subflow*>& subflows,
                  const std::vector<SubflowSlotObs>& obs,
                  std::vector<CcTraceEvent>* events) override;
  void on_subflow_activated(std::vector<Subflow*>& subflows, int m, double now) override;

 private:
  CcConfig cfg_;
  std::vector<double> l1_mss_;  // acked since last loss
  std::vector<double> l2_mss_;  // acked between the previous two losses
  std::vector<double> recovery_until_;
};

// Factory for the configured controller names: phacc | phacc_no_gpasp | olia.
// One controller instance per UE.
std::unique_ptr<CongestionController> make_controller(const std::string& name,
                                                      const CcConfig& cc,
                                                      const TransportConfig& tc,
                                                      const ScenarioConfig& scen);

}  // namespace saginmp
