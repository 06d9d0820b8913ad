#pragma once

#include <deque>
#include <string>
#include <vector>

#include "saginmp/config.hpp"

namespace saginmp {

enum class MonitorDecision { Continue, LightRefit, FullRetrain };

const char* to_string(MonitorDecision d);

struct MonitorLogRow {
  long long step = 0;
  double rwd = 0.0;
  double srwd = 0.0;
  double dev = 0.0;
  double fluct = 0.0;
  long long cnt = 0;
  MonitorDecision decision = MonitorDecision::Continue;
};

// Drift detector over the (shifted) reward stream. Escalates sustained
// out-of-band runs: mild fluctuation -> LightRefit (NNPE refit), severe ->
// FullRetrain (policy retraining).
class RewardMonitor {
 public:
  explicit RewardMonitor(const RhrmConfig& cfg);

  MonitorDecision observe(double rwd);
  void reset();  // back to the empty-window state; parameters survive

  // state inspection
  double srwd() const { return srwd_; }
  double dev() const { return dev_; }
  long long cnt() const { return cnt_; }
  double fluctuation() const { return fluct_; }
  double alpha() const { return alpha_; }
  double mul() const { return mul_; }
  double thr() const { return thr_; }
  size_t window_size() const { return win_.size(); }
  const RhrmConfig& config() const { return cfg_; }

  const std::vector<MonitorLogRow>& log() const { return log_; }
  void set_logging(bool on) { logging_ = on; }

 private:
  RhrmConfig cfg_;
  std::deque<double> win_;
  double srwd_ = 0.0;
  double dev_ = 0.0;
  long long cnt_ = 0;
  double arwd_ = 0.0;
  double alpha_ = 0.0;
  double mul_ = 0.0;
  double thr_ = 0.0;
  double fluct_ = 0.0;
  long long step_ = 0;
  bool logging_ = false;
  std::vector<MonitorLogRow> log_;
};

}  // namespace saginmp
